// Copyright 2026 The pbe-synth Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#include <algorithm>
#include <set>

#include "doctest.h"
#include "pbe/constraints.hpp"
#include "pbe/generator.hpp"

using namespace pbe;

namespace {

std::set<std::string> texts(const Registry& reg, const std::vector<DatasetEntry>& es) {
  std::set<std::string> s;
  for (const auto& e : es) s.insert(print_program(reg, e.program));
  return s;
}

DatasetEntry entry(const Registry& reg, const char* text, uint64_t seed = 1) {
  Program p = parse_program(reg, text);
  auto ex = gen_examples(reg, p, kExamplesPerProgram, seed);
  REQUIRE(ex);
  return {p, *ex};
}

// Every variable reachable backwards from the output.
bool all_reachable(const Program& p) {
  std::vector<bool> live(p.num_vars(), false);
  live.back() = true;
  for (int i = p.length() - 1; i >= 0; --i) {
    if (!live[p.num_inputs() + i]) continue;
    for (const auto& a : p.statements[i].args())
      if (a.is_var()) live[a.index] = true;
  }
  return std::all_of(live.begin(), live.end(), [](bool b) { return b; });
}

}  // namespace

TEST_CASE("prune_redundant") {
  auto reg = Registry::make(Dialect::kBaseline);
  CHECK_FALSE(prune_redundant(parse_program(*reg, "LIST|SUM,0|HEAD,0")));
  CHECK(prune_redundant(parse_program(*reg, "LIST|SUM,0")));
  CHECK_FALSE(prune_redundant(parse_program(*reg, "LIST,LIST|SORT,0")));  // unused input
}

TEST_CASE("random programs are well formed, reachable and deterministic") {
  auto reg = Registry::make(Dialect::kExtended);
  for (uint64_t seed = 0; seed < 1000; ++seed) {
    const int len = 1 + static_cast<int>(seed % 5);
    const Program p = gen_random_program(len, *reg, seed);
    CHECK(p.length() == len);
    CHECK_NOTHROW(validate_program(*reg, p));
    CHECK(all_reachable(p));
    CHECK(gen_random_program(len, *reg, seed) == p);
  }
  CHECK_THROWS_AS(gen_random_program(0, *reg, 1), std::invalid_argument);
}

TEST_CASE("generation exhausts on an impossible configuration") {
  auto reg = Registry::make(Dialect::kBaseline);
  GeneratorConfig cfg;
  cfg.signatures = {{Type::kInt}};
  cfg.program_retries = 10;
  CHECK_THROWS_AS(gen_random_program(1, *reg, 3, cfg), GenerationExhausted);
}

TEST_CASE("sampled length-1 programs stay inside the enumerated space") {
  for (Dialect d : {Dialect::kBaseline, Dialect::kExtended}) {
    auto reg = Registry::make(d);
    std::set<std::string> space;
    const auto sigs = all_signatures();
    for_each_program(*reg, sigs, 1, [&](const Program& p) {
      space.insert(print_program(*reg, p));
      return true;
    });
    CHECK(space.size() == count_programs(*reg, sigs, 1));
    std::set<std::string> seen;
    for (uint64_t seed = 0; seed < 20000; ++seed)
      seen.insert(print_program(*reg, gen_random_program(1, *reg, seed)));
    CHECK(std::includes(space.begin(), space.end(), seen.begin(), seen.end()));
    CHECK(seen == space);
  }
}

TEST_CASE("program space sizes") {
  const auto sigs = all_signatures();
  auto base = Registry::make(Dialect::kBaseline);
  auto ext = Registry::make(Dialect::kExtended);
  CHECK(count_programs(*base, sigs, 1) == 51);
  CHECK(count_programs(*ext, sigs, 1) == 158);
  // Observationally distinct length-1 behaviours.
  const ProbeSet probes = ProbeSet::make(sigs, 64, 7);
  for (auto [reg, expected] : {std::pair{base, 44}, std::pair{ext, 115}}) {
    std::vector<Program> ps;
    for_each_program(*reg, sigs, 1, [&](const Program& p) {
      ps.push_back(p);
      return true;
    });
    CHECK(count_behaviours(*reg, ps, probes) == static_cast<size_t>(expected));
  }
}

TEST_CASE("gen_examples") {
  auto reg = Registry::make(Dialect::kBaseline);
  Program p = parse_program(*reg, "LIST|MAP,+1,0");
  auto ex = gen_examples(*reg, p, 5, 9);
  REQUIRE(ex);
  CHECK(ex->size() == 5);
  CHECK(check_solution(*reg, p, *ex));
  CHECK(gen_examples(*reg, p, 5, 9) == ex);
  CHECK_FALSE(gen_examples(*reg, parse_program(*reg, "INT,LIST|TAKE,0,1|ACCESS,0,2"), 5, 1));
}

TEST_CASE("extern error values are rejected") {
  ExternFunction picky{"PICKY", {Type::kList}, Type::kInt,
                       [](std::span<const Value> a) {
                         return Value::of_int(a[0].size() == 3 ? 1 : 10);
                       },
                       BackwardRule::kReplicateToElements, 10};
  auto reg = Registry::make(Dialect::kBaseline, {picky});
  Program p = parse_program(*reg, "LIST|PICKY,0");
  auto ex = gen_examples(*reg, p, 5, 3, 1000);
  REQUIRE(ex);
  for (const auto& e : *ex) CHECK(e.output == Value::of_int(1));
  // With a tiny budget the 1-in-21 length rarely comes up.
  CHECK_FALSE(gen_examples(*reg, p, 5, 3, 1));
}

TEST_CASE("example attrition is small") {
  auto reg = Registry::make(Dialect::kExtended);
  GeneratorConfig cfg;
  std::vector<Program> ps;
  for (uint64_t seed = 0; seed < 3000; ++seed)
    ps.push_back(gen_random_program(1 + static_cast<int>(seed % 3), *reg, seed));
  auto entries = attach_examples(*reg, ps, 5, cfg, 1);
  const double attrition = 1.0 - static_cast<double>(entries.size()) / ps.size();
  MESSAGE("attrition: " << attrition);
  CHECK(attrition > 0.0);
  CHECK(attrition < 0.10);
  for (const auto& e : entries) CHECK(check_solution(*reg, e.program, e.examples));
}

TEST_CASE("dedup") {
  auto reg = Registry::make(Dialect::kBaseline);
  const auto sigs = all_signatures();
  const ProbeSet probes = ProbeSet::make(sigs, kDedupProbes, 3);
  SUBCASE("equivalent programs collapse to the lexicographically first") {
    auto out = dedup(*reg, {entry(*reg, "LIST|ZIPWITH,+,0,0"), entry(*reg, "LIST|MAP,*2,0", 2)},
                     probes);
    CHECK(texts(*reg, out) == std::set<std::string>{"LIST|MAP,*2,0"});
  }
  SUBCASE("shorter programs win") {
    auto out = dedup(*reg, {entry(*reg, "LIST|MAP,*2,0|MAP,*2,1"), entry(*reg, "LIST|MAP,*4,0")},
                     probes);
    CHECK(texts(*reg, out) == std::set<std::string>{"LIST|MAP,*4,0"});
  }
  SUBCASE("different behaviour survives") {
    auto out = dedup(*reg, {entry(*reg, "LIST|SORT,0"), entry(*reg, "LIST|REVERSE,0")}, probes);
    CHECK(out.size() == 2);
  }
  SUBCASE("idempotent and worker independent") {
    auto ext = Registry::make(Dialect::kExtended);
    std::vector<Program> ps;
    for (uint64_t seed = 0; seed < 600; ++seed)
      ps.push_back(gen_random_program(1 + static_cast<int>(seed % 2), *ext, seed));
    auto entries = attach_examples(*ext, ps, 1, {}, 1);
    auto once = dedup(*ext, entries, probes, 1);
    CHECK(once.size() < entries.size());
    auto twice = dedup(*ext, once, probes, 1);
    CHECK(texts(*ext, twice) == texts(*ext, once));
    CHECK(texts(*ext, dedup(*ext, entries, probes, 4)) == texts(*ext, once));
  }
}

TEST_CASE("build_dataset") {
  auto reg = Registry::make(Dialect::kExtended);
  std::vector<std::string> log;
  BuildOptions opts;
  opts.num_train = 1000000;
  opts.max_train_len = 1;
  opts.seed = 4;
  opts.log = [&](const std::string& l) { log.push_back(l); };

  SUBCASE("length 1 is enumerated exhaustively") {
    BuildStats st;
    DatasetCache c = build_dataset(*reg, opts, std::nullopt, &st);
    REQUIRE(st.lengths.size() == 1);
    CHECK(st.lengths[0].exhaustive);
    CHECK(st.lengths[0].raw == 158);
    // One program per distinct behaviour (exact count from the probe oracle).
    CHECK(st.lengths[0].kept == 115);
    CHECK(c.max_len_generated == 1);
    CHECK(c.registry_fingerprint == reg->fingerprint());
    CHECK(log.front() == "Generating programs of length 1 (current dataset size: 0)");
    CHECK(log.back().rfind("Finished generation. Total programs: ", 0) == 0);
  }

  SUBCASE("resuming only generates the missing lengths") {
    opts.num_train = 300;
    opts.max_train_len = 2;
    DatasetCache two = build_dataset(*reg, opts);
    CHECK(two.max_len_generated == 2);
    log.clear();
    opts.max_train_len = 3;
    BuildStats st;
    DatasetCache three = build_dataset(*reg, opts, two, &st);
    REQUIRE(st.lengths.size() == 1);
    CHECK(st.lengths[0].length == 3);
    CHECK_FALSE(st.lengths[0].exhaustive);
    CHECK(st.lengths[0].raw == 300);
    CHECK(log.front() == "Generating programs of length 3 (current dataset size: " +
                             std::to_string(two.entries.size()) + ")");
    CHECK(three.entries.size() > two.entries.size());

    // Nothing left to do.
    BuildStats again;
    DatasetCache same = build_dataset(*reg, opts, three, &again);
    CHECK(again.no_op);
    CHECK(same.entries.size() == three.entries.size());

    // A different registry refuses the cache.
    auto base = Registry::make(Dialect::kBaseline);
    CHECK_THROWS_AS(build_dataset(*base, opts, three), std::invalid_argument);
  }

  SUBCASE("worker count does not change the corpus") {
    opts.num_train = 400;
    opts.max_train_len = 3;
    opts.workers = 1;
    DatasetCache serial = build_dataset(*reg, opts);
    opts.workers = 3;
    DatasetCache parallel = build_dataset(*reg, opts);
    CHECK(texts(*reg, serial.entries) == texts(*reg, parallel.entries));
    for (const auto& e : serial.entries) {
      CHECK(check_solution(*reg, e.program, e.examples));
      CHECK(prune_redundant(e.program));
    }
  }
}

TEST_CASE("test sets avoid training behaviour") {
  auto reg = Registry::make(Dialect::kExtended);
  BuildOptions opts;
  opts.num_train = 300;
  opts.max_train_len = 2;
  DatasetCache train = build_dataset(*reg, opts);
  const std::vector<int> lengths = {2, 3};
  auto tests = build_test_sets(*reg, train.entries, lengths, 20, 99);
  REQUIRE(tests.size() == 2);
  CHECK(tests[3].size() == 20);
  // Oracle for "same behaviour": agreement on a large probe set plus the
  // example cross-check.
  const ProbeSet probes = ProbeSet::make(all_signatures(), 128, 5);
  for (auto& [len, es] : tests) {
    for (const auto& e : es) {
      CHECK(e.program.length() == len);
      const auto key = probe_outputs(*reg, e.program, probes);
      for (const auto& t : train.entries) {
        const bool same = t.program.input_types == e.program.input_types &&
                          probe_outputs(*reg, t.program, probes) == key &&
                          equivalent_on_examples(*reg, t, e);
        CHECK_FALSE(same);
      }
    }
  }
}
