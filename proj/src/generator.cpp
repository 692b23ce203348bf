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

#include "pbe/generator.hpp"

#include <algorithm>
#include <numeric>
#include <stdexcept>
#include <unordered_map>
#include <unordered_set>

#include "pbe/constraints.hpp"
#include "pbe/parallel.hpp"
#include "pbe/random.hpp"

namespace pbe {
namespace {

uint64_t text_hash(std::string_view s) {
  uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) h = (h ^ c) * 0x100000001b3ull;
  return h;
}

// Bitmask of variables read by a statement.
uint32_t read_mask(const Statement& s) {
  uint32_t m = 0;
  for (const Operand& o : s.args())
    if (o.is_var()) m |= 1u << o.index;
  return m;
}

// Search state shared by the enumerator and the sampler.
struct PartialProgram {
  std::vector<Type> env;
  std::vector<Statement> statements;
  uint32_t read = 0;  // variables already read by some statement

  uint32_t free_mask() const {
    const uint32_t all = (env.size() >= 32) ? ~0u : ((1u << env.size()) - 1);
    return all & ~read;
  }
};

// Legal next statements: read a free variable, do not repeat, and on the
// last step read every free variable.
std::vector<Statement> candidates(const Registry& reg, const PartialProgram& pp, bool last) {
  std::vector<Statement> out;
  const uint32_t free = pp.free_mask();
  for (const Statement& s : enumerate_statements(pp.env, reg)) {
    const uint32_t m = read_mask(s);
    if ((m & free) == 0) continue;
    if (last && (m & free) != free) continue;
    if (std::find(pp.statements.begin(), pp.statements.end(), s) != pp.statements.end()) continue;
    out.push_back(s);
  }
  return out;
}

void push_statement(const Registry& reg, PartialProgram& pp, const Statement& s) {
  pp.read |= read_mask(s);
  pp.statements.push_back(s);
  pp.env.push_back(reg.function(s.function).result);
}

void pop_statement(PartialProgram& pp, uint32_t saved_read) {
  pp.read = saved_read;
  pp.statements.pop_back();
  pp.env.pop_back();
}

bool enumerate_rec(const Registry& reg, PartialProgram& pp, int remaining, int num_inputs,
                   const std::function<bool(const Program&)>& visit) {
  const bool last = remaining == 1;
  for (const Statement& s : candidates(reg, pp, last)) {
    const uint32_t saved = pp.read;
    push_statement(reg, pp, s);
    bool keep_going = true;
    if (last) {
      Program p{{pp.env.begin(), pp.env.begin() + num_inputs}, pp.statements};
      keep_going = visit(p);
    } else {
      keep_going = enumerate_rec(reg, pp, remaining - 1, num_inputs, visit);
    }
    pop_statement(pp, saved);
    if (!keep_going) return false;
  }
  return true;
}

bool is_error_trace(const Registry& reg, const Program& p, std::span<const Value> trace) {
  for (int i = 0; i < p.length(); ++i) {
    const Value& v = trace[p.num_inputs() + i];
    if (v.is_null()) return true;
    const FunctionDef& f = reg.function(p.statements[i].function);
    if (f.error_value && v.is_int() && v.as_int() == *f.error_value) return true;
  }
  return false;
}

// Sort key: shorter programs first, then program text.
struct Ranked {
  int length;
  std::string text;
  size_t index;
  bool operator<(const Ranked& o) const {
    return length != o.length ? length < o.length : text < o.text;
  }
};

struct BehaviourKey {
  std::string signature;
  std::vector<Value> outputs;
  bool operator==(const BehaviourKey&) const = default;
};

struct BehaviourKeyHash {
  size_t operator()(const BehaviourKey& k) const {
    size_t h = std::hash<std::string>{}(k.signature);
    for (const Value& v : k.outputs) h = h * 0x9e3779b97f4a7c15ull + v.hash();
    return h;
  }
};

}  // namespace

std::optional<Program> prune_redundant(const Program& p) {
  const int n = p.num_vars();
  std::vector<bool> read(n, false);
  for (const Statement& s : p.statements)
    for (const Operand& o : s.args())
      if (o.is_var()) read[o.index] = true;
  for (int v = 0; v + 1 < n; ++v)
    if (!read[v]) return std::nullopt;
  return p;
}

void for_each_program(const Registry& reg, std::span<const std::vector<Type>> signatures,
                      int length, const std::function<bool(const Program&)>& visit) {
  if (length < 1) throw std::invalid_argument("program length must be >= 1");
  for (const auto& sig : signatures) {
    PartialProgram pp{sig, {}, 0};
    if (!enumerate_rec(reg, pp, length, static_cast<int>(sig.size()), visit)) return;
  }
}

uint64_t count_programs(const Registry& reg, std::span<const std::vector<Type>> signatures,
                        int length) {
  uint64_t n = 0;
  for_each_program(reg, signatures, length, [&](const Program&) {
    ++n;
    return true;
  });
  return n;
}

Program gen_random_program(int target_len, const Registry& reg, uint64_t seed,
                           const GeneratorConfig& config) {
  if (target_len < 1) throw std::invalid_argument("target length must be >= 1");
  if (config.signatures.empty()) throw std::invalid_argument("no input signatures configured");
  Rng rng(seed);
  for (int attempt = 0; attempt < config.program_retries; ++attempt) {
    const auto& sig = config.signatures[uniform_int(rng, 0, config.signatures.size() - 1)];
    PartialProgram pp{sig, {}, 0};
    bool ok = true;
    for (int step = 0; step < target_len && ok; ++step) {
      const auto cands = candidates(reg, pp, step + 1 == target_len);
      if (cands.empty()) {
        ok = false;
        break;
      }
      push_statement(reg, pp, cands[uniform_int(rng, 0, cands.size() - 1)]);
    }
    if (!ok) continue;
    Program p{sig, pp.statements};
    if (auto kept = prune_redundant(p)) return *kept;
  }
  throw GenerationExhausted("no program of length " + std::to_string(target_len) + " after " +
                            std::to_string(config.program_retries) + " attempts");
}

std::optional<std::vector<IOPair>> gen_examples(const Registry& reg, const Program& p, int n,
                                                uint64_t seed, int retries) {
  if (n < 1) throw std::invalid_argument("example count must be >= 1");
  std::vector<Constraint> constraints;
  try {
    constraints = propagate(reg, p);
  } catch (const UnsatisfiableConstraint&) {
    return std::nullopt;
  }
  Rng rng(seed);
  std::vector<IOPair> out;
  out.reserve(n);
  for (int i = 0; i < n; ++i) {
    bool found = false;
    for (int attempt = 0; attempt < retries && !found; ++attempt) {
      std::vector<Value> inputs = sample_inputs(constraints, rng);
      std::vector<Value> trace = run_trace(reg, p, inputs);
      if (is_error_trace(reg, p, trace)) continue;
      out.push_back({std::move(inputs), trace.back()});
      found = true;
    }
    if (!found) return std::nullopt;
  }
  return out;
}

std::string signature_key(std::span<const Type> sig) {
  std::string s;
  for (Type t : sig) {
    if (!s.empty()) s += ',';
    s += type_name(t);
  }
  return s;
}

ProbeSet ProbeSet::make(std::span<const std::vector<Type>> signatures, int per_signature,
                        uint64_t seed) {
  ProbeSet ps;
  for (const auto& sig : signatures) {
    const std::string key = signature_key(sig);
    auto& tuples = ps.by_signature[key];
    for (int j = 0; j < per_signature; ++j) {
      Rng rng(derive_seed(seed, {text_hash(key), static_cast<uint64_t>(j)}));
      // Mostly small values, which keep index arguments meaningful; every
      // third tuple is wide to separate overflow behaviour.
      const bool wide = j % 3 == 2;
      std::vector<Value> tuple;
      for (Type t : sig) {
        if (t == Type::kInt) {
          tuple.push_back(Value::of_int(wide ? uniform_int(rng, -64, 64) : uniform_int(rng, -3, 9)));
        } else {
          const int len = static_cast<int>(wide ? uniform_int(rng, 0, kMaxListLen)
                                                : uniform_int(rng, 1, 10));
          std::vector<int> xs(len);
          for (int& x : xs)
            x = static_cast<int>(wide ? uniform_int(rng, kIntMin / 2, kIntMax / 2)
                                      : uniform_int(rng, -12, 12));
          tuple.push_back(Value::of_list(xs));
        }
      }
      tuples.push_back(std::move(tuple));
    }
  }
  return ps;
}

const std::vector<std::vector<Value>>& ProbeSet::for_signature(std::span<const Type> sig) const {
  auto it = by_signature.find(signature_key(sig));
  if (it == by_signature.end())
    throw std::invalid_argument("no probes for signature " + signature_key(sig));
  return it->second;
}

std::vector<Value> probe_outputs(const Registry& reg, const Program& p, const ProbeSet& probes) {
  std::vector<Value> out;
  for (const auto& tuple : probes.for_signature(p.input_types))
    out.push_back(run_trace(reg, p, tuple).back());
  return out;
}

bool equivalent_on_examples(const Registry& reg, const DatasetEntry& a, const DatasetEntry& b) {
  if (a.program.input_types != b.program.input_types) return false;
  return check_solution(reg, a.program, b.examples) && check_solution(reg, b.program, a.examples);
}

std::vector<DatasetEntry> dedup(const Registry& reg, std::vector<DatasetEntry> entries,
                                const ProbeSet& probes, int workers) {
  const int n = static_cast<int>(entries.size());
  std::vector<Ranked> order(n);
  std::vector<BehaviourKey> keys(n);
  parallel_for(n, workers, [&](int i) {
    order[i] = {entries[i].program.length(), print_program(reg, entries[i].program),
                static_cast<size_t>(i)};
    keys[i] = {signature_key(entries[i].program.input_types),
               probe_outputs(reg, entries[i].program, probes)};
  });
  std::sort(order.begin(), order.end());

  std::unordered_map<BehaviourKey, std::vector<size_t>, BehaviourKeyHash> buckets;
  std::vector<DatasetEntry> kept;
  std::string previous_text;
  for (const Ranked& r : order) {
    if (!kept.empty() && r.text == previous_text) continue;  // exact duplicate
    auto& bucket = buckets[keys[r.index]];
    bool duplicate = false;
    for (size_t k : bucket) {
      if (equivalent_on_examples(reg, kept[k], entries[r.index])) {
        duplicate = true;
        break;
      }
    }
    if (duplicate) continue;
    bucket.push_back(kept.size());
    kept.push_back(std::move(entries[r.index]));
    previous_text = r.text;
  }
  return kept;
}

size_t count_behaviours(const Registry& reg, std::span<const Program> programs,
                        const ProbeSet& probes) {
  std::unordered_set<BehaviourKey, BehaviourKeyHash> seen;
  for (const Program& p : programs)
    seen.insert({signature_key(p.input_types), probe_outputs(reg, p, probes)});
  return seen.size();
}

std::vector<Program> gen_raw_programs(const Registry& reg, int length, int num_train,
                                      uint64_t seed, const GeneratorConfig& config, int workers,
                                      bool* exhaustive) {
  // Enumerate the whole space when it fits within the cap.
  std::vector<Program> all;
  for_each_program(reg, config.signatures, length, [&](const Program& p) {
    all.push_back(p);
    return static_cast<int>(all.size()) <= num_train;
  });
  if (static_cast<int>(all.size()) <= num_train) {
    if (exhaustive) *exhaustive = true;
    return all;
  }
  if (exhaustive) *exhaustive = false;
  all.clear();

  // Otherwise sample in fixed chunks with per-chunk seeds; merging in chunk
  // order makes the result independent of the worker count.
  constexpr int kChunk = 256;
  constexpr int kChunksPerRound = 16;
  std::unordered_set<std::string> seen;
  std::vector<Program> out;
  int stalled_rounds = 0;
  for (uint64_t round = 0; static_cast<int>(out.size()) < num_train && stalled_rounds < 4;
       ++round) {
    std::vector<std::vector<Program>> chunks(kChunksPerRound);
    parallel_for(kChunksPerRound, workers, [&](int c) {
      const uint64_t chunk_seed = derive_seed(seed, {static_cast<uint64_t>(length),
                                                     round * kChunksPerRound + c});
      for (int i = 0; i < kChunk; ++i) {
        try {
          chunks[c].push_back(
              gen_random_program(length, reg, derive_seed(chunk_seed, {static_cast<uint64_t>(i)}),
                                 config));
        } catch (const GenerationExhausted&) {
        }
      }
    });
    const size_t before = out.size();
    for (auto& chunk : chunks)
      for (auto& p : chunk) {
        if (static_cast<int>(out.size()) >= num_train) break;
        if (seen.insert(print_program(reg, p)).second) out.push_back(std::move(p));
      }
    stalled_rounds = out.size() == before ? stalled_rounds + 1 : 0;
  }
  return out;
}

std::vector<DatasetEntry> attach_examples(const Registry& reg, std::span<const Program> programs,
                                          uint64_t seed, const GeneratorConfig& config,
                                          int workers) {
  const int n = static_cast<int>(programs.size());
  std::vector<std::optional<std::vector<IOPair>>> examples(n);
  parallel_for(n, workers, [&](int i) {
    const uint64_t s = derive_seed(seed, {text_hash(print_program(reg, programs[i]))});
    examples[i] = gen_examples(reg, programs[i], config.examples_per_program, s,
                               config.example_retries);
  });
  std::vector<DatasetEntry> out;
  for (int i = 0; i < n; ++i)
    if (examples[i]) out.push_back({programs[i], std::move(*examples[i])});
  return out;
}

std::map<int, std::vector<DatasetEntry>> build_test_sets(const Registry& reg,
                                                         std::span<const DatasetEntry> train,
                                                         std::span<const int> lengths,
                                                         int num_test, uint64_t seed,
                                                         const GeneratorConfig& config,
                                                         int workers) {
  const ProbeSet probes = ProbeSet::make(config.signatures, config.num_probes,
                                         derive_seed(seed, {0x70be5}));
  std::unordered_map<BehaviourKey, std::vector<size_t>, BehaviourKeyHash> train_buckets;
  for (size_t i = 0; i < train.size(); ++i)
    train_buckets[{signature_key(train[i].program.input_types),
                   probe_outputs(reg, train[i].program, probes)}]
        .push_back(i);

  std::map<int, std::vector<DatasetEntry>> out;
  for (int len : lengths) {
    // Oversample so that enough survive the filtering below.
    const uint64_t len_seed = derive_seed(seed, {0x7e57, static_cast<uint64_t>(len)});
    std::vector<Program> raw =
        gen_raw_programs(reg, len, std::max(4 * num_test, num_test + 64), len_seed, config, workers);
    std::vector<DatasetEntry> entries = attach_examples(reg, raw, len_seed, config, workers);
    std::vector<DatasetEntry> fresh;
    for (auto& e : entries) {
      auto it = train_buckets.find({signature_key(e.program.input_types),
                                    probe_outputs(reg, e.program, probes)});
      bool seen = false;
      if (it != train_buckets.end())
        for (size_t k : it->second)
          if (equivalent_on_examples(reg, train[k], e)) {
            seen = true;
            break;
          }
      if (!seen) fresh.push_back(std::move(e));
    }
    fresh = dedup(reg, std::move(fresh), probes, workers);
    // Draw the final subset in a seeded order rather than text order.
    Rng rng(derive_seed(len_seed, {1}));
    for (size_t i = fresh.size(); i > 1; --i)
      std::swap(fresh[i - 1], fresh[uniform_int(rng, 0, static_cast<long long>(i) - 1)]);
    if (static_cast<int>(fresh.size()) > num_test) fresh.resize(num_test);
    out[len] = std::move(fresh);
  }
  return out;
}

DatasetCache build_dataset(const Registry& reg, const BuildOptions& opts,
                           std::optional<DatasetCache> cache, BuildStats* stats) {
  if (opts.num_train < 1) throw std::invalid_argument("num_train must be >= 1");
  auto log = [&](const std::string& line) {
    if (opts.log) opts.log(line);
  };
  BuildStats local;
  BuildStats& st = stats ? *stats : local;
  st = {};

  DatasetCache out;
  if (cache) {
    if (cache->registry_fingerprint != reg.fingerprint())
      throw std::invalid_argument("cache was built for registry " + cache->registry_fingerprint +
                                  ", current registry is " + reg.fingerprint());
    out = std::move(*cache);
  }
  out.registry_fingerprint = reg.fingerprint();
  if (out.max_len_generated >= opts.max_train_len) {
    log("Cache already holds programs up to length " + std::to_string(out.max_len_generated) +
        "; nothing to generate.");
    st.no_op = true;
    return out;
  }

  const ProbeSet probes = ProbeSet::make(opts.config.signatures, opts.config.num_probes,
                                         derive_seed(opts.seed, {0x70be5}));
  for (int len = out.max_len_generated + 1; len <= opts.max_train_len; ++len) {
    LengthStats ls;
    ls.length = len;
    log("Generating programs of length " + std::to_string(len) +
        " (current dataset size: " + std::to_string(out.entries.size()) + ")");
    const uint64_t len_seed = derive_seed(opts.seed, {static_cast<uint64_t>(len)});
    std::vector<Program> raw = gen_raw_programs(reg, len, opts.num_train, len_seed, opts.config,
                                                opts.workers, &ls.exhaustive);
    ls.raw = raw.size();
    log("Generating programs... " + std::to_string(raw.size()) + "\\" +
        std::to_string(opts.num_train) + (ls.exhaustive ? " (exhaustive)" : ""));
    std::vector<DatasetEntry> entries =
        attach_examples(reg, raw, len_seed, opts.config, opts.workers);
    ls.with_examples = entries.size();
    log("Generating examples... " + std::to_string(entries.size()) + "\\" +
        std::to_string(raw.size()) + " (remaining programs: " + std::to_string(entries.size()) +
        ")");
    entries = dedup(reg, std::move(entries), probes, opts.workers);
    ls.kept = entries.size();
    log("Discarding identical programs... " + std::to_string(entries.size()) + "\\" +
        std::to_string(ls.with_examples));
    for (auto& e : entries) out.entries.push_back(std::move(e));
    st.lengths.push_back(ls);
  }

  // Programs equivalent to shorter ones of another length are only caught by
  // a final sweep over the whole corpus.
  const size_t before = out.entries.size();
  log("Finished generation. Total programs: " + std::to_string(before));
  out.entries = dedup(reg, std::move(out.entries), probes, opts.workers);
  st.removed_by_sweep = before - out.entries.size();
  if (st.removed_by_sweep > 0) log("Removed " + std::to_string(st.removed_by_sweep) + " programs");
  out.max_len_generated = 0;
  for (const auto& e : out.entries)
    out.max_len_generated = std::max(out.max_len_generated, e.program.length());
  return out;
}

}  // namespace pbe
