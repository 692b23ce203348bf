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

#include <cmath>
#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "doctest.h"
#include "pbe/model.hpp"
#include "pbe/random.hpp"

using namespace pbe;
namespace fs = std::filesystem;

namespace {

ModelConfig tiny_config(uint64_t seed = 1) {
  ModelConfig c;
  c.num_slots = 4;
  c.num_layers = 2;
  c.encoder_size = 6;
  c.growth_size = 3;
  c.output_size = 5;
  c.embedding_dim = 2;
  c.seed = seed;
  return c;
}

DatasetEntry make_entry(const Registry& reg, const char* text, uint64_t seed) {
  Program p = parse_program(reg, text);
  return {p, *gen_examples(reg, p, kExamplesPerProgram, seed)};
}

// Max relative error between analytic and central-difference gradients
// over a sample of parameters.
double gradient_error(Model& m, const StateEncoding& enc, std::span<const int> legal,
                      const StateTargets& t, std::span<const size_t> indices) {
  Gradient g(m);
  m.loss(enc, legal, t, &g, 1.0);
  double worst = 0;
  auto params = m.params();
  for (size_t i : indices) {
    const double saved = params[i];
    const double h = 1e-5;
    params[i] = saved + h;
    const double up = m.loss(enc, legal, t);
    params[i] = saved - h;
    const double down = m.loss(enc, legal, t);
    params[i] = saved;
    const double numeric = (up - down) / (2 * h);
    const double analytic = g.values()[i];
    const double denom = std::max({std::abs(numeric), std::abs(analytic), 1e-7});
    worst = std::max(worst, std::abs(numeric - analytic) / denom);
  }
  return worst;
}

}  // namespace

TEST_CASE("encoding") {
  auto reg = Registry::make(Dialect::kBaseline);
  DatasetEntry e = make_entry(*reg, "INT,LIST|TAKE,0,1|SORT,2", 3);
  std::vector<std::vector<Value>> traces;
  for (const auto& ex : e.examples) traces.push_back(run_trace(*reg, e.program, ex.inputs));

  SUBCASE("absent slots are zero, the output slot is present") {
    MemoryState s = replay_state(e.program, traces, e.examples, 0, 5);
    StateEncoding enc = encode_state(s, 5);
    CHECK(enc.num_examples == 5);
    CHECK(enc.features.size() == 5u * 6 * kSlotFeatures);
    for (int ex = 0; ex < 5; ++ex) {
      for (int slot = 2; slot < 5; ++slot)
        for (int k = 0; k < kSlotFeatures; ++k)
          CHECK(enc.features[(ex * 6 + slot) * kSlotFeatures + k] == 0.0);
      CHECK(enc.features[(ex * 6 + 5) * kSlotFeatures] == 1.0);
      CHECK(enc.features[(ex * 6 + 0) * kSlotFeatures + 1] == 1.0);  // INT flag
      CHECK(enc.features[(ex * 6 + 1) * kSlotFeatures + 2] == 1.0);  // LIST flag
    }
    for (double f : enc.features) {
      CHECK(f >= -1.0);
      CHECK(f <= 1.0);
    }
  }
  SUBCASE("deterministic, and a changed slot changes only that slot") {
    MemoryState s = replay_state(e.program, traces, e.examples, 1, 5);
    StateEncoding a = encode_state(s, 5), b = encode_state(s, 5);
    CHECK(a.features == b.features);
    CHECK(a.tokens == b.tokens);
    s.values[2][0] = Value::of_int(s.values[2][0].as_int() == 7 ? 8 : 7);
    StateEncoding c = encode_state(s, 5);
    for (int ex = 0; ex < 5; ++ex)
      for (int slot = 0; slot < 6; ++slot)
        for (int k = 0; k < kSlotFeatures; ++k) {
          const size_t i = (ex * 6 + slot) * kSlotFeatures + k;
          if (!(ex == 2 && slot == 0)) CHECK(a.features[i] == c.features[i]);
        }
    CHECK(a.features != c.features);
  }
  SUBCASE("too many slots") {
    MemoryState s = replay_state(e.program, traces, e.examples, 1, 5);
    CHECK_THROWS_AS(encode_state(s, 4), std::invalid_argument);
  }
}

TEST_CASE("legal statements follow the slot typing") {
  auto reg = Registry::make(Dialect::kBaseline);
  StatementSpace space(reg, 4);
  std::vector<std::optional<Type>> slots = {Type::kList, std::nullopt, Type::kInt, std::nullopt};
  auto legal = space.legal(slots);
  CHECK(std::is_sorted(legal->begin(), legal->end()));
  const std::vector<Type> env = {Type::kList, Type::kInt};
  CHECK(legal->size() == enumerate_statements(env, *reg).size());
  for (int idx : *legal)
    for (const Operand& o : space.vocabulary()[idx].args())
      if (o.is_var()) CHECK((o.index == 0 || o.index == 2));
  CHECK(space.legal(slots) == legal);  // cached
}

TEST_CASE("predictions are normalised distributions over legal statements") {
  auto reg = Registry::make(Dialect::kExtended);
  Model m(reg, tiny_config());
  BuildOptions opts;
  opts.num_train = 50;
  opts.max_train_len = 3;
  auto data = build_dataset(*reg, opts).entries;
  TrainingSet set(m.space(), data);
  REQUIRE(set.size() > 20);
  for (size_t i = 0; i < set.size(); i += 7) {
    auto legal = set.legal(i);
    Prediction p = m.predict(set.encoding(i), *legal);
    REQUIRE(p.log_probs.size() == legal->size());
    double sum = 0;
    for (double lp : p.log_probs) {
      CHECK(lp <= 0.0);
      sum += std::exp(lp);
    }
    CHECK(std::abs(sum - 1.0) < 1e-6);
    CHECK(p.drop_scores.size() == 4);
    for (double d : p.drop_scores) CHECK(std::isfinite(d));
  }
  StateEncoding wrong = set.encoding(0);
  wrong.num_slots = 5;
  CHECK_THROWS_AS(m.predict(wrong, *set.legal(0)), std::invalid_argument);
}

TEST_CASE("drop targets mark dead variables") {
  auto reg = Registry::make(Dialect::kBaseline);
  StatementSpace space(reg, 6);
  DatasetEntry e = make_entry(*reg, "INT,LIST|TAKE,0,1|SORT,2|REVERSE,3", 5);
  std::vector<DatasetEntry> data = {e};
  TrainingSet set(space, data);
  REQUIRE(set.size() == 3);
  const StateTargets t2 = set.targets(2);  // before REVERSE,3
  CHECK(t2.drop[0] == 1.0);
  CHECK(t2.drop[1] == 1.0);
  CHECK(t2.drop[2] == 1.0);
  CHECK(t2.drop[3] == 0.0);
  CHECK(std::isnan(t2.drop[4]));
  const StateTargets t0 = set.targets(0);
  CHECK(t0.drop[0] == 0.0);
  CHECK(t0.drop[1] == 0.0);
  CHECK(space.vocabulary()[(*set.legal(2))[t2.statement]] == e.program.statements[2]);
}

TEST_CASE("analytic gradients match finite differences") {
  auto reg = Registry::make(Dialect::kExtended);
  BuildOptions opts;
  opts.num_train = 30;
  opts.max_train_len = 3;
  auto data = build_dataset(*reg, opts).entries;
  for (uint64_t seed : {1, 2, 3}) {
    ModelConfig cfg = tiny_config(seed);
    cfg.embedding_dim = static_cast<int>(seed % 3);
    Model m(reg, cfg);
    TrainingSet set(m.space(), data);
    Rng rng(seed);
    for (int trial = 0; trial < 4; ++trial) {
      const size_t i = uniform_int(rng, 0, set.size() - 1);
      const auto enc = set.encoding(i);
      const auto legal = set.legal(i);
      const auto t = set.targets(i);
      // Parameters the loss actually depends on: all dense ones plus the
      // touched rows of the sparse matrices.
      Gradient g(m);
      m.loss(enc, *legal, t, &g, 1.0);
      std::vector<size_t> idx;
      for (size_t k = 0; k < m.num_params(); ++k)
        if (g.values()[k] != 0.0 && uniform_int(rng, 0, 9) == 0) idx.push_back(k);
      REQUIRE(idx.size() > 20);
      const double err = gradient_error(m, enc, *legal, t, idx);
      CHECK(err < 1e-4);
    }
  }
}

TEST_CASE("training overfits a single program") {
  auto reg = Registry::make(Dialect::kBaseline);
  std::vector<DatasetEntry> data = {make_entry(*reg, "LIST|SUM,0", 1)};
  ModelConfig cfg = tiny_config();
  cfg.num_slots = 5;
  cfg.num_epochs = 60;
  cfg.batch_size = 1;
  cfg.learning_rate = 0.05;
  cfg.holdout_fraction = 0;
  std::vector<double> losses;
  TrainOptions opts;
  opts.on_epoch = [&](const EpochReport& r, const Model&) { losses.push_back(r.train_loss); };
  Model m = train(reg, data, cfg, opts);
  REQUIRE(losses.size() == 60);
  CHECK(losses.back() < 0.05);
  CHECK(losses.back() < losses.front());
  TrainingSet set(m.space(), data);
  auto legal = set.legal(0);
  Prediction p = m.predict(set.encoding(0), *legal);
  const auto best = std::max_element(p.log_probs.begin(), p.log_probs.end()) - p.log_probs.begin();
  CHECK(print_statement(*reg, m.space().vocabulary()[(*legal)[best]]) == "SUM,0");
}

TEST_CASE("training is deterministic and worker independent") {
  auto reg = Registry::make(Dialect::kBaseline);
  BuildOptions opts;
  opts.num_train = 60;
  opts.max_train_len = 2;
  auto data = build_dataset(*reg, opts).entries;
  ModelConfig cfg = tiny_config();
  cfg.num_epochs = 2;
  cfg.batch_size = 8;
  Model a = train(reg, data, cfg);
  Model b = train(reg, data, cfg);
  TrainOptions par;
  par.workers = 3;
  Model c = train(reg, data, cfg, par);
  CHECK(std::equal(a.params().begin(), a.params().end(), b.params().begin()));
  CHECK(std::equal(a.params().begin(), a.params().end(), c.params().begin()));
}

TEST_CASE("save and load") {
  auto reg = Registry::make(Dialect::kBaseline);
  Model m(reg, tiny_config(5));
  const fs::path path = fs::temp_directory_path() / ("pbe_model_" + std::to_string(::getpid()));
  save_model(m, path);
  Model back = load_model(path, reg);
  CHECK(std::equal(m.params().begin(), m.params().end(), back.params().begin()));
  CHECK(back.config().num_slots == m.config().num_slots);
  CHECK(back.config().seed == 5);
  CHECK_THROWS_AS(load_model(path, Registry::make(Dialect::kExtended)), FormatError);
  {
    std::ofstream out(path, std::ios::binary | std::ios::trunc);
    out << "garbage";
  }
  CHECK_THROWS_AS(load_model(path, reg), FormatError);
  fs::remove(path);
  CHECK(checkpoint_path("m5", 39) == fs::path("m5.39"));
}

TEST_CASE("config validation") {
  ModelConfig c;
  CHECK(c.num_epochs == 40);
  CHECK(c.num_layers == 5);
  CHECK_NOTHROW(c.validate());
  c.num_layers = 0;
  CHECK_THROWS_AS(c.validate(), std::invalid_argument);
}
