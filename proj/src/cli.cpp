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

#include "pbe/cli.hpp"

#include <CLI11.hpp>

#include <fstream>
#include <iostream>
#include <sstream>

#include "pbe/dataset.hpp"
#include "pbe/extern_digits.hpp"
#include "pbe/generator.hpp"
#include "pbe/model.hpp"
#include "pbe/random.hpp"
#include "pbe/search.hpp"

namespace pbe {

RegistryPtr make_registry(Dialect dialect, bool with_mnist) {
  std::vector<ExternFunction> externs;
  if (with_mnist) externs.push_back(make_mnist_extern());
  return Registry::make(dialect, std::move(externs));
}

RegistryPtr registry_for_fingerprint(const std::string& fingerprint, bool with_mnist) {
  for (Dialect d : {Dialect::kExtended, Dialect::kBaseline})
    for (bool m : {with_mnist, !with_mnist}) {
      auto reg = make_registry(d, m);
      if (reg->fingerprint() == fingerprint) return reg;
    }
  return nullptr;
}

namespace {

struct RegistryFlags {
  std::string dsl;  // empty: detect from the input file, else extended
  bool mnist = false;

  void add_to(CLI::App* cmd) {
    cmd->add_option("--dsl", dsl, "DSL dialect: baseline or extended")
        ->check(CLI::IsMember({"baseline", "extended"}));
    cmd->add_flag("--mnist", mnist, "Register the MNIST digit classifier extern");
  }

  RegistryPtr resolve(const std::optional<std::string>& fingerprint) const {
    if (dsl.empty() && fingerprint)
      if (auto reg = registry_for_fingerprint(*fingerprint, mnist)) return reg;
    return make_registry(dsl.empty() ? Dialect::kExtended : parse_dialect(dsl), mnist);
  }
};

// Fingerprint from a dataset header record, if the file has one.
std::optional<std::string> dataset_fingerprint(const std::string& path) {
  std::ifstream in(path);
  std::string line;
  if (!in || !std::getline(in, line)) return std::nullopt;
  const auto j = nlohmann::json::parse(line, nullptr, false);
  if (j.is_object() && j.contains("registry_fingerprint") && j["registry_fingerprint"].is_string())
    return j["registry_fingerprint"].get<std::string>();
  return std::nullopt;
}

struct GenArgs {
  RegistryFlags reg;
  int num_train = 0;
  std::string train_output_path;
  int max_train_len = 0;
  std::string test_output_path;
  std::vector<int> test_lengths;
  int num_test = 100;
  int num_workers = 1;
  std::string cache;
  uint64_t seed = 0;
};

int gen_programs(const GenArgs& a, std::ostream& out) {
  const RegistryPtr reg = a.reg.resolve(a.cache.empty() ? std::nullopt : dataset_fingerprint(a.cache));
  std::optional<DatasetCache> cache;
  if (!a.cache.empty()) {
    cache = read_dataset(a.cache, *reg);
    const size_t n = cache->entries.size();
    out << "Loading program cache... " << (n ? n - 1 : 0) << "\\" << n << "\n";
  }
  BuildOptions opts;
  opts.num_train = a.num_train;
  opts.max_train_len = a.max_train_len;
  opts.workers = a.num_workers;
  opts.seed = a.seed;
  opts.log = [&](const std::string& line) { out << line << "\n" << std::flush; };
  BuildStats stats;
  const DatasetCache result = build_dataset(*reg, opts, cache, &stats);
  if (stats.no_op) return 0;
  out << "Writing " << result.entries.size() << " train programs to " << a.train_output_path << "\n";
  write_dataset(a.train_output_path, *reg, result);

  if (!a.test_output_path.empty()) {
    std::vector<int> lengths = a.test_lengths;
    if (lengths.empty()) lengths.push_back(a.max_train_len);
    const auto tests = build_test_sets(*reg, result.entries, lengths, a.num_test,
                                       derive_seed(a.seed, {0x7e57}), opts.config, a.num_workers);
    for (const auto& [len, entries] : tests) {
      const std::string path = a.test_output_path + "_" + std::to_string(len);
      out << "Writing " << entries.size() << " test programs to " << path << "\n";
      write_entries(path, *reg, entries);
    }
  }
  return 0;
}

struct TrainArgs {
  RegistryFlags reg;
  std::string dataset, model_prefix;
  ModelConfig cfg;
  int num_workers = 1;
};

int train_cmd(const TrainArgs& a, std::ostream& out) {
  const RegistryPtr reg = a.reg.resolve(dataset_fingerprint(a.dataset));
  const DatasetCache data = read_dataset(a.dataset, *reg);
  out << "Training on " << data.entries.size() << " programs\n";
  TrainOptions opts;
  opts.workers = a.num_workers;
  opts.on_epoch = [&](const EpochReport& r, const Model& m) {
    const auto path = checkpoint_path(a.model_prefix, r.epoch);
    save_model(m, path);
    char buf[200];
    std::snprintf(buf, sizeof buf,
                  "Epoch %d: train loss %.4f, held-out loss %.4f, held-out accuracy %.3f (%.1f s)",
                  r.epoch, r.train_loss, r.holdout_loss, r.holdout_accuracy, r.seconds);
    out << buf << " -> " << path.string() << "\n" << std::flush;
  };
  train(reg, data.entries, a.cfg, opts);
  return 0;
}

struct SolveArgs {
  RegistryFlags reg;
  std::string problems, result, model;
  double timeout = 60;
  int max_len = 5;
  int num_workers = 1;
  std::string search_method = "beam";
  int beam_size = 200;
  int width = 20;
};

int solve_cmd(const SolveArgs& a, std::ostream& out) {
  const RegistryPtr reg = a.reg.resolve(model_fingerprint(a.model));
  const Model model = load_model(a.model, reg);
  const ModelPolicy policy(model);
  const std::vector<Problem> problems = read_problems(a.problems, *reg);
  std::vector<std::vector<IOPair>> examples;
  for (const auto& p : problems) examples.push_back(p.examples);

  SearchOptions opts;
  opts.method = parse_search_method(a.search_method);
  opts.max_len = a.max_len;
  opts.timeout_s = a.timeout;
  opts.beam_size = a.beam_size;
  opts.width = a.width;
  BatchSummary summary;
  std::string last = "Solving problems... 0 (failed: 0)";
  const auto results = solve_batch(policy, examples, opts, a.num_workers, &summary,
                                   [&](const std::string& line) { last = line; });
  out << last << "\n" << summary.to_string() << "\n";

  std::ofstream f(a.result);
  if (!f) throw std::runtime_error("cannot write " + a.result);
  for (const auto& r : results) f << r.to_json(*reg).dump() << "\n";
  if (!f) throw std::runtime_error("write failed: " + a.result);
  return 0;
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  CLI::App app{"Programming-by-example synthesis toolkit", "pbe"};
  app.require_subcommand(1);

  GenArgs gen;
  auto* g = app.add_subcommand("gen_programs", "Generate a training corpus and test sets");
  gen.reg.add_to(g);
  g->add_option("--num_train", gen.num_train, "Cap on raw programs per length")
      ->required()->check(CLI::PositiveNumber);
  g->add_option("--train_output_path", gen.train_output_path, "Training dataset file")->required();
  g->add_option("--max_train_len", gen.max_train_len, "Longest program length")
      ->required()->check(CLI::Range(1, 20));
  g->add_option("--test_output_path", gen.test_output_path,
                "Prefix of test files, written as <prefix>_<length>");
  g->add_option("--test_lengths", gen.test_lengths, "Test program lengths (default: max_train_len)")
      ->delimiter(',');
  g->add_option("--num_test", gen.num_test, "Test programs per length")->check(CLI::NonNegativeNumber);
  g->add_option("--num_workers", gen.num_workers, "Parallel workers")->check(CLI::PositiveNumber);
  g->add_option("--cache", gen.cache, "Existing dataset to extend");
  g->add_option("--seed", gen.seed, "Random seed");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a model; writes <model_prefix>.<epoch> each epoch");
  tr.reg.add_to(t);
  t->add_option("dataset", tr.dataset, "Training dataset")->required();
  t->add_option("model_prefix", tr.model_prefix, "Checkpoint prefix")->required();
  t->add_option("--num_epochs", tr.cfg.num_epochs);
  t->add_option("--batch_size", tr.cfg.batch_size);
  t->add_option("--learning_rate", tr.cfg.learning_rate);
  t->add_option("--num_layers", tr.cfg.num_layers);
  t->add_option("--encoder_size", tr.cfg.encoder_size);
  t->add_option("--growth_size", tr.cfg.growth_size);
  t->add_option("--output_size", tr.cfg.output_size);
  t->add_option("--embedding_dim", tr.cfg.embedding_dim);
  t->add_option("--num_slots", tr.cfg.num_slots);
  t->add_option("--seed", tr.cfg.seed);
  t->add_option("--num_workers", tr.num_workers)->check(CLI::PositiveNumber);

  SolveArgs so;
  auto* s = app.add_subcommand("solve_problems", "Synthesize programs for a problem file");
  so.reg.add_to(s);
  s->add_option("problems", so.problems, "Problem file")->required();
  s->add_option("result", so.result, "Result file")->required();
  s->add_option("model", so.model, "Model file")->required();
  s->add_option("timeout", so.timeout, "Seconds per problem")->required()->check(CLI::PositiveNumber);
  s->add_option("max_len", so.max_len, "Longest program length")->required()->check(CLI::PositiveNumber);
  s->add_option("--num_workers", so.num_workers)->check(CLI::PositiveNumber);
  s->add_option("--search_method", so.search_method)->check(CLI::IsMember({"beam", "dfs"}));
  s->add_option("--beam_size", so.beam_size)->check(CLI::PositiveNumber);
  s->add_option("--width", so.width)->check(CLI::PositiveNumber);

  std::vector<std::string> rev(args.rbegin(), args.rend());
  try {
    app.parse(rev);
  } catch (const CLI::ParseError& e) {
    return app.exit(e, out, err);
  }
  try {
    if (g->parsed()) return gen_programs(gen, out);
    if (t->parsed()) {
      tr.cfg.validate();
      return train_cmd(tr, out);
    }
    return solve_cmd(so, out);
  } catch (const std::exception& e) {
    err << "error: " << e.what() << "\n";
    return 1;
  }
}

}  // namespace pbe
