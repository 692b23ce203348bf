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

// Serial reference (workers = 1) against the OpenMP paths for the
// data-parallel kernels: example generation, deduplication, training and
// batch solving.

#include <benchmark/benchmark.h>

#include <algorithm>

#include "pbe/generator.hpp"
#include "pbe/model.hpp"
#include "pbe/parallel.hpp"
#include "pbe/random.hpp"
#include "pbe/search.hpp"

using namespace pbe;

namespace {

const RegistryPtr& registry() {
  static const RegistryPtr reg = Registry::make(Dialect::kExtended);
  return reg;
}

const std::vector<Program>& raw_programs() {
  static const std::vector<Program> ps =
      gen_raw_programs(*registry(), 3, 2000, 1, GeneratorConfig{}, 1);
  return ps;
}

const std::vector<DatasetEntry>& entries() {
  static const std::vector<DatasetEntry> es =
      attach_examples(*registry(), raw_programs(), 2, GeneratorConfig{}, 1);
  return es;
}

void worker_args(benchmark::internal::Benchmark* b) {
  b->Arg(1);
  b->Arg(std::max(2, hardware_workers()));
  b->Unit(benchmark::kMillisecond);
}

void BM_AttachExamples(benchmark::State& state) {
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state)
    benchmark::DoNotOptimize(attach_examples(*registry(), raw_programs(), 2, GeneratorConfig{}, workers));
  state.SetItemsProcessed(state.iterations() * raw_programs().size());
}
BENCHMARK(BM_AttachExamples)->Apply(worker_args);

void BM_Dedup(benchmark::State& state) {
  const int workers = static_cast<int>(state.range(0));
  const ProbeSet probes = ProbeSet::make(all_signatures(), kDedupProbes, 3);
  for (auto _ : state) benchmark::DoNotOptimize(dedup(*registry(), entries(), probes, workers));
  state.SetItemsProcessed(state.iterations() * entries().size());
}
BENCHMARK(BM_Dedup)->Apply(worker_args);

void BM_TrainEpoch(benchmark::State& state) {
  ModelConfig cfg;
  cfg.num_epochs = 1;
  cfg.encoder_size = 64;
  cfg.output_size = 64;
  TrainOptions opts;
  opts.workers = static_cast<int>(state.range(0));
  const std::span<const DatasetEntry> data(entries().data(), std::min<size_t>(300, entries().size()));
  for (auto _ : state) benchmark::DoNotOptimize(train(registry(), data, cfg, opts).num_params());
}
BENCHMARK(BM_TrainEpoch)->Apply(worker_args);

void BM_SolveBatch(benchmark::State& state) {
  const UniformPolicy policy(registry(), kDefaultSlots);
  std::vector<std::vector<IOPair>> problems;
  for (size_t i = 0; i < 16 && i < entries().size(); ++i) problems.push_back(entries()[i * 7].examples);
  SearchOptions o;
  o.max_len = 3;
  o.timeout_s = 0;
  const int workers = static_cast<int>(state.range(0));
  for (auto _ : state) benchmark::DoNotOptimize(solve_batch(policy, problems, o, workers));
  state.SetItemsProcessed(state.iterations() * problems.size());
}
BENCHMARK(BM_SolveBatch)->Apply(worker_args);

}  // namespace

BENCHMARK_MAIN();
