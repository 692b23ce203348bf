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

// Training/test corpus construction: raw program generation, example
// generation, redundant-variable pruning, observational-equivalence
// deduplication and incremental (cached) builds.

#ifndef PBE_GENERATOR_HPP_
#define PBE_GENERATOR_HPP_

#include <cstdint>
#include <functional>
#include <map>
#include <optional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "pbe/dsl.hpp"
#include "pbe/interpreter.hpp"

namespace pbe {

inline constexpr int kExamplesPerProgram = 5;
inline constexpr int kExampleRetries = 100;
// Shared probe tuples per signature for observational dedup. 64 separates
// every distinct length-1 behaviour (fewer probes merge conditionals whose
// predicate never flips on the probes).
inline constexpr int kDedupProbes = 64;

class GenerationExhausted : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct DatasetEntry {
  Program program;
  std::vector<IOPair> examples;
};

struct GeneratorConfig {
  std::vector<std::vector<Type>> signatures = all_signatures();
  int examples_per_program = kExamplesPerProgram;
  int example_retries = kExampleRetries;
  int program_retries = 1000;
  int num_probes = kDedupProbes;
};

// Rejects programs where some variable other than the output (inputs
// included) is never read. Returns the program unchanged otherwise.
std::optional<Program> prune_redundant(const Program& p);

// The raw program space of one length: every statement reads at least one
// variable nobody has read yet, no statement repeats, and no variable is
// redundant. Programs are visited in signature order, then statement
// enumeration order.
void for_each_program(const Registry& reg, std::span<const std::vector<Type>> signatures,
                      int length, const std::function<bool(const Program&)>& visit);
uint64_t count_programs(const Registry& reg, std::span<const std::vector<Type>> signatures,
                        int length);

// A random member of the raw program space of `target_len` statements: the
// signature is drawn uniformly, then each statement uniformly among the legal
// candidates. Throws GenerationExhausted after config.program_retries.
Program gen_random_program(int target_len, const Registry& reg, uint64_t seed,
                           const GeneratorConfig& config = {});

// `n` examples drawn from the backward-propagated input constraints;
// examples with Null outputs or extern error values are redrawn. Returns
// nullopt when constraints are unsatisfiable or an example runs out of
// retries.
std::optional<std::vector<IOPair>> gen_examples(const Registry& reg, const Program& p, int n,
                                                uint64_t seed, int retries = kExampleRetries);

std::string signature_key(std::span<const Type> sig);

// Shared probe input tuples per input-signature class.
struct ProbeSet {
  std::map<std::string, std::vector<std::vector<Value>>> by_signature;

  static ProbeSet make(std::span<const std::vector<Type>> signatures, int per_signature,
                       uint64_t seed);
  const std::vector<std::vector<Value>>& for_signature(std::span<const Type> sig) const;
};

// Behaviour of `p` on the probes of its signature class.
std::vector<Value> probe_outputs(const Registry& reg, const Program& p, const ProbeSet& probes);

// Symmetric cross-check: each program reproduces the other's examples.
bool equivalent_on_examples(const Registry& reg, const DatasetEntry& a, const DatasetEntry& b);

// Keeps one representative per behaviour: entries are bucketed by probe
// outputs, then confirmed equivalent by the example cross-check. Shorter
// programs win, then lexicographically smaller text. Idempotent.
std::vector<DatasetEntry> dedup(const Registry& reg, std::vector<DatasetEntry> entries,
                                const ProbeSet& probes, int workers = 1);

// Number of distinct behaviours among `programs` on the probe set.
size_t count_behaviours(const Registry& reg, std::span<const Program> programs,
                        const ProbeSet& probes);

struct DatasetCache {
  std::vector<DatasetEntry> entries;
  int max_len_generated = 0;
  std::string registry_fingerprint;
};

struct BuildOptions {
  int num_train = 1000;
  int max_train_len = 3;
  int workers = 1;
  uint64_t seed = 0;
  GeneratorConfig config;
  std::function<void(const std::string&)> log;
};

struct LengthStats {
  int length = 0;
  size_t raw = 0;
  size_t with_examples = 0;
  size_t kept = 0;
  bool exhaustive = false;
};

struct BuildStats {
  std::vector<LengthStats> lengths;
  size_t removed_by_sweep = 0;
  bool no_op = false;
};

// Raw programs of one length: the whole space when it holds at most
// `num_train` programs, otherwise `num_train` distinct uniform samples.
std::vector<Program> gen_raw_programs(const Registry& reg, int length, int num_train,
                                      uint64_t seed, const GeneratorConfig& config,
                                      int workers, bool* exhaustive = nullptr);

// Attaches examples to each program in parallel; infeasible programs are
// dropped. Per-program seeds depend only on (seed, program text).
std::vector<DatasetEntry> attach_examples(const Registry& reg, std::span<const Program> programs,
                                          uint64_t seed, const GeneratorConfig& config,
                                          int workers);

// Held-out problems: for each length, up to `num_test` programs whose
// behaviour differs from every training entry and from each other.
std::map<int, std::vector<DatasetEntry>> build_test_sets(const Registry& reg,
                                                         std::span<const DatasetEntry> train,
                                                         std::span<const int> lengths,
                                                         int num_test, uint64_t seed,
                                                         const GeneratorConfig& config = {},
                                                         int workers = 1);

// Extends `cache` (or an empty corpus) with lengths cache.max_len+1 ..
// max_train_len. Throws std::invalid_argument when the cache was built for
// another registry.
DatasetCache build_dataset(const Registry& reg, const BuildOptions& opts,
                           std::optional<DatasetCache> cache = std::nullopt,
                           BuildStats* stats = nullptr);

}  // namespace pbe

#endif  // PBE_GENERATOR_HPP_
