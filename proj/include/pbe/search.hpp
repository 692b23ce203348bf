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

// Example-driven program search guided by a statement policy.
//
// A search state keeps a bounded memory of variable slots per example. Each
// expansion asks the policy for scores over the statements that are legal
// for the present slots, applies the best ones to every example and keeps
// the children whose results are defined everywhere and new. When memory is
// full, the slot with the highest drop score is overwritten by the result.
//
// Beam search keeps the `beam_size` best children per depth, scoring a state
// by the sum of the log-probabilities of its statements (ties keep the
// earlier parent, then the earlier statement in vocabulary order). In
// anytime mode a round that ran out of states without ever truncating the
// beam or the width, or evicting a slot, proves that no solution exists within max_len; any other
// failed round is repeated with doubled beam size and width until the
// timeout. Depth-first search visits every legal statement in score order.
//
// num_steps counts policy invocations (expansions).

#ifndef PBE_SEARCH_HPP_
#define PBE_SEARCH_HPP_

#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"

#include "pbe/dsl.hpp"
#include "pbe/interpreter.hpp"
#include "pbe/model.hpp"

namespace pbe {

// Scores the legal statements of a memory state.
class Policy {
 public:
  virtual ~Policy() = default;
  virtual const StatementSpace& space() const = 0;
  // log_probs aligned with `legal`; one drop score per slot.
  virtual Prediction predict(const MemoryState& s, std::span<const int> legal) const = 0;
};

class ModelPolicy : public Policy {
 public:
  explicit ModelPolicy(const Model& m) : model_(&m) {}
  const StatementSpace& space() const override { return model_->space(); }
  Prediction predict(const MemoryState& s, std::span<const int> legal) const override;

 private:
  const Model* model_;
};

// Equal scores for every legal statement and every slot: search order
// falls back to vocabulary order and the lowest slot is evicted first.
class UniformPolicy : public Policy {
 public:
  UniformPolicy(RegistryPtr reg, int num_slots) : space_(std::move(reg), num_slots) {}
  const StatementSpace& space() const override { return space_; }
  Prediction predict(const MemoryState& s, std::span<const int> legal) const override;

 private:
  StatementSpace space_;
};

struct SearchState {
  MemoryState memory;
  std::vector<int> slot_vars;  // program variable held by each slot, -1 if free
  Program program;             // every statement applied so far, over program variables
  std::vector<int> dropped;    // evicted program variables, in eviction order
  double score = 0;
};

// Throws std::invalid_argument on a malformed problem: no examples,
// examples disagreeing in input types, non-storable or Null values, or more
// inputs than memory slots.
SearchState initial_state(std::span<const IOPair> examples, int num_slots);

struct Expansion {
  std::vector<SearchState> children;  // best first
  std::optional<Program> solution;    // first child reproducing every output
  int num_invalid = 0;                // children with a Null result on some example
  bool truncated = false;             // width cut off statements or a slot was evicted
};

// Applies the `width` best legal statements (width <= 0: all of them).
// Expansion stops at the first solution. Children duplicating the values of
// a slot already in memory are pruned after the solution check.
Expansion expand(const Policy& policy, const SearchState& state, int width);

// The shortest program computing variable `target` of `p`: statements the
// target does not depend on are removed and variables renumbered.
Program eliminate_dead_code(const Program& p, int target);

enum class SearchMethod { kBeam, kDfs };

SearchMethod parse_search_method(std::string_view s);

struct SearchOptions {
  SearchMethod method = SearchMethod::kBeam;
  int max_len = 5;
  int beam_size = 200;
  int width = 20;
  double timeout_s = 60;  // <= 0: no limit
  bool anytime = true;
};

struct SearchResult {
  std::optional<Program> program;
  long long num_steps = 0;
  double time = 0;
  int beam_size = 0;  // beam of the last round (0 for depth-first search)
  long long num_invalid = 0;
  int width = 0;      // width of the last round (0: unlimited)
  bool timed_out = false;

  bool solved() const { return program.has_value(); }
  // {"result", "num_steps", "time", "beam_size", "num_invalid", "width"};
  // result is the program text or null.
  nlohmann::ordered_json to_json(const Registry& reg) const;
};

SearchResult beam_search(const Policy& policy, std::span<const IOPair> examples,
                         const SearchOptions& opts);
SearchResult dfs_search(const Policy& policy, std::span<const IOPair> examples,
                        const SearchOptions& opts);
SearchResult search(const Policy& policy, std::span<const IOPair> examples,
                    const SearchOptions& opts);

struct BatchSummary {
  int total = 0;
  int solved = 0;
  int failed = 0;     // search ended without a solution before the timeout
  int timed_out = 0;

  double percent() const { return total ? 100.0 * solved / total : 0.0; }
  // e.g. "Solved: 94\100: 94.0" (a literal backslash between the solved
  // count and the total; percentage to one decimal).
  std::string to_string() const;
};

// Solves every problem, `workers` problems at a time. Results are in
// problem order and do not depend on the worker count (timing aside).
// `log` receives the running "Solving problems... N (failed: F)" line.
std::vector<SearchResult> solve_batch(const Policy& policy,
                                      std::span<const std::vector<IOPair>> problems,
                                      const SearchOptions& opts, int workers,
                                      BatchSummary* summary = nullptr,
                                      const std::function<void(const std::string&)>& log = {});

}  // namespace pbe

#endif  // PBE_SEARCH_HPP_
