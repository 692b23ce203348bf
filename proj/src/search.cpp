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

#include "pbe/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <mutex>
#include <numeric>
#include <stdexcept>

#include "pbe/parallel.hpp"

namespace pbe {

namespace {

using Clock = std::chrono::steady_clock;

class Deadline {
 public:
  explicit Deadline(double timeout_s) : start_(Clock::now()), timeout_s_(timeout_s) {}
  double elapsed() const { return std::chrono::duration<double>(Clock::now() - start_).count(); }
  bool passed() const { return timeout_s_ > 0 && elapsed() >= timeout_s_; }

 private:
  Clock::time_point start_;
  double timeout_s_;
};

// Slot receiving a new result: the first free one, else the present slot
// with the highest drop score (lowest index on ties).
int target_slot(const MemoryState& m, std::span<const double> drop_scores) {
  for (int i = 0; i < m.num_slots(); ++i)
    if (!m.slots[i]) return i;
  int best = 0;
  for (int i = 1; i < m.num_slots(); ++i)
    if (drop_scores[i] > drop_scores[best]) best = i;
  return best;
}

struct Candidate {
  SearchState state;
  size_t arrival;
};

// Higher score first; earlier arrival (parent order, then statement order)
// on ties.
bool ranks_before(const Candidate& a, const Candidate& b) {
  if (a.state.score != b.state.score) return a.state.score > b.state.score;
  return a.arrival < b.arrival;
}

}  // namespace

// ---------------------------------------------------------------------------
// Policies

Prediction ModelPolicy::predict(const MemoryState& s, std::span<const int> legal) const {
  return model_->predict(encode_state(s, model_->config().num_slots), legal);
}

Prediction UniformPolicy::predict(const MemoryState& s, std::span<const int> legal) const {
  Prediction p;
  p.log_probs.assign(legal.size(), -std::log(static_cast<double>(std::max<size_t>(1, legal.size()))));
  p.drop_scores.assign(s.num_slots(), 0.5);
  return p;
}

// ---------------------------------------------------------------------------
// States and expansion

SearchState initial_state(std::span<const IOPair> examples, int num_slots) {
  if (examples.empty()) throw std::invalid_argument("problem has no examples");
  const auto& first = examples[0].inputs;
  const int n = static_cast<int>(first.size());
  if (n < 1) throw std::invalid_argument("problem has no inputs");
  if (n > num_slots) throw std::invalid_argument("problem has more inputs than memory slots");
  SearchState st;
  for (const Value& v : first) {
    if (!v.is_int() && !v.is_list()) throw std::invalid_argument("inputs must be INT or LIST");
    st.program.input_types.push_back(v.type());
  }
  st.memory.slots.assign(num_slots, std::nullopt);
  for (int i = 0; i < n; ++i) st.memory.slots[i] = st.program.input_types[i];
  st.slot_vars.assign(num_slots, -1);
  std::iota(st.slot_vars.begin(), st.slot_vars.begin() + n, 0);
  for (const IOPair& ex : examples) {
    if (static_cast<int>(ex.inputs.size()) != n)
      throw std::invalid_argument("examples disagree in input count");
    for (int i = 0; i < n; ++i)
      if (!ex.inputs[i].has_type(st.program.input_types[i]))
        throw std::invalid_argument("examples disagree in input types");
    if (!ex.output.is_int() && !ex.output.is_list())
      throw std::invalid_argument("outputs must be INT or LIST");
    std::vector<Value> row(num_slots);
    std::copy(ex.inputs.begin(), ex.inputs.end(), row.begin());
    st.memory.values.push_back(std::move(row));
    st.memory.outputs.push_back(ex.output);
  }
  return st;
}

Expansion expand(const Policy& policy, const SearchState& state, int width) {
  const StatementSpace& space = policy.space();
  const Registry& reg = space.registry();
  const MemoryState& mem = state.memory;
  const int n_ex = mem.num_examples();
  Expansion out;

  const auto legal = space.legal(mem.slots);
  const Prediction pred = policy.predict(mem, *legal);
  std::vector<int> order(legal->size());
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(),
                   [&](int a, int b) { return pred.log_probs[a] > pred.log_probs[b]; });
  size_t take = order.size();
  if (width > 0 && static_cast<size_t>(width) < take) {
    take = width;
    out.truncated = true;
  }

  const int slot = target_slot(mem, pred.drop_scores);
  if (mem.slots[slot]) out.truncated = true;  // eviction can hide solutions
  const int new_var = state.program.num_vars();
  std::vector<Value> result(n_ex);
  for (size_t k = 0; k < take; ++k) {
    const int li = order[k];
    const Statement& s = space.vocabulary()[(*legal)[li]];
    bool valid = true;
    for (int e = 0; e < n_ex && valid; ++e) {
      result[e] = eval_statement(reg, s, mem.values[e]);
      valid = !result[e].is_null();
    }
    if (!valid) {
      ++out.num_invalid;
      continue;
    }
    Statement over_vars = s;
    for (int a = 0; a < s.arity; ++a)
      if (s.operands[a].is_var())
        over_vars.operands[a].index = static_cast<uint8_t>(state.slot_vars[s.operands[a].index]);

    bool solves = true;
    for (int e = 0; e < n_ex && solves; ++e) solves = result[e] == mem.outputs[e];
    if (solves) {
      Program p = state.program;
      p.statements.push_back(over_vars);
      out.solution = eliminate_dead_code(p, new_var);
      return out;
    }

    bool duplicate = false;
    for (int i = 0; i < mem.num_slots() && !duplicate; ++i) {
      if (!mem.slots[i]) continue;
      bool same = true;
      for (int e = 0; e < n_ex && same; ++e) same = mem.values[e][i] == result[e];
      duplicate = same;
    }
    if (duplicate) continue;

    SearchState child = state;
    if (child.slot_vars[slot] >= 0) child.dropped.push_back(child.slot_vars[slot]);
    child.slot_vars[slot] = new_var;
    child.memory.slots[slot] = result[0].type();
    for (int e = 0; e < n_ex; ++e) child.memory.values[e][slot] = result[e];
    child.program.statements.push_back(over_vars);
    child.score += pred.log_probs[li];
    out.children.push_back(std::move(child));
  }
  return out;
}

Program eliminate_dead_code(const Program& p, int target) {
  const int n_in = p.num_inputs();
  if (target < n_in || target >= p.num_vars())
    throw std::invalid_argument("target must be a statement result");
  std::vector<char> needed(p.num_vars(), 0);
  needed[target] = 1;
  for (int v = target; v >= n_in; --v) {
    if (!needed[v]) continue;
    for (const Operand& o : p.statements[v - n_in].args())
      if (o.is_var()) needed[o.index] = 1;
  }
  Program out;
  out.input_types = p.input_types;
  std::vector<int> renamed(p.num_vars(), -1);
  std::iota(renamed.begin(), renamed.begin() + n_in, 0);
  for (int v = n_in; v <= target; ++v) {
    if (!needed[v]) continue;
    Statement s = p.statements[v - n_in];
    for (int a = 0; a < s.arity; ++a)
      if (s.operands[a].is_var()) s.operands[a].index = static_cast<uint8_t>(renamed[s.operands[a].index]);
    renamed[v] = out.num_vars();
    out.statements.push_back(s);
  }
  return out;
}

// ---------------------------------------------------------------------------
// Searches

SearchMethod parse_search_method(std::string_view s) {
  if (s == "beam") return SearchMethod::kBeam;
  if (s == "dfs") return SearchMethod::kDfs;
  throw std::invalid_argument("unknown search method '" + std::string(s) + "'");
}

SearchResult beam_search(const Policy& policy, std::span<const IOPair> examples,
                         const SearchOptions& opts) {
  if (opts.beam_size < 1) throw std::invalid_argument("beam_size must be positive");
  const Deadline deadline(opts.timeout_s);
  const SearchState root = initial_state(examples, policy.space().num_slots());
  SearchResult res;
  int beam = opts.beam_size;
  int width = opts.width;
  const int vocab = static_cast<int>(policy.space().vocabulary().size());
  if (width >= vocab) width = 0;

  while (true) {
    res.beam_size = beam;
    res.width = width;
    bool complete = true;
    std::vector<SearchState> frontier{root};
    for (int depth = 1; depth <= opts.max_len && !frontier.empty(); ++depth) {
      // Children in arrival order; the pool is cut back to the best `beam`
      // whenever it doubles, which keeps the same states a full stable sort
      // would keep while bounding memory.
      std::vector<Candidate> next;
      size_t arrival = 0;
      auto keep_best = [&] {
        if (static_cast<int>(next.size()) <= beam) return;
        std::nth_element(next.begin(), next.begin() + beam, next.end(), ranks_before);
        next.resize(beam);
        complete = false;
      };
      for (const SearchState& st : frontier) {
        if (deadline.passed()) {
          res.timed_out = true;
          res.time = deadline.elapsed();
          return res;
        }
        Expansion ex = expand(policy, st, width);
        ++res.num_steps;
        res.num_invalid += ex.num_invalid;
        if (ex.solution) {
          res.program = std::move(ex.solution);
          res.time = deadline.elapsed();
          return res;
        }
        complete = complete && !ex.truncated;
        if (depth == opts.max_len) continue;
        for (auto& c : ex.children) {
          next.push_back({std::move(c), arrival++});
          if (next.size() >= 2 * static_cast<size_t>(beam)) keep_best();
        }
      }
      keep_best();
      std::sort(next.begin(), next.end(), ranks_before);
      frontier.clear();
      for (auto& c : next) frontier.push_back(std::move(c.state));
    }
    if (complete || !opts.anytime) break;
    beam = beam > (1 << 29) ? beam : 2 * beam;
    if (width > 0) width = 2 * width >= vocab ? 0 : 2 * width;
  }
  res.time = deadline.elapsed();
  return res;
}

namespace {

struct DepthFirst {
  const Policy& policy;
  const SearchOptions& opts;
  const Deadline& deadline;
  SearchResult& res;

  // True when the search is over: solved or out of time.
  bool visit(const SearchState& st) {
    if (deadline.passed()) {
      res.timed_out = true;
      return true;
    }
    Expansion ex = expand(policy, st, 0);
    ++res.num_steps;
    res.num_invalid += ex.num_invalid;
    if (ex.solution) {
      res.program = std::move(ex.solution);
      return true;
    }
    if (st.program.length() + 1 >= opts.max_len) return false;
    for (const SearchState& c : ex.children)
      if (visit(c)) return true;
    return false;
  }
};

}  // namespace

SearchResult dfs_search(const Policy& policy, std::span<const IOPair> examples,
                        const SearchOptions& opts) {
  const Deadline deadline(opts.timeout_s);
  const SearchState root = initial_state(examples, policy.space().num_slots());
  SearchResult res;
  res.beam_size = 0;
  res.width = 0;
  if (opts.max_len >= 1) DepthFirst{policy, opts, deadline, res}.visit(root);
  res.time = deadline.elapsed();
  return res;
}

SearchResult search(const Policy& policy, std::span<const IOPair> examples,
                    const SearchOptions& opts) {
  return opts.method == SearchMethod::kDfs ? dfs_search(policy, examples, opts)
                                           : beam_search(policy, examples, opts);
}

nlohmann::ordered_json SearchResult::to_json(const Registry& reg) const {
  nlohmann::ordered_json j;
  j["result"] = program ? nlohmann::ordered_json(print_program(reg, *program)) : nullptr;
  j["num_steps"] = num_steps;
  j["time"] = time;
  j["beam_size"] = beam_size;
  j["num_invalid"] = num_invalid;
  j["width"] = width;
  return j;
}

// ---------------------------------------------------------------------------
// Batches

std::string BatchSummary::to_string() const {
  char buf[96];
  std::snprintf(buf, sizeof buf, "Solved: %d\\%d: %.1f", solved, total, percent());
  return buf;
}

std::vector<SearchResult> solve_batch(const Policy& policy,
                                      std::span<const std::vector<IOPair>> problems,
                                      const SearchOptions& opts, int workers,
                                      BatchSummary* summary,
                                      const std::function<void(const std::string&)>& log) {
  const int n = static_cast<int>(problems.size());
  std::vector<SearchResult> results(n);
  std::mutex mu;
  int done = 0, failed = 0;
  parallel_for(n, workers, [&](int i) {
    results[i] = search(policy, problems[i], opts);
    std::lock_guard<std::mutex> lock(mu);
    ++done;
    failed += !results[i].solved() && !results[i].timed_out;
    if (log) log("Solving problems... " + std::to_string(done) + " (failed: " + std::to_string(failed) + ")");
  });
  if (summary) {
    *summary = BatchSummary{};
    summary->total = n;
    for (const auto& r : results) {
      summary->solved += r.solved();
      summary->timed_out += r.timed_out;
      summary->failed += !r.solved() && !r.timed_out;
    }
  }
  return results;
}

}  // namespace pbe
