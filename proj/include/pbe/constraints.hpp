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

// Backward propagation of output bounds through a program, and constrained
// sampling of program inputs.
//
// A rule is sound when any arguments satisfying the returned constraints make
// the function produce either Null or a value satisfying the output
// constraint. Rules are free to be tighter than necessary.

#ifndef PBE_CONSTRAINTS_HPP_
#define PBE_CONSTRAINTS_HPP_

#include <array>
#include <span>
#include <variant>
#include <vector>

#include "pbe/dsl.hpp"
#include "pbe/random.hpp"
#include "pbe/value.hpp"

namespace pbe {

struct IntConstraint {
  int min = kIntMin;
  int max = kIntMax;

  bool empty() const { return min > max; }
  bool contains(long long v) const { return v >= min && v <= max; }
  IntConstraint meet(const IntConstraint& o) const {
    return {std::max(min, o.min), std::min(max, o.max)};
  }
  bool operator==(const IntConstraint&) const = default;
};

struct ListConstraint {
  int min_len = 0;
  int max_len = kMaxListLen;
  std::array<IntConstraint, kMaxListLen> elems{};

  static ListConstraint uniform(IntConstraint c, int min_len = 0, int max_len = kMaxListLen);

  // Tightest bound valid for every admissible position.
  IntConstraint elem_meet() const;
  bool empty() const;
  bool contains(const Value& v) const;
  ListConstraint meet(const ListConstraint& o) const;
  bool operator==(const ListConstraint&) const = default;
};

using Constraint = std::variant<IntConstraint, ListConstraint>;

Constraint full_constraint(Type t);
bool is_empty(const Constraint& c);
bool satisfies(const Value& v, const Constraint& c);
// Throws UnsatisfiableConstraint on an INT/LIST mismatch.
Constraint meet(const Constraint& a, const Constraint& b);

// Largest contiguous range of x in [kIntMin, kIntMax] with f(x) inside `out`.
IntConstraint unary_preimage(LambdaOp f, IntConstraint out);

// Constraints for each variable operand of `s` (in operand order) given the
// constraint on its result.
std::vector<Constraint> backward_rule(const Registry& reg, const Statement& s,
                                      const Constraint& out);

// Constraints on the program inputs, starting from a full-range constraint on
// the program output. Throws UnsatisfiableConstraint when some variable's
// constraint becomes empty.
std::vector<Constraint> propagate(const Registry& reg, const Program& p);

Value sample_value(const Constraint& c, Rng& rng);
std::vector<Value> sample_inputs(std::span<const Constraint> constraints, Rng& rng);
std::vector<Value> sample_inputs(std::span<const Constraint> constraints, uint64_t seed);

}  // namespace pbe

#endif  // PBE_CONSTRAINTS_HPP_
