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

// Evaluation of statements and programs. Every failure (partial function,
// range overflow, list too long, Null operand) becomes a Null value.

#ifndef PBE_INTERPRETER_HPP_
#define PBE_INTERPRETER_HPP_

#include <span>
#include <vector>

#include "pbe/dsl.hpp"
#include "pbe/value.hpp"

namespace pbe {

struct IOPair {
  std::vector<Value> inputs;
  Value output;

  bool operator==(const IOPair&) const = default;
};

// Precondition: `s` is well typed for `env`.
Value eval_statement(const Registry& reg, const Statement& s, std::span<const Value> env);

// Inputs followed by every statement result.
std::vector<Value> run_trace(const Registry& reg, const Program& p, std::span<const Value> inputs);

// Throws DslError when the inputs do not match the program's signature.
Value run_program(const Registry& reg, const Program& p, std::span<const Value> inputs);

// True iff every example output is reproduced exactly. Null never matches.
bool check_solution(const Registry& reg, const Program& p, std::span<const IOPair> examples);

}  // namespace pbe

#endif  // PBE_INTERPRETER_HPP_
