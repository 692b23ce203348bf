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

// The typed functional list DSL: lambdas, functions, registries, statements
// and programs, plus the textual program encoding
//
//   INPUT_TYPES|FUNC,ARG,ARG|FUNC,ARG...
//
// e.g. "LIST|MNIST,0" or "INT,LIST|TAKE,0,1|MAP,*2,2". An argument is either
// a decimal variable index (inputs first, then statement results in order) or
// a lambda name.

#ifndef PBE_DSL_HPP_
#define PBE_DSL_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <unordered_map>
#include <vector>

#include "pbe/errors.hpp"
#include "pbe/value.hpp"

namespace pbe {

inline constexpr int kMaxArity = 4;
inline constexpr int kMaxInputs = 3;

enum class LambdaOp : uint8_t {
  kPlus1, kMinus1, kTimes2, kDiv2, kNegate, kSquare, kTimes3, kDiv3, kTimes4, kDiv4,
  kGtZero, kLtZero, kEven, kOdd, kEqZero,
  kAdd, kSub, kMul, kMin, kMax,
};

struct LambdaDef {
  std::string name;
  Type type;
  LambdaOp op;
};

// Lambda application. Results are unchecked; callers range-check.
long long apply_int_lambda(LambdaOp op, long long x);
bool apply_predicate(LambdaOp op, long long x);
long long apply_binary_lambda(LambdaOp op, long long x, long long y);

enum class Op : uint8_t {
  kHead, kLast, kTake, kDrop, kAccess, kMinimum, kMaximum, kReverse, kSort, kSum,
  kMap, kFilter, kCount, kZipWith, kScanl1,
  kIfi, kIfl,
  kExtern,
};

enum class Category : uint8_t { kFirstOrder, kHigherOrder, kExtern };

// How constraints on an extern's result flow back to its arguments.
enum class BackwardRule : uint8_t {
  kUnconstrained,
  // INT result constraint replicated onto every element of the LIST argument.
  kReplicateToElements,
};

using ExternImpl = std::function<Value(std::span<const Value>)>;

// A host-implemented first-order function registered into the DSL.
struct ExternFunction {
  std::string name;
  std::vector<Type> params;
  Type result = Type::kInt;
  ExternImpl impl;
  BackwardRule backward = BackwardRule::kUnconstrained;
  // Result the function returns to signal "not applicable". Example
  // generation rejects inputs that make it appear.
  std::optional<int> error_value;
};

struct FunctionDef {
  std::string name;
  std::vector<Type> params;
  Type result = Type::kInt;
  Category category = Category::kFirstOrder;
  Op op = Op::kHead;
  ExternImpl impl;
  BackwardRule backward = BackwardRule::kUnconstrained;
  std::optional<int> error_value;
};

enum class Dialect : uint8_t { kBaseline, kExtended };

std::string_view dialect_name(Dialect d);
Dialect parse_dialect(std::string_view s);

// Immutable function/lambda library.
class Registry {
 public:
  // Baseline library, plus IFI/IFL/=0 when extended, plus externs appended
  // as first-order functions. Throws DslError on name collisions.
  static std::shared_ptr<const Registry> make(Dialect dialect,
                                              std::vector<ExternFunction> externs = {});

  Dialect dialect() const { return dialect_; }
  std::span<const FunctionDef> functions() const { return functions_; }
  std::span<const LambdaDef> lambdas() const { return lambdas_; }
  const FunctionDef& function(int i) const { return functions_[i]; }
  const LambdaDef& lambda(int i) const { return lambdas_[i]; }

  std::optional<int> find_function(std::string_view name) const;
  std::optional<int> find_lambda(std::string_view name) const;
  // Indices of lambdas of the given function type, in registry order.
  std::span<const int> lambdas_of(Type t) const;

  // Stable 16-hex-digit digest of every name and signature.
  const std::string& fingerprint() const { return fingerprint_; }

 private:
  Registry() = default;

  Dialect dialect_ = Dialect::kBaseline;
  std::vector<FunctionDef> functions_;
  std::vector<LambdaDef> lambdas_;
  std::unordered_map<std::string, int> function_index_;
  std::unordered_map<std::string, int> lambda_index_;
  std::array<std::vector<int>, 6> lambdas_by_type_;
  std::string fingerprint_;
};

using RegistryPtr = std::shared_ptr<const Registry>;

struct Operand {
  enum class Kind : uint8_t { kVar, kLambda };
  Kind kind = Kind::kVar;
  uint8_t index = 0;

  static Operand var(int i) { return {Kind::kVar, static_cast<uint8_t>(i)}; }
  static Operand lambda(int i) { return {Kind::kLambda, static_cast<uint8_t>(i)}; }
  bool is_var() const { return kind == Kind::kVar; }
  bool operator==(const Operand&) const = default;
};

struct Statement {
  uint16_t function = 0;
  uint8_t arity = 0;
  std::array<Operand, kMaxArity> operands{};

  Statement() = default;
  Statement(int fn, std::span<const Operand> args);

  std::span<const Operand> args() const { return {operands.data(), arity}; }
  bool uses_var(int v) const;
  bool operator==(const Statement& o) const;
  size_t hash() const;
};

struct Program {
  std::vector<Type> input_types;
  std::vector<Statement> statements;

  int num_inputs() const { return static_cast<int>(input_types.size()); }
  int length() const { return static_cast<int>(statements.size()); }
  int num_vars() const { return num_inputs() + length(); }
  bool operator==(const Program&) const = default;
};

// True when `s` is well typed over a variable environment of `env` types.
bool statement_is_valid(const Registry& reg, const Statement& s, std::span<const Type> env);

// Checks every program invariant; throws DslError describing the first
// violation.
void validate_program(const Registry& reg, const Program& p);

// Types of all variables: inputs followed by statement results.
std::vector<Type> var_types(const Registry& reg, const Program& p);

std::string print_statement(const Registry& reg, const Statement& s);
std::string print_program(const Registry& reg, const Program& p);
Program parse_program(const Registry& reg, std::string_view text);

// Every well-typed statement over `env`, ordered by function, then by the
// operand product (first operand outermost; lambdas in registry order,
// variables ascending).
std::vector<Statement> enumerate_statements(std::span<const Type> env, const Registry& reg);

// Every statement over `num_slots` variable slots regardless of slot types:
// the fixed statement vocabulary of the prediction network.
std::vector<Statement> enumerate_statement_space(const Registry& reg, int num_slots);

// All INT/LIST input signatures with 1..max_inputs inputs, shortest first.
std::vector<std::vector<Type>> all_signatures(int max_inputs = kMaxInputs);

}  // namespace pbe

template <>
struct std::hash<pbe::Statement> {
  size_t operator()(const pbe::Statement& s) const { return s.hash(); }
};

#endif  // PBE_DSL_HPP_
