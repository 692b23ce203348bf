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

#include "pbe/dsl.hpp"

#include <algorithm>
#include <charconv>
#include <cstdio>

namespace pbe {
namespace {

struct BuiltinSpec {
  const char* name;
  std::vector<Type> params;
  Type result;
  Category category;
  Op op;
};

std::vector<BuiltinSpec> baseline_functions() {
  using enum Type;
  return {
      {"HEAD", {kList}, kInt, Category::kFirstOrder, Op::kHead},
      {"LAST", {kList}, kInt, Category::kFirstOrder, Op::kLast},
      {"TAKE", {kInt, kList}, kList, Category::kFirstOrder, Op::kTake},
      {"DROP", {kInt, kList}, kList, Category::kFirstOrder, Op::kDrop},
      {"ACCESS", {kInt, kList}, kInt, Category::kFirstOrder, Op::kAccess},
      {"MINIMUM", {kList}, kInt, Category::kFirstOrder, Op::kMinimum},
      {"MAXIMUM", {kList}, kInt, Category::kFirstOrder, Op::kMaximum},
      {"REVERSE", {kList}, kList, Category::kFirstOrder, Op::kReverse},
      {"SORT", {kList}, kList, Category::kFirstOrder, Op::kSort},
      {"SUM", {kList}, kInt, Category::kFirstOrder, Op::kSum},
      {"MAP", {kIntToInt, kList}, kList, Category::kHigherOrder, Op::kMap},
      {"FILTER", {kIntToBool, kList}, kList, Category::kHigherOrder, Op::kFilter},
      {"COUNT", {kIntToBool, kList}, kInt, Category::kHigherOrder, Op::kCount},
      {"ZIPWITH", {kIntIntToInt, kList, kList}, kList, Category::kHigherOrder, Op::kZipWith},
      {"SCANL1", {kIntIntToInt, kList}, kList, Category::kHigherOrder, Op::kScanl1},
  };
}

std::vector<BuiltinSpec> branching_functions() {
  using enum Type;
  return {
      {"IFI", {kIntToBool, kInt, kInt, kInt}, kInt, Category::kHigherOrder, Op::kIfi},
      {"IFL", {kIntToBool, kInt, kList, kList}, kList, Category::kHigherOrder, Op::kIfl},
  };
}

std::vector<LambdaDef> lambda_library(bool extended) {
  using enum Type;
  std::vector<LambdaDef> out = {
      {"+1", kIntToInt, LambdaOp::kPlus1},   {"-1", kIntToInt, LambdaOp::kMinus1},
      {"*2", kIntToInt, LambdaOp::kTimes2},  {"/2", kIntToInt, LambdaOp::kDiv2},
      {"*(-1)", kIntToInt, LambdaOp::kNegate}, {"**2", kIntToInt, LambdaOp::kSquare},
      {"*3", kIntToInt, LambdaOp::kTimes3},  {"/3", kIntToInt, LambdaOp::kDiv3},
      {"*4", kIntToInt, LambdaOp::kTimes4},  {"/4", kIntToInt, LambdaOp::kDiv4},
      {">0", kIntToBool, LambdaOp::kGtZero}, {"<0", kIntToBool, LambdaOp::kLtZero},
      {"EVEN", kIntToBool, LambdaOp::kEven}, {"ODD", kIntToBool, LambdaOp::kOdd},
  };
  if (extended) out.push_back({"=0", kIntToBool, LambdaOp::kEqZero});
  for (auto [name, op] : {std::pair{"+", LambdaOp::kAdd}, {"-", LambdaOp::kSub},
                          {"*", LambdaOp::kMul}, {"MIN", LambdaOp::kMin},
                          {"MAX", LambdaOp::kMax}}) {
    out.push_back({name, kIntIntToInt, op});
  }
  return out;
}

uint64_t fnv1a(std::string_view s) {
  uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) h = (h ^ c) * 1099511628211ull;
  return h;
}

bool parse_uint(std::string_view s, int& out) {
  if (s.empty() || !std::all_of(s.begin(), s.end(), [](char c) { return c >= '0' && c <= '9'; }))
    return false;
  auto [ptr, ec] = std::from_chars(s.data(), s.data() + s.size(), out);
  return ec == std::errc() && ptr == s.data() + s.size();
}

std::vector<std::string_view> split(std::string_view s, char sep) {
  std::vector<std::string_view> parts;
  size_t start = 0;
  while (true) {
    size_t pos = s.find(sep, start);
    parts.push_back(s.substr(start, pos == std::string_view::npos ? pos : pos - start));
    if (pos == std::string_view::npos) break;
    start = pos + 1;
  }
  return parts;
}

}  // namespace

long long apply_int_lambda(LambdaOp op, long long x) {
  switch (op) {
    case LambdaOp::kPlus1: return x + 1;
    case LambdaOp::kMinus1: return x - 1;
    case LambdaOp::kTimes2: return x * 2;
    case LambdaOp::kDiv2: return x / 2;
    case LambdaOp::kNegate: return -x;
    case LambdaOp::kSquare: return x * x;
    case LambdaOp::kTimes3: return x * 3;
    case LambdaOp::kDiv3: return x / 3;
    case LambdaOp::kTimes4: return x * 4;
    case LambdaOp::kDiv4: return x / 4;
    default: return x;
  }
}

bool apply_predicate(LambdaOp op, long long x) {
  switch (op) {
    case LambdaOp::kGtZero: return x > 0;
    case LambdaOp::kLtZero: return x < 0;
    case LambdaOp::kEven: return x % 2 == 0;
    case LambdaOp::kOdd: return x % 2 != 0;
    case LambdaOp::kEqZero: return x == 0;
    default: return false;
  }
}

long long apply_binary_lambda(LambdaOp op, long long x, long long y) {
  switch (op) {
    case LambdaOp::kAdd: return x + y;
    case LambdaOp::kSub: return x - y;
    case LambdaOp::kMul: return x * y;
    case LambdaOp::kMin: return std::min(x, y);
    case LambdaOp::kMax: return std::max(x, y);
    default: return x;
  }
}

std::string_view dialect_name(Dialect d) {
  return d == Dialect::kExtended ? "extended" : "baseline";
}

Dialect parse_dialect(std::string_view s) {
  if (s == "baseline") return Dialect::kBaseline;
  if (s == "extended") return Dialect::kExtended;
  throw DslError("unknown DSL dialect '" + std::string(s) + "'");
}

std::shared_ptr<const Registry> Registry::make(Dialect dialect,
                                               std::vector<ExternFunction> externs) {
  std::shared_ptr<Registry> reg(new Registry());
  reg->dialect_ = dialect;
  const bool extended = dialect == Dialect::kExtended;

  auto builtins = baseline_functions();
  if (extended) {
    auto more = branching_functions();
    builtins.insert(builtins.end(), more.begin(), more.end());
  }
  for (auto& b : builtins) {
    FunctionDef f;
    f.name = b.name;
    f.params = b.params;
    f.result = b.result;
    f.category = b.category;
    f.op = b.op;
    reg->functions_.push_back(std::move(f));
  }
  reg->lambdas_ = lambda_library(extended);

  for (auto& e : externs) {
    if (e.params.empty() || e.params.size() > static_cast<size_t>(kMaxArity))
      throw DslError("extern '" + e.name + "' must take 1.." + std::to_string(kMaxArity) +
                     " arguments");
    if (!is_storable(e.result) ||
        !std::all_of(e.params.begin(), e.params.end(), is_storable))
      throw DslError("extern '" + e.name + "' may only use INT and LIST types");
    if (!e.impl) throw DslError("extern '" + e.name + "' has no implementation");
    FunctionDef f;
    f.name = std::move(e.name);
    f.params = std::move(e.params);
    f.result = e.result;
    f.category = Category::kExtern;
    f.op = Op::kExtern;
    f.impl = std::move(e.impl);
    f.backward = e.backward;
    f.error_value = e.error_value;
    reg->functions_.push_back(std::move(f));
  }

  for (size_t i = 0; i < reg->functions_.size(); ++i) {
    const auto& name = reg->functions_[i].name;
    if (!reg->function_index_.emplace(name, static_cast<int>(i)).second)
      throw DslError("duplicate function name '" + name + "'");
  }
  for (size_t i = 0; i < reg->lambdas_.size(); ++i) {
    const auto& l = reg->lambdas_[i];
    if (reg->function_index_.count(l.name) ||
        !reg->lambda_index_.emplace(l.name, static_cast<int>(i)).second)
      throw DslError("duplicate lambda name '" + l.name + "'");
    reg->lambdas_by_type_[static_cast<int>(l.type)].push_back(static_cast<int>(i));
  }

  std::string desc;
  for (const auto& f : reg->functions_) {
    desc += f.name + "(";
    for (Type t : f.params) desc += std::string(type_name(t)) + ",";
    desc += ")" + std::string(type_name(f.result)) + ";";
  }
  for (const auto& l : reg->lambdas_) desc += l.name + ":" + std::string(type_name(l.type)) + ";";
  char hex[17];
  std::snprintf(hex, sizeof(hex), "%016llx", static_cast<unsigned long long>(fnv1a(desc)));
  reg->fingerprint_ = hex;
  return reg;
}

std::optional<int> Registry::find_function(std::string_view name) const {
  auto it = function_index_.find(std::string(name));
  if (it == function_index_.end()) return std::nullopt;
  return it->second;
}

std::optional<int> Registry::find_lambda(std::string_view name) const {
  auto it = lambda_index_.find(std::string(name));
  if (it == lambda_index_.end()) return std::nullopt;
  return it->second;
}

std::span<const int> Registry::lambdas_of(Type t) const {
  return lambdas_by_type_[static_cast<int>(t)];
}

Statement::Statement(int fn, std::span<const Operand> args)
    : function(static_cast<uint16_t>(fn)), arity(static_cast<uint8_t>(args.size())) {
  std::copy(args.begin(), args.end(), operands.begin());
}

bool Statement::uses_var(int v) const {
  for (const auto& a : args())
    if (a.is_var() && a.index == v) return true;
  return false;
}

bool Statement::operator==(const Statement& o) const {
  return function == o.function && arity == o.arity &&
         std::equal(operands.begin(), operands.begin() + arity, o.operands.begin());
}

size_t Statement::hash() const {
  uint64_t h = function * 0x9e3779b97f4a7c15ull + arity;
  for (const auto& a : args())
    h = (h ^ (static_cast<uint64_t>(a.kind) << 8 | a.index)) * 1099511628211ull;
  return static_cast<size_t>(h);
}

bool statement_is_valid(const Registry& reg, const Statement& s, std::span<const Type> env) {
  if (s.function >= reg.functions().size()) return false;
  const auto& f = reg.function(s.function);
  if (s.arity != f.params.size()) return false;
  for (int i = 0; i < s.arity; ++i) {
    const Operand& a = s.operands[i];
    const Type want = f.params[i];
    if (is_function_type(want)) {
      if (a.is_var() || a.index >= reg.lambdas().size() || reg.lambda(a.index).type != want)
        return false;
    } else {
      if (!a.is_var() || a.index >= env.size() || env[a.index] != want) return false;
    }
  }
  return true;
}

std::vector<Type> var_types(const Registry& reg, const Program& p) {
  std::vector<Type> types = p.input_types;
  for (const auto& s : p.statements) types.push_back(reg.function(s.function).result);
  return types;
}

void validate_program(const Registry& reg, const Program& p) {
  if (p.input_types.empty() || p.num_inputs() > kMaxInputs)
    throw DslError("program must have 1.." + std::to_string(kMaxInputs) + " inputs");
  for (Type t : p.input_types)
    if (!is_storable(t)) throw DslError("program inputs must be INT or LIST");
  if (p.statements.empty()) throw DslError("program has no statements");
  std::vector<Type> env = p.input_types;
  for (size_t i = 0; i < p.statements.size(); ++i) {
    const auto& s = p.statements[i];
    if (!statement_is_valid(reg, s, env))
      throw DslError("statement " + std::to_string(i) + " is ill-typed");
    env.push_back(reg.function(s.function).result);
  }
}

std::string print_statement(const Registry& reg, const Statement& s) {
  std::string out = reg.function(s.function).name;
  for (const auto& a : s.args()) {
    out += ',';
    out += a.is_var() ? std::to_string(a.index) : reg.lambda(a.index).name;
  }
  return out;
}

std::string print_program(const Registry& reg, const Program& p) {
  std::string out;
  for (int i = 0; i < p.num_inputs(); ++i) {
    if (i) out += ',';
    out += type_name(p.input_types[i]);
  }
  for (const auto& s : p.statements) {
    out += '|';
    out += print_statement(reg, s);
  }
  return out;
}

Program parse_program(const Registry& reg, std::string_view text) {
  if (text.empty()) throw DslError("empty program text");
  auto segments = split(text, '|');
  if (segments.size() < 2) throw DslError("program has no statements: '" + std::string(text) + "'");

  Program p;
  for (auto t : split(segments[0], ',')) p.input_types.push_back(parse_storable_type(t));
  if (p.num_inputs() > kMaxInputs) throw DslError("too many inputs");

  std::vector<Type> env = p.input_types;
  for (size_t si = 1; si < segments.size(); ++si) {
    auto fields = split(segments[si], ',');
    auto fn = reg.find_function(fields[0]);
    if (!fn) throw DslError("unknown function '" + std::string(fields[0]) + "'");
    const auto& f = reg.function(*fn);
    if (fields.size() - 1 != f.params.size())
      throw DslError(f.name + " expects " + std::to_string(f.params.size()) + " arguments");

    std::array<Operand, kMaxArity> ops{};
    for (size_t ai = 0; ai < f.params.size(); ++ai) {
      std::string_view tok = fields[ai + 1];
      const Type want = f.params[ai];
      int idx = 0;
      if (parse_uint(tok, idx)) {
        if (idx >= static_cast<int>(env.size()))
          throw DslError("variable " + std::string(tok) + " is not defined before statement " +
                         std::to_string(si - 1));
        if (env[idx] != want)
          throw DslError(f.name + " argument " + std::to_string(ai) + ": variable " +
                         std::string(tok) + " is " + std::string(type_name(env[idx])) +
                         " where " + std::string(type_name(want)) + " is required");
        ops[ai] = Operand::var(idx);
      } else {
        auto lam = reg.find_lambda(tok);
        if (!lam) throw DslError("unknown lambda '" + std::string(tok) + "'");
        if (reg.lambda(*lam).type != want)
          throw DslError(f.name + " argument " + std::to_string(ai) + ": lambda '" +
                         std::string(tok) + "' has the wrong type");
        ops[ai] = Operand::lambda(*lam);
      }
    }
    p.statements.emplace_back(*fn, std::span<const Operand>(ops.data(), f.params.size()));
    env.push_back(f.result);
  }
  return p;
}

namespace {

// Cartesian product over per-parameter operand choices.
void product(const std::vector<std::vector<Operand>>& choices, int fn, std::vector<Statement>& out) {
  for (const auto& c : choices)
    if (c.empty()) return;
  std::array<Operand, kMaxArity> cur{};
  std::array<size_t, kMaxArity> pos{};
  const size_t n = choices.size();
  while (true) {
    for (size_t i = 0; i < n; ++i) cur[i] = choices[i][pos[i]];
    out.emplace_back(fn, std::span<const Operand>(cur.data(), n));
    size_t i = n;
    while (i > 0) {
      --i;
      if (++pos[i] < choices[i].size()) break;
      pos[i] = 0;
      if (i == 0) return;
    }
    if (n == 0) return;
  }
}

std::vector<Statement> enumerate_impl(const Registry& reg, int num_slots,
                                      std::span<const Type> env) {
  std::vector<Statement> out;
  const auto& fns = reg.functions();
  for (size_t fi = 0; fi < fns.size(); ++fi) {
    std::vector<std::vector<Operand>> choices;
    for (Type t : fns[fi].params) {
      std::vector<Operand> c;
      if (is_function_type(t)) {
        for (int l : reg.lambdas_of(t)) c.push_back(Operand::lambda(l));
      } else {
        for (int v = 0; v < num_slots; ++v)
          if (env.empty() || env[v] == t) c.push_back(Operand::var(v));
      }
      choices.push_back(std::move(c));
    }
    product(choices, static_cast<int>(fi), out);
  }
  return out;
}

}  // namespace

std::vector<Statement> enumerate_statements(std::span<const Type> env, const Registry& reg) {
  if (env.empty()) return {};
  return enumerate_impl(reg, static_cast<int>(env.size()), env);
}

std::vector<Statement> enumerate_statement_space(const Registry& reg, int num_slots) {
  return enumerate_impl(reg, num_slots, {});
}

std::vector<std::vector<Type>> all_signatures(int max_inputs) {
  std::vector<std::vector<Type>> out;
  for (int n = 1; n <= max_inputs; ++n) {
    for (int mask = 0; mask < (1 << n); ++mask) {
      std::vector<Type> sig;
      for (int i = 0; i < n; ++i) sig.push_back((mask >> (n - 1 - i)) & 1 ? Type::kInt : Type::kList);
      out.push_back(std::move(sig));
    }
  }
  return out;
}

}  // namespace pbe
