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

#include "pbe/interpreter.hpp"

#include <algorithm>
#include <array>

namespace pbe {
namespace {

Value eval_builtin(const Registry& reg, Op op, std::span<const Operand> args,
                   std::span<const Value> env) {
  auto var = [&](int i) -> const Value& { return env[args[i].index]; };
  auto lam = [&](int i) { return reg.lambda(args[i].index).op; };

  switch (op) {
    case Op::kHead: {
      const Value& xs = var(0);
      return xs.size() ? Value::of_int(xs[0]) : Value::null();
    }
    case Op::kLast: {
      const Value& xs = var(0);
      return xs.size() ? Value::of_int(xs[xs.size() - 1]) : Value::null();
    }
    case Op::kTake:
    case Op::kDrop: {
      const Value& xs = var(1);
      const int n = std::clamp(var(0).as_int(), 0, xs.size());
      ListBuilder b;
      const int lo = op == Op::kTake ? 0 : n;
      const int hi = op == Op::kTake ? n : xs.size();
      for (int i = lo; i < hi; ++i) b.push(xs[i]);
      return b.finish();
    }
    case Op::kAccess: {
      const int n = var(0).as_int();
      const Value& xs = var(1);
      return n >= 0 && n < xs.size() ? Value::of_int(xs[n]) : Value::null();
    }
    case Op::kMinimum:
    case Op::kMaximum: {
      const Value& xs = var(0);
      if (!xs.size()) return Value::null();
      int best = xs[0];
      for (int i = 1; i < xs.size(); ++i)
        best = op == Op::kMinimum ? std::min(best, xs[i]) : std::max(best, xs[i]);
      return Value::of_int(best);
    }
    case Op::kReverse: {
      const Value& xs = var(0);
      ListBuilder b;
      for (int i = xs.size() - 1; i >= 0; --i) b.push(xs[i]);
      return b.finish();
    }
    case Op::kSort: {
      std::vector<int> v = var(0).to_vector();
      std::sort(v.begin(), v.end());
      return Value::of_list(v);
    }
    case Op::kSum: {
      const Value& xs = var(0);
      long long s = 0;
      for (int i = 0; i < xs.size(); ++i) s += xs[i];
      return Value::of_int(s);
    }
    case Op::kMap: {
      const LambdaOp f = lam(0);
      const Value& xs = var(1);
      ListBuilder b;
      for (int i = 0; i < xs.size(); ++i) b.push(apply_int_lambda(f, xs[i]));
      return b.finish();
    }
    case Op::kFilter: {
      const LambdaOp f = lam(0);
      const Value& xs = var(1);
      ListBuilder b;
      for (int i = 0; i < xs.size(); ++i)
        if (apply_predicate(f, xs[i])) b.push(xs[i]);
      return b.finish();
    }
    case Op::kCount: {
      const LambdaOp f = lam(0);
      const Value& xs = var(1);
      int c = 0;
      for (int i = 0; i < xs.size(); ++i) c += apply_predicate(f, xs[i]);
      return Value::of_int(c);
    }
    case Op::kZipWith: {
      const LambdaOp f = lam(0);
      const Value& xs = var(1);
      const Value& ys = var(2);
      const int n = std::min(xs.size(), ys.size());
      ListBuilder b;
      for (int i = 0; i < n; ++i) b.push(apply_binary_lambda(f, xs[i], ys[i]));
      return b.finish();
    }
    case Op::kScanl1: {
      const LambdaOp f = lam(0);
      const Value& xs = var(1);
      ListBuilder b;
      long long acc = 0;
      for (int i = 0; i < xs.size(); ++i) {
        acc = i == 0 ? xs[0] : apply_binary_lambda(f, acc, xs[i]);
        if (!in_int_range(acc)) return Value::null();
        b.push(acc);
      }
      return b.finish();
    }
    case Op::kIfi:
    case Op::kIfl:
      return apply_predicate(lam(0), var(1).as_int()) ? var(2) : var(3);
    case Op::kExtern:
      break;
  }
  return Value::null();
}

}  // namespace

Value eval_statement(const Registry& reg, const Statement& s, std::span<const Value> env) {
  const FunctionDef& f = reg.function(s.function);
  for (const auto& a : s.args())
    if (a.is_var() && env[a.index].is_null()) return Value::null();

  if (f.op != Op::kExtern) return eval_builtin(reg, f.op, s.args(), env);

  std::array<Value, kMaxArity> argv;
  for (int i = 0; i < s.arity; ++i) argv[i] = env[s.operands[i].index];
  Value out = f.impl(std::span<const Value>(argv.data(), s.arity));
  return out.has_type(f.result) ? out : Value::null();
}

std::vector<Value> run_trace(const Registry& reg, const Program& p, std::span<const Value> inputs) {
  if (inputs.size() != p.input_types.size())
    throw DslError("program expects " + std::to_string(p.num_inputs()) + " inputs, got " +
                   std::to_string(inputs.size()));
  for (size_t i = 0; i < inputs.size(); ++i)
    if (!inputs[i].is_null() && !inputs[i].has_type(p.input_types[i]))
      throw DslError("input " + std::to_string(i) + " does not match type " +
                     std::string(type_name(p.input_types[i])));

  std::vector<Value> env(inputs.begin(), inputs.end());
  env.reserve(p.num_vars());
  for (const auto& s : p.statements) env.push_back(eval_statement(reg, s, env));
  return env;
}

Value run_program(const Registry& reg, const Program& p, std::span<const Value> inputs) {
  return run_trace(reg, p, inputs).back();
}

bool check_solution(const Registry& reg, const Program& p, std::span<const IOPair> examples) {
  for (const auto& ex : examples) {
    if (ex.output.is_null() || ex.inputs.size() != p.input_types.size()) return false;
    for (size_t i = 0; i < ex.inputs.size(); ++i)
      if (!ex.inputs[i].has_type(p.input_types[i])) return false;
    if (!(run_program(reg, p, ex.inputs) == ex.output)) return false;
  }
  return true;
}

}  // namespace pbe
