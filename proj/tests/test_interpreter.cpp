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

#include <algorithm>
#include <optional>
#include <variant>

#include "doctest.h"
#include "pbe/dsl.hpp"
#include "pbe/interpreter.hpp"
#include "pbe/random.hpp"

using namespace pbe;

namespace {

// Independent reference semantics written from the language description:
// values are optional ints or optional vectors, with overflow checks done
// on 64-bit intermediates.
using OInt = std::optional<long long>;
using OList = std::optional<std::vector<long long>>;

bool ok(long long v) { return v >= -256 && v <= 255; }
OInt chk(long long v) { return ok(v) ? OInt(v) : std::nullopt; }
OList chk(std::vector<long long> v) {
  if (v.size() > 20) return std::nullopt;
  for (long long x : v)
    if (!ok(x)) return std::nullopt;
  return v;
}

long long unary(const std::string& f, long long x) {
  if (f == "+1") return x + 1;
  if (f == "-1") return x - 1;
  if (f == "*2") return x * 2;
  if (f == "/2") return x / 2;  // C++ division truncates toward zero
  if (f == "*(-1)") return -x;
  if (f == "**2") return x * x;
  if (f == "*3") return x * 3;
  if (f == "/3") return x / 3;
  if (f == "*4") return x * 4;
  if (f == "/4") return x / 4;
  FAIL("unknown unary lambda " << f);
  return 0;
}

bool pred(const std::string& f, long long x) {
  if (f == ">0") return x > 0;
  if (f == "<0") return x < 0;
  if (f == "EVEN") return x % 2 == 0;
  if (f == "ODD") return x % 2 != 0;
  if (f == "=0") return x == 0;
  FAIL("unknown predicate " << f);
  return false;
}

long long binary(const std::string& f, long long x, long long y) {
  if (f == "+") return x + y;
  if (f == "-") return x - y;
  if (f == "*") return x * y;
  if (f == "MIN") return std::min(x, y);
  if (f == "MAX") return std::max(x, y);
  FAIL("unknown binary lambda " << f);
  return 0;
}

using OVal = std::variant<OInt, OList>;

OVal reference_eval(const Registry& reg, const Statement& s, const std::vector<Value>& env) {
  const FunctionDef& fd = reg.function(s.function);
  const std::string& f = fd.name;
  auto args = s.args();
  auto lam = [&](int i) { return reg.lambda(args[i].index).name; };
  auto ival = [&](int i) -> OInt {
    const Value& v = env[args[i].index];
    return v.is_null() ? OInt() : OInt(v.as_int());
  };
  auto lval = [&](int i) -> OList {
    const Value& v = env[args[i].index];
    if (v.is_null()) return std::nullopt;
    auto xs = v.to_vector();
    return std::vector<long long>(xs.begin(), xs.end());
  };
  const bool returns_list = fd.result == Type::kList;
  auto null = [&]() -> OVal { return returns_list ? OVal(OList()) : OVal(OInt()); };
  for (const auto& a : args)
    if (a.is_var() && env[a.index].is_null()) return null();

  if (f == "HEAD") {
    auto xs = *lval(0);
    return xs.empty() ? OInt() : OInt(xs.front());
  }
  if (f == "LAST") {
    auto xs = *lval(0);
    return xs.empty() ? OInt() : OInt(xs.back());
  }
  if (f == "TAKE" || f == "DROP") {
    long long n = *ival(0);
    auto xs = *lval(1);
    n = std::max(0LL, std::min<long long>(n, xs.size()));
    if (f == "TAKE") return chk(std::vector<long long>(xs.begin(), xs.begin() + n));
    return chk(std::vector<long long>(xs.begin() + n, xs.end()));
  }
  if (f == "ACCESS") {
    long long n = *ival(0);
    auto xs = *lval(1);
    if (n < 0 || n >= static_cast<long long>(xs.size())) return OInt();
    return OInt(xs[n]);
  }
  if (f == "MINIMUM" || f == "MAXIMUM") {
    auto xs = *lval(0);
    if (xs.empty()) return OInt();
    return OInt(f == "MINIMUM" ? *std::min_element(xs.begin(), xs.end())
                               : *std::max_element(xs.begin(), xs.end()));
  }
  if (f == "REVERSE") {
    auto xs = *lval(0);
    std::reverse(xs.begin(), xs.end());
    return chk(xs);
  }
  if (f == "SORT") {
    auto xs = *lval(0);
    std::sort(xs.begin(), xs.end());
    return chk(xs);
  }
  if (f == "SUM") {
    long long s = 0;
    const auto xs = *lval(0);
    for (long long x : xs) s += x;
    return chk(s);
  }
  if (f == "MAP") {
    const auto xs = *lval(1);
    std::vector<long long> out;
    for (long long x : xs) out.push_back(unary(lam(0), x));
    return chk(out);
  }
  if (f == "FILTER") {
    const auto xs = *lval(1);
    std::vector<long long> out;
    for (long long x : xs)
      if (pred(lam(0), x)) out.push_back(x);
    return chk(out);
  }
  if (f == "COUNT") {
    const auto xs = *lval(1);
    long long c = 0;
    for (long long x : xs) c += pred(lam(0), x);
    return chk(c);
  }
  if (f == "ZIPWITH") {
    auto xs = *lval(1), ys = *lval(2);
    std::vector<long long> out;
    for (size_t i = 0; i < std::min(xs.size(), ys.size()); ++i)
      out.push_back(binary(lam(0), xs[i], ys[i]));
    return chk(out);
  }
  if (f == "SCANL1") {
    auto xs = *lval(1);
    std::vector<long long> out;
    for (size_t i = 0; i < xs.size(); ++i) {
      const long long acc = i == 0 ? xs[0] : binary(lam(0), out.back(), xs[i]);
      if (!ok(acc)) return OList();
      out.push_back(acc);
    }
    return chk(out);
  }
  if (f == "IFI") return pred(lam(0), *ival(1)) ? ival(2) : ival(3);
  if (f == "IFL") return pred(lam(0), *ival(1)) ? lval(2) : lval(3);
  FAIL("unhandled function " << f);
  return OInt();
}

bool same(const Value& v, const OVal& r) {
  if (auto* i = std::get_if<OInt>(&r)) {
    if (!*i) return v.is_null();
    return v.is_int() && v.as_int() == **i;
  }
  const OList& l = std::get<OList>(r);
  if (!l) return v.is_null();
  if (!v.is_list() || v.size() != static_cast<int>(l->size())) return false;
  for (int k = 0; k < v.size(); ++k)
    if (v[k] != (*l)[k]) return false;
  return true;
}

Value random_value(Type t, Rng& rng, bool allow_null) {
  if (allow_null && uniform_int(rng, 0, 19) == 0) return Value::null();
  // Mix small values (meaningful indices), edge values and full-range values.
  auto elem = [&]() -> int {
    switch (uniform_int(rng, 0, 3)) {
      case 0: return static_cast<int>(uniform_int(rng, -3, 3));
      case 1: return uniform_int(rng, 0, 1) ? kIntMax : kIntMin;
      case 2: return static_cast<int>(uniform_int(rng, -20, 20));
      default: return static_cast<int>(uniform_int(rng, kIntMin, kIntMax));
    }
  };
  if (t == Type::kInt) return Value::of_int(elem());
  std::vector<int> xs(uniform_int(rng, 0, kMaxListLen));
  for (int& x : xs) x = elem();
  return Value::of_list(xs);
}

bool in_closure(const Value& v) {
  if (v.is_null()) return true;
  if (v.is_int()) return in_int_range(v.as_int());
  if (!v.is_list() || v.size() > kMaxListLen) return false;
  for (int i = 0; i < v.size(); ++i)
    if (!in_int_range(v[i])) return false;
  return true;
}

}  // namespace

TEST_CASE("branching examples") {
  auto reg = Registry::make(Dialect::kExtended);
  Program p = parse_program(*reg, "INT,INT,INT|IFI,>0,0,1,2");
  std::vector<Value> in = {Value::of_int(5), Value::of_int(1), Value::of_int(2)};
  CHECK(run_program(*reg, p, in) == Value::of_int(1));
  Program q = parse_program(*reg, "INT,LIST,LIST|IFL,EVEN,0,1,2");
  std::vector<Value> in2 = {Value::of_int(3), Value::of_list({1}), Value::of_list({2})};
  CHECK(run_program(*reg, q, in2) == Value::of_list({2}));
}

TEST_CASE("IFI/IFL agree with a direct conditional for every predicate") {
  auto reg = Registry::make(Dialect::kExtended);
  const Value x = Value::of_int(7), y = Value::of_int(-9);
  const Value xs = Value::of_list({1, 2}), ys = Value::of_list({});
  for (const char* f : {"=0", ">0", "<0", "EVEN", "ODD"}) {
    Program ifi = parse_program(*reg, std::string("INT,INT,INT|IFI,") + f + ",0,1,2");
    Program ifl = parse_program(*reg, std::string("INT,LIST,LIST|IFL,") + f + ",0,1,2");
    for (int n = -8; n <= 8; ++n) {
      const bool cond = pred(f, n);
      std::vector<Value> a = {Value::of_int(n), x, y};
      std::vector<Value> b = {Value::of_int(n), xs, ys};
      CHECK(run_program(*reg, ifi, a) == (cond ? x : y));
      CHECK(run_program(*reg, ifl, b) == (cond ? xs : ys));
    }
  }
}

TEST_CASE("partial functions and edge cases") {
  auto reg = Registry::make(Dialect::kBaseline);
  auto run = [&](const char* text, std::vector<Value> in) {
    return run_program(*reg, parse_program(*reg, text), in);
  };
  const Value empty = Value::of_list({});
  CHECK(run("LIST|HEAD,0", {empty}).is_null());
  CHECK(run("LIST|LAST,0", {empty}).is_null());
  CHECK(run("LIST|MINIMUM,0", {empty}).is_null());
  CHECK(run("LIST|MAXIMUM,0", {empty}).is_null());
  CHECK(run("LIST|SUM,0", {empty}) == Value::of_int(0));
  CHECK(run("LIST|MAP,+1,0", {Value::of_list({1, 2, 3})}) == Value::of_list({2, 3, 4}));
  CHECK(run("INT,LIST|ACCESS,0,1", {Value::of_int(3), Value::of_list({1, 2})}).is_null());
  CHECK(run("INT,LIST|ACCESS,0,1", {Value::of_int(-1), Value::of_list({1, 2})}).is_null());
  CHECK(run("INT,LIST|TAKE,0,1", {Value::of_int(-4), Value::of_list({1, 2})}) == empty);
  CHECK(run("INT,LIST|DROP,0,1", {Value::of_int(9), Value::of_list({1, 2})}) == empty);
  CHECK(run("LIST|MAP,/2,0", {Value::of_list({-3, 3})}) == Value::of_list({-1, 1}));
  CHECK(run("LIST|MAP,**2,0", {Value::of_list({16})}).is_null());
  CHECK(run("LIST|MAP,**2,0", {Value::of_list({15})}) == Value::of_list({225}));
  CHECK(run("LIST|SUM,0", {Value::of_list({200, 100})}).is_null());
  CHECK(run("LIST|SCANL1,+,0", {Value::of_list({200, 100, -100})}).is_null());
  CHECK(run("LIST|FILTER,ODD,0", {Value::of_list({-3, -2, 5})}) == Value::of_list({-3, 5}));
  // Null mid-chain propagates to the output.
  CHECK(run("LIST|HEAD,0|TAKE,1,0", {empty}).is_null());
}

TEST_CASE("run_program rejects mismatched inputs") {
  auto reg = Registry::make(Dialect::kBaseline);
  Program p = parse_program(*reg, "LIST|SORT,0");
  std::vector<Value> wrong = {Value::of_int(1)};
  std::vector<Value> too_many = {Value::of_list({1}), Value::of_list({2})};
  CHECK_THROWS_AS(run_program(*reg, p, wrong), DslError);
  CHECK_THROWS_AS(run_program(*reg, p, too_many), DslError);
}

TEST_CASE("check_solution") {
  auto reg = Registry::make(Dialect::kBaseline);
  Program p = parse_program(*reg, "LIST|SORT,0");
  std::vector<IOPair> good = {{{Value::of_list({3, 1})}, Value::of_list({1, 3})}};
  std::vector<IOPair> bad = {{{Value::of_list({3, 1})}, Value::of_list({3, 1})}};
  std::vector<IOPair> null_out = {{{Value::of_list({})}, Value::null()}};
  CHECK(check_solution(*reg, p, good));
  CHECK_FALSE(check_solution(*reg, p, bad));
  Program h = parse_program(*reg, "LIST|HEAD,0");
  CHECK_FALSE(check_solution(*reg, h, null_out));
}

TEST_CASE("random statements match the reference semantics and stay in range") {
  for (Dialect d : {Dialect::kBaseline, Dialect::kExtended}) {
    auto reg = Registry::make(d);
    Rng rng(d == Dialect::kBaseline ? 11 : 12);
    int checked = 0;
    for (const auto& sig : all_signatures()) {
      const auto stmts = enumerate_statements(sig, *reg);
      if (stmts.empty()) continue;
      for (int trial = 0; trial < 1000; ++trial) {
        std::vector<Value> env;
        for (Type t : sig) env.push_back(random_value(t, rng, true));
        const Statement& s = stmts[uniform_int(rng, 0, stmts.size() - 1)];
        const Value got = eval_statement(*reg, s, env);
        const OVal want = reference_eval(*reg, s, env);
        if (!same(got, want)) {
          std::string envs;
          for (const Value& v : env) envs += v.to_string() + " ";
          FAIL_CHECK(print_statement(*reg, s) << " disagrees on " << envs << "-> " << got.to_string());
        }
        CHECK(in_closure(got));
        // Determinism.
        CHECK(eval_statement(*reg, s, env) == got);
        ++checked;
      }
    }
    CHECK(checked >= 10000);
  }
}
