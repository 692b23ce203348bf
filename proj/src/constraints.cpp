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

#include "pbe/constraints.hpp"

#include <algorithm>
#include <cmath>

#include "pbe/errors.hpp"

namespace pbe {
namespace {

constexpr IntConstraint kFullInt{};
constexpr IntConstraint kEmptyInt{1, 0};

int floor_div(int a, int b) { return a / b - ((a % b != 0) && ((a < 0) != (b < 0))); }
int ceil_div(int a, int b) { return -floor_div(-a, b); }
int isqrt(int v) { return v <= 0 ? 0 : static_cast<int>(std::sqrt(static_cast<double>(v))); }

const IntConstraint& as_int(const Constraint& c) { return std::get<IntConstraint>(c); }
const ListConstraint& as_list(const Constraint& c) { return std::get<ListConstraint>(c); }

// Operand constraints for x and y such that g(x, y) lands inside `out`.
std::pair<IntConstraint, IntConstraint> binary_preimage(LambdaOp g, IntConstraint out) {
  const int a = out.min, b = out.max;
  switch (g) {
    case LambdaOp::kAdd: {
      IntConstraint c{ceil_div(a, 2), floor_div(b, 2)};
      return {c, c};
    }
    case LambdaOp::kSub: {
      // y in [-r, r], x in [a + r, b - r] keeps x - y in [a, b].
      const int r = (b - a) / 4;
      return {{a + r, b - r}, {-r, r}};
    }
    case LambdaOp::kMul: {
      if (a <= 0 && b >= 0) {
        const int r = isqrt(std::min(b, -a));
        const int h = isqrt(b);
        // Non-negative operands are the better choice when the range is lopsided.
        if (h > 2 * r) return {{0, h}, {0, h}};
        return {{-r, r}, {-r, r}};
      }
      if (a > 0) {
        int lo = isqrt(a);
        if (lo * lo < a) ++lo;
        IntConstraint c{lo, isqrt(b)};
        return {c, c};
      }
      int lo = isqrt(-b);
      if (lo * lo < -b) ++lo;
      const int hi = isqrt(-a);
      return {{lo, hi}, {-hi, -lo}};
    }
    case LambdaOp::kMin:
    case LambdaOp::kMax:
      return {out, out};
    default:
      return {kFullInt, kFullInt};
  }
}

// Element constraint for SCANL1 so that every prefix fold stays in `out`,
// together with a cap on the list length.
std::pair<IntConstraint, int> scan_preimage(LambdaOp g, IntConstraint out, int max_len) {
  const int a = out.min, b = out.max;
  const int m = std::max(max_len, 1);
  switch (g) {
    case LambdaOp::kAdd:
    case LambdaOp::kSub:
      if (a <= 0 && b >= 0) {
        if (g == LambdaOp::kAdd) return {{ceil_div(a, m), floor_div(b, m)}, max_len};
        const int r = std::min(b, -a) / m;
        return {{-r, r}, max_len};
      }
      return {out, std::min(max_len, 1)};
    case LambdaOp::kMul:
      if (a <= -1 && b >= 1) {
        int k = 0;
        while (k < max_len && (1 << (k + 1)) <= std::min(b, -a)) ++k;
        if (k >= 3) return {{-2, 2}, k};
        return {{-1, 1}, max_len};
      }
      return {out, std::min(max_len, 1)};
    case LambdaOp::kMin:
    case LambdaOp::kMax:
      return {out, max_len};
    default:
      return {kFullInt, max_len};
  }
}

}  // namespace

ListConstraint ListConstraint::uniform(IntConstraint c, int min_len, int max_len) {
  ListConstraint l;
  l.min_len = min_len;
  l.max_len = max_len;
  l.elems.fill(c);
  return l;
}

IntConstraint ListConstraint::elem_meet() const {
  IntConstraint m = kFullInt;
  for (int i = 0; i < std::max(max_len, 1) && i < kMaxListLen; ++i) m = m.meet(elems[i]);
  return m;
}

bool ListConstraint::empty() const {
  if (min_len > max_len || min_len < 0 || max_len > kMaxListLen) return true;
  for (int i = 0; i < min_len; ++i)
    if (elems[i].empty()) return true;
  return false;
}

bool ListConstraint::contains(const Value& v) const {
  if (!v.is_list() || v.size() < min_len || v.size() > max_len) return false;
  for (int i = 0; i < v.size(); ++i)
    if (!elems[i].contains(v[i])) return false;
  return true;
}

ListConstraint ListConstraint::meet(const ListConstraint& o) const {
  ListConstraint r;
  r.min_len = std::max(min_len, o.min_len);
  r.max_len = std::min(max_len, o.max_len);
  for (int i = 0; i < kMaxListLen; ++i) r.elems[i] = elems[i].meet(o.elems[i]);
  // Positions whose range is empty cannot be filled.
  for (int i = 0; i < r.max_len; ++i) {
    if (r.elems[i].empty()) {
      r.max_len = i;
      break;
    }
  }
  return r;
}

Constraint full_constraint(Type t) {
  if (t == Type::kList) return ListConstraint{};
  return IntConstraint{};
}

bool is_empty(const Constraint& c) {
  return std::visit([](const auto& x) { return x.empty(); }, c);
}

bool satisfies(const Value& v, const Constraint& c) {
  if (const auto* ic = std::get_if<IntConstraint>(&c)) return v.is_int() && ic->contains(v.as_int());
  return as_list(c).contains(v);
}

Constraint meet(const Constraint& a, const Constraint& b) {
  if (a.index() != b.index()) throw UnsatisfiableConstraint("INT/LIST constraint mismatch");
  if (a.index() == 0) return as_int(a).meet(as_int(b));
  return as_list(a).meet(as_list(b));
}

IntConstraint unary_preimage(LambdaOp f, IntConstraint out) {
  int best_lo = 1, best_len = 0;
  int run_lo = 0, run_len = 0;
  auto score = [](int lo, int len) {
    // Longer runs first, then runs closer to zero.
    const int mid = lo + len / 2;
    return std::pair{len, -std::abs(mid)};
  };
  for (int x = kIntMin; x <= kIntMax + 1; ++x) {
    const bool ok = x <= kIntMax && out.contains(apply_int_lambda(f, x));
    if (ok) {
      if (run_len == 0) run_lo = x;
      ++run_len;
    } else if (run_len > 0) {
      if (score(run_lo, run_len) > score(best_lo, best_len)) {
        best_lo = run_lo;
        best_len = run_len;
      }
      run_len = 0;
    }
  }
  if (best_len == 0) return kEmptyInt;
  return {best_lo, best_lo + best_len - 1};
}

std::vector<Constraint> backward_rule(const Registry& reg, const Statement& s,
                                      const Constraint& out) {
  const FunctionDef& f = reg.function(s.function);
  auto lam = [&](int i) { return reg.lambda(s.operands[i].index).op; };
  constexpr int L = kMaxListLen;

  switch (f.op) {
    case Op::kHead:
    case Op::kLast:
    case Op::kMinimum:
    case Op::kMaximum:
      return {ListConstraint::uniform(as_int(out), 1, L)};
    case Op::kAccess:
      return {IntConstraint{0, L / 2 - 1}, ListConstraint::uniform(as_int(out), L / 2, L)};
    case Op::kSum: {
      const IntConstraint c = as_int(out);
      if (c.min <= 0 && c.max >= 0)
        return {ListConstraint::uniform({ceil_div(c.min, L), floor_div(c.max, L)}, 0, L)};
      return {ListConstraint::uniform(c, 1, 1)};
    }
    case Op::kReverse:
    case Op::kSort:
    case Op::kFilter: {
      const ListConstraint& c = as_list(out);
      IntConstraint e = c.elem_meet();
      if (f.op == Op::kFilter && c.min_len > 0) {
        // Kept elements must pass the predicate; interval predicates can say so.
        switch (lam(0)) {
          case LambdaOp::kGtZero: e = e.meet({1, kIntMax}); break;
          case LambdaOp::kLtZero: e = e.meet({kIntMin, -1}); break;
          case LambdaOp::kEqZero: e = e.meet({0, 0}); break;
          default: break;
        }
      }
      return {ListConstraint::uniform(e, c.min_len, c.max_len)};
    }
    case Op::kTake: {
      const ListConstraint& c = as_list(out);
      return {IntConstraint{c.min_len, c.max_len},
              ListConstraint::uniform(c.elem_meet(), c.min_len, L)};
    }
    case Op::kDrop: {
      const ListConstraint& c = as_list(out);
      if (c.min_len == 0)
        return {IntConstraint{0, L}, ListConstraint::uniform(c.elem_meet(), 0, c.max_len)};
      const int k = std::min(L / 2 - 1, c.max_len - c.min_len);
      return {IntConstraint{0, std::max(k, 0)},
              ListConstraint::uniform(c.elem_meet(), c.min_len + std::max(k, 0), c.max_len)};
    }
    case Op::kMap: {
      const ListConstraint& c = as_list(out);
      return {ListConstraint::uniform(unary_preimage(lam(0), c.elem_meet()), c.min_len, c.max_len)};
    }
    case Op::kCount: {
      const IntConstraint c = as_int(out);
      if (c.max < 0) return {ListConstraint::uniform(kEmptyInt, 1, 0)};
      return {ListConstraint::uniform(kFullInt, 0, std::min(L, c.max))};
    }
    case Op::kZipWith: {
      const ListConstraint& c = as_list(out);
      auto [x, y] = binary_preimage(lam(0), c.elem_meet());
      return {ListConstraint::uniform(x, c.min_len, c.max_len),
              ListConstraint::uniform(y, c.min_len, c.max_len)};
    }
    case Op::kScanl1: {
      const ListConstraint& c = as_list(out);
      auto [e, max_len] = scan_preimage(lam(0), c.elem_meet(), c.max_len);
      return {ListConstraint::uniform(e, c.min_len, max_len)};
    }
    case Op::kIfi:
    case Op::kIfl:
      return {IntConstraint{}, out, out};
    case Op::kExtern: {
      std::vector<Constraint> params;
      for (Type t : f.params) {
        if (f.backward == BackwardRule::kReplicateToElements && t == Type::kList &&
            f.result == Type::kInt) {
          params.push_back(ListConstraint::uniform(as_int(out)));
        } else {
          params.push_back(full_constraint(t));
        }
      }
      return params;
    }
  }
  return {};
}

std::vector<Constraint> propagate(const Registry& reg, const Program& p) {
  const auto types = var_types(reg, p);
  std::vector<Constraint> cs;
  cs.reserve(types.size());
  for (Type t : types) cs.push_back(full_constraint(t));

  for (int i = p.length() - 1; i >= 0; --i) {
    const Statement& s = p.statements[i];
    const int result_var = p.num_inputs() + i;
    auto params = backward_rule(reg, s, cs[result_var]);
    size_t k = 0;
    for (const auto& a : s.args()) {
      if (!a.is_var()) continue;
      cs[a.index] = meet(cs[a.index], params[k++]);
      if (is_empty(cs[a.index]))
        throw UnsatisfiableConstraint("variable " + std::to_string(a.index) +
                                      " has no admissible values");
    }
  }
  cs.resize(p.num_inputs());
  return cs;
}

Value sample_value(const Constraint& c, Rng& rng) {
  if (const auto* ic = std::get_if<IntConstraint>(&c))
    return Value::of_int(uniform_int(rng, ic->min, ic->max));
  const auto& lc = as_list(c);
  const int len = static_cast<int>(uniform_int(rng, lc.min_len, lc.max_len));
  std::array<int, kMaxListLen> buf{};
  for (int i = 0; i < len; ++i) buf[i] = static_cast<int>(uniform_int(rng, lc.elems[i].min, lc.elems[i].max));
  return Value::of_list(std::span<const int>(buf.data(), len));
}

std::vector<Value> sample_inputs(std::span<const Constraint> constraints, Rng& rng) {
  std::vector<Value> out;
  out.reserve(constraints.size());
  for (const auto& c : constraints) out.push_back(sample_value(c, rng));
  return out;
}

std::vector<Value> sample_inputs(std::span<const Constraint> constraints, uint64_t seed) {
  Rng rng(seed);
  return sample_inputs(constraints, rng);
}

}  // namespace pbe
