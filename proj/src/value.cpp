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

#include "pbe/value.hpp"

#include <algorithm>

#include "pbe/errors.hpp"

namespace pbe {

std::string_view type_name(Type t) {
  switch (t) {
    case Type::kInt: return "INT";
    case Type::kList: return "LIST";
    case Type::kBool: return "BOOL";
    case Type::kIntToInt: return "INT->INT";
    case Type::kIntToBool: return "INT->BOOL";
    case Type::kIntIntToInt: return "(INT,INT)->INT";
  }
  return "?";
}

Type parse_storable_type(std::string_view s) {
  if (s == "INT") return Type::kInt;
  if (s == "LIST") return Type::kList;
  throw DslError("unknown input type '" + std::string(s) + "'");
}

Value Value::of_int(long long v) {
  if (!in_int_range(v)) return null();
  Value r;
  r.kind_ = Kind::kInt;
  r.scalar_ = static_cast<int32_t>(v);
  return r;
}

Value Value::of_bool(bool b) {
  Value r;
  r.kind_ = Kind::kBool;
  r.scalar_ = b ? 1 : 0;
  return r;
}

Value Value::of_list(std::span<const int> xs) {
  if (xs.size() > static_cast<size_t>(kMaxListLen)) return null();
  Value r;
  r.kind_ = Kind::kList;
  for (int x : xs) {
    if (!in_int_range(x)) return null();
    r.elems_[r.len_++] = static_cast<int16_t>(x);
  }
  return r;
}

bool Value::operator==(const Value& o) const {
  if (kind_ != o.kind_) return false;
  switch (kind_) {
    case Kind::kNull: return true;
    case Kind::kInt:
    case Kind::kBool: return scalar_ == o.scalar_;
    case Kind::kList:
      return len_ == o.len_ && std::equal(elems_.begin(), elems_.begin() + len_, o.elems_.begin());
  }
  return false;
}

size_t Value::hash() const {
  uint64_t h = 1469598103934665603ull ^ static_cast<uint64_t>(kind_);
  auto mix = [&h](uint64_t x) { h = (h ^ x) * 1099511628211ull; };
  if (kind_ == Kind::kList) {
    mix(len_);
    for (int i = 0; i < len_; ++i) mix(static_cast<uint16_t>(elems_[i]));
  } else {
    mix(static_cast<uint32_t>(scalar_));
  }
  return static_cast<size_t>(h);
}

std::string Value::to_string() const {
  switch (kind_) {
    case Kind::kNull: return "null";
    case Kind::kInt: return std::to_string(scalar_);
    case Kind::kBool: return scalar_ ? "true" : "false";
    case Kind::kList: {
      std::string s = "[";
      for (int i = 0; i < len_; ++i) {
        if (i) s += ",";
        s += std::to_string(elems_[i]);
      }
      return s + "]";
    }
  }
  return "?";
}

}  // namespace pbe
