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

// Runtime values and type tags of the list DSL.

#ifndef PBE_VALUE_HPP_
#define PBE_VALUE_HPP_

#include <array>
#include <cstdint>
#include <functional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace pbe {

inline constexpr int kIntMin = -256;
inline constexpr int kIntMax = 255;
inline constexpr int kMaxListLen = 20;

// INT and LIST are the only storable variable types. The function types
// describe lambda operands of higher-order functions.
enum class Type : uint8_t {
  kInt,
  kList,
  kBool,
  kIntToInt,     // FUNC(INT, INT)
  kIntToBool,    // FUNC(INT, BOOL)
  kIntIntToInt,  // FUNC((INT, INT), INT)
};

constexpr bool is_storable(Type t) { return t == Type::kInt || t == Type::kList; }
constexpr bool is_function_type(Type t) {
  return t == Type::kIntToInt || t == Type::kIntToBool || t == Type::kIntIntToInt;
}
constexpr bool in_int_range(long long v) { return v >= kIntMin && v <= kIntMax; }

std::string_view type_name(Type t);
// Parses "INT" / "LIST"; throws DslError otherwise.
Type parse_storable_type(std::string_view s);

class Value {
 public:
  enum class Kind : uint8_t { kNull, kInt, kList, kBool };

  Value() = default;

  static Value null() { return Value(); }
  // Out-of-range integers and over-long lists yield Null.
  static Value of_int(long long v);
  static Value of_bool(bool b);
  static Value of_list(std::span<const int> xs);
  static Value of_list(std::initializer_list<int> xs) {
    return of_list(std::span<const int>(xs.begin(), xs.size()));
  }

  Kind kind() const { return kind_; }
  bool is_null() const { return kind_ == Kind::kNull; }
  bool is_int() const { return kind_ == Kind::kInt; }
  bool is_list() const { return kind_ == Kind::kList; }
  bool is_bool() const { return kind_ == Kind::kBool; }

  // Storable type of a non-null INT/LIST value.
  Type type() const { return kind_ == Kind::kList ? Type::kList : Type::kInt; }
  bool has_type(Type t) const {
    return (t == Type::kInt && is_int()) || (t == Type::kList && is_list());
  }

  int as_int() const { return scalar_; }
  bool as_bool() const { return scalar_ != 0; }
  int size() const { return len_; }
  int operator[](int i) const { return elems_[i]; }
  std::vector<int> to_vector() const { return {elems_.begin(), elems_.begin() + len_}; }

  bool operator==(const Value& o) const;
  size_t hash() const;
  std::string to_string() const;

 private:
  Kind kind_ = Kind::kNull;
  uint8_t len_ = 0;
  int32_t scalar_ = 0;
  std::array<int16_t, kMaxListLen> elems_{};
};

// Builds a list value element by element, tracking range violations.
class ListBuilder {
 public:
  void push(long long v) {
    if (len_ >= kMaxListLen || !in_int_range(v)) {
      ok_ = false;
      return;
    }
    buf_[len_++] = static_cast<int>(v);
  }
  Value finish() const {
    return ok_ ? Value::of_list(std::span<const int>(buf_.data(), len_)) : Value::null();
  }

 private:
  std::array<int, kMaxListLen> buf_{};
  int len_ = 0;
  bool ok_ = true;
};

}  // namespace pbe

template <>
struct std::hash<pbe::Value> {
  size_t operator()(const pbe::Value& v) const { return v.hash(); }
};

#endif  // PBE_VALUE_HPP_
