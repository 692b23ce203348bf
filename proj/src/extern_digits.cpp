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

#include "pbe/extern_digits.hpp"

#include <bit>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <stdexcept>

#ifndef PBE_DATA_DIR
#define PBE_DATA_DIR "data"
#endif

namespace pbe {
namespace {

uint64_t pack(const std::array<uint8_t, kDigitRows>& rows) {
  uint64_t v = 0;
  for (int r = 0; r < kDigitRows; ++r) v |= static_cast<uint64_t>(rows[r]) << (8 * r);
  return v;
}

}  // namespace

int binarize(int v) { return v < 8 ? 0 : 1; }

int row_to_byte(std::span<const int> bits) {
  int r = 0;
  for (size_t i = 0; i < bits.size(); ++i) r += bits[i] * (1 << i);
  return r;
}

std::vector<DigitRecord> load_digit_records(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open digit data " + path.string());
  std::vector<DigitRecord> out;
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    std::istringstream ss(line);
    DigitRecord rec;
    for (int r = 0; r < kDigitRows; ++r) {
      int b;
      if (!(ss >> b) || b < 0 || b > 255)
        throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad row byte");
      rec.rows[r] = static_cast<uint8_t>(b);
    }
    if (!(ss >> rec.label) || rec.label < 0 || rec.label > 9)
      throw std::runtime_error(path.string() + ":" + std::to_string(line_no) + ": bad label");
    out.push_back(rec);
  }
  return out;
}

std::filesystem::path default_digits_path() {
  if (const char* dir = std::getenv("PBE_DATA_DIR")) return std::filesystem::path(dir) / "digits8x8.txt";
  return std::filesystem::path(PBE_DATA_DIR) / "digits8x8.txt";
}

DigitClassifier::DigitClassifier(std::span<const DigitRecord> records) {
  if (records.empty()) throw std::invalid_argument("classifier needs at least one record");
  for (const auto& r : records) {
    images_.push_back(pack(r.rows));
    labels_.push_back(r.label);
  }
}

int DigitClassifier::predict(const std::array<uint8_t, kDigitRows>& rows) const {
  const uint64_t x = pack(rows);
  int best = 65;
  std::array<int, 10> votes{};
  std::array<size_t, 10> first{};
  for (size_t i = 0; i < images_.size(); ++i) {
    const int d = std::popcount(images_[i] ^ x);
    if (d < best) {
      best = d;
      votes.fill(0);
    }
    if (d == best && votes[labels_[i]]++ == 0) first[labels_[i]] = i;
  }
  int label = -1;
  for (int l = 0; l < 10; ++l) {
    if (votes[l] == 0) continue;
    if (label < 0 || votes[l] > votes[label] || (votes[l] == votes[label] && first[l] < first[label]))
      label = l;
  }
  return label;
}

double DigitClassifier::accuracy(std::span<const DigitRecord> records) const {
  if (records.empty()) return 0.0;
  size_t ok = 0;
  for (const auto& r : records) ok += predict(r.rows) == r.label;
  return static_cast<double>(ok) / records.size();
}

Value mnist_fn(const DigitClassifier& clf, const Value& x) {
  if (!x.is_list() || x.size() != kDigitRows) return Value::of_int(kDigitErrorValue);
  std::array<uint8_t, kDigitRows> rows{};
  for (int i = 0; i < kDigitRows; ++i) {
    if (x[i] < 0 || x[i] > 255) return Value::of_int(kDigitErrorValue);
    rows[i] = static_cast<uint8_t>(x[i]);
  }
  return Value::of_int(clf.predict(rows));
}

ExternFunction make_mnist_extern(std::shared_ptr<const DigitClassifier> clf) {
  ExternFunction f;
  f.name = "MNIST";
  f.params = {Type::kList};
  f.result = Type::kInt;
  f.impl = [clf](std::span<const Value> args) { return mnist_fn(*clf, args[0]); };
  f.backward = BackwardRule::kReplicateToElements;
  f.error_value = kDigitErrorValue;
  return f;
}

ExternFunction make_mnist_extern() {
  const auto records = load_digit_records(default_digits_path());
  return make_mnist_extern(std::make_shared<const DigitClassifier>(records));
}

}  // namespace pbe
