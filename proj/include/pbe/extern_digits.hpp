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

// An 8x8 binary-image digit classifier exposed to the DSL as the extern
// function MNIST : LIST -> INT. An image is a list of 8 row bytes; bit c of
// row r is the pixel in column c.

#ifndef PBE_EXTERN_DIGITS_HPP_
#define PBE_EXTERN_DIGITS_HPP_

#include <array>
#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "pbe/dsl.hpp"
#include "pbe/value.hpp"

namespace pbe {

inline constexpr int kDigitRows = 8;
inline constexpr int kDigitErrorValue = 10;

// Grey level in [0, 16] to a pixel bit.
int binarize(int v);
// Sum of bits[i] * 2^i over 8 bits.
int row_to_byte(std::span<const int> bits);

struct DigitRecord {
  std::array<uint8_t, kDigitRows> rows{};
  int label = 0;
};

// Reads "b0 ... b7 label" records. Throws std::runtime_error on I/O or
// malformed lines.
std::vector<DigitRecord> load_digit_records(const std::filesystem::path& path);

// The bundled data file; the PBE_DATA_DIR environment variable overrides the
// directory chosen at build time.
std::filesystem::path default_digits_path();

// Nearest neighbour under Hamming distance on the 64 pixels. Ties between
// equally near records are settled by majority label, then by the earliest
// record. Immutable after construction.
class DigitClassifier {
 public:
  explicit DigitClassifier(std::span<const DigitRecord> records);

  int predict(const std::array<uint8_t, kDigitRows>& rows) const;
  double accuracy(std::span<const DigitRecord> records) const;
  size_t size() const { return images_.size(); }

 private:
  std::vector<uint64_t> images_;
  std::vector<int> labels_;
};

// kDigitErrorValue unless `x` is a list of exactly 8 integers in [0, 255].
Value mnist_fn(const DigitClassifier& clf, const Value& x);

// MNIST with the replicate-to-elements backward rule and error value 10.
ExternFunction make_mnist_extern(std::shared_ptr<const DigitClassifier> clf);
// Same, trained on the bundled data file.
ExternFunction make_mnist_extern();

}  // namespace pbe

#endif  // PBE_EXTERN_DIGITS_HPP_
