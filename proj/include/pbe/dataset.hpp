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

// Line-delimited JSON files: datasets (with an optional cache header record)
// and problem files.
//
//   {"version": 1, "registry_fingerprint": "...", "max_len": 3}
//   {"program": "LIST|SORT,0", "examples": [{"inputs": [[3,1]], "output": [1,3]}, ...]}
//
// Values are integers or arrays of integers. Writers always emit "inputs" as
// an array of values.

#ifndef PBE_DATASET_HPP_
#define PBE_DATASET_HPP_

#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "json.hpp"
#include "pbe/generator.hpp"

namespace pbe {

inline constexpr int kDatasetFormatVersion = 1;

nlohmann::json value_to_json(const Value& v);
// Throws FormatError for anything but an in-range integer or a list of them.
Value value_from_json(const nlohmann::json& j);

nlohmann::json entry_to_json(const Registry& reg, const DatasetEntry& e);
DatasetEntry entry_from_json(const Registry& reg, const nlohmann::json& j);

// Writes the header record followed by one record per entry.
void write_dataset(const std::filesystem::path& path, const Registry& reg,
                   const DatasetCache& cache);
void write_entries(const std::filesystem::path& path, const Registry& reg,
                   std::span<const DatasetEntry> entries);

// Reads a dataset, with or without a header. Throws FormatError on malformed
// records, an unknown version or a registry fingerprint mismatch, and
// std::runtime_error when the file cannot be opened.
DatasetCache read_dataset(const std::filesystem::path& path, const Registry& reg);

struct Problem {
  std::vector<IOPair> examples;
  std::optional<Program> program;  // known reference solution, if any

  std::vector<Type> input_types() const;
};

// Problem files hold one {"examples": [...]} object per line; records may
// also carry a "program". When no program is given, a flat integer array in
// "inputs" is one LIST input and a bare integer is one INT input.
std::vector<Problem> read_problems(const std::filesystem::path& path, const Registry& reg);
Problem problem_from_json(const Registry& reg, const nlohmann::json& j);

}  // namespace pbe

#endif  // PBE_DATASET_HPP_
