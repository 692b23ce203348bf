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

#include <filesystem>
#include <fstream>

#include <unistd.h>

#include "doctest.h"
#include "pbe/dataset.hpp"

using namespace pbe;
namespace fs = std::filesystem;

namespace {

fs::path temp_file(const std::string& name) {
  return fs::temp_directory_path() / ("pbe_test_" + std::to_string(::getpid()) + "_" + name);
}

void write_text(const fs::path& p, const std::string& s) { std::ofstream(p) << s; }

}  // namespace

TEST_CASE("values serialise as integers and integer arrays") {
  CHECK(value_to_json(Value::of_int(-3)) == nlohmann::json(-3));
  CHECK(value_to_json(Value::of_list({1, 2})) == nlohmann::json::parse("[1,2]"));
  CHECK(value_from_json(nlohmann::json::parse("[4,5]")) == Value::of_list({4, 5}));
  CHECK_THROWS_AS(value_from_json(nlohmann::json(300)), FormatError);
  CHECK_THROWS_AS(value_from_json(nlohmann::json::parse("[1,\"a\"]")), FormatError);
  CHECK_THROWS_AS(value_from_json(nlohmann::json::parse("{}")), FormatError);
  CHECK_THROWS_AS(value_to_json(Value::null()), FormatError);
}

TEST_CASE("dataset round trip") {
  auto reg = Registry::make(Dialect::kExtended);
  BuildOptions opts;
  opts.num_train = 200;
  opts.max_train_len = 2;
  DatasetCache c = build_dataset(*reg, opts);
  const fs::path path = temp_file("ds.jsonl");
  write_dataset(path, *reg, c);
  DatasetCache back = read_dataset(path, *reg);
  CHECK(back.max_len_generated == c.max_len_generated);
  REQUIRE(back.entries.size() == c.entries.size());
  for (size_t i = 0; i < c.entries.size(); ++i) {
    CHECK(back.entries[i].program == c.entries[i].program);
    CHECK(back.entries[i].examples == c.entries[i].examples);
  }
  // Header carries version, fingerprint and max length.
  std::ifstream in(path);
  std::string first;
  std::getline(in, first);
  auto header = nlohmann::json::parse(first);
  CHECK(header["version"] == kDatasetFormatVersion);
  CHECK(header["registry_fingerprint"] == reg->fingerprint());
  CHECK(header["max_len"] == 2);

  auto base = Registry::make(Dialect::kBaseline);
  CHECK_THROWS_AS(read_dataset(path, *base), FormatError);
  fs::remove(path);
}

TEST_CASE("malformed datasets are rejected") {
  auto reg = Registry::make(Dialect::kBaseline);
  const fs::path path = temp_file("bad.jsonl");
  write_text(path, "{\"version\": 99, \"registry_fingerprint\": \"x\", \"max_len\": 1}\n");
  CHECK_THROWS_AS(read_dataset(path, *reg), FormatError);
  write_text(path, "{\"program\": \"LIST|NOPE,0\", \"examples\": []}\n");
  CHECK_THROWS_AS(read_dataset(path, *reg), FormatError);
  write_text(path, "not json\n");
  CHECK_THROWS_AS(read_dataset(path, *reg), FormatError);
  fs::remove(path);
  CHECK_THROWS(read_dataset(path, *reg));  // missing file
}

TEST_CASE("problem files accept flat and general inputs") {
  auto reg = Registry::make(Dialect::kExtended);
  const fs::path path = temp_file("problems.jsonl");
  write_text(path,
             "{\"examples\": [{\"inputs\": [24, 60, 100], \"output\": 0}]}\n"
             "{\"examples\": [{\"inputs\": [3, [1, 2]], \"output\": [1, 2]}]}\n"
             "{\"examples\": [{\"inputs\": 4, \"output\": 5}]}\n"
             "{\"program\": \"INT,INT|IFI,>0,0,1,1\", "
             "\"examples\": [{\"inputs\": [1, 2], \"output\": 2}]}\n");
  auto ps = read_problems(path, *reg);
  REQUIRE(ps.size() == 4);
  CHECK(ps[0].input_types() == std::vector<Type>{Type::kList});
  CHECK(ps[0].examples[0].inputs[0] == Value::of_list({24, 60, 100}));
  CHECK(ps[1].input_types() == std::vector<Type>{Type::kInt, Type::kList});
  CHECK(ps[2].input_types() == std::vector<Type>{Type::kInt});
  CHECK(ps[3].input_types() == std::vector<Type>{Type::kInt, Type::kInt});
  CHECK(ps[3].examples[0].inputs.size() == 2);

  write_text(path,
             "{\"examples\": [{\"inputs\": [1], \"output\": 0}, "
             "{\"inputs\": [[1], 2], \"output\": 0}]}\n");
  CHECK_THROWS_AS(read_problems(path, *reg), FormatError);
  write_text(path, "{\"examples\": []}\n");
  CHECK_THROWS_AS(read_problems(path, *reg), FormatError);
  fs::remove(path);
}
