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

#include "pbe/dataset.hpp"

#include <fstream>
#include <stdexcept>

#include "pbe/errors.hpp"

namespace pbe {
namespace {

using nlohmann::json;

std::ifstream open_in(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

std::ofstream open_out(const std::filesystem::path& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  return out;
}

bool is_int_array(const json& j) {
  if (!j.is_array()) return false;
  for (const json& x : j)
    if (!x.is_number_integer()) return false;
  return true;
}

std::vector<Value> inputs_from_json(const json& j, const std::optional<Program>& program) {
  std::vector<Value> out;
  if (j.is_number_integer()) {
    out.push_back(value_from_json(j));
  } else if (!program && is_int_array(j)) {
    out.push_back(value_from_json(j));
  } else if (j.is_array()) {
    for (const json& x : j) out.push_back(value_from_json(x));
  } else {
    throw FormatError("\"inputs\" must be an integer or an array");
  }
  return out;
}

std::vector<IOPair> examples_from_json(const json& j, const std::optional<Program>& program) {
  if (!j.is_object() || !j.contains("examples") || !j["examples"].is_array())
    throw FormatError("record lacks an \"examples\" array");
  std::vector<IOPair> out;
  for (const json& ex : j["examples"]) {
    if (!ex.is_object() || !ex.contains("inputs") || !ex.contains("output"))
      throw FormatError("example lacks \"inputs\" or \"output\"");
    out.push_back({inputs_from_json(ex["inputs"], program), value_from_json(ex["output"])});
  }
  if (out.empty()) throw FormatError("record has no examples");
  for (const IOPair& ex : out) {
    if (ex.inputs.size() != out[0].inputs.size())
      throw FormatError("examples disagree on the number of inputs");
    for (size_t i = 0; i < ex.inputs.size(); ++i)
      if (ex.inputs[i].type() != out[0].inputs[i].type())
        throw FormatError("examples disagree on input types");
  }
  if (program) {
    for (const IOPair& ex : out) {
      if (static_cast<int>(ex.inputs.size()) != program->num_inputs())
        throw FormatError("example arity does not match the program");
      for (int i = 0; i < program->num_inputs(); ++i)
        if (!ex.inputs[i].has_type(program->input_types[i]))
          throw FormatError("example input type does not match the program");
    }
  }
  return out;
}

template <class F>
void for_each_record(const std::filesystem::path& path, F&& f) {
  std::ifstream in = open_in(path);
  std::string line;
  int line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    if (line.find_first_not_of(" \t\r") == std::string::npos) continue;
    try {
      f(json::parse(line));
    } catch (const json::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    } catch (const std::exception& e) {
      throw FormatError(path.string() + ":" + std::to_string(line_no) + ": " + e.what());
    }
  }
}

}  // namespace

json value_to_json(const Value& v) {
  if (v.is_int()) return v.as_int();
  if (v.is_list()) return v.to_vector();
  throw FormatError("only INT and LIST values are serialisable");
}

Value value_from_json(const json& j) {
  if (j.is_number_integer()) {
    const Value v = Value::of_int(j.get<long long>());
    if (v.is_null()) throw FormatError("integer out of range: " + j.dump());
    return v;
  }
  if (j.is_array()) {
    if (j.size() > static_cast<size_t>(kMaxListLen))
      throw FormatError("list longer than " + std::to_string(kMaxListLen));
    std::vector<int> xs;
    for (const json& x : j) {
      if (!x.is_number_integer()) throw FormatError("list element is not an integer");
      const long long e = x.get<long long>();
      if (!in_int_range(e)) throw FormatError("list element out of range: " + x.dump());
      xs.push_back(static_cast<int>(e));
    }
    return Value::of_list(xs);
  }
  throw FormatError("value must be an integer or an integer array");
}

json entry_to_json(const Registry& reg, const DatasetEntry& e) {
  json examples = json::array();
  for (const IOPair& ex : e.examples) {
    json inputs = json::array();
    for (const Value& v : ex.inputs) inputs.push_back(value_to_json(v));
    examples.push_back({{"inputs", inputs}, {"output", value_to_json(ex.output)}});
  }
  return {{"program", print_program(reg, e.program)}, {"examples", examples}};
}

DatasetEntry entry_from_json(const Registry& reg, const json& j) {
  if (!j.is_object() || !j.contains("program") || !j["program"].is_string())
    throw FormatError("record lacks a \"program\" string");
  Program p = parse_program(reg, j["program"].get<std::string>());
  std::vector<IOPair> examples = examples_from_json(j, p);
  return {std::move(p), std::move(examples)};
}

void write_entries(const std::filesystem::path& path, const Registry& reg,
                   std::span<const DatasetEntry> entries) {
  std::ofstream out = open_out(path);
  for (const auto& e : entries) out << entry_to_json(reg, e).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

void write_dataset(const std::filesystem::path& path, const Registry& reg,
                   const DatasetCache& cache) {
  std::ofstream out = open_out(path);
  const json header = {{"version", kDatasetFormatVersion},
                       {"registry_fingerprint", reg.fingerprint()},
                       {"max_len", cache.max_len_generated}};
  out << header.dump() << '\n';
  for (const auto& e : cache.entries) out << entry_to_json(reg, e).dump() << '\n';
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

DatasetCache read_dataset(const std::filesystem::path& path, const Registry& reg) {
  DatasetCache cache;
  cache.registry_fingerprint = reg.fingerprint();
  bool first = true;
  for_each_record(path, [&](const json& j) {
    const bool header = j.is_object() && j.contains("version");
    if (header) {
      if (!first) throw FormatError("header record must come first");
      if (j["version"] != kDatasetFormatVersion)
        throw FormatError("unsupported dataset version " + j["version"].dump());
      const std::string fp = j.value("registry_fingerprint", "");
      if (fp != reg.fingerprint())
        throw FormatError("dataset was built for registry " + fp + ", current registry is " +
                          reg.fingerprint());
    } else {
      cache.entries.push_back(entry_from_json(reg, j));
    }
    first = false;
  });
  for (const auto& e : cache.entries)
    cache.max_len_generated = std::max(cache.max_len_generated, e.program.length());
  return cache;
}

std::vector<Type> Problem::input_types() const {
  if (program) return program->input_types;
  std::vector<Type> t;
  for (const Value& v : examples.at(0).inputs) t.push_back(v.type());
  return t;
}

Problem problem_from_json(const Registry& reg, const json& j) {
  Problem p;
  if (j.is_object() && j.contains("program") && j["program"].is_string())
    p.program = parse_program(reg, j["program"].get<std::string>());
  p.examples = examples_from_json(j, p.program);
  return p;
}

std::vector<Problem> read_problems(const std::filesystem::path& path, const Registry& reg) {
  std::vector<Problem> out;
  for_each_record(path, [&](const json& j) {
    if (j.is_object() && j.contains("version")) return;  // dataset header
    out.push_back(problem_from_json(reg, j));
  });
  return out;
}

}  // namespace pbe
