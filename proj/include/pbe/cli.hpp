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

// Command-line front end: corpus generation, training and problem solving.
//
//   pbe gen_programs --num_train=N --train_output_path=F --max_train_len=L ...
//   pbe train DATASET MODEL_PREFIX ...
//   pbe solve_problems PROBLEMS RESULT MODEL TIMEOUT MAX_LEN ...

#ifndef PBE_CLI_HPP_
#define PBE_CLI_HPP_

#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

#include "pbe/dsl.hpp"

namespace pbe {

// Registry for a dialect, optionally with the digit classifier extern.
RegistryPtr make_registry(Dialect dialect, bool with_mnist);

// The registry among {extended, baseline} x {with, without MNIST} whose
// fingerprint matches, preferring `with_mnist` first; nullptr if none.
RegistryPtr registry_for_fingerprint(const std::string& fingerprint, bool with_mnist);

// Runs one command; args exclude the program name. Returns the exit code.
int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err);

}  // namespace pbe

#endif  // PBE_CLI_HPP_
