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

#ifndef PBE_ERRORS_HPP_
#define PBE_ERRORS_HPP_

#include <stdexcept>
#include <string>

namespace pbe {

// Malformed program text, ill-typed statements, registry conflicts.
class DslError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Backward propagation emptied some variable's admissible range.
class UnsatisfiableConstraint : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Dataset, problem, result and model files.
class FormatError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

}  // namespace pbe

#endif  // PBE_ERRORS_HPP_
