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

// The statement-prediction network.
//
// A synthesis state is the content of a fixed number of memory slots for
// every example, plus the example outputs. Each example is encoded
// separately, passed through a shared trunk, and the trunk outputs are
// mean-pooled over examples. Two heads read the pooled vector:
//
//   * the statement head scores every statement of a fixed vocabulary (all
//     statements over the slot indices); only statements that are well typed
//     for the present slots take part in the softmax;
//   * the drop head gives, per slot, the probability that the slot's value
//     is no longer needed.
//
// Trunk: input layer -> SiLU -> dense block of `num_layers` layers, each
// seeing the input layer output and every earlier layer output and adding
// `growth_size` features -> output layer of `output_size` (SiLU).
//
// Input features per slot (and for the output, as one extra slot):
//   present, is_int, is_list, length / 20, and 21 positional values scaled by
//   INT_MAX into [-1, 1] (position 0 holds an INT, positions 1..20 the
//   elements of a LIST). With embedding_dim > 0 each positional value also
//   contributes a learned embedding of the integer itself; empty positions
//   use a padding embedding that is fixed at zero.
//
// Model file layout (little-endian):
//   8 bytes   magic "PBEMODEL"
//   u32       format version
//   u32 + n   registry fingerprint (length-prefixed bytes)
//   i32 x 8   num_slots, num_layers, encoder_size, growth_size, output_size,
//             embedding_dim, num_epochs, batch_size
//   f64 x 4   learning_rate, momentum, drop_loss_weight, holdout_fraction
//   u64       seed
//   u64       vocabulary size
//   u64 + f64 x n  parameter count and the flat parameter array

#ifndef PBE_MODEL_HPP_
#define PBE_MODEL_HPP_

#include <cstdint>
#include <filesystem>
#include <functional>
#include <map>
#include <memory>
#include <mutex>
#include <optional>
#include <span>
#include <unordered_map>
#include <vector>

#include "pbe/dsl.hpp"
#include "pbe/generator.hpp"

namespace pbe {

inline constexpr int kSlotFeatures = 25;
inline constexpr int kValuePositions = 21;
inline constexpr int kNumTokens = 1 + (kIntMax - kIntMin + 1);
inline constexpr int kDefaultSlots = 11;

// Memory of one synthesis state across all examples.
struct MemoryState {
  std::vector<std::optional<Type>> slots;   // type of each slot, empty if free
  std::vector<std::vector<Value>> values;   // [example][slot]
  std::vector<Value> outputs;               // [example]

  int num_slots() const { return static_cast<int>(slots.size()); }
  int num_examples() const { return static_cast<int>(outputs.size()); }
};

// Memory just before statement `step` of a program whose per-example traces
// are given: slot i holds variable i.
MemoryState replay_state(const Program& p, std::span<const std::vector<Value>> traces,
                         std::span<const IOPair> examples, int step, int num_slots);

struct StateEncoding {
  int num_examples = 0;
  int num_slots = 0;              // memory slots; the output is encoded after them
  std::vector<double> features;   // [example][slot][kSlotFeatures]
  std::vector<uint16_t> tokens;   // [example][slot][kValuePositions]; 0 = empty

  int encoded_slots() const { return num_slots + 1; }
};

// Throws std::invalid_argument when the state has more than `num_slots`
// slots or its examples disagree in shape.
StateEncoding encode_state(const MemoryState& s, int num_slots);

// The statement vocabulary over a number of slots, and the legal subsets
// for concrete slot typings. Thread safe.
class StatementSpace {
 public:
  StatementSpace(RegistryPtr reg, int num_slots);

  const Registry& registry() const { return *reg_; }
  const RegistryPtr& registry_ptr() const { return reg_; }
  int num_slots() const { return num_slots_; }
  std::span<const Statement> vocabulary() const { return vocab_; }
  std::optional<int> index_of(const Statement& s) const;

  // Vocabulary indices of the statements that are well typed over the
  // present slots, ordered by function, then operand product.
  std::shared_ptr<const std::vector<int>> legal(std::span<const std::optional<Type>> slots) const;

 private:
  RegistryPtr reg_;
  int num_slots_;
  std::vector<Statement> vocab_;
  std::unordered_map<Statement, int> index_;
  mutable std::mutex mu_;
  mutable std::map<std::vector<int>, std::shared_ptr<const std::vector<int>>> legal_cache_;
};

struct ModelConfig {
  int num_slots = kDefaultSlots;
  int num_layers = 5;
  int encoder_size = 128;
  int growth_size = 28;
  int output_size = 128;
  int embedding_dim = 4;
  int num_epochs = 40;
  int batch_size = 64;
  double learning_rate = 0.02;
  double momentum = 0.9;
  double drop_loss_weight = 0.5;
  double holdout_fraction = 0.05;
  uint64_t seed = 0;

  // Throws std::invalid_argument when a field is out of range.
  void validate() const;
};

struct Prediction {
  std::vector<double> log_probs;    // aligned with the legal statement list
  std::vector<double> drop_scores;  // per slot, in (0, 1)
};

// Supervision for one state.
struct StateTargets {
  int statement = -1;              // index into the legal list
  std::vector<double> drop;        // per slot: 1 dead, 0 live, NaN free
};

class Model;

// Gradient accumulator matching a model's parameter layout. Rows of the
// input layer and of the statement head are tracked so that clearing and
// merging cost only what was touched.
class Gradient {
 public:
  explicit Gradient(const Model& m);
  void clear();
  void add_to(Gradient& other) const;
  std::span<const double> values() const { return g_; }
  // Adds into a dense parameter-sized array.
  void add_to(std::span<double> dense) const;

 private:
  friend class Model;
  void touch_input_row(int f);
  void touch_statement_row(int s);

  std::vector<double> g_;
  std::vector<char> input_touched_, statement_touched_;
  std::vector<int> input_rows_, statement_rows_;
  const Model* model_;
};

class Model {
 public:
  Model(RegistryPtr reg, const ModelConfig& cfg);

  const ModelConfig& config() const { return cfg_; }
  const StatementSpace& space() const { return *space_; }
  const Registry& registry() const { return space_->registry(); }

  size_t num_params() const { return params_.size(); }
  std::span<double> params() { return params_; }
  std::span<const double> params() const { return params_; }

  // Throws std::invalid_argument on an encoding of the wrong shape.
  Prediction predict(const StateEncoding& enc, std::span<const int> legal) const;

  // Statement cross-entropy plus drop_loss_weight times the mean drop BCE
  // over present slots. When `grad` is given, adds scale * dLoss/dParams.
  double loss(const StateEncoding& enc, std::span<const int> legal, const StateTargets& targets,
              Gradient* grad = nullptr, double scale = 1.0) const;

 private:
  friend class Gradient;
  struct Workspace;
  struct Layout {
    size_t b_in, layers, out_w, out_b, drop_w, drop_b, emb;  // small dense region
    size_t dense_end;
    size_t in_w;            // input layer, one row of encoder_size per input feature
    size_t stmt;            // statement head, one row of output_size + 1 per statement
    size_t total;
    size_t input_dim;       // input features per example
    size_t act_dim;         // encoder_size + num_layers * growth_size
    std::vector<size_t> layer_w, layer_b, layer_in;
  };

  void init_layout();
  void init_params();
  void forward(const StateEncoding& enc, std::span<const int> legal, Workspace& ws) const;
  void check_shape(const StateEncoding& enc) const;

  ModelConfig cfg_;
  std::shared_ptr<StatementSpace> space_;
  Layout lay_;
  std::vector<double> params_;
};

// Every (program, step) state of a dataset, encoded on demand.
class TrainingSet {
 public:
  // Replays every program; programs needing more slots than the space has
  // are skipped.
  TrainingSet(const StatementSpace& space, std::span<const DatasetEntry> data);

  size_t size() const { return items_.size(); }
  size_t num_programs() const { return programs_.size(); }
  StateEncoding encoding(size_t i) const;
  std::shared_ptr<const std::vector<int>> legal(size_t i) const;
  StateTargets targets(size_t i) const;

 private:
  struct Item {
    uint32_t program;
    uint16_t step;
  };
  MemoryState state(size_t i) const;

  const StatementSpace* space_;
  std::vector<Program> programs_;
  std::vector<std::vector<IOPair>> examples_;
  std::vector<std::vector<std::vector<Value>>> traces_;  // [program][example][var]
  std::vector<Item> items_;
};

struct EpochReport {
  int epoch = 0;
  double train_loss = 0;
  double holdout_loss = 0;
  double holdout_accuracy = 0;  // top-1 statement accuracy on held-out states
  double seconds = 0;
};

struct TrainOptions {
  int workers = 1;
  std::function<void(const EpochReport&, const Model&)> on_epoch;
};

// SGD with momentum over shuffled mini-batches. Programs are split into
// training and held-out parts before replay. Each batch is cut into fixed
// chunks whose gradients are summed in chunk order, so the result does not
// depend on the worker count.
Model train(RegistryPtr reg, std::span<const DatasetEntry> data, const ModelConfig& cfg,
            const TrainOptions& opts = {});

// Mean loss and top-1 accuracy over a set of states.
std::pair<double, double> evaluate(const Model& m, const TrainingSet& set, int workers = 1);

void save_model(const Model& m, const std::filesystem::path& path);
// Throws FormatError on a corrupt file, another version or a registry whose
// fingerprint differs from the one the model was trained for.
Model load_model(const std::filesystem::path& path, RegistryPtr reg);
// Registry fingerprint recorded in a model file. Throws like load_model.
std::string model_fingerprint(const std::filesystem::path& path);

std::filesystem::path checkpoint_path(const std::filesystem::path& prefix, int epoch);

}  // namespace pbe

#endif  // PBE_MODEL_HPP_
