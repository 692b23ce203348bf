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

#include "pbe/model.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "pbe/errors.hpp"
#include "pbe/parallel.hpp"
#include "pbe/random.hpp"

namespace pbe {
namespace {

constexpr char kMagic[8] = {'P', 'B', 'E', 'M', 'O', 'D', 'E', 'L'};
constexpr uint32_t kModelFormatVersion = 1;
constexpr int kChunksPerBatch = 4;

double sigmoid(double x) { return 1.0 / (1.0 + std::exp(-x)); }
double silu(double x) { return x * sigmoid(x); }
double silu_grad(double x) {
  const double s = sigmoid(x);
  return s * (1.0 + x * (1.0 - s));
}

// Eight independent partial sums in a fixed order: vectorisable without
// reassociation, and deterministic.
double dot(const double* a, const double* b, size_t n) {
  double acc[8] = {0, 0, 0, 0, 0, 0, 0, 0};
  size_t i = 0;
  for (; i + 8 <= n; i += 8)
    for (int k = 0; k < 8; ++k) acc[k] += a[i + k] * b[i + k];
  double s = ((acc[0] + acc[1]) + (acc[2] + acc[3])) + ((acc[4] + acc[5]) + (acc[6] + acc[7]));
  for (; i < n; ++i) s += a[i] * b[i];
  return s;
}

void axpy(double a, const double* x, double* y, size_t n) {
  for (size_t i = 0; i < n; ++i) y[i] += a * x[i];
}

int type_code(const std::optional<Type>& t) { return t ? static_cast<int>(*t) : -1; }

uint16_t token_of(int v) { return static_cast<uint16_t>(v - kIntMin + 1); }

double scaled(int v) { return std::max(-1.0, static_cast<double>(v) / kIntMax); }

void encode_slot(const Value& v, bool present, double* f, uint16_t* tok) {
  if (!present) return;
  f[0] = 1.0;
  if (v.is_int()) {
    f[1] = 1.0;
    f[4] = scaled(v.as_int());
    tok[0] = token_of(v.as_int());
  } else if (v.is_list()) {
    f[2] = 1.0;
    f[3] = static_cast<double>(v.size()) / kMaxListLen;
    for (int i = 0; i < v.size(); ++i) {
      f[5 + i] = scaled(v[i]);
      tok[1 + i] = token_of(v[i]);
    }
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// States and encodings

MemoryState replay_state(const Program& p, std::span<const std::vector<Value>> traces,
                         std::span<const IOPair> examples, int step, int num_slots) {
  const int live = p.num_inputs() + step;
  if (live > num_slots) throw std::invalid_argument("program state exceeds the slot count");
  MemoryState s;
  s.slots.assign(num_slots, std::nullopt);
  for (int i = 0; i < live; ++i) s.slots[i] = traces[0][i].type();
  for (size_t e = 0; e < traces.size(); ++e) {
    std::vector<Value> row(num_slots);
    for (int i = 0; i < live; ++i) row[i] = traces[e][i];
    s.values.push_back(std::move(row));
    s.outputs.push_back(examples[e].output);
  }
  return s;
}

StateEncoding encode_state(const MemoryState& s, int num_slots) {
  if (s.num_slots() > num_slots)
    throw std::invalid_argument("state has " + std::to_string(s.num_slots()) +
                                " slots, the encoding holds " + std::to_string(num_slots));
  if (s.values.size() != s.outputs.size())
    throw std::invalid_argument("state values and outputs disagree on the example count");
  StateEncoding enc;
  enc.num_examples = s.num_examples();
  enc.num_slots = num_slots;
  const int S = enc.encoded_slots();
  enc.features.assign(static_cast<size_t>(enc.num_examples) * S * kSlotFeatures, 0.0);
  enc.tokens.assign(static_cast<size_t>(enc.num_examples) * S * kValuePositions, 0);
  for (int e = 0; e < enc.num_examples; ++e) {
    if (static_cast<int>(s.values[e].size()) != s.num_slots())
      throw std::invalid_argument("example row does not match the slot count");
    for (int i = 0; i <= num_slots; ++i) {
      const size_t cell = static_cast<size_t>(e) * S + i;
      double* f = &enc.features[cell * kSlotFeatures];
      uint16_t* t = &enc.tokens[cell * kValuePositions];
      if (i == num_slots) {
        encode_slot(s.outputs[e], true, f, t);
      } else if (i < s.num_slots()) {
        encode_slot(s.values[e][i], s.slots[i].has_value(), f, t);
      }
    }
  }
  return enc;
}

// ---------------------------------------------------------------------------
// Statement space

StatementSpace::StatementSpace(RegistryPtr reg, int num_slots)
    : reg_(std::move(reg)), num_slots_(num_slots) {
  if (num_slots < 1) throw std::invalid_argument("need at least one slot");
  vocab_ = enumerate_statement_space(*reg_, num_slots);
  for (size_t i = 0; i < vocab_.size(); ++i) index_.emplace(vocab_[i], static_cast<int>(i));
}

std::optional<int> StatementSpace::index_of(const Statement& s) const {
  auto it = index_.find(s);
  if (it == index_.end()) return std::nullopt;
  return it->second;
}

std::shared_ptr<const std::vector<int>> StatementSpace::legal(
    std::span<const std::optional<Type>> slots) const {
  std::vector<int> key;
  for (const auto& t : slots) key.push_back(type_code(t));
  {
    std::lock_guard<std::mutex> lock(mu_);
    auto it = legal_cache_.find(key);
    if (it != legal_cache_.end()) return it->second;
  }
  std::vector<int> present;
  std::vector<Type> env;
  for (int i = 0; i < static_cast<int>(slots.size()); ++i)
    if (slots[i]) {
      present.push_back(i);
      env.push_back(*slots[i]);
    }
  auto out = std::make_shared<std::vector<int>>();
  for (Statement s : enumerate_statements(env, *reg_)) {
    for (int k = 0; k < s.arity; ++k)
      if (s.operands[k].is_var()) s.operands[k].index = static_cast<uint8_t>(present[s.operands[k].index]);
    const auto idx = index_of(s);
    if (!idx) throw std::logic_error("statement missing from the vocabulary");
    out->push_back(*idx);
  }
  std::lock_guard<std::mutex> lock(mu_);
  return legal_cache_.emplace(std::move(key), std::move(out)).first->second;
}

// ---------------------------------------------------------------------------
// Configuration

void ModelConfig::validate() const {
  auto positive = [](int v, const char* name) {
    if (v < 1) throw std::invalid_argument(std::string(name) + " must be positive");
  };
  positive(num_slots, "num_slots");
  positive(num_layers, "num_layers");
  positive(encoder_size, "encoder_size");
  positive(growth_size, "growth_size");
  positive(output_size, "output_size");
  positive(batch_size, "batch_size");
  if (num_epochs < 0) throw std::invalid_argument("num_epochs must be non-negative");
  if (embedding_dim < 0) throw std::invalid_argument("embedding_dim must be non-negative");
  if (num_slots > 32) throw std::invalid_argument("num_slots must be at most 32");
  if (!(learning_rate > 0)) throw std::invalid_argument("learning_rate must be positive");
  if (momentum < 0 || momentum >= 1) throw std::invalid_argument("momentum must be in [0, 1)");
  if (drop_loss_weight < 0) throw std::invalid_argument("drop_loss_weight must be non-negative");
  if (holdout_fraction < 0 || holdout_fraction >= 1)
    throw std::invalid_argument("holdout_fraction must be in [0, 1)");
}

// ---------------------------------------------------------------------------
// Model

struct Model::Workspace {
  int examples = 0;
  std::vector<double> pre0, act, pre_layers, pre_out, out;  // per example, concatenated
  std::vector<double> z, logits, log_probs, probs, drop_logits, drop_probs;
  // Backward buffers.
  std::vector<double> dz, dact, dpre;
};

Model::Model(RegistryPtr reg, const ModelConfig& cfg) : cfg_(cfg) {
  cfg_.validate();
  space_ = std::make_shared<StatementSpace>(std::move(reg), cfg_.num_slots);
  init_layout();
  init_params();
}

void Model::init_layout() {
  const size_t H = cfg_.encoder_size, G = cfg_.growth_size, O = cfg_.output_size;
  const size_t L = cfg_.num_layers, E = cfg_.embedding_dim, V = cfg_.num_slots;
  Layout& l = lay_;
  l.input_dim = (V + 1) * (kSlotFeatures + kValuePositions * E);
  l.act_dim = H + L * G;
  size_t off = 0;
  l.b_in = off;
  off += H;
  l.layers = off;
  l.layer_w.clear();
  l.layer_b.clear();
  l.layer_in.clear();
  for (size_t i = 0; i < L; ++i) {
    const size_t in = H + i * G;
    l.layer_in.push_back(in);
    l.layer_w.push_back(off);
    off += G * in;
    l.layer_b.push_back(off);
    off += G;
  }
  l.out_w = off;
  off += O * l.act_dim;
  l.out_b = off;
  off += O;
  l.drop_w = off;
  off += V * O;
  l.drop_b = off;
  off += V;
  l.emb = off;
  off += kNumTokens * E;
  l.dense_end = off;
  l.in_w = off;
  off += l.input_dim * H;
  l.stmt = off;
  off += space_->vocabulary().size() * (O + 1);
  l.total = off;
}

void Model::init_params() {
  params_.assign(lay_.total, 0.0);
  Rng rng(derive_seed(cfg_.seed, {0x1417}));
  auto fill = [&](size_t off, size_t n, double a) {
    for (size_t i = 0; i < n; ++i) params_[off + i] = (2.0 * uniform_real(rng) - 1.0) * a;
  };
  const size_t H = cfg_.encoder_size, G = cfg_.growth_size, O = cfg_.output_size;
  const size_t E = cfg_.embedding_dim, V = cfg_.num_slots;
  for (size_t i = 0; i < lay_.layer_w.size(); ++i)
    fill(lay_.layer_w[i], G * lay_.layer_in[i], std::sqrt(3.0 / lay_.layer_in[i]));
  fill(lay_.out_w, O * lay_.act_dim, std::sqrt(3.0 / lay_.act_dim));
  fill(lay_.drop_w, V * O, std::sqrt(3.0 / O));
  if (E > 0) fill(lay_.emb + E, (kNumTokens - 1) * E, 1.0);  // token 0 (empty) stays zero
  // Roughly 60 active inputs per example in typical states.
  fill(lay_.in_w, lay_.input_dim * H, std::sqrt(3.0 / 60.0));
  const size_t n = space_->vocabulary().size();
  for (size_t s = 0; s < n; ++s) fill(lay_.stmt + s * (O + 1), O, std::sqrt(3.0 / O));
}

void Model::check_shape(const StateEncoding& enc) const {
  if (enc.num_slots != cfg_.num_slots)
    throw std::invalid_argument("encoding has " + std::to_string(enc.num_slots) +
                                " slots, model expects " + std::to_string(cfg_.num_slots));
  const size_t cells = static_cast<size_t>(enc.num_examples) * enc.encoded_slots();
  if (enc.num_examples < 1 || enc.features.size() != cells * kSlotFeatures ||
      enc.tokens.size() != cells * kValuePositions)
    throw std::invalid_argument("malformed state encoding");
}

void Model::forward(const StateEncoding& enc, std::span<const int> legal, Workspace& ws) const {
  const size_t H = cfg_.encoder_size, G = cfg_.growth_size, O = cfg_.output_size;
  const size_t L = cfg_.num_layers, E = cfg_.embedding_dim, V = cfg_.num_slots;
  const size_t S = V + 1, A = lay_.act_dim;
  const size_t slot_width = kSlotFeatures + kValuePositions * E;
  const int n = enc.num_examples;
  const double* P = params_.data();

  ws.examples = n;
  ws.pre0.assign(n * H, 0.0);
  ws.act.assign(n * A, 0.0);
  ws.pre_layers.assign(n * L * G, 0.0);
  ws.pre_out.assign(n * O, 0.0);
  ws.out.assign(n * O, 0.0);
  ws.z.assign(O, 0.0);

  for (int e = 0; e < n; ++e) {
    double* pre0 = &ws.pre0[e * H];
    std::memcpy(pre0, P + lay_.b_in, H * sizeof(double));
    for (size_t s = 0; s < S; ++s) {
      const size_t cell = e * S + s;
      const double* f = &enc.features[cell * kSlotFeatures];
      if (f[0] == 0.0) continue;
      const size_t base = s * slot_width;
      for (int k = 0; k < kSlotFeatures; ++k)
        if (f[k] != 0.0) axpy(f[k], P + lay_.in_w + (base + k) * H, pre0, H);
      if (E == 0) continue;
      const uint16_t* tok = &enc.tokens[cell * kValuePositions];
      for (int p = 0; p < kValuePositions; ++p) {
        if (!tok[p]) continue;
        const double* emb = P + lay_.emb + tok[p] * E;
        const size_t col = base + kSlotFeatures + p * E;
        for (size_t k = 0; k < E; ++k) axpy(emb[k], P + lay_.in_w + (col + k) * H, pre0, H);
      }
    }
    double* act = &ws.act[e * A];
    for (size_t j = 0; j < H; ++j) act[j] = silu(pre0[j]);
    for (size_t i = 0; i < L; ++i) {
      const size_t in = lay_.layer_in[i];
      const double* W = P + lay_.layer_w[i];
      const double* b = P + lay_.layer_b[i];
      double* pre = &ws.pre_layers[(e * L + i) * G];
      for (size_t j = 0; j < G; ++j) {
        pre[j] = b[j] + dot(W + j * in, act, in);
        act[in + j] = silu(pre[j]);
      }
    }
    double* pre_out = &ws.pre_out[e * O];
    double* out = &ws.out[e * O];
    for (size_t j = 0; j < O; ++j) {
      pre_out[j] = P[lay_.out_b + j] + dot(P + lay_.out_w + j * A, act, A);
      out[j] = silu(pre_out[j]);
      ws.z[j] += out[j] / n;
    }
  }

  // Statement head over the legal statements.
  const size_t m = legal.size();
  ws.logits.resize(m);
  ws.log_probs.resize(m);
  ws.probs.resize(m);
  double mx = -std::numeric_limits<double>::infinity();
  for (size_t j = 0; j < m; ++j) {
    const double* row = P + lay_.stmt + static_cast<size_t>(legal[j]) * (O + 1);
    ws.logits[j] = dot(row, ws.z.data(), O) + row[O];
    mx = std::max(mx, ws.logits[j]);
  }
  double sum = 0;
  for (size_t j = 0; j < m; ++j) sum += std::exp(ws.logits[j] - mx);
  const double lse = mx + std::log(sum);
  for (size_t j = 0; j < m; ++j) {
    ws.log_probs[j] = ws.logits[j] - lse;
    ws.probs[j] = std::exp(ws.log_probs[j]);
  }

  // Drop head.
  ws.drop_logits.resize(V);
  ws.drop_probs.resize(V);
  for (size_t s = 0; s < V; ++s) {
    ws.drop_logits[s] = P[lay_.drop_b + s] + dot(P + lay_.drop_w + s * O, ws.z.data(), O);
    ws.drop_probs[s] = sigmoid(ws.drop_logits[s]);
  }
}

Prediction Model::predict(const StateEncoding& enc, std::span<const int> legal) const {
  check_shape(enc);
  thread_local Workspace ws;
  forward(enc, legal, ws);
  return {ws.log_probs, ws.drop_probs};
}

double Model::loss(const StateEncoding& enc, std::span<const int> legal,
                   const StateTargets& targets, Gradient* grad, double scale) const {
  check_shape(enc);
  const size_t V = cfg_.num_slots;
  if (targets.statement < 0 || targets.statement >= static_cast<int>(legal.size()))
    throw std::invalid_argument("target statement is not legal");
  if (targets.drop.size() != V) throw std::invalid_argument("drop targets do not match slots");
  thread_local Workspace ws;
  forward(enc, legal, ws);

  int live_slots = 0;
  for (double t : targets.drop) live_slots += !std::isnan(t);
  const double drop_w = live_slots ? cfg_.drop_loss_weight / live_slots : 0.0;

  double loss = -ws.log_probs[targets.statement];
  for (size_t s = 0; s < V; ++s) {
    const double t = targets.drop[s];
    if (std::isnan(t)) continue;
    // Stable BCE on logits.
    const double x = ws.drop_logits[s];
    loss += drop_w * (std::max(x, 0.0) - x * t + std::log1p(std::exp(-std::abs(x))));
  }
  if (!grad) return loss;

  const size_t H = cfg_.encoder_size, G = cfg_.growth_size, O = cfg_.output_size;
  const size_t L = cfg_.num_layers, E = cfg_.embedding_dim;
  const size_t S = V + 1, A = lay_.act_dim;
  const size_t slot_width = kSlotFeatures + kValuePositions * E;
  const int n = ws.examples;
  const double* P = params_.data();
  double* D = grad->g_.data();

  // Heads.
  ws.dz.assign(O, 0.0);
  for (size_t j = 0; j < legal.size(); ++j) {
    const double d = scale * (ws.probs[j] - (static_cast<int>(j) == targets.statement ? 1.0 : 0.0));
    const size_t row = static_cast<size_t>(legal[j]);
    grad->touch_statement_row(static_cast<int>(row));
    double* drow = D + lay_.stmt + row * (O + 1);
    axpy(d, ws.z.data(), drow, O);
    drow[O] += d;
    axpy(d, P + lay_.stmt + row * (O + 1), ws.dz.data(), O);
  }
  for (size_t s = 0; s < V; ++s) {
    const double t = targets.drop[s];
    if (std::isnan(t)) continue;
    const double d = scale * drop_w * (ws.drop_probs[s] - t);
    axpy(d, ws.z.data(), D + lay_.drop_w + s * O, O);
    D[lay_.drop_b + s] += d;
    axpy(d, P + lay_.drop_w + s * O, ws.dz.data(), O);
  }

  // Trunk, per example.
  ws.dact.resize(A);
  ws.dpre.resize(std::max({H, G, O}));
  for (int e = 0; e < n; ++e) {
    const double* act = &ws.act[e * A];
    std::fill(ws.dact.begin(), ws.dact.end(), 0.0);
    double* dpre = ws.dpre.data();
    for (size_t j = 0; j < O; ++j) {
      dpre[j] = ws.dz[j] / n * silu_grad(ws.pre_out[e * O + j]);
      axpy(dpre[j], act, D + lay_.out_w + j * A, A);
      D[lay_.out_b + j] += dpre[j];
      axpy(dpre[j], P + lay_.out_w + j * A, ws.dact.data(), A);
    }
    for (size_t i = L; i-- > 0;) {
      const size_t in = lay_.layer_in[i];
      const double* pre = &ws.pre_layers[(e * L + i) * G];
      for (size_t j = 0; j < G; ++j) {
        const double d = ws.dact[in + j] * silu_grad(pre[j]);
        if (d == 0.0) continue;
        axpy(d, act, D + lay_.layer_w[i] + j * in, in);
        D[lay_.layer_b[i] + j] += d;
        axpy(d, P + lay_.layer_w[i] + j * in, ws.dact.data(), in);
      }
    }
    const double* pre0 = &ws.pre0[e * H];
    for (size_t j = 0; j < H; ++j) {
      dpre[j] = ws.dact[j] * silu_grad(pre0[j]);
      D[lay_.b_in + j] += dpre[j];
    }
    for (size_t s = 0; s < S; ++s) {
      const size_t cell = e * S + s;
      const double* f = &enc.features[cell * kSlotFeatures];
      if (f[0] == 0.0) continue;
      const size_t base = s * slot_width;
      for (int k = 0; k < kSlotFeatures; ++k) {
        if (f[k] == 0.0) continue;
        grad->touch_input_row(static_cast<int>(base + k));
        axpy(f[k], dpre, D + lay_.in_w + (base + k) * H, H);
      }
      if (E == 0) continue;
      const uint16_t* tok = &enc.tokens[cell * kValuePositions];
      for (int p = 0; p < kValuePositions; ++p) {
        if (!tok[p]) continue;
        const double* emb = P + lay_.emb + tok[p] * E;
        double* demb = D + lay_.emb + tok[p] * E;
        const size_t col = base + kSlotFeatures + p * E;
        for (size_t k = 0; k < E; ++k) {
          grad->touch_input_row(static_cast<int>(col + k));
          const double* w = P + lay_.in_w + (col + k) * H;
          axpy(emb[k], dpre, D + lay_.in_w + (col + k) * H, H);
          demb[k] += dot(w, dpre, H);
        }
      }
    }
  }
  return loss;
}

// ---------------------------------------------------------------------------
// Gradient

Gradient::Gradient(const Model& m)
    : g_(m.num_params(), 0.0),
      input_touched_(m.lay_.input_dim, 0),
      statement_touched_(m.space().vocabulary().size(), 0),
      model_(&m) {}

void Gradient::touch_input_row(int f) {
  if (!input_touched_[f]) {
    input_touched_[f] = 1;
    input_rows_.push_back(f);
  }
}

void Gradient::touch_statement_row(int s) {
  if (!statement_touched_[s]) {
    statement_touched_[s] = 1;
    statement_rows_.push_back(s);
  }
}

void Gradient::clear() {
  const auto& l = model_->lay_;
  const size_t H = model_->cfg_.encoder_size, O1 = model_->cfg_.output_size + 1;
  std::fill(g_.begin(), g_.begin() + l.dense_end, 0.0);
  for (int f : input_rows_) {
    std::fill_n(g_.begin() + l.in_w + f * H, H, 0.0);
    input_touched_[f] = 0;
  }
  for (int s : statement_rows_) {
    std::fill_n(g_.begin() + l.stmt + s * O1, O1, 0.0);
    statement_touched_[s] = 0;
  }
  input_rows_.clear();
  statement_rows_.clear();
}

void Gradient::add_to(Gradient& other) const {
  const auto& l = model_->lay_;
  const size_t H = model_->cfg_.encoder_size, O1 = model_->cfg_.output_size + 1;
  for (size_t i = 0; i < l.dense_end; ++i) other.g_[i] += g_[i];
  for (int f : input_rows_) {
    other.touch_input_row(f);
    for (size_t k = 0; k < H; ++k) other.g_[l.in_w + f * H + k] += g_[l.in_w + f * H + k];
  }
  for (int s : statement_rows_) {
    other.touch_statement_row(s);
    for (size_t k = 0; k < O1; ++k) other.g_[l.stmt + s * O1 + k] += g_[l.stmt + s * O1 + k];
  }
}

void Gradient::add_to(std::span<double> dense) const {
  for (size_t i = 0; i < g_.size(); ++i) dense[i] += g_[i];
}

// ---------------------------------------------------------------------------
// Training

TrainingSet::TrainingSet(const StatementSpace& space, std::span<const DatasetEntry> data)
    : space_(&space) {
  const Registry& reg = space.registry();
  for (const auto& entry : data) {
    const Program& p = entry.program;
    if (p.num_vars() - 1 > space.num_slots()) continue;
    std::vector<std::vector<Value>> traces;
    for (const auto& ex : entry.examples) traces.push_back(run_trace(reg, p, ex.inputs));
    const auto id = static_cast<uint32_t>(programs_.size());
    programs_.push_back(p);
    examples_.push_back(entry.examples);
    traces_.push_back(std::move(traces));
    for (int t = 0; t < p.length(); ++t) items_.push_back({id, static_cast<uint16_t>(t)});
  }
}

MemoryState TrainingSet::state(size_t i) const {
  const Item& it = items_[i];
  return replay_state(programs_[it.program], traces_[it.program], examples_[it.program], it.step,
                      space_->num_slots());
}

StateEncoding TrainingSet::encoding(size_t i) const {
  return encode_state(state(i), space_->num_slots());
}

std::shared_ptr<const std::vector<int>> TrainingSet::legal(size_t i) const {
  const Item& it = items_[i];
  const Program& p = programs_[it.program];
  std::vector<std::optional<Type>> slots(space_->num_slots());
  for (int v = 0; v < p.num_inputs() + it.step; ++v) slots[v] = traces_[it.program][0][v].type();
  return space_->legal(slots);
}

StateTargets TrainingSet::targets(size_t i) const {
  const Item& it = items_[i];
  const Program& p = programs_[it.program];
  StateTargets t;
  const auto idx = space_->index_of(p.statements[it.step]);
  const auto legal_list = legal(i);
  const auto pos = std::lower_bound(legal_list->begin(), legal_list->end(), *idx);
  if (pos == legal_list->end() || *pos != *idx) throw std::logic_error("program statement not legal");
  t.statement = static_cast<int>(pos - legal_list->begin());
  t.drop.assign(space_->num_slots(), std::numeric_limits<double>::quiet_NaN());
  for (int v = 0; v < p.num_inputs() + it.step; ++v) {
    bool used = false;
    for (int k = it.step; k < p.length() && !used; ++k) used = p.statements[k].uses_var(v);
    t.drop[v] = used ? 0.0 : 1.0;
  }
  return t;
}

std::pair<double, double> evaluate(const Model& m, const TrainingSet& set, int workers) {
  const int n = static_cast<int>(set.size());
  if (n == 0) return {0.0, 0.0};
  std::vector<double> losses(n);
  std::vector<char> hits(n);
  parallel_for(n, workers, [&](int i) {
    const StateEncoding enc = set.encoding(i);
    const auto legal = set.legal(i);
    const StateTargets t = set.targets(i);
    losses[i] = m.loss(enc, *legal, t);
    const Prediction pr = m.predict(enc, *legal);
    const auto best = std::max_element(pr.log_probs.begin(), pr.log_probs.end());
    hits[i] = (best - pr.log_probs.begin()) == t.statement;
  });
  double loss = 0, acc = 0;
  for (int i = 0; i < n; ++i) {
    loss += losses[i];
    acc += hits[i];
  }
  return {loss / n, acc / n};
}

Model train(RegistryPtr reg, std::span<const DatasetEntry> data, const ModelConfig& cfg,
            const TrainOptions& opts) {
  if (data.empty()) throw std::invalid_argument("cannot train on an empty dataset");
  Model model(reg, cfg);

  // Split programs into training and held-out parts.
  std::vector<size_t> order(data.size());
  std::iota(order.begin(), order.end(), 0);
  Rng split_rng(derive_seed(cfg.seed, {0x5b17}));
  for (size_t i = order.size(); i > 1; --i)
    std::swap(order[i - 1], order[uniform_int(split_rng, 0, static_cast<long long>(i) - 1)]);
  size_t holdout = static_cast<size_t>(cfg.holdout_fraction * data.size());
  if (holdout >= data.size()) holdout = data.size() - 1;
  std::vector<DatasetEntry> train_part, holdout_part;
  for (size_t i = 0; i < order.size(); ++i)
    (i < holdout ? holdout_part : train_part).push_back(data[order[i]]);
  const TrainingSet train_set(model.space(), train_part);
  const TrainingSet holdout_set(model.space(), holdout_part);
  if (train_set.size() == 0) throw std::invalid_argument("no trainable programs in the dataset");

  std::vector<Gradient> grads;
  for (int c = 0; c < kChunksPerBatch; ++c) grads.emplace_back(model);
  std::vector<double> velocity(model.num_params(), 0.0);
  auto params = model.params();

  for (int epoch = 0; epoch < cfg.num_epochs; ++epoch) {
    const auto start = std::chrono::steady_clock::now();
    std::vector<size_t> perm(train_set.size());
    std::iota(perm.begin(), perm.end(), 0);
    Rng rng(derive_seed(cfg.seed, {0xe90c, static_cast<uint64_t>(epoch)}));
    for (size_t i = perm.size(); i > 1; --i)
      std::swap(perm[i - 1], perm[uniform_int(rng, 0, static_cast<long long>(i) - 1)]);

    double epoch_loss = 0;
    for (size_t b0 = 0; b0 < perm.size(); b0 += cfg.batch_size) {
      const size_t b1 = std::min(perm.size(), b0 + cfg.batch_size);
      const size_t bn = b1 - b0;
      const double scale = 1.0 / bn;
      std::array<double, kChunksPerBatch> chunk_loss{};
      parallel_for(kChunksPerBatch, opts.workers, [&](int c) {
        const size_t lo = b0 + bn * c / kChunksPerBatch, hi = b0 + bn * (c + 1) / kChunksPerBatch;
        for (size_t k = lo; k < hi; ++k) {
          const size_t i = perm[k];
          const auto legal = train_set.legal(i);
          chunk_loss[c] += model.loss(train_set.encoding(i), *legal, train_set.targets(i),
                                      &grads[c], scale);
        }
      });
      for (int c = 1; c < kChunksPerBatch; ++c) grads[c].add_to(grads[0]);
      for (double l : chunk_loss) epoch_loss += l;
      const auto g = grads[0].values();
      for (size_t i = 0; i < params.size(); ++i) {
        velocity[i] = cfg.momentum * velocity[i] + g[i];
        params[i] -= cfg.learning_rate * velocity[i];
      }
      for (auto& gr : grads) gr.clear();
    }

    EpochReport rep;
    rep.epoch = epoch;
    rep.train_loss = epoch_loss / train_set.size();
    std::tie(rep.holdout_loss, rep.holdout_accuracy) = evaluate(model, holdout_set, opts.workers);
    rep.seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    if (opts.on_epoch) opts.on_epoch(rep, model);
  }
  return model;
}

// ---------------------------------------------------------------------------
// Persistence

namespace {

template <class T>
void put(std::ostream& out, T v) {
  out.write(reinterpret_cast<const char*>(&v), sizeof(T));
}

template <class T>
T get(std::istream& in) {
  T v{};
  if (!in.read(reinterpret_cast<char*>(&v), sizeof(T))) throw FormatError("truncated model file");
  return v;
}

}  // namespace

void save_model(const Model& m, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write " + path.string());
  const ModelConfig& c = m.config();
  out.write(kMagic, sizeof(kMagic));
  put<uint32_t>(out, kModelFormatVersion);
  const std::string& fp = m.registry().fingerprint();
  put<uint32_t>(out, static_cast<uint32_t>(fp.size()));
  out.write(fp.data(), fp.size());
  for (int v : {c.num_slots, c.num_layers, c.encoder_size, c.growth_size, c.output_size,
                c.embedding_dim, c.num_epochs, c.batch_size})
    put<int32_t>(out, v);
  for (double v : {c.learning_rate, c.momentum, c.drop_loss_weight, c.holdout_fraction})
    put<double>(out, v);
  put<uint64_t>(out, c.seed);
  put<uint64_t>(out, m.space().vocabulary().size());
  put<uint64_t>(out, m.num_params());
  out.write(reinterpret_cast<const char*>(m.params().data()), m.num_params() * sizeof(double));
  if (!out) throw std::runtime_error("write failed: " + path.string());
}

namespace {

// Reads the header up to and including the registry fingerprint.
std::string read_header(std::istream& in, const std::filesystem::path& path) {
  char magic[sizeof(kMagic)];
  if (!in.read(magic, sizeof(magic)) || std::memcmp(magic, kMagic, sizeof(kMagic)) != 0)
    throw FormatError(path.string() + " is not a model file");
  const auto version = get<uint32_t>(in);
  if (version != kModelFormatVersion)
    throw FormatError("unsupported model version " + std::to_string(version));
  const auto fp_len = get<uint32_t>(in);
  if (fp_len > 256) throw FormatError("corrupt model header");
  std::string fp(fp_len, '\0');
  if (!in.read(fp.data(), fp_len)) throw FormatError("truncated model file");
  return fp;
}

std::ifstream open_model(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + path.string());
  return in;
}

}  // namespace

std::string model_fingerprint(const std::filesystem::path& path) {
  std::ifstream in = open_model(path);
  return read_header(in, path);
}

Model load_model(const std::filesystem::path& path, RegistryPtr reg) {
  std::ifstream in = open_model(path);
  const std::string fp = read_header(in, path);
  if (fp != reg->fingerprint())
    throw FormatError("model was trained for registry " + fp + ", current registry is " +
                      reg->fingerprint());
  ModelConfig c;
  for (int* f : {&c.num_slots, &c.num_layers, &c.encoder_size, &c.growth_size, &c.output_size,
                 &c.embedding_dim, &c.num_epochs, &c.batch_size})
    *f = get<int32_t>(in);
  for (double* f : {&c.learning_rate, &c.momentum, &c.drop_loss_weight, &c.holdout_fraction})
    *f = get<double>(in);
  c.seed = get<uint64_t>(in);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw FormatError(std::string("corrupt model config: ") + e.what());
  }
  Model m(std::move(reg), c);
  if (get<uint64_t>(in) != m.space().vocabulary().size())
    throw FormatError("model vocabulary does not match the registry");
  if (get<uint64_t>(in) != m.num_params()) throw FormatError("model parameter count mismatch");
  auto params = m.params();
  if (!in.read(reinterpret_cast<char*>(params.data()), params.size() * sizeof(double)))
    throw FormatError("truncated model file");
  if (in.peek() != std::char_traits<char>::eof()) throw FormatError("trailing bytes in model file");
  return m;
}

std::filesystem::path checkpoint_path(const std::filesystem::path& prefix, int epoch) {
  return prefix.string() + "." + std::to_string(epoch);
}

}  // namespace pbe
