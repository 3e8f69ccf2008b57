// Copyright 2026 The coopgan Authors. All Rights Reserved.
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

#pragma once

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "coopgan/array.hpp"
#include "coopgan/autodiff.hpp"
#include "coopgan/data.hpp"
#include "coopgan/rng.hpp"

namespace coopgan {

// Ordered, named collection of parameter arrays.
struct ParamSet {
  std::vector<std::string> names;
  std::vector<Array> values;

  std::size_t size() const { return values.size(); }
  std::size_t num_scalars() const;
  const Array& get(std::string_view name) const;

  std::vector<ad::Node> as_parameters() const;
  std::vector<ad::Node> as_constants() const;
  // Same names, values taken from nodes (in order).
  ParamSet with_values(std::span<const ad::Node> nodes) const;
  ParamSet with_values(std::vector<Array> values) const;

  bool all_finite() const;
  bool identical(const ParamSet& other) const;
  bool same_structure(const ParamSet& other) const;
};

struct SeqModelShape {
  std::size_t vocab = 0;
  std::size_t embed = 0;
  std::size_t hidden = 0;
  friend bool operator==(const SeqModelShape&, const SeqModelShape&) = default;
};

// Autoregressive model over a vocabulary: learned start embedding, token
// embedding, single-layer gated recurrent cell (update and reset gates) and an
// output projection to logits. Used for the generator, the cooperative
// language model and the synthetic oracle.
struct SeqModel {
  SeqModelShape shape;
  ParamSet params;

  // N(0, scale^2) weights; biases zero unless `init_biases`.
  static SeqModel random(const SeqModelShape& shape, Rng& rng, double scale, bool init_biases = false);
};

using GeneratorParams = SeqModel;
using LanguageModelParams = SeqModel;
using OracleParams = SeqModel;

// Parameter positions inside SeqModel::params.
enum SeqParam : std::size_t { kEmb, kStart, kWz, kUz, kBz, kWr, kUr, kBr, kWh, kUh, kBh, kWo, kBo, kNumSeqParams };

struct StepOut {
  ad::Node logits;  // [B x V]
  ad::Node state;   // [B x H]
};

namespace seq {

ad::Node initial_state(const SeqModelShape& shape, std::size_t batch);
// [B x E] inputs
ad::Node embed_start(std::span<const ad::Node> p, std::size_t batch);
ad::Node embed_tokens(std::span<const ad::Node> p, std::span<const int> tokens);
ad::Node embed_rows(std::span<const ad::Node> p, const ad::Node& rows);
StepOut cell(std::span<const ad::Node> p, const ad::Node& input, const ad::Node& state);

// One step from simplex (or one-hot) token rows [B x V]; validates rows.
StepOut step(std::span<const ad::Node> p, const SeqModelShape& shape, const ad::Node& token_rows,
             const ad::Node& state);
// First step, conditioned on the internal start token.
StepOut start_step(std::span<const ad::Node> p, const SeqModelShape& shape, std::size_t batch);

// Teacher-forced logits for each position: T nodes of [B x V].
std::vector<ad::Node> teacher_forced_logits(std::span<const ad::Node> p, const SeqModelShape& shape,
                                            std::span<const data::TokenSequence> batch);

// Masked mean per-token negative log-likelihood (differentiable).
ad::Node nll_loss(std::span<const ad::Node> p, const SeqModelShape& shape, std::span<const data::TokenSequence> batch);

}  // namespace seq

void validate_batch(const SeqModelShape& shape, std::span<const data::TokenSequence> batch);

// Per-position log-probabilities [B x T] of the realized tokens (masked
// positions hold 0).
Array log_prob(const SeqModel& model, std::span<const data::TokenSequence> batch);
// Per-position full conditional distributions: T arrays of [B x V].
std::vector<Array> conditional_dists(const SeqModel& model, std::span<const data::TokenSequence> batch);

// dst takes bitwise copies of src's arrays.
void copy_weights(const SeqModel& src, SeqModel& dst);

// --- discriminator ------------------------------------------------------------

struct DiscShape {
  std::size_t vocab = 0;
  std::size_t embed = 64;
  std::size_t channels = 64;
  std::size_t kernel1 = 3;
  std::size_t kernel2 = 3;
  friend bool operator==(const DiscShape&, const DiscShape&) = default;
};

// Soft-row embedding, two temporal convolutions with ReLU, max over time and a
// linear head producing one logit per sequence.
struct Discriminator {
  DiscShape shape;
  ParamSet params;

  static Discriminator random(const DiscShape& shape, Rng& rng);
};

namespace disc {

// rows: T nodes of [B x V] (simplex rows). Returns [B x 1] logits.
ad::Node forward_rows(std::span<const ad::Node> p, const DiscShape& shape, std::span<const ad::Node> rows);
// Hard tokens through the same path (embedding rows are selected directly).
ad::Node forward_tokens(std::span<const ad::Node> p, const DiscShape& shape,
                        std::span<const data::TokenSequence> batch);

}  // namespace disc

// Single sequence given as [T x V] simplex rows -> scalar logit node.
ad::Node discriminate(std::span<const ad::Node> p, const DiscShape& shape, const ad::Node& tokens);

}  // namespace coopgan
