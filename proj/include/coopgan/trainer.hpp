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

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "coopgan/config.hpp"
#include "coopgan/data.hpp"
#include "coopgan/losses.hpp"
#include "coopgan/metrics.hpp"
#include "coopgan/models.hpp"
#include "coopgan/optim.hpp"

namespace coopgan {

// Real data and, for the synthetic task, the oracle that produced it.
struct TaskData {
  std::vector<data::TokenSequence> train;
  std::vector<data::TokenSequence> test;
  std::optional<OracleParams> oracle;
  std::optional<data::Vocab> vocab;
  std::size_t vocab_size = 0;
  std::size_t seq_len = 0;
  std::optional<int> eos;  // set for text corpora
  // BLEU-2..5 scorers over the test set (text corpora only).
  std::vector<std::shared_ptr<const metrics::BleuScorer>> bleu;
};

TaskData make_task(const TrainConfig& cfg);
// Synthetic task data with a caller-chosen oracle (sizes from cfg).
TaskData make_synthetic_task(const TrainConfig& cfg, OracleParams oracle);

enum class Phase { init, pretrain, adversarial };
std::string to_string(Phase p);
Phase parse_phase(const std::string& s);

struct TrainState {
  SeqModel generator;
  SeqModel lm;
  Discriminator disc;
  AdamState gen_opt;
  AdamState disc_opt;
  AdamState lm_opt;
  Phase phase = Phase::init;
  std::size_t pretrain_epoch = 0;
  std::size_t epoch = 0;  // completed adversarial updates
  std::optional<double> lm_reference;
  std::size_t skipped = 0;
  std::size_t consecutive_skips = 0;
};

SeqModelShape generator_shape(const TrainConfig& cfg, std::size_t vocab_size);
DiscShape disc_shape(const TrainConfig& cfg, std::size_t vocab_size);
TrainState init_state(const TrainConfig& cfg, std::size_t vocab_size);

// Random streams of the adversarial phase. Each consumer owns its stream, so
// switching the cooperative parts on or off never shifts the draws seen by the
// adversarial parts.
struct Streams {
  data::BatchStream real;
  data::BatchStream meta;
  Rng gen;
  Rng lm;
  Rng disc;
};
Streams make_streams(const TrainConfig& cfg, std::size_t corpus_size, std::size_t start_epoch);

// --- meta update ----------------------------------------------------------------

struct InnerStep {
  std::vector<ad::Node> theta_prime;
  std::vector<ad::Node> adv_grad;
  bool differentiable = false;
};

// theta' = theta - alpha * grad L_adv(theta). In second-order mode the
// gradient is built with create_graph, so theta' stays a function of theta.
// Throws NumericError on non-finite gradients.
InnerStep inner_update(std::span<const ad::Node> theta, const ad::Node& adv_g_loss, double alpha, MetaMode mode);

using CotLoss = std::function<ad::Node(std::span<const ad::Node> theta)>;

// Gradient of lambda * L_cot(theta'). Second order: w.r.t. theta through the
// inner step. First order: w.r.t. theta' itself.
std::vector<Array> meta_gradient(std::span<const ad::Node> theta, const InnerStep& inner, const CotLoss& cot,
                                 double lambda, MetaMode mode);

// --- training -------------------------------------------------------------------

using RecordSink = std::function<void(const metrics::MetricsRecord&)>;

// MLE with teacher forcing for cfg.pretrain_epochs epochs. Emits one record
// at the random initialization and one per epoch.
void pretrain(TrainState& state, const TrainConfig& cfg, const TaskData& task, const RecordSink& sink = {});

// Switch to the adversarial phase: the language model takes a copy of the
// generator and its held-out NLL becomes the alarm reference.
void begin_adversarial(TrainState& state, const TrainConfig& cfg, const TaskData& task);

struct StepResult {
  losses::LossBundle losses;
  bool has_cot_theta = false;
  bool has_cot_psi = false;
  bool skipped = false;
  std::string reason;
};

// One interleaved update of generator, discriminator and language model, all
// computed from pre-step parameters. A non-finite loss or gradient skips the
// step; the third consecutive skip throws NumericError.
StepResult train_step(TrainState& state, Streams& streams, const TrainConfig& cfg, const TaskData& task);

// Held-out metrics for the current state. Sampling uses a stream fixed by the
// seed, so the same parameters always give the same numbers.
metrics::MetricsRecord evaluate(const TrainState& state, const TrainConfig& cfg, const TaskData& task);

struct RunHooks {
  RecordSink on_record;
  std::function<void(const TrainState&)> on_checkpoint;
};

// Runs adversarial updates until cfg.adv_epochs are done. Records every
// update's losses; held-out metrics and checkpoints every eval_every updates.
void run_adversarial(TrainState& state, const TrainConfig& cfg, const TaskData& task, const RunHooks& hooks);

}  // namespace coopgan
