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

#include <cmath>
#include <cstddef>
#include <optional>
#include <span>
#include <vector>

#include "coopgan/autodiff.hpp"
#include "coopgan/data.hpp"
#include "coopgan/models.hpp"
#include "coopgan/rng.hpp"

namespace coopgan::sampling {

inline double gumbel_from_uniform(double u) { return -std::log(-std::log(u)); }

// n draws of -log(-log(U)), U uniform on (0, 1).
std::vector<double> gumbel_noise(std::size_t n, Rng& rng);

// softmax(beta * (logits + noise)) row-wise; noise enters as a constant.
ad::Node gumbel_softmax(const ad::Node& logits, const Array& noise, double beta);

enum class ScheduleMode { constant, exponential };

// Temperature per adversarial epoch. The exponential mode ramps from 1 at the
// first epoch to beta_max at the last one.
struct TemperatureSchedule {
  double beta_max = 100.0;
  std::size_t num_adv_epochs = 1;
  ScheduleMode mode = ScheduleMode::exponential;

  double at(std::size_t epoch) const;
};

// Hard autoregressive samples via argmax(s * o_t + g_t) fed back as the
// chosen token, i.e. exact draws from softmax(s * o_t). Runs without recording
// a graph, `chunk` sequences at a time. With `eos`, each sequence ends at its
// first EOS and the tail is PAD.
std::vector<data::TokenSequence> generate_hard(const SeqModel& model, std::size_t n, std::size_t length, Rng& rng,
                                               std::optional<int> eos = std::nullopt, std::size_t chunk = 500,
                                               double logit_scale = 1.0);

struct SoftSample {
  std::vector<ad::Node> rows;               // T nodes of [B x V] simplex rows
  std::vector<data::TokenSequence> hard;    // argmax of the same perturbed logits
};

// Relaxed samples: each soft row is fed back as the next input, so the rows
// stay differentiable w.r.t. the model parameters.
SoftSample generate_soft(std::span<const ad::Node> params, const SeqModelShape& shape, std::size_t batch,
                         std::size_t length, double beta, Rng& rng);

}  // namespace coopgan::sampling
