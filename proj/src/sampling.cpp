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

#include "coopgan/sampling.hpp"

#include <algorithm>
#include <cmath>

#include "coopgan/errors.hpp"

namespace coopgan::sampling {

using ad::Node;

std::vector<double> gumbel_noise(std::size_t n, Rng& rng) {
  std::vector<double> g(n);
  for (auto& x : g) x = gumbel_from_uniform(rng.uniform_open());
  return g;
}

Node gumbel_softmax(const Node& logits, const Array& noise, double beta) {
  if (!(beta > 0.0)) throw InputError("gumbel_softmax: temperature must be positive");
  if (noise.size() != logits.size()) throw ShapeError("gumbel_softmax: noise does not match logits");
  return ad::softmax(ad::scale(ad::add(logits, Node::constant(noise.reshaped(logits.shape()))), beta));
}

double TemperatureSchedule::at(std::size_t epoch) const {
  if (!(beta_max > 0.0)) throw InputError("temperature must be positive");
  if (mode == ScheduleMode::constant || num_adv_epochs <= 1) return beta_max;
  const double frac = std::min(1.0, static_cast<double>(epoch) / static_cast<double>(num_adv_epochs - 1));
  return std::pow(beta_max, frac);
}

namespace {

std::vector<int> argmax_perturbed(const Array& logits, const std::vector<double>& noise, double scale = 1.0) {
  const std::size_t B = logits.rows(), V = logits.cols();
  std::vector<int> out(B);
  auto o = logits.data();
  for (std::size_t b = 0; b < B; ++b) {
    std::size_t best = 0;
    double best_v = scale * o[b * V] + noise[b * V];
    for (std::size_t v = 1; v < V; ++v) {
      double x = scale * o[b * V + v] + noise[b * V + v];
      if (x > best_v) {
        best_v = x;
        best = v;
      }
    }
    out[b] = static_cast<int>(best);
  }
  return out;
}

void finish_with_eos(data::TokenSequence& s, std::optional<int> eos) {
  s.length = s.ids.size();
  if (!eos) return;
  for (std::size_t t = 0; t < s.ids.size(); ++t) {
    if (s.ids[t] == *eos) {
      s.length = t + 1;
      std::fill(s.ids.begin() + static_cast<std::ptrdiff_t>(t + 1), s.ids.end(), data::kPad);
      return;
    }
  }
}

}  // namespace

std::vector<data::TokenSequence> generate_hard(const SeqModel& model, std::size_t n, std::size_t length, Rng& rng,
                                               std::optional<int> eos, std::size_t chunk, double logit_scale) {
  if (length < 1) throw InputError("generate: length must be at least 1");
  if (chunk < 1) throw InputError("generate: chunk must be at least 1");
  if (!(logit_scale > 0.0) || !std::isfinite(logit_scale)) throw InputError("generate: temperature must be positive");
  ad::NoGradGuard guard;
  auto p = model.params.as_constants();
  const std::size_t V = model.shape.vocab;
  std::vector<data::TokenSequence> out;
  out.reserve(n);
  for (std::size_t start = 0; start < n; start += chunk) {
    const std::size_t B = std::min(chunk, n - start);
    std::vector<data::TokenSequence> seqs(B);
    for (auto& s : seqs) s.ids.resize(length);
    StepOut s = seq::start_step(p, model.shape, B);
    for (std::size_t t = 0; t < length; ++t) {
      auto noise = gumbel_noise(B * V, rng);
      auto tokens = argmax_perturbed(s.logits.value(), noise, logit_scale);
      for (std::size_t b = 0; b < B; ++b) seqs[b].ids[t] = tokens[b];
      if (t + 1 < length) s = seq::cell(p, seq::embed_tokens(p, tokens), s.state);
    }
    for (auto& sq : seqs) {
      finish_with_eos(sq, eos);
      out.push_back(std::move(sq));
    }
  }
  return out;
}

SoftSample generate_soft(std::span<const Node> params, const SeqModelShape& shape, std::size_t batch,
                         std::size_t length, double beta, Rng& rng) {
  if (length < 1) throw InputError("generate: length must be at least 1");
  if (!(beta > 0.0)) throw InputError("generate: temperature must be positive");
  const std::size_t V = shape.vocab;
  SoftSample out;
  out.rows.reserve(length);
  out.hard.resize(batch);
  for (auto& s : out.hard) {
    s.ids.resize(length);
    s.length = length;
  }
  StepOut s = seq::start_step(params, shape, batch);
  for (std::size_t t = 0; t < length; ++t) {
    auto noise = gumbel_noise(batch * V, rng);
    auto tokens = argmax_perturbed(s.logits.value(), noise);
    for (std::size_t b = 0; b < batch; ++b) out.hard[b].ids[t] = tokens[b];
    Node row = gumbel_softmax(s.logits, Array({batch, V}, std::move(noise)), beta);
    out.rows.push_back(row);
    if (t + 1 < length) s = seq::cell(params, seq::embed_rows(params, row), s.state);
  }
  return out;
}

}  // namespace coopgan::sampling
