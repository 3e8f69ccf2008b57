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

#include "coopgan/losses.hpp"

#include <cmath>

#include "coopgan/errors.hpp"

namespace coopgan::losses {

using ad::Node;

AdvLosses adv_losses(const Node& real_logits, const Node& fake_logits, GenLossForm form) {
  if (!real_logits.defined() || !fake_logits.defined() || real_logits.size() == 0 || fake_logits.size() == 0) {
    throw InputError("adv_losses: empty batch");
  }
  if (!real_logits.value().all_finite() || !fake_logits.value().all_finite()) {
    throw NumericError("adv_losses: non-finite discriminator logits");
  }
  Node real_term = ad::mean(ad::log_sigmoid(real_logits));
  Node fake_term = ad::mean(ad::log_sigmoid(ad::neg(fake_logits)));  // log(1 - s(x)) = log s(-x)
  AdvLosses out;
  out.d = ad::neg(ad::add(real_term, fake_term));
  out.g = form == GenLossForm::non_saturating ? ad::neg(ad::mean(ad::log_sigmoid(fake_logits))) : fake_term;
  return out;
}

Node lm_mixture_loss(std::span<const Node> lm_params, const SeqModelShape& shape,
                     std::span<const data::TokenSequence> real, std::span<const data::TokenSequence> fake) {
  if (real.size() != fake.size()) {
    throw InputError("lm_mixture_loss: real and generated batches must be the same size (" +
                     std::to_string(real.size()) + " vs " + std::to_string(fake.size()) + ")");
  }
  std::vector<data::TokenSequence> mixed(real.begin(), real.end());
  mixed.insert(mixed.end(), fake.begin(), fake.end());
  return seq::nll_loss(lm_params, shape, mixed);
}

Node kl_distill_loss(const std::vector<Array>& lm_dists, std::span<const Node> gen_logits,
                     std::span<const data::TokenSequence> batch, KlMode mode) {
  if (lm_dists.size() != gen_logits.size()) throw ShapeError("kl_distill_loss: position count mismatch");
  if (batch.empty()) throw InputError("kl_distill_loss: empty batch");
  const std::size_t T = lm_dists.size(), B = batch.size();
  Node cross;
  double entropy_term = 0.0;  // sum of M log M over the kept entries
  std::size_t count = 0;
  for (std::size_t t = 0; t < T; ++t) {
    const Array& m = lm_dists[t];
    if (m.rows() != B || gen_logits[t].value().rows() != B || m.cols() != gen_logits[t].value().cols()) {
      throw ShapeError("kl_distill_loss: distribution shapes " + shape_str(m.shape()) + " and " +
                       shape_str(gen_logits[t].shape()) + " disagree");
    }
    const std::size_t V = m.cols();
    std::vector<double> weights(B * V, 0.0);
    std::size_t here = 0;
    for (std::size_t b = 0; b < B; ++b) {
      double s = 0.0;
      for (std::size_t v = 0; v < V; ++v) {
        double x = m.at(b, v);
        if (!(x >= 0.0) || !std::isfinite(x)) throw InputError("kl_distill_loss: teacher row not on the simplex");
        s += x;
      }
      if (std::abs(s - 1.0) > 1e-6) throw InputError("kl_distill_loss: teacher row not on the simplex");
      if (!batch[b].mask(t)) continue;
      ++here;
      if (mode == KlMode::full) {
        for (std::size_t v = 0; v < V; ++v) {
          double x = m.at(b, v);
          weights[b * V + v] = x;
          if (x > 0.0) entropy_term += x * std::log(x);
        }
      } else {
        const auto y = static_cast<std::size_t>(batch[b].ids[t]);
        double x = m.at(b, y);
        weights[b * V + y] = x;
        if (x > 0.0) entropy_term += x * std::log(x);
      }
    }
    if (!here) continue;
    count += here;
    Node term = ad::sum(ad::mul(ad::log_softmax(gen_logits[t]), Node::constant(Array({B, V}, std::move(weights)))));
    cross = cross.defined() ? ad::add(cross, term) : term;
  }
  if (!count) throw InputError("kl_distill_loss: every position is masked");
  return ad::scale(ad::add_scalar(ad::neg(cross), entropy_term), 1.0 / static_cast<double>(count));
}

}  // namespace coopgan::losses
