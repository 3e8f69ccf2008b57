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

#include <span>
#include <vector>

#include "coopgan/autodiff.hpp"
#include "coopgan/data.hpp"
#include "coopgan/models.hpp"

namespace coopgan::losses {

enum class GenLossForm { non_saturating, minimax };
enum class KlMode { full, realized };

// Scalar values of the four training losses for one step.
struct LossBundle {
  double adv_g = 0.0;
  double adv_d = 0.0;
  double cot_psi = 0.0;
  double cot_theta = 0.0;
};

struct AdvLosses {
  ad::Node d;  // -mean log s(real) - mean log(1 - s(fake))
  ad::Node g;  // -mean log s(fake), or mean log(1 - s(fake)) in minimax form
};

// Discriminator logits for real and generated batches ([B x 1] or [B]).
AdvLosses adv_losses(const ad::Node& real_logits, const ad::Node& fake_logits,
                     GenLossForm form = GenLossForm::non_saturating);

// Per-token NLL of the language model over a balanced real + generated batch.
// Generated sequences are plain token ids, so nothing flows back to the
// generator.
ad::Node lm_mixture_loss(std::span<const ad::Node> lm_params, const SeqModelShape& shape,
                         std::span<const data::TokenSequence> real, std::span<const data::TokenSequence> fake);

// KL(M || G) between the language model's and the generator's next-token
// distributions, both teacher-forced on the same real batch, averaged over
// unmasked positions.
//   lm_dists:   T arrays of [B x V] rows (treated as constants)
//   gen_logits: T nodes of [B x V] generator logits
// KlMode::realized keeps only the realized-token term of each position.
ad::Node kl_distill_loss(const std::vector<Array>& lm_dists, std::span<const ad::Node> gen_logits,
                         std::span<const data::TokenSequence> batch, KlMode mode = KlMode::full);

}  // namespace coopgan::losses
