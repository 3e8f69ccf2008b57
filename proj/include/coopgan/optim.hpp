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

#include "coopgan/array.hpp"
#include "coopgan/models.hpp"

namespace coopgan {

struct AdamState {
  std::vector<Array> m;
  std::vector<Array> v;
  std::size_t t = 0;
};

// Adam with bias correction. Parameters are immutable arrays, so each step
// returns a new ParamSet.
struct Adam {
  double lr = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;

  ParamSet step(const ParamSet& params, std::span<const Array> grads, AdamState& state) const;
};

double global_norm(std::span<const Array> grads);
// Rescales so the global L2 norm is at most max_norm (no-op when max_norm <= 0).
std::vector<Array> clip_by_global_norm(std::vector<Array> grads, double max_norm);

}  // namespace coopgan
