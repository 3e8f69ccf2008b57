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

#include "coopgan/optim.hpp"

#include <cmath>

#include "coopgan/errors.hpp"

namespace coopgan {

ParamSet Adam::step(const ParamSet& params, std::span<const Array> grads, AdamState& state) const {
  if (grads.size() != params.size()) throw ShapeError("Adam: gradient count does not match parameters");
  if (state.m.empty()) {
    for (const auto& p : params.values) {
      state.m.push_back(Array::zeros(p.shape()));
      state.v.push_back(Array::zeros(p.shape()));
    }
  }
  ++state.t;
  const double c1 = 1.0 - std::pow(beta1, static_cast<double>(state.t));
  const double c2 = 1.0 - std::pow(beta2, static_cast<double>(state.t));
  std::vector<Array> next;
  next.reserve(params.size());
  for (std::size_t i = 0; i < params.size(); ++i) {
    const Array& p = params.values[i];
    const Array& g = grads[i];
    if (g.shape() != p.shape()) throw ShapeError("Adam: gradient shape mismatch for " + params.names[i]);
    std::vector<double> m(p.size()), v(p.size()), out(p.size());
    for (std::size_t j = 0; j < p.size(); ++j) {
      m[j] = beta1 * state.m[i][j] + (1.0 - beta1) * g[j];
      v[j] = beta2 * state.v[i][j] + (1.0 - beta2) * g[j] * g[j];
      out[j] = p[j] - lr * (m[j] / c1) / (std::sqrt(v[j] / c2) + eps);
    }
    state.m[i] = Array(p.shape(), std::move(m));
    state.v[i] = Array(p.shape(), std::move(v));
    next.push_back(Array(p.shape(), std::move(out)));
  }
  return params.with_values(std::move(next));
}

double global_norm(std::span<const Array> grads) {
  double s = 0.0;
  for (const auto& g : grads)
    for (double x : g.data()) s += x * x;
  return std::sqrt(s);
}

std::vector<Array> clip_by_global_norm(std::vector<Array> grads, double max_norm) {
  if (max_norm <= 0.0) return grads;
  const double norm = global_norm(grads);
  if (norm <= max_norm) return grads;
  const double f = max_norm / norm;
  for (auto& g : grads) {
    std::vector<double> d(g.data().begin(), g.data().end());
    for (auto& x : d) x *= f;
    g = Array(g.shape(), std::move(d));
  }
  return grads;
}

}  // namespace coopgan
