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

#include "coopgan/models.hpp"

#include <cmath>
#include <cstring>

#include "coopgan/errors.hpp"

namespace coopgan {

using ad::Node;

// --- ParamSet ---------------------------------------------------------------

std::size_t ParamSet::num_scalars() const {
  std::size_t n = 0;
  for (const auto& v : values) n += v.size();
  return n;
}

const Array& ParamSet::get(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i) {
    if (names[i] == name) return values[i];
  }
  throw InputError("no parameter named '" + std::string(name) + "'");
}

std::vector<Node> ParamSet::as_parameters() const {
  std::vector<Node> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(Node::parameter(v));
  return out;
}

std::vector<Node> ParamSet::as_constants() const {
  std::vector<Node> out;
  out.reserve(values.size());
  for (const auto& v : values) out.push_back(Node::constant(v));
  return out;
}

ParamSet ParamSet::with_values(std::span<const Node> nodes) const {
  std::vector<Array> v;
  v.reserve(nodes.size());
  for (const auto& n : nodes) v.push_back(n.value());
  return with_values(std::move(v));
}

ParamSet ParamSet::with_values(std::vector<Array> v) const {
  if (v.size() != values.size()) throw ShapeError("parameter count mismatch");
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (v[i].shape() != values[i].shape()) {
      throw ShapeError("parameter " + names[i] + ": shape " + shape_str(v[i].shape()) + " vs " +
                       shape_str(values[i].shape()));
    }
  }
  return ParamSet{names, std::move(v)};
}

bool ParamSet::all_finite() const {
  for (const auto& v : values) {
    if (!v.all_finite()) return false;
  }
  return true;
}

bool ParamSet::identical(const ParamSet& other) const {
  if (!same_structure(other)) return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (!values[i].identical(other.values[i])) return false;
  }
  return true;
}

bool ParamSet::same_structure(const ParamSet& other) const {
  if (names != other.names) return false;
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i].shape() != other.values[i].shape()) return false;
  }
  return true;
}

namespace {

Array normal_array(const Shape& shape, Rng& rng, double scale) {
  std::vector<double> v(shape_size(shape));
  for (auto& x : v) x = scale * rng.normal();
  return Array(shape, std::move(v));
}

}  // namespace

// --- sequence model -------------------------------------------------------------

SeqModel SeqModel::random(const SeqModelShape& s, Rng& rng, double scale, bool init_biases) {
  if (s.vocab == 0 || s.embed == 0 || s.hidden == 0) throw InputError("model sizes must be positive");
  SeqModel m{s, {}};
  auto add = [&](std::string name, Shape shape, bool bias) {
    m.params.names.push_back(std::move(name));
    m.params.values.push_back(bias && !init_biases ? Array::zeros(shape) : normal_array(shape, rng, scale));
  };
  const std::size_t V = s.vocab, E = s.embed, H = s.hidden;
  add("embedding", {V, E}, false);
  add("start", {1, E}, false);
  add("gru.w_update", {E, H}, false);
  add("gru.u_update", {H, H}, false);
  add("gru.b_update", {1, H}, true);
  add("gru.w_reset", {E, H}, false);
  add("gru.u_reset", {H, H}, false);
  add("gru.b_reset", {1, H}, true);
  add("gru.w_cand", {E, H}, false);
  add("gru.u_cand", {H, H}, false);
  add("gru.b_cand", {1, H}, true);
  add("out.w", {H, V}, false);
  add("out.b", {1, V}, true);
  return m;
}

namespace seq {

Node initial_state(const SeqModelShape& shape, std::size_t batch) {
  return Node::constant(Array::zeros({batch, shape.hidden}));
}

Node embed_start(std::span<const Node> p, std::size_t batch) { return ad::broadcast_rows(p[kStart], batch); }

Node embed_tokens(std::span<const Node> p, std::span<const int> tokens) { return ad::rows_select(p[kEmb], tokens); }

Node embed_rows(std::span<const Node> p, const Node& rows) { return ad::matmul(rows, p[kEmb]); }

StepOut cell(std::span<const Node> p, const Node& x, const Node& h) {
  using namespace ad;
  const std::size_t B = x.value().rows();
  auto gate = [&](SeqParam w, SeqParam u, SeqParam b, const Node& hin) {
    return add(add(matmul(x, p[w]), matmul(hin, p[u])), broadcast_rows(p[b], B));
  };
  Node z = sigmoid(gate(kWz, kUz, kBz, h));
  Node r = sigmoid(gate(kWr, kUr, kBr, h));
  Node cand = tanh(gate(kWh, kUh, kBh, mul(r, h)));
  Node next = add(h, mul(z, sub(cand, h)));
  Node logits = add(matmul(next, p[kWo]), broadcast_rows(p[kBo], B));
  return {logits, next};
}

StepOut step(std::span<const Node> p, const SeqModelShape& shape, const Node& token_rows, const Node& state) {
  const Array& rows = token_rows.value();
  if (rows.cols() != shape.vocab) {
    throw ShapeError("step: token rows have " + std::to_string(rows.cols()) + " entries, vocabulary is " +
                     std::to_string(shape.vocab));
  }
  for (std::size_t i = 0; i < rows.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < rows.cols(); ++j) {
      double v = rows.at(i, j);
      if (!(v >= 0.0)) throw InputError("step: token row has a negative entry");
      s += v;
    }
    if (std::abs(s - 1.0) > 1e-6) throw InputError("step: token row does not sum to 1");
  }
  return cell(p, embed_rows(p, ad::reshape(token_rows, {rows.rows(), rows.cols()})), state);
}

StepOut start_step(std::span<const Node> p, const SeqModelShape& shape, std::size_t batch) {
  return cell(p, embed_start(p, batch), initial_state(shape, batch));
}

std::vector<Node> teacher_forced_logits(std::span<const Node> p, const SeqModelShape& shape,
                                        std::span<const data::TokenSequence> batch) {
  validate_batch(shape, batch);
  const std::size_t B = batch.size(), T = batch[0].padded_length();
  std::vector<Node> out;
  out.reserve(T);
  StepOut s = start_step(p, shape, B);
  out.push_back(s.logits);
  std::vector<int> prev(B);
  for (std::size_t t = 1; t < T; ++t) {
    for (std::size_t b = 0; b < B; ++b) prev[b] = batch[b].ids[t - 1];
    s = cell(p, embed_tokens(p, prev), s.state);
    out.push_back(s.logits);
  }
  return out;
}

Node nll_loss(std::span<const Node> p, const SeqModelShape& shape, std::span<const data::TokenSequence> batch) {
  auto logits = teacher_forced_logits(p, shape, batch);
  const std::size_t B = batch.size(), V = shape.vocab;
  Node total;
  std::size_t count = 0;
  for (std::size_t t = 0; t < logits.size(); ++t) {
    std::vector<double> pick(B * V, 0.0);
    std::size_t here = 0;
    for (std::size_t b = 0; b < B; ++b) {
      if (!batch[b].mask(t)) continue;
      pick[b * V + static_cast<std::size_t>(batch[b].ids[t])] = 1.0;
      ++here;
    }
    if (!here) continue;
    count += here;
    Node term = ad::sum(ad::mul(ad::log_softmax(logits[t]), Node::constant(Array({B, V}, std::move(pick)))));
    total = total.defined() ? ad::add(total, term) : term;
  }
  if (!count) throw InputError("nll_loss: every position is masked");
  return ad::scale(ad::neg(total), 1.0 / static_cast<double>(count));
}

}  // namespace seq

void validate_batch(const SeqModelShape& shape, std::span<const data::TokenSequence> batch) {
  if (batch.empty()) throw InputError("empty batch");
  const std::size_t T = batch[0].padded_length();
  if (T == 0) throw InputError("sequence length must be at least 1");
  for (const auto& s : batch) {
    if (s.padded_length() != T) throw InputError("sequences in a batch must share one padded length");
    if (s.length == 0 || s.length > T) throw InputError("sequence length out of range");
    for (int id : s.ids) {
      if (id < 0 || static_cast<std::size_t>(id) >= shape.vocab) {
        throw InputError("token index " + std::to_string(id) + " outside vocabulary of size " +
                         std::to_string(shape.vocab));
      }
    }
  }
}

Array log_prob(const SeqModel& model, std::span<const data::TokenSequence> batch) {
  ad::NoGradGuard guard;
  auto p = model.params.as_constants();
  auto logits = seq::teacher_forced_logits(p, model.shape, batch);
  const std::size_t B = batch.size(), T = logits.size();
  std::vector<double> out(B * T, 0.0);
  for (std::size_t t = 0; t < T; ++t) {
    Array lp = ad::log_softmax(logits[t]).value();
    for (std::size_t b = 0; b < B; ++b) {
      if (batch[b].mask(t)) out[b * T + t] = lp.at(b, static_cast<std::size_t>(batch[b].ids[t]));
    }
  }
  return Array({B, T}, std::move(out));
}

std::vector<Array> conditional_dists(const SeqModel& model, std::span<const data::TokenSequence> batch) {
  ad::NoGradGuard guard;
  auto p = model.params.as_constants();
  auto logits = seq::teacher_forced_logits(p, model.shape, batch);
  std::vector<Array> out;
  out.reserve(logits.size());
  for (const auto& l : logits) out.push_back(ad::softmax(l).value());
  return out;
}

void copy_weights(const SeqModel& src, SeqModel& dst) {
  if (!(src.shape == dst.shape) || !src.params.same_structure(dst.params)) {
    throw ShapeError("copy_weights: models differ in structure");
  }
  dst.params = src.params;
}

// --- discriminator ---------------------------------------------------------------

namespace {

struct DiscLayout {
  std::size_t emb = 0, conv1 = 1, conv1_b, conv2, conv2_b, out_w, out_b;
  explicit DiscLayout(const DiscShape& s)
      : conv1_b(conv1 + s.kernel1),
        conv2(conv1_b + 1),
        conv2_b(conv2 + s.kernel2),
        out_w(conv2_b + 1),
        out_b(out_w + 1) {}
};

std::vector<Node> conv(std::span<const Node> inputs, std::span<const Node> kernel, const Node& bias) {
  const std::size_t k = kernel.size();
  const std::size_t B = inputs[0].value().rows();
  std::vector<Node> out;
  out.reserve(inputs.size() + 1 - k);
  for (std::size_t t = 0; t + k <= inputs.size(); ++t) {
    Node acc = ad::matmul(inputs[t], kernel[0]);
    for (std::size_t j = 1; j < k; ++j) acc = ad::add(acc, ad::matmul(inputs[t + j], kernel[j]));
    out.push_back(ad::relu(ad::add(acc, ad::broadcast_rows(bias, B))));
  }
  return out;
}

Node disc_head(std::span<const Node> p, const DiscShape& shape, std::vector<Node> embedded) {
  DiscLayout L(shape);
  const std::size_t B = embedded[0].value().rows();
  // Zero frames keep short sequences long enough for both kernels.
  while (embedded.size() < shape.kernel1 + shape.kernel2 - 1) {
    embedded.push_back(Node::constant(Array::zeros({B, shape.embed})));
  }
  auto h1 = conv(embedded, p.subspan(L.conv1, shape.kernel1), p[L.conv1_b]);
  auto h2 = conv(h1, p.subspan(L.conv2, shape.kernel2), p[L.conv2_b]);
  Node pooled = ad::max_over(h2);
  return ad::add(ad::matmul(pooled, p[L.out_w]), ad::broadcast_rows(p[L.out_b], B));
}

}  // namespace

Discriminator Discriminator::random(const DiscShape& s, Rng& rng) {
  if (s.vocab == 0 || s.embed == 0 || s.channels == 0 || s.kernel1 == 0 || s.kernel2 == 0) {
    throw InputError("discriminator sizes must be positive");
  }
  Discriminator d{s, {}};
  auto add = [&](std::string name, Array a) {
    d.params.names.push_back(std::move(name));
    d.params.values.push_back(std::move(a));
  };
  add("disc.embedding", normal_array({s.vocab, s.embed}, rng, 0.1));
  const double s1 = std::sqrt(2.0 / static_cast<double>(s.kernel1 * s.embed));
  for (std::size_t j = 0; j < s.kernel1; ++j) add("disc.conv1.w" + std::to_string(j), normal_array({s.embed, s.channels}, rng, s1));
  add("disc.conv1.b", Array::zeros({1, s.channels}));
  const double s2 = std::sqrt(2.0 / static_cast<double>(s.kernel2 * s.channels));
  for (std::size_t j = 0; j < s.kernel2; ++j) add("disc.conv2.w" + std::to_string(j), normal_array({s.channels, s.channels}, rng, s2));
  add("disc.conv2.b", Array::zeros({1, s.channels}));
  add("disc.out.w", normal_array({s.channels, 1}, rng, 1.0 / std::sqrt(static_cast<double>(s.channels))));
  add("disc.out.b", Array::zeros({1, 1}));
  return d;
}

namespace disc {

Node forward_rows(std::span<const Node> p, const DiscShape& shape, std::span<const Node> rows) {
  if (rows.empty()) throw InputError("discriminate: sequence length 0");
  std::vector<Node> embedded;
  embedded.reserve(rows.size());
  for (const auto& r : rows) {
    if (r.value().cols() != shape.vocab) throw ShapeError("discriminate: token rows do not match vocabulary");
    embedded.push_back(ad::matmul(r, p[0]));
  }
  return disc_head(p, shape, std::move(embedded));
}

Node forward_tokens(std::span<const Node> p, const DiscShape& shape, std::span<const data::TokenSequence> batch) {
  validate_batch({shape.vocab, 1, 1}, batch);
  const std::size_t B = batch.size(), T = batch[0].padded_length();
  std::vector<Node> embedded;
  embedded.reserve(T);
  std::vector<int> col(B);
  for (std::size_t t = 0; t < T; ++t) {
    for (std::size_t b = 0; b < B; ++b) col[b] = batch[b].ids[t];
    embedded.push_back(ad::rows_select(p[0], col));
  }
  return disc_head(p, shape, std::move(embedded));
}

}  // namespace disc

Node discriminate(std::span<const Node> p, const DiscShape& shape, const Node& tokens) {
  const Array& v = tokens.value();
  if (v.rank() != 2) throw ShapeError("discriminate: expected [T x V] rows");
  for (std::size_t i = 0; i < v.rows(); ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < v.cols(); ++j) {
      if (v.at(i, j) < 0.0) throw InputError("discriminate: rows must lie on the simplex");
      s += v.at(i, j);
    }
    if (std::abs(s - 1.0) > 1e-6) throw InputError("discriminate: rows must lie on the simplex");
  }
  std::vector<Node> rows;
  rows.reserve(v.rows());
  for (std::size_t t = 0; t < v.rows(); ++t) {
    const int idx = static_cast<int>(t);
    rows.push_back(ad::rows_select(tokens, std::span<const int>(&idx, 1)));
  }
  return ad::reshape(disc::forward_rows(p, shape, rows), {1});
}

}  // namespace coopgan
