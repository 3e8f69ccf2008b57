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

#include "coopgan/autodiff.hpp"

#include <Eigen/Core>
#include <algorithm>
#include <cmath>
#include <optional>
#include <string>
#include <unordered_map>
#include <unordered_set>

#include "coopgan/errors.hpp"

namespace coopgan::ad {

namespace {

thread_local bool g_grad_enabled = true;

using RowMat = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

template <class F>
Array map_unary(const Array& a, F f) {
  std::vector<double> out(a.size());
  auto in = a.data();
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(in[i]);
  return Array(a.shape(), std::move(out));
}

Shape broadcast_shape(const Array& a, const Array& b, std::string_view name) {
  if (a.shape() == b.shape()) return a.shape();
  if (b.is_scalar()) return a.shape();
  if (a.is_scalar()) return b.shape();
  throw ShapeError(std::string(name) + ": incompatible shapes " + shape_str(a.shape()) + " and " +
                   shape_str(b.shape()));
}

template <class F>
Array map_binary(const Array& a, const Array& b, std::string_view name, F f) {
  Shape shape = broadcast_shape(a, b, name);
  std::vector<double> out(shape_size(shape));
  auto x = a.data();
  auto y = b.data();
  const bool as = a.size() == 1 && out.size() != 1;
  const bool bs = b.size() == 1 && out.size() != 1;
  for (std::size_t i = 0; i < out.size(); ++i) out[i] = f(as ? x[0] : x[i], bs ? y[0] : y[i]);
  return Array(std::move(shape), std::move(out));
}

// Folds a broadcast gradient back onto the operand's shape.
Node reduce_to(const Node& g, const Node& like) {
  if (g.shape() == like.shape()) return g;
  if (g.size() == like.size()) return reshape(g, like.shape());
  return reshape(sum(g), like.shape());
}

void require_rank2(const Node& a, std::string_view name) {
  if (a.value().rank() != 2) {
    throw ShapeError(std::string(name) + ": expected a matrix, got " + shape_str(a.shape()));
  }
}

void require_finite(const Array& a, std::string_view name) {
  if (!a.all_finite()) throw NumericError(std::string(name) + ": non-finite input");
}

double stable_sigmoid(double x) {
  if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
  double e = std::exp(x);
  return e / (1.0 + e);
}

double stable_log_sigmoid(double x) { return std::min(x, 0.0) - std::log1p(std::exp(-std::abs(x))); }

Node as_row_matrix(const Node& a) {
  if (a.value().rank() == 1) return reshape(a, {1, a.size()});
  return a;
}

}  // namespace

bool grad_enabled() { return g_grad_enabled; }

NoGradGuard::NoGradGuard() : previous_(g_grad_enabled) { g_grad_enabled = false; }
NoGradGuard::~NoGradGuard() { g_grad_enabled = previous_; }

Node Node::constant(Array value) {
  Node n;
  n.impl_ = std::make_shared<detail::NodeImpl>();
  n.impl_->value = std::move(value);
  return n;
}

Node Node::parameter(Array value) {
  Node n = constant(std::move(value));
  n.impl_->requires_grad = true;
  return n;
}

Node make_node(std::string_view op, Array value, std::vector<Node> parents, detail::BackwardFn backward) {
  Node n = Node::constant(std::move(value));
  n.impl_->op = op;
  if (!g_grad_enabled) return n;
  bool any = std::any_of(parents.begin(), parents.end(), [](const Node& p) { return p.requires_grad(); });
  if (!any) return n;
  n.impl_->parents = std::move(parents);
  n.impl_->backward = std::move(backward);
  n.impl_->requires_grad = true;
  return n;
}

// --- elementwise -------------------------------------------------------------

using Need = std::vector<bool>;

Node add(const Node& a, const Node& b) {
  auto v = map_binary(a.value(), b.value(), "add", [](double x, double y) { return x + y; });
  return make_node("add", std::move(v), {a, b}, [](const Node& out, const Node& g, const Need& need) {
    const auto& p = out.parents();
    std::vector<Node> r(2);
    if (need[0]) r[0] = reduce_to(g, p[0]);
    if (need[1]) r[1] = reduce_to(g, p[1]);
    return r;
  });
}

Node sub(const Node& a, const Node& b) {
  auto v = map_binary(a.value(), b.value(), "sub", [](double x, double y) { return x - y; });
  return make_node("sub", std::move(v), {a, b}, [](const Node& out, const Node& g, const Need& need) {
    const auto& p = out.parents();
    std::vector<Node> r(2);
    if (need[0]) r[0] = reduce_to(g, p[0]);
    if (need[1]) r[1] = reduce_to(neg(g), p[1]);
    return r;
  });
}

Node mul(const Node& a, const Node& b) {
  auto v = map_binary(a.value(), b.value(), "mul", [](double x, double y) { return x * y; });
  return make_node("mul", std::move(v), {a, b}, [](const Node& out, const Node& g, const Need& need) {
    const auto& p = out.parents();
    std::vector<Node> r(2);
    if (need[0]) r[0] = reduce_to(mul(g, p[1]), p[0]);
    if (need[1]) r[1] = reduce_to(mul(g, p[0]), p[1]);
    return r;
  });
}

Node div(const Node& a, const Node& b) {
  auto v = map_binary(a.value(), b.value(), "div", [](double x, double y) { return x / y; });
  return make_node("div", std::move(v), {a, b}, [](const Node& out, const Node& g, const Need& need) {
    const auto& p = out.parents();
    std::vector<Node> r(2);
    if (need[0]) r[0] = reduce_to(div(g, p[1]), p[0]);
    // d(a/b)/db = -(a/b)/b
    if (need[1]) r[1] = reduce_to(neg(div(mul(g, out), p[1])), p[1]);
    return r;
  });
}

Node neg(const Node& a) {
  return make_node("neg", map_unary(a.value(), [](double x) { return -x; }), {a},
                   [](const Node&, const Node& g, const Need&) { return std::vector<Node>{neg(g)}; });
}

Node exp(const Node& a) {
  return make_node("exp", map_unary(a.value(), [](double x) { return std::exp(x); }), {a},
                   [](const Node& out, const Node& g, const Need&) { return std::vector<Node>{mul(g, out)}; });
}

Node log(const Node& a) {
  return make_node("log", map_unary(a.value(), [](double x) { return std::log(x); }), {a},
                   [](const Node& out, const Node& g, const Need&) {
                     return std::vector<Node>{div(g, out.parents()[0])};
                   });
}

Node tanh(const Node& a) {
  return make_node("tanh", map_unary(a.value(), [](double x) { return std::tanh(x); }), {a},
                   [](const Node& out, const Node& g, const Need&) {
                     return std::vector<Node>{mul(g, add_scalar(neg(mul(out, out)), 1.0))};
                   });
}

Node sigmoid(const Node& a) {
  return make_node("sigmoid", map_unary(a.value(), stable_sigmoid), {a},
                   [](const Node& out, const Node& g, const Need&) {
                     return std::vector<Node>{mul(g, mul(out, add_scalar(neg(out), 1.0)))};
                   });
}

Node log_sigmoid(const Node& a) {
  return make_node("log_sigmoid", map_unary(a.value(), stable_log_sigmoid), {a},
                   [](const Node& out, const Node& g, const Need&) {
                     return std::vector<Node>{mul(g, sigmoid(neg(out.parents()[0])))};
                   });
}

Node relu(const Node& a) {
  return make_node("relu", map_unary(a.value(), [](double x) { return x > 0 ? x : 0.0; }), {a},
                   [](const Node& out, const Node& g, const Need&) {
                     auto mask = map_unary(out.parents()[0].value(), [](double x) { return x > 0 ? 1.0 : 0.0; });
                     return std::vector<Node>{mul(g, Node::constant(std::move(mask)))};
                   });
}

Node scale(const Node& a, double factor) {
  return make_node("scale", map_unary(a.value(), [factor](double x) { return x * factor; }), {a},
                   [factor](const Node&, const Node& g, const Need&) { return std::vector<Node>{scale(g, factor)}; });
}

Node add_scalar(const Node& a, double offset) {
  return make_node("add_scalar", map_unary(a.value(), [offset](double x) { return x + offset; }), {a},
                   [](const Node&, const Node& g, const Need&) { return std::vector<Node>{g}; });
}

Node elementwise(ElementwiseOp op, const Node& a, const Node& b) {
  const bool binary = op == ElementwiseOp::add || op == ElementwiseOp::sub || op == ElementwiseOp::mul;
  if (!a.defined() || (binary && !b.defined())) throw InputError("elementwise: missing operand");
  switch (op) {
    case ElementwiseOp::add: return add(a, b);
    case ElementwiseOp::sub: return sub(a, b);
    case ElementwiseOp::mul: return mul(a, b);
    case ElementwiseOp::neg: return neg(a);
    case ElementwiseOp::exp: return exp(a);
    case ElementwiseOp::log: return log(a);
    case ElementwiseOp::tanh: return tanh(a);
    case ElementwiseOp::sigmoid: return sigmoid(a);
  }
  throw InputError("elementwise: unknown op");
}

// --- linear algebra -------------------------------------------------------------

Node matmul(const Node& a, const Node& b, bool transpose_a, bool transpose_b) {
  const Array& x = a.value();
  const Array& y = b.value();
  const std::size_t xr = x.rows(), xc = x.cols(), yr = y.rows(), yc = y.cols();
  const std::size_t m = transpose_a ? xc : xr;
  const std::size_t k = transpose_a ? xr : xc;
  const std::size_t k2 = transpose_b ? yc : yr;
  const std::size_t n = transpose_b ? yr : yc;
  if (k != k2) {
    throw ShapeError("matmul: inner dimensions differ for " + shape_str(x.shape()) + (transpose_a ? "^T" : "") +
                     " and " + shape_str(y.shape()) + (transpose_b ? "^T" : ""));
  }
  std::vector<double> out(m * n);
  Eigen::Map<const RowMat> A(x.data().data(), xr, xc);
  Eigen::Map<const RowMat> B(y.data().data(), yr, yc);
  Eigen::Map<RowMat> C(out.data(), m, n);
  if (!transpose_a && !transpose_b) {
    C.noalias() = A * B;
  } else if (transpose_a && !transpose_b) {
    C.noalias() = A.transpose() * B;
  } else if (!transpose_a && transpose_b) {
    C.noalias() = A * B.transpose();
  } else {
    C.noalias() = A.transpose() * B.transpose();
  }
  return make_node("matmul", Array({m, n}, std::move(out)), {a, b},
                   [transpose_a, transpose_b](const Node& out_node, const Node& g, const Need& need) {
                     const auto& p = out_node.parents();
                     std::vector<Node> r(2);
                     if (need[0]) {
                       Node ga = transpose_a ? matmul(p[1], g, transpose_b, true) : matmul(g, p[1], false, !transpose_b);
                       r[0] = reduce_to(ga, p[0]);
                     }
                     if (need[1]) {
                       Node gb = transpose_b ? matmul(g, p[0], true, transpose_a) : matmul(p[0], g, !transpose_a, false);
                       r[1] = reduce_to(gb, p[1]);
                     }
                     return r;
                   });
}

Node sum(const Node& a) {
  double s = 0.0;
  for (double v : a.value().data()) s += v;
  return make_node("sum", Array::scalar(s), {a}, [](const Node& out, const Node& g, const Need&) {
    return std::vector<Node>{broadcast_scalar(g, out.parents()[0].shape())};
  });
}

Node mean(const Node& a) { return scale(sum(a), 1.0 / static_cast<double>(a.size())); }

Node reshape(const Node& a, Shape shape) {
  return make_node("reshape", a.value().reshaped(std::move(shape)), {a},
                   [](const Node& out, const Node& g, const Need&) {
                     return std::vector<Node>{reshape(g, out.parents()[0].shape())};
                   });
}

Node sum_rows(const Node& a) {
  require_rank2(a, "sum_rows");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  std::vector<double> out(n, 0.0);
  auto x = a.value().data();
  for (std::size_t i = 0; i < m; ++i)
    for (std::size_t j = 0; j < n; ++j) out[j] += x[i * n + j];
  return make_node("sum_rows", Array({1, n}, std::move(out)), {a}, [m](const Node&, const Node& g, const Need&) {
    return std::vector<Node>{broadcast_rows(g, m)};
  });
}

Node sum_cols(const Node& a) {
  require_rank2(a, "sum_cols");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  std::vector<double> out(m, 0.0);
  auto x = a.value().data();
  for (std::size_t i = 0; i < m; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < n; ++j) s += x[i * n + j];
    out[i] = s;
  }
  return make_node("sum_cols", Array({m, 1}, std::move(out)), {a}, [n](const Node&, const Node& g, const Need&) {
    return std::vector<Node>{broadcast_cols(g, n)};
  });
}

Node broadcast_rows(const Node& row, std::size_t rows) {
  const Array& v = row.value();
  if (v.rank() != 2 || v.rows() != 1) throw ShapeError("broadcast_rows: expected [1 x n], got " + shape_str(v.shape()));
  const std::size_t n = v.cols();
  std::vector<double> out(rows * n);
  for (std::size_t i = 0; i < rows; ++i) std::copy(v.data().begin(), v.data().end(), out.begin() + i * n);
  return make_node("broadcast_rows", Array({rows, n}, std::move(out)), {row},
                   [](const Node&, const Node& g, const Need&) { return std::vector<Node>{sum_rows(g)}; });
}

Node broadcast_cols(const Node& col, std::size_t cols) {
  const Array& v = col.value();
  if (v.rank() != 2 || v.cols() != 1) throw ShapeError("broadcast_cols: expected [m x 1], got " + shape_str(v.shape()));
  const std::size_t m = v.rows();
  std::vector<double> out(m * cols);
  for (std::size_t i = 0; i < m; ++i) std::fill(out.begin() + i * cols, out.begin() + (i + 1) * cols, v[i]);
  return make_node("broadcast_cols", Array({m, cols}, std::move(out)), {col},
                   [](const Node&, const Node& g, const Need&) { return std::vector<Node>{sum_cols(g)}; });
}

Node broadcast_scalar(const Node& s, Shape shape) {
  if (!s.value().is_scalar()) throw ShapeError("broadcast_scalar: expected one element, got " + shape_str(s.shape()));
  auto v = Array::filled(std::move(shape), s.value()[0]);
  return make_node("broadcast_scalar", std::move(v), {s}, [](const Node& out, const Node& g, const Need&) {
    return std::vector<Node>{reshape(sum(g), out.parents()[0].shape())};
  });
}

// --- softmax family ------------------------------------------------------------

namespace {

void check_axis(const Node& logits, int axis) {
  const int rank = static_cast<int>(logits.value().rank());
  if (!(axis == -1 || axis == rank - 1)) {
    throw ShapeError("softmax: only the last axis is supported, got axis " + std::to_string(axis) + " for " +
                     shape_str(logits.shape()));
  }
}

Node softmax_rows(const Node& a) {
  require_finite(a.value(), "softmax");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  auto x = a.value().data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x.data() + i * n;
    double* yi = out.data() + i * n;
    const double mx = *std::max_element(xi, xi + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      yi[j] = std::exp(xi[j] - mx);
      z += yi[j];
    }
    const double inv = 1.0 / z;
    for (std::size_t j = 0; j < n; ++j) yi[j] *= inv;
  }
  return make_node("softmax", Array({m, n}, std::move(out)), {a}, [n](const Node& y, const Node& g, const Need&) {
    Node inner = broadcast_cols(sum_cols(mul(g, y)), n);
    return std::vector<Node>{mul(y, sub(g, inner))};
  });
}

Node log_softmax_rows(const Node& a) {
  require_finite(a.value(), "log_softmax");
  const std::size_t m = a.value().rows(), n = a.value().cols();
  auto x = a.value().data();
  std::vector<double> out(m * n);
  for (std::size_t i = 0; i < m; ++i) {
    const double* xi = x.data() + i * n;
    double* yi = out.data() + i * n;
    const double mx = *std::max_element(xi, xi + n);
    double z = 0.0;
    for (std::size_t j = 0; j < n; ++j) z += std::exp(xi[j] - mx);
    const double lse = mx + std::log(z);
    for (std::size_t j = 0; j < n; ++j) yi[j] = xi[j] - lse;
  }
  return make_node("log_softmax", Array({m, n}, std::move(out)), {a},
                   [n](const Node& y, const Node& g, const Need&) {
                     Node total = broadcast_cols(sum_cols(g), n);
                     return std::vector<Node>{sub(g, mul(exp(y), total))};
                   });
}

void check_simplex_rows(const Array& t, std::size_t rows, std::size_t cols, double tol) {
  if (t.size() != rows * cols) {
    throw ShapeError("cross_entropy: target shape " + shape_str(t.shape()) + " does not match logits");
  }
  for (std::size_t i = 0; i < rows; ++i) {
    double s = 0.0;
    for (std::size_t j = 0; j < cols; ++j) {
      double v = t[i * cols + j];
      if (v < 0.0 || !std::isfinite(v)) throw InputError("cross_entropy: target row has a negative or non-finite entry");
      s += v;
    }
    if (std::abs(s - 1.0) > tol) throw InputError("cross_entropy: target row " + std::to_string(i) + " sums to " + std::to_string(s));
  }
}

}  // namespace

Node softmax(const Node& logits, int axis) {
  check_axis(logits, axis);
  if (logits.value().rank() == 1) return reshape(softmax_rows(as_row_matrix(logits)), logits.shape());
  require_rank2(logits, "softmax");
  return softmax_rows(logits);
}

Node log_softmax(const Node& logits, int axis) {
  check_axis(logits, axis);
  if (logits.value().rank() == 1) return reshape(log_softmax_rows(as_row_matrix(logits)), logits.shape());
  require_rank2(logits, "log_softmax");
  return log_softmax_rows(logits);
}

Node cross_entropy(const Node& logits, const Array& target_dists, int axis) {
  Node lp = as_row_matrix(log_softmax(logits, axis));
  const std::size_t m = lp.value().rows(), n = lp.value().cols();
  check_simplex_rows(target_dists, m, n, 1e-8);
  Node target = Node::constant(target_dists.reshaped({m, n}));
  return scale(neg(sum(mul(lp, target))), 1.0 / static_cast<double>(m));
}

Node cross_entropy(const Node& logits, std::span<const int> target_indices, int axis) {
  const Node lp = as_row_matrix(logits);
  const std::size_t m = lp.value().rows(), n = lp.value().cols();
  if (target_indices.size() != m) throw ShapeError("cross_entropy: one target index per row required");
  std::vector<double> onehot(m * n, 0.0);
  for (std::size_t i = 0; i < m; ++i) {
    const int t = target_indices[i];
    if (t < 0 || static_cast<std::size_t>(t) >= n) throw InputError("cross_entropy: target index out of range");
    onehot[i * n + static_cast<std::size_t>(t)] = 1.0;
  }
  return cross_entropy(logits, Array({m, n}, std::move(onehot)), axis);
}

Node softmax_ops(SoftmaxOp op, const Node& logits, int axis, const Array* target_dists) {
  switch (op) {
    case SoftmaxOp::softmax: return softmax(logits, axis);
    case SoftmaxOp::log_softmax: return log_softmax(logits, axis);
    case SoftmaxOp::cross_entropy:
      if (!target_dists) throw InputError("cross_entropy: target distribution required");
      return cross_entropy(logits, *target_dists, axis);
  }
  throw InputError("softmax_ops: unknown op");
}

// --- indexing --------------------------------------------------------------------

Node rows_select(const Node& a, std::span<const int> indices) {
  require_rank2(a, "rows_select");
  const std::size_t rows = a.value().rows(), n = a.value().cols();
  std::vector<int> idx(indices.begin(), indices.end());
  std::vector<double> out(idx.size() * n);
  auto x = a.value().data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= rows) {
      throw InputError("rows_select: index " + std::to_string(idx[i]) + " out of range for " + shape_str(a.shape()));
    }
    std::copy_n(x.begin() + static_cast<std::ptrdiff_t>(static_cast<std::size_t>(idx[i]) * n), n, out.begin() + static_cast<std::ptrdiff_t>(i * n));
  }
  if (idx.empty()) throw ShapeError("rows_select: empty index list");
  Array value({idx.size(), n}, std::move(out));
  return make_node("rows_select", std::move(value), {a},
                   [idx = std::move(idx), rows](const Node&, const Node& g, const Need&) {
                     return std::vector<Node>{scatter_rows(g, idx, rows)};
                   });
}

Node scatter_rows(const Node& g, std::span<const int> indices, std::size_t rows) {
  require_rank2(g, "scatter_rows");
  const std::size_t n = g.value().cols();
  if (indices.size() != g.value().rows()) throw ShapeError("scatter_rows: one index per input row required");
  std::vector<int> idx(indices.begin(), indices.end());
  std::vector<double> out(rows * n, 0.0);
  auto x = g.value().data();
  for (std::size_t i = 0; i < idx.size(); ++i) {
    if (idx[i] < 0 || static_cast<std::size_t>(idx[i]) >= rows) throw InputError("scatter_rows: index out of range");
    double* dst = out.data() + static_cast<std::size_t>(idx[i]) * n;
    const double* src = x.data() + i * n;
    for (std::size_t j = 0; j < n; ++j) dst[j] += src[j];
  }
  return make_node("scatter_rows", Array({rows, n}, std::move(out)), {g},
                   [idx = std::move(idx)](const Node&, const Node& grad, const Need&) {
                     return std::vector<Node>{rows_select(grad, idx)};
                   });
}

Node max_over(std::span<const Node> inputs) {
  if (inputs.empty()) throw ShapeError("max_over: no inputs");
  const Shape& shape = inputs[0].shape();
  for (const auto& in : inputs) {
    if (in.shape() != shape) throw ShapeError("max_over: shape mismatch " + shape_str(shape) + " vs " + shape_str(in.shape()));
  }
  const std::size_t n = shape_size(shape);
  std::vector<double> out(inputs[0].value().data().begin(), inputs[0].value().data().end());
  std::vector<std::size_t> arg(n, 0);
  for (std::size_t k = 1; k < inputs.size(); ++k) {
    auto x = inputs[k].value().data();
    for (std::size_t i = 0; i < n; ++i) {
      if (x[i] > out[i]) {
        out[i] = x[i];
        arg[i] = k;
      }
    }
  }
  std::vector<Node> parents(inputs.begin(), inputs.end());
  return make_node("max_over", Array(shape, std::move(out)), std::move(parents),
                   [arg = std::move(arg), shape](const Node& out_node, const Node& g, const Need& need) {
                     const std::size_t k = out_node.parents().size();
                     std::vector<Node> r(k);
                     for (std::size_t j = 0; j < k; ++j) {
                       if (!need[j]) continue;
                       std::vector<double> mask(arg.size());
                       for (std::size_t i = 0; i < arg.size(); ++i) mask[i] = arg[i] == j ? 1.0 : 0.0;
                       r[j] = mul(g, Node::constant(Array(shape, std::move(mask))));
                     }
                     return r;
                   });
}

// --- backward ---------------------------------------------------------------------

std::vector<Node> backward(const Node& loss, std::span<const Node> wrt, bool create_graph) {
  if (!loss.defined()) throw InputError("backward: undefined loss");
  if (loss.size() != 1) throw ShapeError("backward: loss must be a single element, got " + shape_str(loss.shape()));

  std::optional<NoGradGuard> guard;
  if (!create_graph) guard.emplace();

  using Id = const detail::NodeImpl*;
  std::unordered_set<Id> targets;
  for (const auto& w : wrt) {
    if (w.defined()) targets.insert(w.id());
  }

  // Iterative post-order DFS over nodes that carry gradient.
  std::vector<Node> order;
  std::unordered_map<Id, bool> needed;
  struct Frame {
    Node node;
    std::size_t next;
  };
  std::vector<Frame> stack;
  std::unordered_set<Id> visited;
  if (loss.requires_grad() || targets.count(loss.id())) {
    stack.push_back({loss, 0});
    visited.insert(loss.id());
  }
  while (!stack.empty()) {
    Frame& f = stack.back();
    const auto& parents = f.node.parents();
    if (f.next < parents.size()) {
      const Node& p = parents[f.next++];
      if ((p.requires_grad() || targets.count(p.id())) && visited.insert(p.id()).second) stack.push_back({p, 0});
      continue;
    }
    bool need = targets.count(f.node.id()) > 0;
    for (const auto& p : parents) {
      auto it = needed.find(p.id());
      if (it != needed.end() && it->second) need = true;
    }
    needed[f.node.id()] = need;
    order.push_back(f.node);
    stack.pop_back();
  }

  std::unordered_map<Id, Node> grads;
  grads[loss.id()] = Node::constant(Array::filled(loss.shape(), 1.0));
  for (auto it = order.rbegin(); it != order.rend(); ++it) {
    const Node& node = *it;
    if (!needed[node.id()] || node.is_leaf()) continue;
    auto git = grads.find(node.id());
    if (git == grads.end()) continue;
    Node g = git->second;
    if (!targets.count(node.id())) grads.erase(git);

    const auto& parents = node.parents();
    std::vector<bool> need(parents.size());
    for (std::size_t i = 0; i < parents.size(); ++i) {
      auto nit = needed.find(parents[i].id());
      need[i] = nit != needed.end() && nit->second;
    }
    auto parent_grads = node.impl_->backward(node, g, need);
    for (std::size_t i = 0; i < parents.size(); ++i) {
      if (!need[i] || !parent_grads[i].defined()) continue;
      auto [slot, inserted] = grads.try_emplace(parents[i].id(), parent_grads[i]);
      if (!inserted) slot->second = add(slot->second, parent_grads[i]);
    }
  }

  std::vector<Node> result;
  result.reserve(wrt.size());
  for (const auto& w : wrt) {
    auto it = grads.find(w.id());
    result.push_back(it != grads.end() ? it->second : Node::constant(Array::zeros(w.shape())));
  }
  return result;
}

}  // namespace coopgan::ad
