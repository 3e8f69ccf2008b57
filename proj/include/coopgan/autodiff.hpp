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

// Define-by-run reverse-mode autodiff over dense double arrays.
//
// Every gradient rule is itself written in terms of the differentiable ops
// below, so a backward pass run with create_graph=true yields gradients that
// are ordinary graph nodes and can be differentiated again. With
// create_graph=false the same rules run under NoGradGuard and only produce
// values.
//
// Broadcasting is limited to two forms: equal shapes, or one operand holding a
// single element. Row/column expansion is explicit (broadcast_rows,
// broadcast_cols) so every gradient rule stays easy to audit.

#include <functional>
#include <memory>
#include <span>
#include <string_view>
#include <vector>

#include "coopgan/array.hpp"

namespace coopgan::ad {

class Node;

namespace detail {

// Produces one gradient per parent given the output node and the gradient
// flowing into it. Entries for parents whose `need` flag is false may be
// left undefined.
using BackwardFn = std::function<std::vector<Node>(const Node& out, const Node& grad,
                                                   const std::vector<bool>& need)>;

struct NodeImpl {
  Array value;
  std::vector<Node> parents;
  BackwardFn backward;
  bool requires_grad = false;
  std::string_view op = "leaf";
};

}  // namespace detail

class Node {
 public:
  Node() = default;

  static Node constant(Array value);
  static Node parameter(Array value);

  bool defined() const { return impl_ != nullptr; }
  const Array& value() const { return impl_->value; }
  const Shape& shape() const { return impl_->value.shape(); }
  std::size_t size() const { return impl_->value.size(); }
  bool requires_grad() const { return impl_->requires_grad; }
  bool is_leaf() const { return !impl_->backward; }
  std::string_view op() const { return impl_->op; }
  const std::vector<Node>& parents() const { return impl_->parents; }

  // Same value, cut from the graph.
  Node detach() const { return constant(value()); }

  const detail::NodeImpl* id() const { return impl_.get(); }

 private:
  friend Node make_node(std::string_view op, Array value, std::vector<Node> parents,
                        detail::BackwardFn backward);
  friend std::vector<Node> backward(const Node& loss, std::span<const Node> wrt, bool create_graph);
  std::shared_ptr<detail::NodeImpl> impl_;
};

// Records a node in the graph when grad mode is on and some parent requires
// grad; otherwise returns a constant.
Node make_node(std::string_view op, Array value, std::vector<Node> parents,
               detail::BackwardFn backward);

bool grad_enabled();

class NoGradGuard {
 public:
  NoGradGuard();
  ~NoGradGuard();
  NoGradGuard(const NoGradGuard&) = delete;
  NoGradGuard& operator=(const NoGradGuard&) = delete;

 private:
  bool previous_;
};

// --- elementwise -----------------------------------------------------------

enum class ElementwiseOp { add, sub, mul, neg, exp, log, tanh, sigmoid };

Node elementwise(ElementwiseOp op, const Node& a, const Node& b = Node());

Node add(const Node& a, const Node& b);
Node sub(const Node& a, const Node& b);
Node mul(const Node& a, const Node& b);
Node div(const Node& a, const Node& b);
Node neg(const Node& a);
Node exp(const Node& a);
Node log(const Node& a);
Node tanh(const Node& a);
Node sigmoid(const Node& a);
// log(sigmoid(a)) without overflow for large |a|.
Node log_sigmoid(const Node& a);
Node relu(const Node& a);
Node scale(const Node& a, double factor);
Node add_scalar(const Node& a, double offset);

// --- linear algebra and reductions ------------------------------------------

// op(a) * op(b) where op transposes when the flag is set. Both operands are
// treated as matrices (rank-1 arrays as a single row).
Node matmul(const Node& a, const Node& b, bool transpose_a = false, bool transpose_b = false);

Node sum(const Node& a);
Node mean(const Node& a);
Node reshape(const Node& a, Shape shape);
// [m x n] -> [1 x n]
Node sum_rows(const Node& a);
// [m x n] -> [m x 1]
Node sum_cols(const Node& a);
// [1 x n] -> [m x n]
Node broadcast_rows(const Node& row, std::size_t rows);
// [m x 1] -> [m x n]
Node broadcast_cols(const Node& col, std::size_t cols);
// single element -> shape
Node broadcast_scalar(const Node& s, Shape shape);

// --- softmax family (along the last axis; only axis -1 / 1 supported) --------

enum class SoftmaxOp { softmax, log_softmax, cross_entropy };

Node softmax(const Node& logits, int axis = -1);
Node log_softmax(const Node& logits, int axis = -1);
// Mean over rows of -sum_v target[v] * log_softmax(logits)[v]. Target rows
// must lie on the simplex.
Node cross_entropy(const Node& logits, const Array& target_dists, int axis = -1);
Node cross_entropy(const Node& logits, std::span<const int> target_indices, int axis = -1);
Node softmax_ops(SoftmaxOp op, const Node& logits, int axis, const Array* target_dists = nullptr);

// --- indexing ----------------------------------------------------------------

// out[i, :] = a[indices[i], :]
Node rows_select(const Node& a, std::span<const int> indices);
// out[indices[i], :] += g[i, :], out has `rows` rows.
Node scatter_rows(const Node& g, std::span<const int> indices, std::size_t rows);
// Elementwise maximum across equally shaped inputs; ties go to the first.
Node max_over(std::span<const Node> inputs);

// --- backward ----------------------------------------------------------------

// Gradients of a single-element `loss` aligned with `wrt`. Inputs unreachable
// from the loss get zeros. With create_graph=true the results stay attached to
// the graph and support another backward pass.
std::vector<Node> backward(const Node& loss, std::span<const Node> wrt, bool create_graph = false);

}  // namespace coopgan::ad
