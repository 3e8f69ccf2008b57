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

#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "coopgan/errors.hpp"
#include "test_util.hpp"

namespace coopgan::ad {
namespace {

using coopgan::testing::numeric_gradient;
using coopgan::testing::random_array;
using coopgan::testing::rel_err;

// Gradient of `build(x)` (a scalar node) w.r.t. x, via backward.
Array analytic(const std::function<Node(const Node&)>& build, const Array& x) {
  Node p = Node::parameter(x);
  return backward(build(p), std::span<const Node>(&p, 1))[0].value();
}

double eval(const std::function<Node(const Node&)>& build, const Array& x) {
  NoGradGuard guard;
  return build(Node::constant(x)).value().item();
}

double fd_check(const std::function<Node(const Node&)>& build, const Array& x) {
  return rel_err(analytic(build, x), numeric_gradient([&](const Array& v) { return eval(build, v); }, x));
}

TEST(Elementwise, AddsEqualShapes) {
  auto r = add(Node::constant(Array::row({1, 2})), Node::constant(Array::row({3, 4})));
  EXPECT_EQ(r.value().vec(), (std::vector<double>{4, 6}));
}

TEST(Elementwise, LogInvertsExp) {
  auto x = Array::row({0.5, -1.3});
  auto r = log(exp(Node::constant(x)));
  EXPECT_NEAR(r.value()[0], 0.5, 1e-15);
  EXPECT_NEAR(r.value()[1], -1.3, 1e-15);
}

TEST(Elementwise, SigmoidAtZero) { EXPECT_EQ(sigmoid(Node::constant(Array::scalar(0))).value().item(), 0.5); }

TEST(Elementwise, ScalarBroadcast) {
  auto r = mul(Node::constant(Array::scalar(2)), Node::constant(Array::row({1, 2, 3})));
  EXPECT_EQ(r.value().vec(), (std::vector<double>{2, 4, 6}));
  EXPECT_EQ(r.shape(), (Shape{1, 3}));
}

TEST(Elementwise, ShapeMismatchNamesBothShapes) {
  try {
    add(Node::constant(Array::zeros({2, 3})), Node::constant(Array::zeros({3, 2})));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    std::string msg = e.what();
    EXPECT_NE(msg.find("[2x3]"), std::string::npos);
    EXPECT_NE(msg.find("[3x2]"), std::string::npos);
  }
}

TEST(Elementwise, DispatcherMatchesNamedOps) {
  auto a = Node::constant(Array::row({0.3, -0.7}));
  auto b = Node::constant(Array::row({1.1, 2.0}));
  EXPECT_TRUE(elementwise(ElementwiseOp::sub, a, b).value().identical(sub(a, b).value()));
  EXPECT_TRUE(elementwise(ElementwiseOp::tanh, a).value().identical(tanh(a).value()));
  EXPECT_THROW(elementwise(ElementwiseOp::mul, a), InputError);
}

TEST(Matmul, IdentityLeavesMatrixUnchanged) {
  auto eye = Node::constant(Array::matrix(2, 2, {1, 0, 0, 1}));
  auto m = Array::matrix(2, 2, {1.5, -2, 3.25, 4});
  EXPECT_TRUE(matmul(eye, Node::constant(m)).value().identical(m));
}

TEST(Matmul, HandArithmetic) {
  auto r = matmul(Node::constant(Array::matrix(1, 2, {1, 2})), Node::constant(Array::matrix(2, 1, {3, 4})));
  EXPECT_EQ(r.shape(), (Shape{1, 1}));
  EXPECT_EQ(r.value().item(), 11.0);
}

TEST(Matmul, InnerDimensionMismatch) {
  EXPECT_THROW(matmul(Node::constant(Array::zeros({2, 3})), Node::constant(Array::zeros({2, 3}))), ShapeError);
}

TEST(Matmul, GradientMatchesFiniteDifferencesForAllTransposes) {
  std::mt19937_64 gen(7);
  for (int ta = 0; ta < 2; ++ta) {
    for (int tb = 0; tb < 2; ++tb) {
      Array a = random_array(ta ? Shape{4, 3} : Shape{3, 4}, gen);
      Array b = random_array(tb ? Shape{5, 4} : Shape{4, 5}, gen);
      auto wrt_a = [&](const Node& x) { return sum(matmul(x, Node::constant(b), ta, tb)); };
      auto wrt_b = [&](const Node& x) { return sum(matmul(Node::constant(a), x, ta, tb)); };
      EXPECT_LT(fd_check(wrt_a, a), 1e-6) << ta << tb;
      EXPECT_LT(fd_check(wrt_b, b), 1e-6) << ta << tb;
    }
  }
}

TEST(Softmax, UniformOnEqualLogits) {
  auto s = softmax(Node::constant(Array::row({0, 0, 0})));
  for (double v : s.value().data()) EXPECT_NEAR(v, 1.0 / 3.0, 1e-15);
}

TEST(Softmax, CrossEntropyWithOneHotIsNegLogSoftmax) {
  std::mt19937_64 gen(3);
  Array logits = random_array({1, 6}, gen);
  auto ce = cross_entropy(Node::constant(logits), std::vector<int>{4});
  auto lp = log_softmax(Node::constant(logits));
  EXPECT_NEAR(ce.value().item(), -lp.value()[4], 1e-14);
  Array onehot = Array::matrix(1, 6, {0, 0, 0, 0, 1, 0});
  EXPECT_NEAR(softmax_ops(SoftmaxOp::cross_entropy, Node::constant(logits), -1, &onehot).value().item(),
              ce.value().item(), 1e-15);
}

TEST(Softmax, GradientOnRandomLogits) {
  std::mt19937_64 gen(11);
  Array logits = random_array({3, 5}, gen);
  Array weights = random_array({3, 5}, gen);
  Array target = Node::constant(random_array({3, 5}, gen, 0.1, 1.0)).value();
  {
    // normalise target rows
    std::vector<double> t = target.vec();
    for (int r = 0; r < 3; ++r) {
      double s = 0;
      for (int c = 0; c < 5; ++c) s += t[r * 5 + c];
      for (int c = 0; c < 5; ++c) t[r * 5 + c] /= s;
    }
    target = Array({3, 5}, t);
  }
  auto w = Node::constant(weights);
  EXPECT_LT(fd_check([&](const Node& x) { return sum(mul(softmax(x), w)); }, logits), 1e-6);
  EXPECT_LT(fd_check([&](const Node& x) { return sum(mul(log_softmax(x), w)); }, logits), 1e-6);
  EXPECT_LT(fd_check([&](const Node& x) { return cross_entropy(x, target); }, logits), 1e-6);
}

TEST(Softmax, RowsSumToOneAndLogSoftmaxStaysFinite) {
  std::mt19937_64 gen(5);
  Array logits = random_array({8, 50}, gen, -400, 400);
  auto s = softmax(Node::constant(logits)).value();
  auto lp = log_softmax(Node::constant(logits)).value();
  for (int r = 0; r < 8; ++r) {
    double total = 0;
    for (int c = 0; c < 50; ++c) total += s.at(r, c);
    EXPECT_NEAR(total, 1.0, 1e-12);
  }
  EXPECT_TRUE(lp.all_finite());
}

TEST(Softmax, RejectsNonFiniteLogitsAndBadAxis) {
  EXPECT_THROW(softmax(Node::constant(Array::row({0, NAN}))), NumericError);
  EXPECT_THROW(log_softmax(Node::constant(Array::row({INFINITY, 0}))), NumericError);
  EXPECT_THROW(softmax(Node::constant(Array::zeros({2, 2})), 0), ShapeError);
  EXPECT_THROW(cross_entropy(Node::constant(Array::zeros({1, 2})), Array::matrix(1, 2, {0.7, 0.7})), InputError);
}

TEST(Backward, SquareDerivative) {
  auto x = Node::parameter(Array::scalar(3));
  EXPECT_EQ(backward(mul(x, x), std::span<const Node>(&x, 1))[0].value().item(), 6.0);
}

TEST(Backward, SecondDerivativeOfCube) {
  auto x = Node::parameter(Array::scalar(2));
  std::vector<Node> wrt{x};
  auto g = backward(mul(mul(x, x), x), wrt, true)[0];
  EXPECT_EQ(g.value().item(), 12.0);
  EXPECT_TRUE(g.requires_grad());
  EXPECT_EQ(backward(g, wrt)[0].value().item(), 12.0);
}

TEST(Backward, UnreachableInputGetsZero) {
  auto x = Node::parameter(Array::row({1, 2}));
  auto y = Node::parameter(Array::row({3, 4, 5}));
  auto g = backward(sum(mul(x, x)), std::vector<Node>{x, y});
  EXPECT_EQ(g[1].value().vec(), (std::vector<double>{0, 0, 0}));
}

TEST(Backward, RejectsNonScalarLoss) {
  auto x = Node::parameter(Array::row({1, 2}));
  EXPECT_THROW(backward(x, std::vector<Node>{x}), ShapeError);
}

TEST(Backward, AccumulatesOverSharedUses) {
  auto x = Node::parameter(Array::scalar(1.5));
  auto y = add(mul(x, x), scale(x, 3));  // 2x + 3
  EXPECT_DOUBLE_EQ(backward(y, std::vector<Node>{x})[0].value().item(), 6.0);
}

// f(t) = 1/2 t^T A t + b^T t, L(t) = 1/2 |t - c|^2. For t' = t - a*grad f(t),
// dL(t')/dt = (I - a*A) (t' - c) since A is symmetric.
TEST(Backward, MetaGradientThroughQuadraticStepMatchesClosedForm) {
  const std::vector<double> A{2.0, 0.5, 0.0, 0.5, 1.0, 0.3, 0.0, 0.3, 3.0};
  const std::vector<double> b{0.1, -0.2, 0.4}, c{1.0, -1.0, 0.5}, t0{0.3, 0.7, -0.4};
  const double alpha = 0.1;
  auto An = Node::constant(Array::matrix(3, 3, A));
  auto bn = Node::constant(Array::matrix(3, 1, b));
  auto cn = Node::constant(Array::matrix(3, 1, c));
  auto t = Node::parameter(Array::matrix(3, 1, t0));
  std::vector<Node> wrt{t};
  auto f = add(scale(matmul(t, matmul(An, t), true, false), 0.5), matmul(bn, t, true, false));
  auto gf = backward(reshape(f, {1}), wrt, true)[0];
  auto tp = sub(t, scale(gf, alpha));
  auto d = sub(tp, cn);
  auto L = scale(sum(mul(d, d)), 0.5);
  auto meta = backward(L, wrt)[0].value();

  // closed form
  std::vector<double> tprime(3), resid(3), expect(3);
  for (int i = 0; i < 3; ++i) {
    double grad = b[i];
    for (int j = 0; j < 3; ++j) grad += A[i * 3 + j] * t0[j];
    tprime[i] = t0[i] - alpha * grad;
    resid[i] = tprime[i] - c[i];
  }
  for (int i = 0; i < 3; ++i) {
    expect[i] = resid[i];
    for (int j = 0; j < 3; ++j) expect[i] -= alpha * A[i * 3 + j] * resid[j];
  }
  EXPECT_LT(rel_err(meta, Array::matrix(3, 1, expect)), 1e-6);
}

// Every primitive against central differences, inputs in [-2, 2].
TEST(Properties, PrimitivesMatchFiniteDifferences) {
  std::mt19937_64 gen(2024);
  for (int trial = 0; trial < 5; ++trial) {
    Array x = random_array({3, 4}, gen);
    Array y = random_array({3, 4}, gen);
    Array pos = random_array({3, 4}, gen, 0.5, 2.0);
    Array w = random_array({3, 4}, gen);
    Array row = random_array({1, 4}, gen);
    Array col = random_array({3, 1}, gen);
    auto W = Node::constant(w);
    auto Y = Node::constant(y);
    auto P = Node::constant(pos);
    auto weighted = [&](const Node& n) { return sum(mul(n, W)); };
    std::vector<std::pair<const char*, std::function<double()>>> checks{
        {"add", [&] { return fd_check([&](const Node& v) { return weighted(add(v, Y)); }, x); }},
        {"sub", [&] { return fd_check([&](const Node& v) { return weighted(sub(Y, v)); }, x); }},
        {"mul", [&] { return fd_check([&](const Node& v) { return weighted(mul(v, Y)); }, x); }},
        {"div_num", [&] { return fd_check([&](const Node& v) { return weighted(div(v, P)); }, x); }},
        {"div_den", [&] { return fd_check([&](const Node& v) { return weighted(div(Y, v)); }, pos); }},
        {"neg", [&] { return fd_check([&](const Node& v) { return weighted(neg(v)); }, x); }},
        {"exp", [&] { return fd_check([&](const Node& v) { return weighted(exp(v)); }, x); }},
        {"log", [&] { return fd_check([&](const Node& v) { return weighted(log(v)); }, pos); }},
        {"tanh", [&] { return fd_check([&](const Node& v) { return weighted(tanh(v)); }, x); }},
        {"sigmoid", [&] { return fd_check([&](const Node& v) { return weighted(sigmoid(v)); }, x); }},
        {"log_sigmoid", [&] { return fd_check([&](const Node& v) { return weighted(log_sigmoid(v)); }, x); }},
        {"relu", [&] { return fd_check([&](const Node& v) { return weighted(relu(v)); }, x); }},
        {"scale", [&] { return fd_check([&](const Node& v) { return weighted(scale(v, -1.7)); }, x); }},
        {"scalar_mul", [&] { return fd_check([&](const Node& v) { return weighted(mul(reshape(sum(v), {1}), Y)); }, x); }},
        {"sum_rows", [&] { return fd_check([&](const Node& v) { return sum(mul(sum_rows(v), Node::constant(row))); }, x); }},
        {"sum_cols", [&] { return fd_check([&](const Node& v) { return sum(mul(sum_cols(v), Node::constant(col))); }, x); }},
        {"broadcast_rows", [&] { return fd_check([&](const Node& v) { return weighted(broadcast_rows(v, 3)); }, row); }},
        {"broadcast_cols", [&] { return fd_check([&](const Node& v) { return weighted(broadcast_cols(v, 4)); }, col); }},
        {"softmax", [&] { return fd_check([&](const Node& v) { return weighted(softmax(v)); }, x); }},
        {"log_softmax", [&] { return fd_check([&](const Node& v) { return weighted(log_softmax(v)); }, x); }},
        {"rows_select", [&] {
           std::vector<int> idx{2, 0, 2};
           return fd_check([&](const Node& v) { return weighted(rows_select(v, idx)); }, x);
         }},
        {"scatter_rows", [&] {
           std::vector<int> idx{1, 1, 0};
           auto W4 = Node::constant(random_array({2, 4}, gen));
           return fd_check([&](const Node& v) { return sum(mul(scatter_rows(v, idx, 2), W4)); }, x);
         }},
        {"max_over", [&] {
           std::vector<Node> others{Y, P};
           return fd_check(
               [&](const Node& v) {
                 std::vector<Node> in{others[0], v, others[1]};
                 return weighted(max_over(in));
               },
               x);
         }},
    };
    for (auto& [name, check] : checks) EXPECT_LT(check(), 1e-4) << name << " trial " << trial;
  }
}

// Tiny two-layer tanh network, 2 -> 4 -> 1 (17 parameters packed in one vector
// split by rows_select). Hessian-vector products from create_graph must match
// finite differences of the first gradient.
TEST(Properties, SecondOrderMatchesFiniteDifferencesOfGradient) {
  std::mt19937_64 gen(99);
  for (int trial = 0; trial < 4; ++trial) {
    Array params = random_array({17, 1}, gen, -1, 1);
    Array input = random_array({3, 2}, gen);
    Array probe = random_array({17, 1}, gen);
    auto net = [&](const Node& p) {
      std::vector<int> w1i{0, 1, 2, 3, 4, 5, 6, 7}, b1i{8, 9, 10, 11}, w2i{12, 13, 14, 15}, b2i{16};
      Node w1 = reshape(rows_select(p, w1i), {2, 4});
      Node b1 = reshape(rows_select(p, b1i), {1, 4});
      Node w2 = reshape(rows_select(p, w2i), {4, 1});
      Node b2 = reshape(rows_select(p, b2i), {1});
      Node h = tanh(add(matmul(Node::constant(input), w1), broadcast_rows(b1, 3)));
      Node out = sigmoid(add(matmul(h, w2), b2));
      return sum(mul(out, out));
    };
    auto grad_dot_probe = [&](const Array& p) {
      auto leaf = Node::parameter(p);
      auto g = backward(net(leaf), std::vector<Node>{leaf})[0].value();
      double s = 0;
      for (std::size_t i = 0; i < g.size(); ++i) s += g[i] * probe[i];
      return s;
    };
    auto leaf = Node::parameter(params);
    std::vector<Node> wrt{leaf};
    auto g = backward(net(leaf), wrt, true)[0];
    auto hvp = backward(sum(mul(g, Node::constant(probe))), wrt)[0].value();
    auto fd = numeric_gradient(grad_dot_probe, params, 1e-5);
    EXPECT_LT(rel_err(hvp, fd), 1e-3) << "trial " << trial;
  }
}

TEST(Properties, BackwardIsDeterministic) {
  std::mt19937_64 gen(1);
  Array a = random_array({5, 7}, gen), b = random_array({7, 3}, gen);
  auto run = [&] {
    auto pa = Node::parameter(a);
    auto pb = Node::parameter(b);
    auto loss = sum(log_softmax(tanh(matmul(pa, pb))));
    return backward(loss, std::vector<Node>{pa, pb});
  };
  auto r1 = run();
  auto r2 = run();
  EXPECT_TRUE(r1[0].value().identical(r2[0].value()));
  EXPECT_TRUE(r1[1].value().identical(r2[1].value()));
}

TEST(GradMode, NoGradGuardProducesConstants) {
  auto x = Node::parameter(Array::scalar(1));
  {
    NoGradGuard guard;
    EXPECT_FALSE(exp(x).requires_grad());
  }
  EXPECT_TRUE(exp(x).requires_grad());
}

}  // namespace
}  // namespace coopgan::ad
