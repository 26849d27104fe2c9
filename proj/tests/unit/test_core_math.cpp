#include <gtest/gtest.h>

#include <cmath>

#include "sharp/adam.hpp"
#include "sharp/autodiff.hpp"
#include "test_support.hpp"

using namespace sharp;
using namespace sharp::ad;
using sharp::testing::check_gradients;
using sharp::testing::random_tensor;

TEST(Tensor, ShapeAndStorageAgree) {
  EXPECT_THROW(Tensor(Shape{2, 3}, std::vector<double>(5)), ShapeError);
  const Tensor t = Tensor::matrix({{1, 2, 3}, {4, 5, 6}});
  EXPECT_EQ(t.rows(), 2u);
  EXPECT_EQ(t.cols(), 3u);
  EXPECT_EQ(t.at(1, 2), 6.0);
  EXPECT_EQ(element_count(t.shape()), t.size());
}

TEST(Ops, ScalarExamples) {
  EXPECT_EQ(relu(Var::constant(Tensor::scalar(-3.0))).item(), 0.0);
  EXPECT_EQ(sigmoid(Var::constant(Tensor::scalar(0.0))).item(), 0.5);
  Var x = Var::parameter(Tensor::scalar(3.0), "x");
  backward(square(x));
  EXPECT_DOUBLE_EQ(x.grad().item(), 6.0);
}

TEST(Ops, LinearMapGradient) {
  Var w = Var::constant(Tensor::matrix({{1, 0}, {0, 1}}));
  Var x = Var::parameter(Tensor::matrix({{1, 2}}), "x");
  backward(sum(matmul(x, w)));
  EXPECT_EQ(x.grad(), Tensor::matrix({{1, 1}}));
}

TEST(Ops, DisconnectedParameterGetsZero) {
  Var a = Var::parameter(Tensor::vector({1, 2}), "a");
  Var b = Var::parameter(Tensor::vector({3, 4}), "b");
  std::vector<Var> params{a, b};
  const auto g = gradients(sum(square(a)), params);
  EXPECT_EQ(g[1], Tensor(Shape{2}));
}

TEST(Ops, NonScalarLossRejected) {
  Var a = Var::parameter(Tensor::vector({1, 2}), "a");
  EXPECT_THROW(backward(a), ShapeError);
}

TEST(Ops, ShapeMismatchNamesBothShapes) {
  Var a = Var::constant(Tensor(Shape{2, 3}));
  Var b = Var::constant(Tensor(Shape{4, 5}));
  try {
    add(a, b);
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string what = e.what();
    EXPECT_NE(what.find("[2, 3]"), std::string::npos) << what;
    EXPECT_NE(what.find("[4, 5]"), std::string::npos) << what;
  }
  EXPECT_THROW(matmul(a, Var::constant(Tensor(Shape{2, 2}))), ShapeError);
}

TEST(Ops, SharedNodeAccumulatesBothPaths) {
  // y = x*x + x uses x three times; dy/dx = 2x + 1.
  Var x = Var::parameter(Tensor::scalar(2.0), "x");
  Var y = x * x + x;
  backward(y);
  EXPECT_DOUBLE_EQ(x.grad().item(), 5.0);
  // Running backward again resets rather than accumulates across passes.
  backward(y);
  EXPECT_DOUBLE_EQ(x.grad().item(), 5.0);
}

TEST(Ops, DiamondGraphVisitsEachNodeOnce) {
  Var x = Var::parameter(Tensor::scalar(1.5), "x");
  Var h = exp(x);
  Var y = h * h + sin(h);
  backward(y);
  const double e = std::exp(1.5);
  EXPECT_NEAR(x.grad().item(), (2 * e + std::cos(e)) * e, 1e-12);
}

// Every op's gradient against central differences on inputs in [-2, 2].
class OpGradient : public ::testing::TestWithParam<int> {};

TEST_P(OpGradient, MatchesFiniteDifferences) {
  Rng rng = make_rng(static_cast<std::uint64_t>(GetParam()), "op-grad");
  Var a = Var::parameter(random_tensor(Shape{3, 4}, rng), "a");
  Var b = Var::parameter(random_tensor(Shape{3, 4}, rng), "b");
  Var row = Var::parameter(random_tensor(Shape{4}, rng), "row");
  Var col = Var::parameter(random_tensor(Shape{3, 1}, rng), "col");
  Var w = Var::parameter(random_tensor(Shape{4, 2}, rng), "w");
  Var pos = Var::parameter(random_tensor(Shape{3, 4}, rng, 0.5, 2.0), "pos");
  std::vector<Var> params{a, b, row, col, w, pos};
  std::vector<std::pair<std::string, std::function<Var()>>> cases = {
      {"add", [&] { return sum(square(a + b)); }},
      {"sub", [&] { return sum(square(a - row)); }},
      {"mul", [&] { return sum(a * col); }},
      {"div", [&] { return sum(a / pos); }},
      {"neg_scale_shift", [&] { return sum(square(add_scalar(scale(-a, 1.7), 0.3))); }},
      {"matmul", [&] { return sum(square(matmul(a, w))); }},
      {"relu", [&] { return sum(relu(a) * b); }},
      {"sigmoid", [&] { return sum(sigmoid(a) * b); }},
      {"softplus", [&] { return sum(softplus(a) * b); }},
      {"exp", [&] { return sum(exp(a) * b); }},
      {"log", [&] { return sum(log(pos) * b); }},
      {"abs", [&] { return sum(abs(a) * b); }},
      {"pow", [&] { return sum(pow(pos, 2.5) * b); }},
      {"sin_cos", [&] { return sum(sin(a) * cos(b)); }},
      {"lgamma", [&] { return sum(lgamma(pos) * b); }},
      {"mean", [&] { return mean(square(a * b)); }},
      {"sum_cols", [&] { return sum(square(sum_cols(a * b))); }},
      {"log_softmax", [&] { return sum(log_softmax(a) * b); }},
      {"softmax", [&] { return sum(softmax(a) * b); }},
      {"slice_concat", [&] {
         std::vector<Var> parts{slice_cols(a, 1, 3), col};
         return sum(square(concat_cols(parts)) * slice_cols(b, 0, 3));
       }},
  };
  for (const auto& [name, loss] : cases) {
    const auto report = check_gradients(loss, params);
    EXPECT_LT(report.worst, 1e-4) << name << " worst group " << report.worst_group;
  }
}

INSTANTIATE_TEST_SUITE_P(RandomInputs, OpGradient, ::testing::Range(0, 5));

TEST(Ops, DetachBlocksGradient) {
  Var a = Var::parameter(Tensor::scalar(2.0), "a");
  backward(detach(a) * a);
  EXPECT_DOUBLE_EQ(a.grad().item(), 2.0);
}

TEST(Ops, NoGradGuardRecordsNothing) {
  Var a = Var::parameter(Tensor::scalar(2.0), "a");
  NoGradGuard guard;
  EXPECT_FALSE((a * a).requires_grad());
}

TEST(Adam, FirstStepMovesByLearningRate) {
  Var p = Var::parameter(Tensor::scalar(0.0), "p");
  std::vector<Var> params{p};
  AdamState state(params, {});
  const std::vector<Tensor> g{Tensor::scalar(1.0)};
  adam_step(state, params, g);
  EXPECT_NEAR(p.item(), -1e-3, 1e-9);
  EXPECT_EQ(state.step, 1u);
}

TEST(Adam, ZeroGradientLeavesParamsUnchanged) {
  Var p = Var::parameter(Tensor::vector({1.0, -2.0}), "p");
  std::vector<Var> params{p};
  AdamState state(params, {});
  for (int i = 0; i < 5; ++i) adam_step(state, params, std::vector<Tensor>{Tensor(Shape{2})});
  EXPECT_EQ(p.value(), Tensor::vector({1.0, -2.0}));
  EXPECT_EQ(state.step, 5u);
}

TEST(Adam, MatchesScalarReference) {
  // Hand-rolled bias-corrected Adam on the same gradient sequence.
  Var p = Var::parameter(Tensor::scalar(0.3), "p");
  std::vector<Var> params{p};
  AdamState state(params, {});
  double x = 0.3, m = 0.0, v = 0.0;
  for (int t = 1; t <= 50; ++t) {
    const double g = std::sin(0.7 * t) + 0.2;
    adam_step(state, params, std::vector<Tensor>{Tensor::scalar(g)});
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    x -= 1e-3 * (m / (1 - std::pow(0.9, t))) / (std::sqrt(v / (1 - std::pow(0.999, t))) + 1e-7);
  }
  EXPECT_NEAR(p.item(), x, 1e-15);
}

TEST(Adam, ConvergesOnConvexScalar) {
  Var x = Var::parameter(Tensor::scalar(0.0), "x");
  std::vector<Var> params{x};
  AdamState state(params, AdamOptions{0.1, 0.9, 0.999, 1e-7});
  for (int i = 0; i < 200; ++i) {
    const auto g = gradients(square(add_scalar(x, -5.0)), params);
    adam_step(state, params, g);
  }
  EXPECT_LT(std::abs(x.item() - 5.0), 0.5);
}

TEST(Adam, NonFiniteGradientNamesParameter) {
  Var p = Var::parameter(Tensor::scalar(0.0), "encoder.0.weight");
  std::vector<Var> params{p};
  AdamState state(params, {});
  try {
    adam_step(state, params, std::vector<Tensor>{Tensor::scalar(std::nan(""))});
    FAIL();
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("encoder.0.weight"), std::string::npos);
  }
}

TEST(Adam, Deterministic) {
  auto run = [] {
    Var p = Var::parameter(Tensor::vector({0.1, 0.2, 0.3}), "p");
    std::vector<Var> params{p};
    AdamState state(params, {});
    for (int i = 0; i < 10; ++i) adam_step(state, params, std::vector<Tensor>{Tensor::vector({0.5, -1.0, 2.0})});
    return p.value();
  };
  EXPECT_EQ(run(), run());
}
