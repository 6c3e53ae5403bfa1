#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "core/error.hpp"
#include "core/gradcheck.hpp"
#include "core/gradcheck_suite.hpp"
#include "core/loss.hpp"
#include "core/networks.hpp"
#include "core/ops.hpp"

namespace mimgan {
namespace {

Tensor random_tensor(std::mt19937_64& rng, Shape shape, double lo = -1.0, double hi = 1.0) {
  std::uniform_real_distribution<double> d(lo, hi);
  Tensor t(std::move(shape));
  for (double& v : t.mutable_data()) v = d(rng);
  return t;
}

TEST(Tensor, ShapeAndDataAgree) {
  EXPECT_EQ(Tensor({2, 3}).size(), 6u);
  EXPECT_THROW(Tensor({2, 3}, std::vector<double>(5)), ShapeError);
  EXPECT_THROW(Tensor(Shape{2, 0}), ShapeError);
  Tensor t({2});
  t.accumulate_grad(std::vector<double>{1.0, 2.0});
  t.accumulate_grad(std::vector<double>{1.0, 2.0});
  EXPECT_EQ(t.grad()[1], 4.0);
  EXPECT_THROW(t.accumulate_grad(std::vector<double>{1.0}), ShapeError);
}

TEST(Ops, ExpOfZeroAndOne) {
  Graph g;
  Var y = op::exp(g.input(Tensor::vector({0.0, 1.0})));
  EXPECT_DOUBLE_EQ(y.value()[0], 1.0);
  EXPECT_NEAR(y.value()[1], 2.718281828, 1e-9);
}

TEST(Ops, IdentityMatmulReturnsOperand) {
  std::mt19937_64 rng(3);
  const Tensor a = random_tensor(rng, {3, 3});
  Graph g;
  Var y = op::matmul(g.input(Tensor::matrix(3, 3, {1, 0, 0, 0, 1, 0, 0, 0, 1})), g.input(a));
  EXPECT_EQ(y.value(), a);
}

TEST(Ops, SumOfSquares) {
  Graph g;
  Var a = g.input(Tensor::vector({3.0, 4.0}));
  EXPECT_DOUBLE_EQ(op::sum(op::mul(a, a)).item(), 25.0);
}

TEST(Ops, ShapeMismatchNamesBothShapes) {
  Graph g;
  try {
    op::add(g.input(Tensor({2, 3})), g.input(Tensor({3, 2})));
    FAIL() << "expected ShapeError";
  } catch (const ShapeError& e) {
    const std::string msg = e.what();
    EXPECT_NE(msg.find("2x3"), std::string::npos) << msg;
    EXPECT_NE(msg.find("3x2"), std::string::npos) << msg;
  }
  EXPECT_THROW(op::matmul(g.input(Tensor({2, 3})), g.input(Tensor({2, 3}))), ShapeError);
}

TEST(Ops, LnOfNonPositiveIsDomainError) {
  Graph g;
  EXPECT_THROW(op::ln(g.input(Tensor::vector({1.0, 0.0}))), DomainError);
  EXPECT_THROW(op::ln(g.input(Tensor::vector({-2.0}))), DomainError);
}

TEST(Ops, SigmoidIsStableForLargeInputs) {
  Graph g;
  Var y = op::sigmoid(g.input(Tensor::vector({-800.0, -40.0, 0.0, 40.0, 800.0})));
  EXPECT_TRUE(y.value().all_finite());
  EXPECT_EQ(y.value()[0], 0.0);
  EXPECT_DOUBLE_EQ(y.value()[2], 0.5);
  EXPECT_EQ(y.value()[4], 1.0);
  EXPECT_NEAR(y.value()[1], std::exp(-40.0), 1e-30);
}

TEST(Ops, ExpLnRoundTrip) {
  for (double x = -20.0; x <= 20.0; x += 0.37) {
    Graph g;
    EXPECT_NEAR(op::ln(op::exp(g.input(Tensor::scalar(x)))).item(), x, 1e-12);
  }
}

TEST(Ops, ForwardIsBitDeterministic) {
  std::mt19937_64 r1(9), r2(9);
  auto run = [](std::mt19937_64& rng) {
    Graph g;
    Var x = g.input(random_tensor(rng, {4, 5}));
    Var w = g.input(random_tensor(rng, {5, 3}));
    return op::sigmoid(op::tanh(op::matmul(x, w))).value();
  };
  EXPECT_EQ(run(r1), run(r2));
}

TEST(Backward, SquareGradient) {
  Tensor x = Tensor::vector({1.0, 2.0});
  Graph g;
  g.backward(op::sum(op::square(g.param(x))));
  ASSERT_TRUE(x.has_grad());
  EXPECT_DOUBLE_EQ(x.grad()[0], 2.0);
  EXPECT_DOUBLE_EQ(x.grad()[1], 4.0);
}

TEST(Backward, ExpAtZero) {
  Graph g;
  Var w = g.variable(Tensor::scalar(0.0));
  Var y = op::exp(w);
  g.backward(y);
  EXPECT_DOUBLE_EQ(g.grad(w)[0], 1.0);
}

TEST(Backward, RepeatedCallsAccumulate) {
  Tensor x = Tensor::vector({1.0, 2.0});
  Graph g;
  Var y = op::sum(op::square(g.param(x)));
  g.backward(y);
  g.backward(y);
  EXPECT_DOUBLE_EQ(x.grad()[1], 8.0);
  x.zero_grad();
  EXPECT_DOUBLE_EQ(x.grad()[1], 0.0);
}

TEST(Backward, RejectsNonScalarAndUnrecordedRoots) {
  Graph g;
  Var v = g.input(Tensor({2}));
  EXPECT_THROW(g.backward(op::exp(v)), ShapeError);
  EXPECT_THROW(g.backward(Var{}), DomainError);
  Graph other;
  Var foreign = other.input(Tensor::scalar(1.0));
  EXPECT_THROW(g.backward(foreign), DomainError);
}

TEST(Backward, RandomThreeLayerComposition) {
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    std::mt19937_64 rng(seed);
    Tensor w1 = random_tensor(rng, {4, 6}), w2 = random_tensor(rng, {6, 5}), w3 = random_tensor(rng, {5, 1});
    Tensor b1 = random_tensor(rng, {6});
    const Tensor x = random_tensor(rng, {3, 4});
    ParamObjective f = [&](Graph& g) {
      Var h1 = op::tanh(op::add_bias(op::matmul(g.input(x), g.param(w1)), g.param(b1)));
      Var h2 = op::sigmoid(op::matmul(h1, g.param(w2)));
      return op::sum(op::exp(op::matmul(h2, g.param(w3))));
    };
    for (Tensor* t : {&w1, &w2, &w3, &b1}) EXPECT_LT(finite_diff_check(f, *t, 1e-5).max_rel_error, 1e-6);
  }
}

TEST(FiniteDiff, LinearMapIsExact) {
  std::mt19937_64 rng(4);
  const Tensor a = random_tensor(rng, {6});
  const double err = finite_diff_check(
      [&](Graph& g, Var p) { return op::sum(op::mul(p, g.input(a))); }, random_tensor(rng, {6}), 1e-5);
  EXPECT_LT(err, 1e-10);
}

TEST(FiniteDiff, MimLossOfTinyDiscriminator) {
  NetConfig c;
  c.features = 1;
  c.d_hidden = 3;
  NetworkParams p = init_params(c, 17);
  std::mt19937_64 rng(5);
  const Tensor real = random_tensor(rng, {4, 3, 1}), fake = random_tensor(rng, {4, 3, 1});
  ParamObjective f = [&](Graph& g) {
    return loss::mim_d_loss(discriminator_forward_train(g, p.discriminator, g.input(real)),
                            discriminator_forward_train(g, p.discriminator, g.input(fake)));
  };
  for (const auto& [name, t] : named_tensors(p.discriminator)) {
    EXPECT_LT(finite_diff_check(f, *t, 1e-5).max_rel_error, 1e-4) << name;
  }
}

TEST(FiniteDiff, PreconditionsAndNonFinite) {
  Tensor x = Tensor::vector({1.0});
  ParamObjective f = [&](Graph& g) { return op::sum(g.param(x)); };
  EXPECT_THROW(finite_diff_check(f, x, 0.0), DomainError);
  EXPECT_THROW(finite_diff_check(f, x, -1e-5), DomainError);
  Tensor big = Tensor::vector({800.0});
  ParamObjective blowup = [&](Graph& g) { return op::sum(op::exp(g.param(big))); };
  EXPECT_THROW(finite_diff_check(blowup, big, 1e-5), NumericError);
}

TEST(FiniteDiff, DirectionalCheckMatchesGradient) {
  std::mt19937_64 rng(8);
  Tensor w = random_tensor(rng, {3, 3});
  const Tensor d = random_tensor(rng, {3, 3});
  ParamObjective f = [&](Graph& g) { return op::sum(op::tanh(op::matmul(g.param(w), g.param(w)))); };
  EXPECT_LT(directional_check(f, w, d, 1e-5).max_rel_error, 1e-7);
  EXPECT_THROW(directional_check(f, w, Tensor({2}), 1e-5), ShapeError);
}

// Every primitive against central differences on 100 seeds.
TEST(Property, PrimitiveGradientsOnHundredSeeds) {
  const SuiteResult r = run_gradcheck_suite(100, 1);
  std::size_t checked = 0;
  for (const SuiteEntry& e : r.entries) {
    EXPECT_LT(e.max_rel_error, 1e-4) << e.name << " seed " << e.seed;
    ++checked;
  }
  EXPECT_GE(checked, 100u * 20u);
}

}  // namespace
}  // namespace mimgan
