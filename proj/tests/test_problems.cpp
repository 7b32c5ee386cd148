#include "astr/errors.hpp"
#include "astr/problems.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <memory>
#include <numbers>

namespace astr {
namespace {

using testing::fd_gradient;
using testing::fd_hvp;
using testing::random_vector;
using testing::rel_err;

IndexList random_sample(Index n, Rng& rng) {
  SubsetSampler sampler(n);
  return sampler.draw(1 + rng.uniform_index(n), rng);
}

TwoLayerNetProblem tiny_net(std::uint64_t seed) {
  Rng rng(seed);
  TwoLayerNetProblem::DenseRows z(5, 4);
  for (Index i = 0; i < 5; ++i) {
    for (Index j = 0; j < 4; ++j) z(i, j) = rng.normal();
  }
  return TwoLayerNetProblem(z, {0, 1, 1, 0, 1}, 3, 2);
}

// Checks shared by all families on random (x, S, v) probes.
void check_derivatives(const FiniteSumObjective& p, std::uint64_t seed, int probes, double x_scale) {
  Rng rng(seed);
  for (int k = 0; k < probes; ++k) {
    const Vector x = random_vector(p.dim(), rng, x_scale);
    const Vector v = random_vector(p.dim(), rng);
    const IndexList s = random_sample(p.size(), rng);
    const auto f = [&](const Vector& y) { return p.value(y, s); };
    const auto g = [&](const Vector& y) { return p.gradient(y, s); };
    EXPECT_LE(rel_err(p.gradient(x, s), fd_gradient(f, x, 1e-5)), 1e-6) << p.name() << " probe " << k;
    EXPECT_LE(rel_err(p.hvp(x, s, v), fd_hvp(g, x, v, 1e-5)), 1e-5) << p.name() << " probe " << k;
  }
}

void check_mean_form(const FiniteSumObjective& p, std::uint64_t seed) {
  Rng rng(seed);
  const Vector x = random_vector(p.dim(), rng, 0.3);
  const Vector v = random_vector(p.dim(), rng);
  const IndexList s = {0, 2, 3};
  double value = 0.0;
  Vector grad = Vector::Zero(p.dim());
  Vector hv = Vector::Zero(p.dim());
  for (Index i : s) {
    const Index one[] = {i};
    value += p.value(x, one) / 3.0;
    grad += p.gradient(x, one) / 3.0;
    hv += p.hvp(x, one, v) / 3.0;
  }
  EXPECT_LE(rel_err(p.value(x, s), value), 1e-12);
  EXPECT_LE(rel_err(p.gradient(x, s), grad), 1e-12);
  EXPECT_LE(rel_err(p.hvp(x, s, v), hv), 1e-12);
  EXPECT_LE(rel_err(p.value(x, p.all_indices()), p.value_full(x)), 1e-12);
  const IndexList all = iota_indices(p.size());
  EXPECT_EQ(p.value(x, all), p.value_full(x));
}

void check_hvp_symmetry(const FiniteSumObjective& p, std::uint64_t seed) {
  Rng rng(seed);
  for (int k = 0; k < 10; ++k) {
    const Vector x = random_vector(p.dim(), rng, 0.3);
    const Vector u = random_vector(p.dim(), rng);
    const Vector v = random_vector(p.dim(), rng);
    const IndexList s = random_sample(p.size(), rng);
    const double uhv = u.dot(p.hvp(x, s, v));
    const double vhu = v.dot(p.hvp(x, s, u));
    EXPECT_LE(std::abs(uhv - vhu), 1e-10 * std::max({1.0, std::abs(uhv), std::abs(vhu)}));
  }
}

// decrease() against value differences on ordinary steps and against the
// second-order expansion -g'd - d'Hd/2 on steps of length 1e-9, where a
// difference of rounded values would keep about seven digits.
void check_decrease(const FiniteSumObjective& p, std::uint64_t seed, bool closed_form) {
  Rng rng(seed);
  for (int k = 0; k < 20; ++k) {
    const Vector x = random_vector(p.dim(), rng, 0.3);
    const IndexList s = random_sample(p.size(), rng);
    const double fx = p.value(x, s);
    const Vector y = x + random_vector(p.dim(), rng, 0.3);
    EXPECT_NEAR(p.decrease(x, y, s, fx), fx - p.value(y, s), 1e-12 * std::max(1.0, std::abs(fx)));
    if (!closed_form) continue;
    const Vector v = random_vector(p.dim(), rng);
    const Vector d = (x + 1e-9 * v / v.norm()) - x;
    const double expansion = -p.gradient(x, s).dot(d) - 0.5 * d.dot(p.hvp(x, s, d));
    EXPECT_LE(std::abs(p.decrease(x, x + d, s, fx) - expansion), 1e-8 * std::abs(expansion)) << p.name();
  }
}

class LogisticTest : public ::testing::Test {
 protected:
  Dataset data = testing::random_sparse_dataset(60, 30, 0.3, 9);
  LogisticRegressionProblem p{data, data.train()};
};

TEST_F(LogisticTest, ValueAtZeroIsLog2) {
  EXPECT_NEAR(p.value_full(Vector::Zero(p.dim())), std::numbers::ln2, 1e-15);
}

TEST_F(LogisticTest, DefaultLambdaIsOneOverN) { EXPECT_DOUBLE_EQ(p.lambda(), 1.0 / 60.0); }

TEST_F(LogisticTest, Derivatives) { check_derivatives(p, 1, 50, 0.5); }
TEST_F(LogisticTest, MeanForm) { check_mean_form(p, 2); }
TEST_F(LogisticTest, HvpSymmetric) { check_hvp_symmetry(p, 3); }
TEST_F(LogisticTest, Decrease) { check_decrease(p, 4, true); }

TEST_F(LogisticTest, CurvatureMarginTwoLambda) {
  Rng rng(4);
  for (int k = 0; k < 20; ++k) {
    const Vector x = random_vector(p.dim(), rng, 3.0);
    const Vector v = random_vector(p.dim(), rng);
    const IndexList s = random_sample(p.size(), rng);
    EXPECT_GE(v.dot(p.hvp(x, s, v)), 2.0 * p.lambda() * v.squaredNorm() - 1e-12);
  }
}

TEST_F(LogisticTest, StableForHugeMargins) {
  const Vector x = Vector::Constant(p.dim(), 1e4);
  EXPECT_TRUE(std::isfinite(p.value_full(x)));
  EXPECT_TRUE(p.gradient_full(x).allFinite());
  EXPECT_TRUE(p.hvp(x, p.all_indices(), Vector::Ones(p.dim())).allFinite());
}

TEST_F(LogisticTest, ArgumentChecks) {
  const Vector x = Vector::Zero(p.dim());
  const IndexList empty;
  const IndexList bad = {60};
  EXPECT_THROW(p.value(x, empty), ContractError);
  EXPECT_THROW(p.value(x, bad), ContractError);
  EXPECT_THROW(p.value(Vector::Zero(3), p.all_indices()), ContractError);
}

TEST(Logistic, ThreadCountDoesNotChangeTerms) {
  const Dataset data = testing::random_sparse_dataset(5000, 10, 0.5, 2);
  LogisticRegressionProblem p(data, data.train());
  Rng rng(1);
  const Vector x = random_vector(p.dim(), rng);
  const double one = p.value_full(x);
  const Vector g1 = p.gradient_full(x);
  p.set_threads(3);
  EXPECT_NEAR(p.value_full(x), one, 1e-13);
  EXPECT_LE(rel_err(p.gradient_full(x), g1), 1e-13);
  EXPECT_EQ(p.value_full(x), p.value_full(x));
  EXPECT_EQ(p.gradient_full(x), p.gradient_full(x));
}

class NlsTest : public ::testing::Test {
 protected:
  Dataset data = testing::random_sparse_dataset(50, 25, 0.4, 21);
  SigmoidLeastSquaresProblem p{data, data.train()};
};

TEST_F(NlsTest, ValueAtZeroIsQuarter) { EXPECT_DOUBLE_EQ(p.value_full(Vector::Zero(p.dim())), 0.25); }
TEST_F(NlsTest, Derivatives) { check_derivatives(p, 5, 50, 0.5); }
TEST_F(NlsTest, MeanForm) { check_mean_form(p, 6); }
TEST_F(NlsTest, HvpSymmetric) { check_hvp_symmetry(p, 7); }
TEST_F(NlsTest, Decrease) { check_decrease(p, 8, true); }

TEST_F(NlsTest, PerPointLossBounded) {
  Rng rng(8);
  for (int k = 0; k < 20; ++k) {
    const Vector x = random_vector(p.dim(), rng, 5.0);
    for (Index i = 0; i < p.size(); ++i) {
      const Index one[] = {i};
      const double f = p.value(x, one);
      EXPECT_GE(f, 0.0);
      EXPECT_LE(f, 1.0);
    }
  }
}

TEST_F(NlsTest, HessianIsIndefiniteSomewhere) {
  Rng rng(9);
  bool found = false;
  for (int k = 0; k < 200 && !found; ++k) {
    const Vector x = random_vector(p.dim(), rng, 2.0);
    const Vector v = random_vector(p.dim(), rng);
    found = v.dot(p.hvp(x, p.all_indices(), v)) < 0.0;
  }
  EXPECT_TRUE(found);
}

TEST(TwoLayerNet, TinyNetDerivatives) { check_derivatives(tiny_net(1), 10, 50, 0.7); }
TEST(TwoLayerNet, MeanForm) { check_mean_form(tiny_net(2), 11); }
TEST(TwoLayerNet, HvpSymmetric) { check_hvp_symmetry(tiny_net(3), 12); }
TEST(TwoLayerNet, DecreaseIsValueDifference) { check_decrease(tiny_net(4), 15, false); }

TEST(TwoLayerNet, MnistArchitectureSize) { EXPECT_EQ(TwoLayerNetProblem::weight_count(784, 100, 10), 79510); }

TEST(TwoLayerNet, ZeroWeightsGiveLogClasses) {
  Rng rng(4);
  TwoLayerNetProblem::DenseRows z(6, 7);
  for (Index i = 0; i < z.size(); ++i) z.data()[i] = rng.uniform01();
  const TwoLayerNetProblem p(z, {0, 3, 9, 2, 5, 7}, 4, 10);
  EXPECT_NEAR(p.value_full(Vector::Zero(p.dim())), std::log(10.0), 1e-14);
}

TEST(TwoLayerNet, SoftmaxGradientIdentity) {
  const TwoLayerNetProblem p = tiny_net(5);
  Rng rng(6);
  const Vector x = random_vector(p.dim(), rng);
  const IndexList s = {1, 2, 4};
  const Eigen::MatrixXd logits = p.logits(x, s);
  // The output-bias block of the gradient is the mean over S of dloss/dlogits.
  Eigen::VectorXd expected = Eigen::VectorXd::Zero(2);
  const int labels[] = {0, 1, 1, 0, 1};
  for (Index k = 0; k < 3; ++k) {
    Eigen::VectorXd prob = (logits.row(k).array() - logits.row(k).maxCoeff()).exp();
    prob /= prob.sum();
    EXPECT_NEAR(prob.sum(), 1.0, 1e-12);
    prob[labels[s[static_cast<std::size_t>(k)]]] -= 1.0;
    expected += prob / 3.0;
  }
  const Vector g = p.gradient(x, s);
  EXPECT_LE(rel_err(Vector(g.tail(2)), expected), 1e-12);
}

TEST(TwoLayerNet, LabelOutsideClassesRejected) {
  TwoLayerNetProblem::DenseRows z = TwoLayerNetProblem::DenseRows::Zero(2, 3);
  EXPECT_THROW(TwoLayerNetProblem(z, {0, 2}, 2, 2), ContractError);
}

TEST(TwoLayerNet, NonFiniteWeightsRaise) {
  const TwoLayerNetProblem p = tiny_net(7);
  Vector x = Vector::Zero(p.dim());
  x[0] = std::nan("");
  EXPECT_THROW(p.value_full(x), NumericError);
}

TEST(Quadratic, DerivativesAndMean) {
  Rng rng(3);
  Eigen::MatrixXd c(8, 4);
  for (Index i = 0; i < c.size(); ++i) c.data()[i] = rng.normal();
  const QuadraticProblem p(c, Eigen::Vector4d(1, 2, 3, 4));
  check_derivatives(p, 13, 10, 1.0);
  check_mean_form(p, 14);
  check_decrease(p, 16, true);
  EXPECT_NEAR(p.gradient_full(c.colwise().mean().transpose()).norm(), 0.0, 1e-14);
}

TEST(BinaryTargets, SmallerLabelIsNegative) {
  SparseRows rows(3, 1);
  const Dataset data(rows, {1, 2, 2});
  const IndexList all = {0, 1, 2};
  EXPECT_EQ(binary_targets(data, all, -1.0, 1.0), (std::vector<double>{-1.0, 1.0, 1.0}));
  const Dataset three(rows, {0, 1, 2});
  EXPECT_THROW(binary_targets(three, all, 0.0, 1.0), ContractError);
}

}  // namespace
}  // namespace astr
