#include "astr/errors.hpp"
#include "astr/trs.hpp"
#include "support.hpp"

#include <gtest/gtest.h>

namespace astr {
namespace {

using testing::cauchy_decrease;
using testing::random_symmetric;
using testing::random_vector;
using testing::spectral_norm;

QuadraticModel make(double f, Vector g, const Eigen::MatrixXd& a) {
  return {f, std::move(g), CurvatureOperator::dense(a)};
}

TEST(ModelEval, ZeroStepIsCenterValue) {
  QuadraticModel m{3.0, Eigen::Vector2d(1, 0), CurvatureOperator::zero()};
  EXPECT_EQ(model_eval(m, Vector::Zero(2)), 3.0);
}

TEST(ModelEval, IdentityCurvature) {
  const auto m = make(0.0, Eigen::Vector2d(1, 0), Eigen::Matrix2d::Identity());
  EXPECT_DOUBLE_EQ(model_eval(m, Eigen::Vector2d(-1, 0)), -0.5);
}

TEST(ModelEval, MatchesTermByTermSum) {
  Rng rng(11);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::MatrixXd a = random_symmetric(5, rng);
    const Vector g = random_vector(5, rng);
    const Vector d = random_vector(5, rng);
    const double f = rng.normal();
    double sum = f;
    for (Index i = 0; i < 5; ++i) {
      sum += g[i] * d[i];
      for (Index j = 0; j < 5; ++j) sum += 0.5 * d[i] * a(i, j) * d[j];
    }
    EXPECT_NEAR(model_eval(make(f, g, a), d), sum, 1e-12 * std::max(1.0, std::abs(sum)));
  }
}

TEST(ModelEval, DimensionMismatchThrows) {
  QuadraticModel m{0.0, Eigen::Vector2d(1, 0), {}};
  EXPECT_THROW(model_eval(m, Vector::Zero(3)), ContractError);
}

TEST(GradientStep, UnitDirection) {
  QuadraticModel m{0.0, Eigen::Vector2d(3, 4), {}};
  const TRSolution s = solve_gradient_step(m, 1.0);
  EXPECT_NEAR(s.step[0], -0.6, 1e-15);
  EXPECT_NEAR(s.step[1], -0.8, 1e-15);
  EXPECT_DOUBLE_EQ(s.predicted_decrease, 5.0);
  EXPECT_EQ(s.status, TRStatus::boundary);

  QuadraticModel m2{0.0, Eigen::Vector2d(1, 0), {}};
  const TRSolution s2 = solve_gradient_step(m2, 2.0);
  EXPECT_DOUBLE_EQ(s2.step[0], -2.0);
  EXPECT_DOUBLE_EQ(s2.step[1], 0.0);
  EXPECT_DOUBLE_EQ(s2.predicted_decrease, 2.0);
}

TEST(GradientStep, RandomClosedForm) {
  Rng rng(5);
  for (int trial = 0; trial < 50; ++trial) {
    QuadraticModel m{rng.normal(), random_vector(7, rng), {}};
    const double delta = 0.01 + 3.0 * rng.uniform01();
    const TRSolution s = solve_gradient_step(m, delta);
    EXPECT_NEAR(s.step.norm(), delta, 1e-12 * delta);
    EXPECT_NEAR(s.predicted_decrease, delta * m.gradient.norm(), 1e-12 * s.predicted_decrease);
    EXPECT_NEAR(model_eval(m, Vector::Zero(7)) - model_eval(m, s.step), s.predicted_decrease,
                1e-12 * s.predicted_decrease);
  }
}

TEST(GradientStep, Preconditions) {
  QuadraticModel zero_g{0.0, Vector::Zero(3), {}};
  EXPECT_THROW(solve_gradient_step(zero_g, 1.0), ContractError);
  QuadraticModel m{0.0, Vector::Ones(3), {}};
  EXPECT_THROW(solve_gradient_step(m, 0.0), ContractError);
  QuadraticModel curved{0.0, Vector::Ones(3), CurvatureOperator::dense(Eigen::Matrix3d::Identity())};
  EXPECT_THROW(solve_gradient_step(curved, 1.0), ContractError);
}

TEST(Steihaug, NewtonStepInsideBall) {
  const auto m = make(0.0, Eigen::Vector2d(1, 0), Eigen::Matrix2d::Identity());
  const TRSolution s = solve_steihaug(m, 10.0);
  EXPECT_EQ(s.status, TRStatus::interior);
  EXPECT_NEAR(s.step[0], -1.0, 1e-15);
  EXPECT_NEAR(s.step[1], 0.0, 1e-15);
}

TEST(Steihaug, NegativeCurvatureGoesToBoundary) {
  const auto m = make(0.0, Eigen::Vector2d(1, 0), -Eigen::Matrix2d::Identity());
  const TRSolution s = solve_steihaug(m, 1.0);
  EXPECT_EQ(s.status, TRStatus::negative_curvature);
  EXPECT_NEAR(s.step[0], -1.0, 1e-15);
  EXPECT_NEAR(s.step[1], 0.0, 1e-15);
  EXPECT_NEAR(s.predicted_decrease, 1.5, 1e-15);
}

TEST(Steihaug, ZeroCurvatureMatchesGradientStep) {
  Rng rng(3);
  for (int trial = 0; trial < 20; ++trial) {
    QuadraticModel m{0.0, random_vector(6, rng), {}};
    const double delta = 0.1 + rng.uniform01();
    const TRSolution a = solve_gradient_step(m, delta);
    const TRSolution b = solve_steihaug(m, delta);
    EXPECT_LE((a.step - b.step).norm(), 1e-12 * delta);
    EXPECT_NEAR(a.predicted_decrease, b.predicted_decrease, 1e-12 * a.predicted_decrease);
  }
}

// A4 with kappa4 = 1/2, the Cauchy decrease, the ball and exactness of the
// reported decrease on random SPD and indefinite instances.
TEST(Steihaug, RandomInstancesSatisfyCauchyAndBall) {
  Rng rng(2024);
  for (int trial = 0; trial < 400; ++trial) {
    const Index d = 10;
    Eigen::MatrixXd a = random_symmetric(d, rng);
    if (trial % 2 == 0) a = a * a.transpose() + 0.1 * Eigen::MatrixXd::Identity(d, d);
    const Vector g = random_vector(d, rng);
    const double delta = std::exp(rng.normal());
    const auto m = make(0.0, g, a);
    const TRSolution s = solve_steihaug(m, delta);

    EXPECT_LE(s.step.norm(), delta * (1 + 1e-12));
    EXPECT_GT(s.predicted_decrease, 0.0);
    EXPECT_NEAR(s.predicted_decrease, -model_eval(m, s.step), 1e-10 * std::max(1.0, s.predicted_decrease));
    const double cauchy = cauchy_decrease(g, a, delta);
    EXPECT_GE(s.predicted_decrease, cauchy - 1e-10 * std::max(1.0, cauchy));
    const double gnorm = g.norm();
    const double a4 = 0.5 * gnorm * std::min(gnorm / (1.0 + spectral_norm(a)), delta);
    EXPECT_GE(s.predicted_decrease, a4 - 1e-12);
  }
}

TEST(Steihaug, MatchesNewtonWhenInteriorOptimal) {
  Rng rng(77);
  for (int trial = 0; trial < 100; ++trial) {
    const Index d = 10;
    const Eigen::MatrixXd b = random_symmetric(d, rng);
    const Eigen::MatrixXd a = b * b.transpose() + Eigen::MatrixXd::Identity(d, d);
    const Vector g = random_vector(d, rng);
    const Vector newton = -a.ldlt().solve(g);
    const auto m = make(0.0, g, a);
    const TRSolution s = solve_steihaug(m, 2.0 * newton.norm(), 1e-14, 200);
    EXPECT_EQ(s.status, TRStatus::interior);
    EXPECT_LE((s.step - newton).norm(), 1e-8 * std::max(1.0, newton.norm()));
  }
}

TEST(Steihaug, DecreaseMonotoneInIterationCount) {
  Rng rng(8);
  for (int trial = 0; trial < 30; ++trial) {
    const Eigen::MatrixXd b = random_symmetric(10, rng);
    const Eigen::MatrixXd a = b * b.transpose() + 0.01 * Eigen::MatrixXd::Identity(10, 10);
    const auto m = make(0.0, random_vector(10, rng), a);
    double previous = 0.0;
    for (int k = 1; k <= 12; ++k) {
      const double dec = solve_steihaug(m, 5.0, 0.0, k).predicted_decrease;
      EXPECT_GE(dec, previous - 1e-12 * std::max(1.0, dec));
      previous = dec;
    }
  }
}

TEST(Steihaug, IterationCapStatus) {
  Eigen::MatrixXd a = Eigen::VectorXd::LinSpaced(10, 1.0, 100.0).asDiagonal();
  const auto m = make(0.0, Vector::Ones(10), a);
  const TRSolution s = solve_steihaug(m, 100.0, 1e-12, 2);
  EXPECT_EQ(s.status, TRStatus::iteration_cap);
  EXPECT_EQ(s.cg_iterations, 2);
}

TEST(Steihaug, NonFiniteOperatorThrows) {
  QuadraticModel m{0.0, Vector::Ones(3),
                   CurvatureOperator([](const Vector& v) { return Vector::Constant(v.size(), std::nan("")); })};
  EXPECT_THROW(solve_steihaug(m, 1.0), NumericError);
}

TEST(Steihaug, ZeroGradientRejected) {
  QuadraticModel m{0.0, Vector::Zero(3), {}};
  EXPECT_THROW(solve_steihaug(m, 1.0), ContractError);
}

TEST(CurvatureOperatorTest, DenseIsSymmetric) {
  Rng rng(4);
  const Eigen::MatrixXd a = random_symmetric(6, rng);
  const auto op = CurvatureOperator::dense(a);
  const Vector u = random_vector(6, rng);
  const Vector v = random_vector(6, rng);
  EXPECT_NEAR(u.dot(op.apply(v)), v.dot(op.apply(u)), 1e-10 * std::abs(u.dot(op.apply(v))) + 1e-14);
}

}  // namespace
}  // namespace astr
