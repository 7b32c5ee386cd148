#pragma once

#include "astr/types.hpp"

#include <functional>
#include <string_view>

namespace astr {

// Symmetric linear operator v -> A v. A default-constructed operator is the
// zero operator; solvers can detect that and avoid applying it.
class CurvatureOperator {
 public:
  using Apply = std::function<Vector(const Vector&)>;

  CurvatureOperator() = default;
  explicit CurvatureOperator(Apply apply) : apply_(std::move(apply)) {}

  static CurvatureOperator zero() { return {}; }
  static CurvatureOperator dense(Eigen::MatrixXd matrix);

  bool is_zero() const { return !apply_; }
  Vector apply(const Vector& v) const;

 private:
  Apply apply_;
};

// m(d) = center_value + <gradient, d> + 1/2 d'Ad
struct QuadraticModel {
  double center_value = 0.0;
  Vector gradient;
  CurvatureOperator curvature;
};

enum class TRStatus { interior, boundary, negative_curvature, iteration_cap };

std::string_view to_string(TRStatus status);

struct TRSolution {
  Vector step;
  double predicted_decrease = 0.0;  // m(0) - m(step)
  TRStatus status = TRStatus::interior;
  int cg_iterations = 0;
};

struct SteihaugOptions {
  double cg_tol = 1e-4;  // relative residual
  int max_cg = 30;
};

double model_eval(const QuadraticModel& model, const Vector& d);

// Exact minimizer for zero curvature: d = -delta g / |g|.
TRSolution solve_gradient_step(const QuadraticModel& model, double delta);

// Steihaug-Toint truncated conjugate gradient. The first CG iterate is the
// Cauchy point, so the returned decrease is at least the Cauchy decrease.
TRSolution solve_steihaug(const QuadraticModel& model, double delta, double cg_tol, int max_cg);

inline TRSolution solve_steihaug(const QuadraticModel& model, double delta,
                                 const SteihaugOptions& options = {}) {
  return solve_steihaug(model, delta, options.cg_tol, options.max_cg);
}

}  // namespace astr
