#include "astr/trs.hpp"

#include "astr/errors.hpp"

#include <cmath>

namespace astr {

CurvatureOperator CurvatureOperator::dense(Eigen::MatrixXd matrix) {
  return CurvatureOperator([a = std::move(matrix)](const Vector& v) -> Vector { return a * v; });
}

Vector CurvatureOperator::apply(const Vector& v) const {
  if (!apply_) return Vector::Zero(v.size());
  return apply_(v);
}

std::string_view to_string(TRStatus status) {
  switch (status) {
    case TRStatus::interior: return "interior";
    case TRStatus::boundary: return "boundary";
    case TRStatus::negative_curvature: return "negative_curvature";
    case TRStatus::iteration_cap: return "iteration_cap";
  }
  return "unknown";
}

double model_eval(const QuadraticModel& model, const Vector& d) {
  if (d.size() != model.gradient.size()) {
    throw ContractError("model_eval: step dimension does not match gradient");
  }
  return model.center_value + model.gradient.dot(d) + 0.5 * d.dot(model.curvature.apply(d));
}

TRSolution solve_gradient_step(const QuadraticModel& model, double delta) {
  if (!model.curvature.is_zero()) {
    throw ContractError("solve_gradient_step: curvature must be the zero operator");
  }
  if (!(delta > 0.0)) throw ContractError("solve_gradient_step: delta must be positive");
  const double gnorm = model.gradient.norm();
  if (!(gnorm > 0.0)) throw ContractError("solve_gradient_step: zero gradient");
  TRSolution out;
  out.step = (-delta / gnorm) * model.gradient;
  out.predicted_decrease = delta * gnorm;
  out.status = TRStatus::boundary;
  return out;
}

namespace {

// Positive root tau of |d + tau p| = delta, for |d| <= delta and p != 0.
double boundary_root(const Vector& d, const Vector& p, double delta) {
  const double dp = d.dot(p);
  const double pp = p.squaredNorm();
  const double slack = std::max(0.0, delta * delta - d.squaredNorm());
  const double disc = std::sqrt(dp * dp + pp * slack);
  // Cancellation-free form of (-dp + disc) / pp.
  return dp > 0.0 ? slack / (dp + disc) : (disc - dp) / pp;
}

}  // namespace

TRSolution solve_steihaug(const QuadraticModel& model, double delta, double cg_tol, int max_cg) {
  const Vector& g = model.gradient;
  const double gnorm = g.norm();
  if (!(gnorm > 0.0)) throw ContractError("solve_steihaug: zero gradient");
  if (!(delta > 0.0)) throw ContractError("solve_steihaug: delta must be positive");
  if (max_cg < 1) throw ContractError("solve_steihaug: max_cg must be >= 1");
  if (!std::isfinite(gnorm)) throw NumericError("solve_steihaug: non-finite gradient");

  const Index n = g.size();
  Vector d = Vector::Zero(n);
  Vector ad = Vector::Zero(n);  // A d, kept for the exact model decrease
  Vector r = g;                 // model gradient g + A d
  Vector p = -g;
  double rr = gnorm * gnorm;
  const double stop = cg_tol * gnorm;

  TRSolution out;
  out.status = TRStatus::iteration_cap;
  for (int iter = 0; iter < max_cg; ++iter) {
    const Vector ap = model.curvature.apply(p);
    const double curv = p.dot(ap);
    if (!std::isfinite(curv) || !ap.allFinite()) {
      throw NumericError("solve_steihaug: non-finite curvature product");
    }
    out.cg_iterations = iter + 1;
    if (curv <= 0.0) {
      const double tau = boundary_root(d, p, delta);
      d += tau * p;
      ad += tau * ap;
      out.status = TRStatus::negative_curvature;
      break;
    }
    const double alpha = rr / curv;
    if ((d + alpha * p).norm() >= delta) {
      const double tau = boundary_root(d, p, delta);
      d += tau * p;
      ad += tau * ap;
      out.status = TRStatus::boundary;
      break;
    }
    d += alpha * p;
    ad += alpha * ap;
    r += alpha * ap;
    const double rr_next = r.squaredNorm();
    if (std::sqrt(rr_next) <= stop) {
      out.status = TRStatus::interior;
      break;
    }
    p = -r + (rr_next / rr) * p;
    rr = rr_next;
  }

  out.predicted_decrease = -(g.dot(d) + 0.5 * d.dot(ad));
  out.step = std::move(d);
  return out;
}

}  // namespace astr
