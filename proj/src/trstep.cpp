#include "astr/trstep.hpp"

#include "astr/errors.hpp"

#include <cmath>
#include <limits>
#include <string>

namespace astr {

void TRStepConfig::validate() const {
  if (!(eta1 > 0.0 && eta1 < 1.0 && eta2 > 0.0 && eta2 < 1.0 && eta1 <= eta2)) {
    throw ContractError("TRStepConfig: need 0 < eta1 <= eta2 < 1");
  }
  if (!(gamma1 > 0.0 && gamma1 < 1.0 && gamma2 > 1.0)) {
    throw ContractError("TRStepConfig: need 0 < gamma1 < 1 < gamma2");
  }
  if (max_retries < 0) throw ContractError("TRStepConfig: max_retries must be >= 0");
}

namespace {

struct Trial {
  double actual;
  double value;
};

template <class Evaluate>
TRStepResult step_loop(const Evaluate& evaluate, const Vector& x, const QuadraticModel& model, double delta0,
                       const TRStepConfig& cfg, const SubproblemSolver& solver) {
  cfg.validate();
  if (!(delta0 > 0.0)) throw ContractError("trust_region_step: delta0 must be positive");
  const double f0 = model.center_value;
  const double noise_floor = 64.0 * std::numeric_limits<double>::epsilon() * std::max(1.0, std::abs(f0));

  TRStepResult out;
  double radius = delta0;
  bool all_finite_trials = true;
  for (int r = 0;; ++r) {
    TRSolution sol = solver(model, radius);
    out.cg_iterations += sol.cg_iterations;
    if (!(sol.predicted_decrease > 0.0)) {
      throw ContractError("trust_region_step: solver returned nonpositive predicted decrease");
    }
    const Vector trial = x + sol.step;
    if (trial == x) {
      throw StepStall("trust_region_step: step is below the floating-point resolution of x");
    }
    const auto [actual, f1] = evaluate(trial);
    const double rho = actual / sol.predicted_decrease;
    const double step_norm = sol.step.norm();
    const bool finite = std::isfinite(f1) && std::isfinite(actual);
    if (finite && rho >= cfg.eta1) {
      out.rho = rho;
      out.retries = r;
      out.actual_decrease = actual;
      out.new_value = f1;
      out.predicted_decrease = sol.predicted_decrease;
      out.radius = radius;
      const bool on_boundary = std::abs(step_norm - radius) <= 1e-12 * radius;
      out.delta_next = (rho >= cfg.eta2 && on_boundary) ? cfg.gamma2 * radius : radius;
      out.step = std::move(sol.step);
      return out;
    }
    all_finite_trials = all_finite_trials && finite;
    if (r >= cfg.max_retries) {
      const std::string detail = " after " + std::to_string(r + 1) + " subproblem solves";
      if (all_finite_trials && sol.predicted_decrease <= noise_floor) {
        throw StepStall("trust_region_step: predicted decrease at rounding level" + detail);
      }
      throw NumericError("trust_region_step: retry cap reached" + detail +
                         " (objective non-smooth or non-finite?)");
    }
    radius = cfg.gamma1 * step_norm;
  }
}

}  // namespace

TRStepResult trust_region_step(const SampledObjective& objective_on_sample, const Vector& x,
                               const QuadraticModel& model, double delta0,
                               const TRStepConfig& cfg, const SubproblemSolver& solver) {
  const double f0 = model.center_value;
  return step_loop(
      [&](const Vector& trial) {
        const double f1 = objective_on_sample(trial);
        return Trial{f0 - f1, f1};
      },
      x, model, delta0, cfg, solver);
}

TRStepResult trust_region_step(const SampledDecrease& decrease, const Vector& x,
                               const QuadraticModel& model, double delta0,
                               const TRStepConfig& cfg, const SubproblemSolver& solver) {
  const double f0 = model.center_value;
  return step_loop(
      [&](const Vector& trial) {
        const double actual = decrease.at(trial);
        return Trial{actual, f0 - actual};
      },
      x, model, delta0, cfg, solver);
}

}  // namespace astr
