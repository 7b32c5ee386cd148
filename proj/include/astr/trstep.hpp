#pragma once

#include "astr/trs.hpp"

#include <functional>

namespace astr {

struct TRStepConfig {
  double eta1 = 0.1;
  double eta2 = 0.75;
  double gamma1 = 0.5;
  double gamma2 = 2.0;
  int max_retries = 60;

  void validate() const;
};

struct TRStepResult {
  Vector step;
  double delta_next = 0.0;
  double rho = 0.0;
  int retries = 0;  // radius shrinks before acceptance
  double actual_decrease = 0.0;
  double new_value = 0.0;  // F_S(x + step)
  double predicted_decrease = 0.0;
  double radius = 0.0;  // radius of the accepted subproblem
  int cg_iterations = 0;  // summed over all solves
};

using SampledObjective = std::function<double(const Vector&)>;

// F_S(x) - F_S(trial) for the fixed x of one trust_region_step call,
// computed without subtracting two rounded sums.
struct SampledDecrease {
  std::function<double(const Vector&)> at;
};
using SubproblemSolver = std::function<TRSolution(const QuadraticModel&, double)>;

// Solve the subproblem at a shrinking radius until the ratio
//   rho = (F_S(x) - F_S(x + d)) / (m(0) - m(d))
// reaches eta1, then expand the radius for the next call if the accepted
// step was on the boundary with rho >= eta2.
//
// Throws ContractError if the solver reports a nonpositive predicted
// decrease, StepStall when the step no longer moves x or the cap is reached
// with finite but unmeasurable decreases, and NumericError when the cap is
// reached on a non-finite objective.
TRStepResult trust_region_step(const SampledObjective& objective_on_sample, const Vector& x,
                               const QuadraticModel& model, double delta0,
                               const TRStepConfig& cfg, const SubproblemSolver& solver);

// Same loop with the actual decrease taken from `decrease`; new_value is
// then model.center_value - actual_decrease.
TRStepResult trust_region_step(const SampledDecrease& decrease, const Vector& x,
                               const QuadraticModel& model, double delta0,
                               const TRStepConfig& cfg, const SubproblemSolver& solver);

}  // namespace astr
