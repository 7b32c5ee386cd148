#pragma once

#include "astr/cost.hpp"
#include "astr/random.hpp"
#include "astr/runlog.hpp"
#include "astr/trstep.hpp"

#include <cstdint>
#include <optional>
#include <utility>
#include <vector>

namespace astr {

enum class CurvatureMode {
  none,                // A = 0: the subproblem is solved by a scaled gradient step
  subsampled_hessian,  // A = Hessian of F over a subsample S_H of S, truncated CG
};

// Hyper-parameters of the adaptive sample size trust-region method.
// Zero counts mean "derive from n" (see initial_sample_size / max_inner).
struct AstrConfig {
  Index s0 = 0;
  double s0_fraction = 0.01;
  Index R_hat = 0;  // 0: 2 n / s0
  double delta0 = 1.0;
  double theta = 0.5;
  double epsilon = 1e-14;
  double omega = 2.0;
  CurvatureMode curvature_mode = CurvatureMode::subsampled_hessian;
  double hessian_fraction = 0.1;
  double alpha_bar = 5.0;
  double beta_bar = 20.0;
  TRStepConfig tr;
  double cg_tol = 1e-4;
  int max_cg = 30;
  std::uint64_t seed = 0;

  void validate() const;
  Index initial_sample_size(Index n) const;
  Index max_inner(Index n) const;
  // max(1, ceil(hessian_fraction * s)), at most s.
  Index hessian_sample_size(Index s) const;
};

struct OuterState {
  long long nu = 0;
  Vector x;
  Index s = 1;
  Index s_H = 1;
  double delta = 1.0;
  double f_current = 0.0;  // F(x) over all n points
};

struct InnerResult {
  Vector x_hat;
  double b = 0.0;          // mean of the per-step sampled decreases
  double delta_out = 0.0;
  int R = 0;
  int skipped = 0;         // |g| < epsilon
  int stalled = 0;         // step not measurable at floating-point resolution
  double cost = 0.0;       // egrads spent in this call
  std::vector<double> step_decreases;  // b^{nu,k}, one per inner iteration
  std::optional<double> f_hat;         // F(x_hat), known when the sample was all n points
};

struct OuterRecord {
  bool accepted = false;
  double a = kNaN;
  double tau = kNaN;
  double b = 0.0;
};

// Seeded source of the index samples drawn by the inner loop.
class SampleStream {
 public:
  SampleStream(std::uint64_t seed, Index n) : rng_(seed), sampler_(n) {}
  IndexList draw(Index k) { return sampler_.draw(k, rng_); }
  IndexList draw_from(IndexSpan from, Index k) {
    if (static_cast<Index>(from.size()) == k) return {from.begin(), from.end()};
    return sample_subset(from, k, rng_);
  }

 private:
  Rng rng_;
  SubsetSampler sampler_;
};

// R sampled trust-region iterations from state.x.
InnerResult run_inner(const OuterState& state, int R, MeteredObjective& objective,
                      const AstrConfig& cfg, SampleStream& samples);

// Accept/reject the candidate and adapt the sample sizes.
std::pair<OuterState, OuterRecord> outer_update(const OuterState& state, const InnerResult& inner,
                                                MeteredObjective& objective, const AstrConfig& cfg);

// Number of inner iterations whose cost roughly matches one full function
// evaluation, rounded half-to-even and clamped to [1, R_hat].
int schedule_R(Index s, Index s_H, Index n, CurvatureMode mode, double alpha_bar, double beta_bar,
               Index R_hat);

RunLog run_astr(const FiniteSumObjective& problem, const AstrConfig& cfg, const CostBudget& budget,
                const Vector& x0, const RunHooks& hooks = {});

}  // namespace astr
