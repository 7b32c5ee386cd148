#pragma once

#include "astr/cost.hpp"
#include "astr/runlog.hpp"
#include "astr/trstep.hpp"

#include <cstdint>
#include <vector>

namespace astr {

// Mini-batch SGD with a constant step and batches of ceil(zeta n) points
// drawn without replacement, independently at every step.
struct SgdConfig {
  double step_size = 1e-2;
  double batch_fraction = 1e-2;
  double log_every_egrads = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  Index batch_size(Index n) const;
};

// SVRG with K = ceil(mu n) inner steps per epoch, single points drawn with
// replacement, last iterate as the next snapshot.
struct SvrgConfig {
  double step_size = 1e-2;
  double inner_count_fraction = 1.0;
  double log_every_egrads = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
  Index inner_count(Index n) const;
};

// Trust-region Newton-CG with the full index set at every iteration.
struct FullBatchTrConfig {
  TRStepConfig tr;
  double delta0 = 1.0;
  double epsilon = 1e-14;
  double cg_tol = 1e-4;
  int max_cg = 30;
  // When > 0, stop (converged) after two consecutive steps that each lower F
  // by less than min_relative_decrease * |F|.
  double min_relative_decrease = 0.0;

  void validate() const;
};

// Records are written every log_every_egrads of spent budget and once at the
// end. F is evaluated for the log without charge. max_iterations counts steps.
RunLog run_sgd(const FiniteSumObjective& problem, const SgdConfig& cfg, const CostBudget& budget,
               const Vector& x0, const RunHooks& hooks = {});

// As run_sgd; max_iterations counts epochs. snapshot_gradient_norms holds
// |grad F| at every snapshot.
RunLog run_svrg(const FiniteSumObjective& problem, const SvrgConfig& cfg, const CostBudget& budget,
                const Vector& x0, const RunHooks& hooks = {});

// grad f_i(x) - grad f_i(snapshot) + snapshot_gradient.
Vector svrg_direction(const FiniteSumObjective& problem, const Vector& x, const Vector& snapshot,
                      const Vector& snapshot_gradient, Index i);

// One record per iteration; max_iterations counts iterations.
RunLog run_fullbatch_tr(const FiniteSumObjective& problem, const FullBatchTrConfig& cfg,
                        const CostBudget& budget, const Vector& x0, const RunHooks& hooks = {});

// Hyper-parameter grids searched for the baselines.
std::vector<double> sgd_step_grid();                 // 1e-6, ..., 1, 10
std::vector<double> sgd_batch_fraction_grid(Index n);  // 1/n, 1e-5, ..., 1e-1
std::vector<double> svrg_step_grid();                // same as SGD
std::vector<double> svrg_inner_fraction_grid();      // 1e-4, ..., 1, 2

}  // namespace astr
