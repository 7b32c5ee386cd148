#include "astr/baselines.hpp"

#include "astr/errors.hpp"
#include "astr/random.hpp"
#include "astr/trs.hpp"

#include <cmath>

namespace astr {

void SgdConfig::validate() const {
  if (!(step_size >= 0.0) || !std::isfinite(step_size)) throw ContractError("SgdConfig: step_size must be >= 0");
  if (!(batch_fraction > 0.0 && batch_fraction <= 1.0)) {
    throw ContractError("SgdConfig: batch_fraction must lie in (0, 1]");
  }
  if (!(log_every_egrads > 0.0)) throw ContractError("SgdConfig: log_every_egrads must be positive");
}

Index SgdConfig::batch_size(Index n) const {
  return std::clamp<Index>(ceil_count(batch_fraction * static_cast<double>(n)), 1, n);
}

void SvrgConfig::validate() const {
  if (!(step_size >= 0.0) || !std::isfinite(step_size)) throw ContractError("SvrgConfig: step_size must be >= 0");
  if (!(inner_count_fraction > 0.0) || !std::isfinite(inner_count_fraction)) {
    throw ContractError("SvrgConfig: inner_count_fraction must be positive");
  }
  if (!(log_every_egrads > 0.0)) throw ContractError("SvrgConfig: log_every_egrads must be positive");
}

Index SvrgConfig::inner_count(Index n) const {
  return std::max<Index>(1, ceil_count(inner_count_fraction * static_cast<double>(n)));
}

void FullBatchTrConfig::validate() const {
  tr.validate();
  if (!(delta0 > 0.0)) throw ContractError("FullBatchTrConfig: delta0 must be positive");
  if (!(epsilon > 0.0)) throw ContractError("FullBatchTrConfig: epsilon must be positive");
  if (!(cg_tol >= 0.0) || max_cg < 1) throw ContractError("FullBatchTrConfig: need cg_tol >= 0, max_cg >= 1");
  if (!(min_relative_decrease >= 0.0)) throw ContractError("FullBatchTrConfig: min_relative_decrease must be >= 0");
}

namespace {

// Logging shared by the first-order methods: a row every `every` egrads and
// a closing row, with F evaluated off the budget and off the clock.
class CadenceLogger {
 public:
  CadenceLogger(const FiniteSumObjective& problem, RunLog& log, Stopwatch& clock, const RunHooks& hooks,
                double every, Index batch)
      : problem_(problem), log_(log), clock_(clock), hooks_(hooks), every_(every), batch_(batch) {}

  // Returns false when F is not finite.
  bool write(long long steps, double egrads, const Vector& x) {
    Record row;
    row.nu = steps;
    row.egrads = egrads;
    clock_.pause();
    row.f = x.allFinite() ? problem_.value_full(x) : kNaN;
    clock_.resume();
    row.s = batch_;
    row.s_H = 0;
    row.R = steps - last_steps_;
    row.accepted = true;
    stamp(row, clock_, hooks_, x);
    log_.records.push_back(row);
    last_steps_ = steps;
    while (next_ <= egrads) next_ += every_;
    return std::isfinite(row.f);
  }

  bool due(double egrads) const { return egrads >= next_; }
  bool pending(long long steps) const { return steps != last_steps_; }

 private:
  const FiniteSumObjective& problem_;
  RunLog& log_;
  Stopwatch& clock_;
  const RunHooks& hooks_;
  double every_;
  Index batch_;
  long long last_steps_ = 0;
  double next_ = 0.0;
};

}  // namespace

RunLog run_sgd(const FiniteSumObjective& problem, const SgdConfig& cfg, const CostBudget& budget,
               const Vector& x0, const RunHooks& hooks) {
  cfg.validate();
  budget.validate();
  if (x0.size() != problem.dim()) throw ContractError("run_sgd: x0 has wrong dimension");

  Stopwatch clock;
  MeteredObjective objective(problem);
  const Index n = problem.size();
  const Index batch = cfg.batch_size(n);
  Rng rng(cfg.seed);
  SubsetSampler sampler(n);

  RunLog log;
  log.method = "sgd";
  log.seed = cfg.seed;
  CadenceLogger logger(problem, log, clock, hooks, cfg.log_every_egrads, batch);
  Vector x = x0;
  long long steps = 0;
  if (!logger.write(0, 0.0, x)) {
    log.status = RunStatus::diverged;
    log.x_final = x;
    return log;
  }

  while (!budget.exhausted(objective.egrads(), clock.seconds(), steps)) {
    const IndexList sample = sampler.draw(batch, rng);
    x -= cfg.step_size * objective.gradient(x, sample);
    ++steps;
    if (!x.allFinite()) {
      logger.write(steps, objective.egrads(), x);
      log.status = RunStatus::diverged;
      break;
    }
    if (logger.due(objective.egrads()) && !logger.write(steps, objective.egrads(), x)) {
      log.status = RunStatus::diverged;
      break;
    }
  }
  if (log.status != RunStatus::diverged && logger.pending(steps) && !logger.write(steps, objective.egrads(), x)) {
    log.status = RunStatus::diverged;
  }
  log.x_final = std::move(x);
  return log;
}

Vector svrg_direction(const FiniteSumObjective& problem, const Vector& x, const Vector& snapshot,
                      const Vector& snapshot_gradient, Index i) {
  const Index one[] = {i};
  return problem.gradient(x, one) - problem.gradient(snapshot, one) + snapshot_gradient;
}

RunLog run_svrg(const FiniteSumObjective& problem, const SvrgConfig& cfg, const CostBudget& budget,
                const Vector& x0, const RunHooks& hooks) {
  cfg.validate();
  budget.validate();
  if (x0.size() != problem.dim()) throw ContractError("run_svrg: x0 has wrong dimension");

  Stopwatch clock;
  MeteredObjective objective(problem);
  const Index n = problem.size();
  const Index K = cfg.inner_count(n);
  Rng rng(cfg.seed);

  RunLog log;
  log.method = "svrg";
  log.seed = cfg.seed;
  CadenceLogger logger(problem, log, clock, hooks, cfg.log_every_egrads, 1);
  Vector x = x0;
  long long steps = 0;
  long long epochs = 0;
  bool diverged = !logger.write(0, 0.0, x);
  const CostBudget within_epoch{budget.max_egrads, budget.max_seconds, std::numeric_limits<long long>::max()};

  while (!diverged && !budget.exhausted(objective.egrads(), clock.seconds(), epochs)) {
    const Vector snapshot = x;
    const Vector mu = objective.gradient_full(snapshot);
    log.snapshot_gradient_norms.push_back(mu.norm());
    for (Index k = 0; k < K && !within_epoch.exhausted(objective.egrads(), clock.seconds(), 0); ++k) {
      const Index one[] = {rng.uniform_index(n)};
      x -= cfg.step_size * (objective.gradient(x, one) - objective.gradient(snapshot, one) + mu);
      ++steps;
      if (!x.allFinite()) {
        logger.write(steps, objective.egrads(), x);
        diverged = true;
        break;
      }
      if (logger.due(objective.egrads()) && !logger.write(steps, objective.egrads(), x)) {
        diverged = true;
        break;
      }
    }
    ++epochs;
  }
  if (!diverged && logger.pending(steps)) diverged = !logger.write(steps, objective.egrads(), x);
  if (diverged) log.status = RunStatus::diverged;
  log.x_final = std::move(x);
  return log;
}

RunLog run_fullbatch_tr(const FiniteSumObjective& problem, const FullBatchTrConfig& cfg,
                        const CostBudget& budget, const Vector& x0, const RunHooks& hooks) {
  cfg.validate();
  budget.validate();
  if (x0.size() != problem.dim()) throw ContractError("run_fullbatch_tr: x0 has wrong dimension");

  Stopwatch clock;
  MeteredObjective objective(problem);
  const Index n = problem.size();
  const IndexSpan all = objective.all_indices();

  Vector x = x0;
  double f = objective.value_full(x);
  double delta = cfg.delta0;

  RunLog log;
  log.method = "tr";
  auto write = [&](long long it, bool accepted_step, double b) {
    Record row;
    row.nu = it;
    row.egrads = objective.egrads();
    row.f = f;
    row.s = n;
    row.s_H = n;
    row.R = it == 0 ? 0 : 1;
    row.delta = delta;
    row.accepted = true;
    if (it > 0) row.b = accepted_step ? b : 0.0;
    stamp(row, clock, hooks, x);
    log.records.push_back(row);
  };
  write(0, false, 0.0);

  const SubproblemSolver solver = [&cfg](const QuadraticModel& model, double radius) {
    return solve_steihaug(model, radius, cfg.cg_tol, cfg.max_cg);
  };

  long long it = 0;
  int tiny_steps = 0;
  while (!budget.exhausted(objective.egrads(), clock.seconds(), it)) {
    Vector g = objective.gradient_full(x);
    if (!g.allFinite()) throw NumericError("run_fullbatch_tr: non-finite gradient");
    ++it;
    if (g.norm() < cfg.epsilon) {
      write(it, false, 0.0);
      log.status = RunStatus::converged;
      break;
    }
    QuadraticModel model;
    model.center_value = f;
    model.gradient = std::move(g);
    model.curvature = CurvatureOperator([&objective, &x, all](const Vector& v) { return objective.hvp(x, all, v); });
    TRStepResult step;
    try {
      const SampledDecrease full_decrease{
          [&objective, &x, all, f](const Vector& y) { return objective.decrease(x, y, all, f); }};
      step = trust_region_step(full_decrease, x, model, delta, cfg.tr, solver);
    } catch (const StepStall&) {
      write(it, false, 0.0);
      log.status = RunStatus::stalled;
      break;
    }
    x += step.step;
    f = step.new_value;
    delta = step.delta_next;
    write(it, true, step.actual_decrease);
    if (cfg.min_relative_decrease > 0.0) {
      tiny_steps = step.actual_decrease < cfg.min_relative_decrease * std::abs(f) ? tiny_steps + 1 : 0;
      if (tiny_steps >= 2) {
        log.status = RunStatus::converged;
        break;
      }
    }
  }
  log.x_final = std::move(x);
  return log;
}

std::vector<double> sgd_step_grid() { return {1e-6, 1e-5, 1e-4, 1e-3, 1e-2, 1e-1, 1.0, 10.0}; }

std::vector<double> sgd_batch_fraction_grid(Index n) {
  return {1.0 / static_cast<double>(n), 1e-5, 1e-4, 1e-3, 1e-2, 1e-1};
}

std::vector<double> svrg_step_grid() { return sgd_step_grid(); }

std::vector<double> svrg_inner_fraction_grid() { return {1e-4, 1e-3, 1e-2, 1e-1, 1.0, 2.0}; }

}  // namespace astr
