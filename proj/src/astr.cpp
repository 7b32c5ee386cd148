#include "astr/astr.hpp"

#include "astr/errors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace astr {

void AstrConfig::validate() const {
  if (s0 < 0) throw ContractError("AstrConfig: s0 must be >= 1 (or 0 for automatic)");
  if (s0 == 0 && !(s0_fraction > 0.0 && s0_fraction <= 1.0)) {
    throw ContractError("AstrConfig: s0_fraction must lie in (0, 1]");
  }
  if (R_hat < 0) throw ContractError("AstrConfig: R_hat must be >= 1 (or 0 for automatic)");
  if (!(delta0 > 0.0)) throw ContractError("AstrConfig: delta0 must be positive");
  if (!(theta > 0.0)) throw ContractError("AstrConfig: theta must be positive");
  if (!(epsilon > 0.0)) throw ContractError("AstrConfig: epsilon must be positive");
  if (!(omega > 1.0)) throw ContractError("AstrConfig: omega must exceed 1");
  if (!(hessian_fraction > 0.0 && hessian_fraction <= 1.0)) {
    throw ContractError("AstrConfig: hessian_fraction must lie in (0, 1]");
  }
  if (!(alpha_bar >= 0.0 && beta_bar >= 0.0)) throw ContractError("AstrConfig: alpha_bar, beta_bar must be >= 0");
  if (!(cg_tol >= 0.0) || max_cg < 1) throw ContractError("AstrConfig: need cg_tol >= 0, max_cg >= 1");
  tr.validate();
}

Index AstrConfig::initial_sample_size(Index n) const {
  const Index s = s0 > 0 ? s0 : ceil_count(s0_fraction * static_cast<double>(n));
  return std::clamp<Index>(s, 1, n);
}

Index AstrConfig::max_inner(Index n) const {
  if (R_hat > 0) return R_hat;
  return std::max<Index>(1, 2 * n / initial_sample_size(n));
}

Index AstrConfig::hessian_sample_size(Index s) const {
  return std::clamp<Index>(ceil_count(hessian_fraction * static_cast<double>(s)), 1, s);
}

int schedule_R(Index s, Index s_H, Index n, CurvatureMode mode, double alpha_bar, double beta_bar,
               Index R_hat) {
  if (s < 1 || s > n) throw ContractError("schedule_R: need 1 <= s <= n");
  if (R_hat < 1) throw ContractError("schedule_R: R_hat must be >= 1");
  const double nd = static_cast<double>(n);
  const double sd = static_cast<double>(s);
  double raw = 0.0;
  if (mode == CurvatureMode::none) {
    raw = nd / (2.0 * sd);
  } else {
    if (s_H < 1 || s_H > s) throw ContractError("schedule_R: need 1 <= s_H <= s");
    raw = nd / ((2.0 + alpha_bar) * sd + beta_bar * 2.0 * static_cast<double>(s_H));
  }
  // nearbyint rounds half to even under the default rounding mode.
  const double rounded = std::nearbyint(raw);
  return static_cast<int>(std::clamp<double>(rounded, 1.0, static_cast<double>(R_hat)));
}

InnerResult run_inner(const OuterState& state, int R, MeteredObjective& objective, const AstrConfig& cfg,
                      SampleStream& samples) {
  if (R < 1) throw ContractError("run_inner: R must be >= 1");
  const Index n = objective.size();
  const bool full = state.s == n;
  const double start_cost = objective.egrads();

  InnerResult out;
  out.R = R;
  out.step_decreases.reserve(static_cast<std::size_t>(R));
  Vector x = state.x;
  double delta = state.delta;
  // F_S(x) is only reusable across iterations when S is always all n points.
  std::optional<double> f_known;
  if (full) f_known = state.f_current;

  const SubproblemSolver solver = [&cfg](const QuadraticModel& model, double radius) {
    return cfg.curvature_mode == CurvatureMode::none ? solve_gradient_step(model, radius)
                                                     : solve_steihaug(model, radius, cfg.cg_tol, cfg.max_cg);
  };

  for (int k = 0; k < R; ++k) {
    const IndexList sample = samples.draw(state.s);
    Vector g = objective.gradient(x, sample);
    if (!g.allFinite()) throw NumericError("run_inner: non-finite sampled gradient");
    if (g.norm() < cfg.epsilon) {
      ++out.skipped;
      out.step_decreases.push_back(0.0);
      continue;
    }

    QuadraticModel model;
    model.center_value = f_known ? *f_known : objective.value(x, sample);
    model.gradient = std::move(g);
    IndexList hessian_sample;
    if (cfg.curvature_mode == CurvatureMode::subsampled_hessian) {
      hessian_sample = samples.draw_from(sample, state.s_H);
      model.curvature = CurvatureOperator(
          [&objective, &x, &hessian_sample](const Vector& v) { return objective.hvp(x, hessian_sample, v); });
    }
    const double f0 = model.center_value;
    const SampledDecrease on_sample{
        [&objective, &sample, &x, f0](const Vector& y) { return objective.decrease(x, y, sample, f0); }};

    TRStepResult step;
    try {
      step = trust_region_step(on_sample, x, model, delta, cfg.tr, solver);
    } catch (const StepStall&) {
      ++out.stalled;
      out.step_decreases.push_back(0.0);
      continue;
    }
    x += step.step;
    delta = step.delta_next;
    out.step_decreases.push_back(step.actual_decrease);
    if (full) f_known = step.new_value;
  }

  const double total = std::accumulate(out.step_decreases.begin(), out.step_decreases.end(), 0.0);
  out.b = total / static_cast<double>(R);
  out.x_hat = std::move(x);
  out.delta_out = delta;
  if (full) out.f_hat = f_known;
  out.cost = objective.egrads() - start_cost;
  return out;
}

std::pair<OuterState, OuterRecord> outer_update(const OuterState& state, const InnerResult& inner,
                                                MeteredObjective& objective, const AstrConfig& cfg) {
  if (!(inner.b >= 0.0)) throw ContractError("outer_update: inner loop reported b < 0");
  const Index n = objective.size();
  OuterState next = state;
  next.nu = state.nu + 1;
  next.delta = inner.delta_out;
  OuterRecord rec;
  rec.b = inner.b;

  if (state.s < n) {
    const double f_hat = objective.value_full(inner.x_hat);
    rec.a = state.f_current - f_hat;
    rec.accepted = rec.a >= 0.0;
    if (rec.accepted) {
      next.x = inner.x_hat;
      next.f_current = f_hat;
    }
    if (!std::isfinite(rec.a)) {
      rec.tau = -kInf;
    } else {
      rec.tau = inner.b > 0.0 ? rec.a / inner.b : 0.0;
    }
    if (rec.tau < cfg.theta) {
      next.s = std::min<Index>(ceil_count(cfg.omega * static_cast<double>(state.s)), n);
      next.s_H = cfg.hessian_sample_size(next.s);
    }
  } else {
    next.x = inner.x_hat;
    next.f_current = inner.f_hat ? *inner.f_hat : objective.value_full(inner.x_hat);
    rec.accepted = true;
    next.s_H = std::min<Index>(2 * state.s_H, n);
  }
  return {std::move(next), rec};
}

RunLog run_astr(const FiniteSumObjective& problem, const AstrConfig& cfg, const CostBudget& budget,
                const Vector& x0, const RunHooks& hooks) {
  cfg.validate();
  budget.validate();
  if (x0.size() != problem.dim()) throw ContractError("run_astr: x0 has wrong dimension");

  Stopwatch clock;
  MeteredObjective objective(problem);
  const Index n = problem.size();
  const Index R_hat = cfg.max_inner(n);
  SampleStream samples(cfg.seed, n);

  OuterState state;
  state.x = x0;
  state.s = cfg.initial_sample_size(n);
  state.s_H = cfg.hessian_sample_size(state.s);
  state.delta = cfg.delta0;
  state.f_current = objective.value_full(x0);

  RunLog log;
  log.method = "astr";
  log.seed = cfg.seed;
  {
    Record row;
    row.egrads = objective.egrads();
    row.f = state.f_current;
    row.s = state.s;
    row.s_H = state.s_H;
    row.delta = state.delta;
    row.accepted = true;
    stamp(row, clock, hooks, state.x);
    log.records.push_back(row);
  }

  while (!budget.exhausted(objective.egrads(), clock.seconds(), state.nu)) {
    const int R = schedule_R(state.s, state.s_H, n, cfg.curvature_mode, cfg.alpha_bar, cfg.beta_bar, R_hat);
    const InnerResult inner = run_inner(state, R, objective, cfg, samples);
    auto [next, rec] = outer_update(state, inner, objective, cfg);

    Record row;
    row.nu = next.nu;
    row.egrads = objective.egrads();
    row.f = next.f_current;
    row.s = next.s;
    row.s_H = next.s_H;
    row.R = R;
    row.delta = next.delta;
    row.accepted = rec.accepted;
    row.tau = rec.tau;
    row.b = rec.b;
    row.a = rec.a;
    row.skipped = inner.skipped;
    row.stalled = inner.stalled;
    stamp(row, clock, hooks, next.x);
    log.records.push_back(row);

    if (!std::isfinite(next.f_current)) {
      log.status = RunStatus::diverged;
      state = std::move(next);
      break;
    }
    // With s = n a step that changes nothing will change nothing again,
    // unless a larger Hessian subsample can still give a different model.
    const bool no_step = inner.skipped + inner.stalled == R;
    const bool model_fixed = cfg.curvature_mode == CurvatureMode::none || state.s_H == n;
    if (state.s == n && no_step && (inner.stalled == 0 || model_fixed)) {
      log.status = inner.stalled == 0 ? RunStatus::converged : RunStatus::stalled;
      state = std::move(next);
      break;
    }
    state = std::move(next);
  }
  log.x_final = state.x;
  return log;
}

}  // namespace astr
