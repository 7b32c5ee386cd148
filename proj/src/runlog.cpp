#include "astr/runlog.hpp"

#include "astr/errors.hpp"

#include <cmath>
#include <cstdio>
#include <ostream>
#include <sstream>

namespace astr {

std::string_view to_string(RunStatus status) {
  switch (status) {
    case RunStatus::budget_exhausted: return "budget_exhausted";
    case RunStatus::converged: return "converged";
    case RunStatus::stalled: return "stalled";
    case RunStatus::diverged: return "diverged";
  }
  return "unknown";
}

void RunLog::set_reference(double f_star) {
  for (Record& r : records) r.gap = r.f - f_star;
}

std::string format_double(double value) {
  if (std::isnan(value)) return "nan";
  if (std::isinf(value)) return value > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.17g", value);
  return buf;
}

void write_csv(std::ostream& out, const RunLog& log) {
  out << kCsvHeader << '\n';
  for (const Record& r : log.records) {
    out << r.nu << ',' << format_double(r.seconds) << ',' << format_double(r.egrads) << ','
        << format_double(r.f) << ',' << format_double(r.gap) << ',' << format_double(r.test_acc) << ','
        << r.s << ',' << r.s_H << ',' << r.R << ',' << format_double(r.delta) << ','
        << (r.accepted ? 1 : 0) << ',' << format_double(r.tau) << ',' << format_double(r.b) << ','
        << format_double(r.a) << '\n';
  }
}

std::string to_csv(const RunLog& log) {
  std::ostringstream out;
  write_csv(out, log);
  return out.str();
}

void CostBudget::validate() const {
  if (std::isnan(max_egrads) || std::isnan(max_seconds) || max_egrads < 0.0 || max_seconds < 0.0 ||
      max_iterations < 0) {
    throw ContractError("CostBudget: limits must be nonnegative");
  }
  if (std::isinf(max_egrads) && std::isinf(max_seconds) &&
      max_iterations == std::numeric_limits<long long>::max()) {
    throw ContractError("CostBudget: at least one limit must be finite");
  }
}

double Stopwatch::seconds() const {
  return std::chrono::duration<double>(Clock::now() - start_ - excluded_).count();
}

void stamp(Record& record, Stopwatch& clock, const RunHooks& hooks, const Vector& x) {
  record.seconds = clock.seconds();
  if (hooks.test_accuracy) {
    clock.pause();
    record.test_acc = hooks.test_accuracy(x);
    clock.resume();
  }
}

}  // namespace astr
