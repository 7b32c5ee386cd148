#pragma once

#include "astr/types.hpp"

#include <chrono>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <limits>
#include <string>
#include <string_view>
#include <vector>

namespace astr {

inline constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();
inline constexpr double kInf = std::numeric_limits<double>::infinity();

// Exact CSV header of every run log.
inline constexpr std::string_view kCsvHeader = "nu,seconds,egrads,f,gap,test_acc,s,s_H,R,delta,accepted,tau,b,a";

// One logged row. Fields a method does not define stay NaN (or 0 for counts).
struct Record {
  long long nu = 0;
  double seconds = 0.0;
  double egrads = 0.0;  // cumulative
  double f = kNaN;
  double gap = kNaN;
  double test_acc = kNaN;
  Index s = 0;
  Index s_H = 0;
  long long R = 0;
  double delta = kNaN;
  bool accepted = false;
  double tau = kNaN;
  double b = kNaN;
  double a = kNaN;

  // Not written to CSV.
  int skipped = 0;  // inner iterations skipped by the gradient-norm test
  int stalled = 0;  // inner iterations whose step could not be measured
};

enum class RunStatus {
  budget_exhausted,
  converged,  // fixed point: no further step possible
  stalled,    // steps below floating-point resolution
  diverged,   // non-finite iterate or objective
};

std::string_view to_string(RunStatus status);

struct RunLog {
  std::string method;
  std::uint64_t seed = 0;
  RunStatus status = RunStatus::budget_exhausted;
  std::vector<Record> records;
  Vector x_final;
  std::vector<double> snapshot_gradient_norms;  // SVRG: |grad F(x~)| per epoch

  // Fill gap = f - f_star on every row.
  void set_reference(double f_star);
  const Record& last() const { return records.back(); }
};

// %.17g; nan/inf spelled "nan"/"inf".
std::string format_double(double value);
void write_csv(std::ostream& out, const RunLog& log);
std::string to_csv(const RunLog& log);

// Limits on a run; the first one reached ends it.
struct CostBudget {
  double max_egrads = kInf;
  double max_seconds = kInf;
  long long max_iterations = std::numeric_limits<long long>::max();

  static CostBudget egrads(double limit) { return {limit, kInf, std::numeric_limits<long long>::max()}; }

  void validate() const;
  bool exhausted(double egrads, double seconds, long long iterations) const {
    return egrads >= max_egrads || seconds >= max_seconds || iterations >= max_iterations;
  }
};

// Wall clock that can exclude bookkeeping (test accuracy) from the total.
class Stopwatch {
 public:
  Stopwatch() : start_(Clock::now()) {}
  double seconds() const;
  void pause() { paused_at_ = Clock::now(); }
  void resume() { excluded_ += Clock::now() - paused_at_; }

 private:
  using Clock = std::chrono::steady_clock;
  Clock::time_point start_;
  Clock::time_point paused_at_{};
  Clock::duration excluded_{};
};

// Optional per-record monitoring, evaluated off the clock and off budget.
struct RunHooks {
  std::function<double(const Vector&)> test_accuracy;
};

// Stamps seconds and test accuracy onto a record.
void stamp(Record& record, Stopwatch& clock, const RunHooks& hooks, const Vector& x);

}  // namespace astr
