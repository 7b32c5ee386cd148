#include "astr/cost.hpp"

#include "astr/errors.hpp"

namespace astr {

double account(EvalKind kind, Index sample_size, Index n) {
  if (n < 1 || sample_size < 1 || sample_size > n) {
    throw ContractError("account: need 1 <= sample_size <= n");
  }
  const double fraction = static_cast<double>(sample_size) / static_cast<double>(n);
  return kind == EvalKind::value ? 0.5 * fraction : fraction;
}

void MeteredObjective::charge(EvalKind kind, IndexSpan sample) {
  egrads_ += account(kind, static_cast<Index>(sample.size()), problem_.size());
}

double MeteredObjective::value(const Vector& x, IndexSpan sample) {
  charge(EvalKind::value, sample);
  return problem_.value(x, sample);
}

double MeteredObjective::decrease(const Vector& x, const Vector& y, IndexSpan sample, double value_at_x) {
  charge(EvalKind::value, sample);
  return problem_.decrease(x, y, sample, value_at_x);
}

Vector MeteredObjective::gradient(const Vector& x, IndexSpan sample) {
  charge(EvalKind::gradient, sample);
  return problem_.gradient(x, sample);
}

Vector MeteredObjective::hvp(const Vector& x, IndexSpan sample, const Vector& v) {
  charge(EvalKind::hvp, sample);
  ++hvp_calls_;
  return problem_.hvp(x, sample, v);
}

}  // namespace astr
