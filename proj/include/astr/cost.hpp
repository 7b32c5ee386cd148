#pragma once

#include "astr/problems.hpp"

namespace astr {

enum class EvalKind { value, gradient, hvp };

// Effective gradient evaluations for one evaluation over `sample_size` of the
// n points: a full gradient is 1, a full value 0.5, a Hessian-vector product
// costs like a gradient over the same points.
double account(EvalKind kind, Index sample_size, Index n);

// Forwards to a FiniteSumObjective and charges every call to a running
// egrad total.
class MeteredObjective {
 public:
  explicit MeteredObjective(const FiniteSumObjective& problem) : problem_(problem) {}

  const FiniteSumObjective& problem() const { return problem_; }
  Index size() const { return problem_.size(); }
  Index dim() const { return problem_.dim(); }
  IndexSpan all_indices() const { return problem_.all_indices(); }

  double value(const Vector& x, IndexSpan sample);
  Vector gradient(const Vector& x, IndexSpan sample);
  Vector hvp(const Vector& x, IndexSpan sample, const Vector& v);
  // Charged as one value evaluation at y.
  double decrease(const Vector& x, const Vector& y, IndexSpan sample, double value_at_x);
  double value_full(const Vector& x) { return value(x, all_indices()); }
  Vector gradient_full(const Vector& x) { return gradient(x, all_indices()); }

  double egrads() const { return egrads_; }
  long long hvp_calls() const { return hvp_calls_; }

 private:
  void charge(EvalKind kind, IndexSpan sample);

  const FiniteSumObjective& problem_;
  double egrads_ = 0.0;
  long long hvp_calls_ = 0;
};

}  // namespace astr
