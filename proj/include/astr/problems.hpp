#pragma once

#include "astr/data.hpp"
#include "astr/types.hpp"

#include <cstdint>
#include <optional>
#include <string>

namespace astr {

// F_S(x) = (1/|S|) sum_{i in S} f_i(x) over a fixed set of n points.
// Implementations are pure in (x, S); `threads` only changes how a sum is
// cut into blocks, never which terms are summed.
class FiniteSumObjective {
 public:
  explicit FiniteSumObjective(Index n);
  virtual ~FiniteSumObjective() = default;

  Index size() const { return n_; }
  virtual Index dim() const = 0;
  virtual std::string name() const = 0;

  virtual double value(const Vector& x, IndexSpan sample) const = 0;
  virtual Vector gradient(const Vector& x, IndexSpan sample) const = 0;
  virtual Vector hvp(const Vector& x, IndexSpan sample, const Vector& v) const = 0;

  // F_S(x) - F_S(y). The default subtracts value(y) from `value_at_x`
  // (F_S(x), already known to callers); overrides work from y - x directly
  // and stay accurate when the difference is far below the rounding of F.
  virtual double decrease(const Vector& x, const Vector& y, IndexSpan sample, double value_at_x) const;

  double value_full(const Vector& x) const { return value(x, all_indices()); }
  Vector gradient_full(const Vector& x) const { return gradient(x, all_indices()); }

  // Fraction of points classified correctly (all n points).
  virtual double accuracy(const Vector& x) const = 0;

  // Stable identity of the objective (type, hyper-parameters, data).
  virtual std::uint64_t fingerprint() const = 0;

  IndexSpan all_indices() const { return all_; }

  void set_threads(int threads) { threads_ = std::max(1, threads); }
  int threads() const { return threads_; }

 protected:
  void check_args(const Vector& x, IndexSpan sample) const;

 private:
  Index n_;
  IndexList all_;
  int threads_ = 1;
};

// Binary targets for a two-class dataset: the smaller class label maps to
// `negative`, the larger to `positive`. A single-class dataset maps to
// `positive` when its label is > 0.
std::vector<double> binary_targets(const Dataset& data, IndexSpan rows, double negative, double positive);

// (1/|S|) sum log(1 + exp(-y_i x'z_i)) + lambda |x|^2, y in {-1, +1}.
class LogisticRegressionProblem final : public FiniteSumObjective {
 public:
  LogisticRegressionProblem(SparseRows features, std::vector<double> labels, double lambda);
  // Rows `rows` of `data`; lambda defaults to 1/|rows|.
  LogisticRegressionProblem(const Dataset& data, IndexSpan rows, std::optional<double> lambda = std::nullopt);

  Index dim() const override { return features_.cols(); }
  std::string name() const override { return "logistic"; }
  double value(const Vector& x, IndexSpan sample) const override;
  Vector gradient(const Vector& x, IndexSpan sample) const override;
  Vector hvp(const Vector& x, IndexSpan sample, const Vector& v) const override;
  double decrease(const Vector& x, const Vector& y, IndexSpan sample, double value_at_x) const override;
  double accuracy(const Vector& x) const override;
  std::uint64_t fingerprint() const override { return fingerprint_; }

  double lambda() const { return lambda_; }

 private:
  SparseRows features_;
  std::vector<double> labels_;
  double lambda_;
  std::uint64_t fingerprint_;
};

// (1/|S|) sum (y_i - sigmoid(x'z_i))^2, y in {0, 1}. Nonconvex.
class SigmoidLeastSquaresProblem final : public FiniteSumObjective {
 public:
  SigmoidLeastSquaresProblem(SparseRows features, std::vector<double> labels);
  SigmoidLeastSquaresProblem(const Dataset& data, IndexSpan rows);

  Index dim() const override { return features_.cols(); }
  std::string name() const override { return "nls"; }
  double value(const Vector& x, IndexSpan sample) const override;
  Vector gradient(const Vector& x, IndexSpan sample) const override;
  Vector hvp(const Vector& x, IndexSpan sample, const Vector& v) const override;
  double decrease(const Vector& x, const Vector& y, IndexSpan sample, double value_at_x) const override;
  double accuracy(const Vector& x) const override;
  std::uint64_t fingerprint() const override { return fingerprint_; }

 private:
  SparseRows features_;
  std::vector<double> labels_;
  std::uint64_t fingerprint_;
};

// Fully connected net: inputs -> logistic hidden layer -> softmax output,
// mean cross-entropy. Weights are flattened as
//   [ W1 (hidden x inputs, column-major) | b1 | W2 (classes x hidden, column-major) | b2 ].
// Hessian-vector products use the R-operator (forward-over-reverse).
class TwoLayerNetProblem final : public FiniteSumObjective {
 public:
  using DenseRows = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

  TwoLayerNetProblem(DenseRows features, std::vector<int> labels, Index hidden, Index classes);
  // Class labels must be 0..classes-1; classes defaults to max label + 1.
  TwoLayerNetProblem(const Dataset& data, IndexSpan rows, Index hidden = 100,
                     std::optional<Index> classes = std::nullopt);

  static Index weight_count(Index inputs, Index hidden, Index classes) {
    return hidden * inputs + hidden + classes * hidden + classes;
  }

  Index dim() const override { return weight_count(inputs_, hidden_, classes_); }
  std::string name() const override { return "nn"; }
  double value(const Vector& x, IndexSpan sample) const override;
  Vector gradient(const Vector& x, IndexSpan sample) const override;
  Vector hvp(const Vector& x, IndexSpan sample, const Vector& v) const override;
  double accuracy(const Vector& x) const override;
  std::uint64_t fingerprint() const override { return fingerprint_; }

  Index inputs() const { return inputs_; }
  Index hidden() const { return hidden_; }
  Index classes() const { return classes_; }

  // Pre-softmax outputs, one row per sampled point.
  Eigen::MatrixXd logits(const Vector& x, IndexSpan sample) const;

 private:
  struct Forward;
  Forward forward(const Vector& x, IndexSpan sample) const;
  Eigen::MatrixXd gather(IndexSpan sample) const;

  DenseRows features_;
  std::vector<int> labels_;
  Index inputs_;
  Index hidden_;
  Index classes_;
  std::uint64_t fingerprint_;
};

// f_i(x) = 1/2 sum_j h_j (x_j - c_ij)^2 with a shared positive diagonal h.
// Exactly quadratic; used for checks where the model must be exact.
class QuadraticProblem final : public FiniteSumObjective {
 public:
  QuadraticProblem(Eigen::MatrixXd centers, Vector curvature);  // centers: n x d

  Index dim() const override { return curvature_.size(); }
  std::string name() const override { return "quadratic"; }
  double value(const Vector& x, IndexSpan sample) const override;
  Vector gradient(const Vector& x, IndexSpan sample) const override;
  Vector hvp(const Vector& x, IndexSpan sample, const Vector& v) const override;
  double decrease(const Vector& x, const Vector& y, IndexSpan sample, double value_at_x) const override;
  double accuracy(const Vector&) const override { return 0.0; }
  std::uint64_t fingerprint() const override { return fingerprint_; }

 private:
  Eigen::MatrixXd centers_;
  Vector curvature_;
  std::uint64_t fingerprint_;
};

}  // namespace astr
