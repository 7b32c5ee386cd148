#include "astr/problems.hpp"

#include "astr/errors.hpp"
#include "astr/hash.hpp"
#include "astr/parallel.hpp"

#include <cmath>

namespace astr {

FiniteSumObjective::FiniteSumObjective(Index n) : n_(n), all_(iota_indices(n)) {
  if (n < 1) throw ContractError("FiniteSumObjective: need at least one point");
}

void FiniteSumObjective::check_args(const Vector& x, IndexSpan sample) const {
  if (x.size() != dim()) throw ContractError(name() + ": x has wrong dimension");
  if (sample.empty()) throw ContractError(name() + ": empty sample");
  for (Index i : sample) {
    if (i < 0 || i >= n_) throw ContractError(name() + ": sample index out of range");
  }
}

double FiniteSumObjective::decrease(const Vector&, const Vector& y, IndexSpan sample, double value_at_x) const {
  return value_at_x - value(y, sample);
}

std::vector<double> binary_targets(const Dataset& data, IndexSpan rows, double negative, double positive) {
  const std::vector<int> classes = data.classes();
  if (classes.size() > 2) throw ContractError("binary_targets: dataset has more than two classes");
  std::vector<double> out;
  out.reserve(rows.size());
  for (Index i : rows) {
    const int label = data.labels()[static_cast<std::size_t>(i)];
    const bool is_positive = classes.size() == 2 ? label == classes[1] : label > 0;
    out.push_back(is_positive ? positive : negative);
  }
  return out;
}

namespace {

void hash_rows(detail::Fnv1a& h, const SparseRows& rows) {
  h.add(rows.rows());
  h.add(rows.cols());
  for (Index i = 0; i < rows.rows(); ++i) {
    for (SparseRows::InnerIterator it(rows, i); it; ++it) {
      h.add(it.col());
      h.add(it.value());
    }
    h.add(Index{-1});
  }
}

double sigmoid(double t) {
  if (t >= 0.0) return 1.0 / (1.0 + std::exp(-t));
  const double e = std::exp(t);
  return e / (1.0 + e);
}

// log(1 + exp(-t)) without overflow or loss of precision.
double softplus_neg(double t) {
  return t >= 0.0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

double row_dot(const SparseRows& rows, Index i, const Vector& x) {
  double s = 0.0;
  for (SparseRows::InnerIterator it(rows, i); it; ++it) s += it.value() * x(it.col());
  return s;
}

void add_row(const SparseRows& rows, Index i, double scale, Vector& out) {
  for (SparseRows::InnerIterator it(rows, i); it; ++it) out(it.col()) += scale * it.value();
}

// log(1 + exp(-t)) - log(1 + exp(-t - dt)).
double softplus_neg_drop(double t, double dt) {
  if (std::abs(dt) > 1.0) return softplus_neg(t) - softplus_neg(t + dt);
  return -std::log1p(sigmoid(-t) * std::expm1(-dt));
}

// sigmoid(t + dt) - sigmoid(t).
double sigmoid_rise(double t, double dt) {
  if (std::abs(dt) > 1.0) return sigmoid(t + dt) - sigmoid(t);
  return sigmoid(t) * sigmoid(-(t + dt)) * std::expm1(dt);
}

double sample_size(IndexSpan sample) { return static_cast<double>(sample.size()); }

}  // namespace

// ---------------------------------------------------------------------------
// Logistic regression

LogisticRegressionProblem::LogisticRegressionProblem(SparseRows features, std::vector<double> labels,
                                                     double lambda)
    : FiniteSumObjective(features.rows()),
      features_(std::move(features)),
      labels_(std::move(labels)),
      lambda_(lambda) {
  features_.makeCompressed();
  if (static_cast<Index>(labels_.size()) != features_.rows()) {
    throw ContractError("logistic: one label per row required");
  }
  for (double y : labels_) {
    if (y != 1.0 && y != -1.0) throw ContractError("logistic: labels must be +1 or -1");
  }
  if (!(lambda_ >= 0.0)) throw ContractError("logistic: lambda must be nonnegative");
  detail::Fnv1a h;
  h.add(std::string_view("logistic"));
  h.add(lambda_);
  hash_rows(h, features_);
  for (double y : labels_) h.add(y);
  fingerprint_ = h.value();
}

LogisticRegressionProblem::LogisticRegressionProblem(const Dataset& data, IndexSpan rows,
                                                     std::optional<double> lambda)
    : LogisticRegressionProblem(select_rows(data.rows(), rows), binary_targets(data, rows, -1.0, 1.0),
                                lambda.value_or(1.0 / static_cast<double>(rows.size()))) {}

double LogisticRegressionProblem::value(const Vector& x, IndexSpan sample) const {
  check_args(x, sample);
  const double loss = detail::reduce_blocks<double>(sample, threads(), [&](IndexSpan block) {
    double s = 0.0;
    for (Index i : block) s += softplus_neg(labels_[static_cast<std::size_t>(i)] * row_dot(features_, i, x));
    return s;
  });
  return loss / sample_size(sample) + lambda_ * x.squaredNorm();
}

double LogisticRegressionProblem::decrease(const Vector& x, const Vector& y, IndexSpan sample, double) const {
  check_args(x, sample);
  check_args(y, sample);
  const Vector d = y - x;
  const double loss = detail::reduce_blocks<double>(sample, threads(), [&](IndexSpan block) {
    double s = 0.0;
    for (Index i : block) {
      const double label = labels_[static_cast<std::size_t>(i)];
      s += softplus_neg_drop(label * row_dot(features_, i, x), label * row_dot(features_, i, d));
    }
    return s;
  });
  return loss / sample_size(sample) - lambda_ * d.dot(x + y);
}

Vector LogisticRegressionProblem::gradient(const Vector& x, IndexSpan sample) const {
  check_args(x, sample);
  Vector g = detail::reduce_blocks<Vector>(sample, threads(), [&](IndexSpan block) {
    Vector part = Vector::Zero(dim());
    for (Index i : block) {
      const double y = labels_[static_cast<std::size_t>(i)];
      const double t = y * row_dot(features_, i, x);
      add_row(features_, i, -y * sigmoid(-t), part);
    }
    return part;
  });
  g /= sample_size(sample);
  g += 2.0 * lambda_ * x;
  return g;
}

Vector LogisticRegressionProblem::hvp(const Vector& x, IndexSpan sample, const Vector& v) const {
  check_args(x, sample);
  if (v.size() != dim()) throw ContractError("logistic: v has wrong dimension");
  Vector hv = detail::reduce_blocks<Vector>(sample, threads(), [&](IndexSpan block) {
    Vector part = Vector::Zero(dim());
    for (Index i : block) {
      const double t = row_dot(features_, i, x);
      const double weight = sigmoid(t) * sigmoid(-t);
      add_row(features_, i, weight * row_dot(features_, i, v), part);
    }
    return part;
  });
  hv /= sample_size(sample);
  hv += 2.0 * lambda_ * v;
  return hv;
}

double LogisticRegressionProblem::accuracy(const Vector& x) const {
  Index correct = 0;
  for (Index i = 0; i < size(); ++i) {
    const double predicted = row_dot(features_, i, x) >= 0.0 ? 1.0 : -1.0;
    if (predicted == labels_[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(size());
}

// ---------------------------------------------------------------------------
// Sigmoid least squares

SigmoidLeastSquaresProblem::SigmoidLeastSquaresProblem(SparseRows features, std::vector<double> labels)
    : FiniteSumObjective(features.rows()), features_(std::move(features)), labels_(std::move(labels)) {
  features_.makeCompressed();
  if (static_cast<Index>(labels_.size()) != features_.rows()) {
    throw ContractError("nls: one label per row required");
  }
  for (double y : labels_) {
    if (y != 0.0 && y != 1.0) throw ContractError("nls: labels must be 0 or 1");
  }
  detail::Fnv1a h;
  h.add(std::string_view("nls"));
  hash_rows(h, features_);
  for (double y : labels_) h.add(y);
  fingerprint_ = h.value();
}

SigmoidLeastSquaresProblem::SigmoidLeastSquaresProblem(const Dataset& data, IndexSpan rows)
    : SigmoidLeastSquaresProblem(select_rows(data.rows(), rows), binary_targets(data, rows, 0.0, 1.0)) {}

double SigmoidLeastSquaresProblem::value(const Vector& x, IndexSpan sample) const {
  check_args(x, sample);
  const double loss = detail::reduce_blocks<double>(sample, threads(), [&](IndexSpan block) {
    double s = 0.0;
    for (Index i : block) {
      const double r = labels_[static_cast<std::size_t>(i)] - sigmoid(row_dot(features_, i, x));
      s += r * r;
    }
    return s;
  });
  return loss / sample_size(sample);
}

double SigmoidLeastSquaresProblem::decrease(const Vector& x, const Vector& y, IndexSpan sample, double) const {
  check_args(x, sample);
  check_args(y, sample);
  const Vector d = y - x;
  const double loss = detail::reduce_blocks<double>(sample, threads(), [&](IndexSpan block) {
    double s = 0.0;
    for (Index i : block) {
      const double t = row_dot(features_, i, x);
      const double dt = row_dot(features_, i, d);
      const double rise = sigmoid_rise(t, dt);
      s += rise * (2.0 * labels_[static_cast<std::size_t>(i)] - 2.0 * sigmoid(t) - rise);
    }
    return s;
  });
  return loss / sample_size(sample);
}

Vector SigmoidLeastSquaresProblem::gradient(const Vector& x, IndexSpan sample) const {
  check_args(x, sample);
  Vector g = detail::reduce_blocks<Vector>(sample, threads(), [&](IndexSpan block) {
    Vector part = Vector::Zero(dim());
    for (Index i : block) {
      const double phi = sigmoid(row_dot(features_, i, x));
      const double residual = labels_[static_cast<std::size_t>(i)] - phi;
      add_row(features_, i, -2.0 * residual * phi * (1.0 - phi), part);
    }
    return part;
  });
  g /= sample_size(sample);
  return g;
}

Vector SigmoidLeastSquaresProblem::hvp(const Vector& x, IndexSpan sample, const Vector& v) const {
  check_args(x, sample);
  if (v.size() != dim()) throw ContractError("nls: v has wrong dimension");
  Vector hv = detail::reduce_blocks<Vector>(sample, threads(), [&](IndexSpan block) {
    Vector part = Vector::Zero(dim());
    for (Index i : block) {
      const double phi = sigmoid(row_dot(features_, i, x));
      const double dphi = phi * (1.0 - phi);
      const double residual = labels_[static_cast<std::size_t>(i)] - phi;
      // r(t) = (y - phi(t))^2  =>  r'' = 2 phi'^2 - 2 (y - phi) phi' (1 - 2 phi)
      const double curvature = 2.0 * dphi * dphi - 2.0 * residual * dphi * (1.0 - 2.0 * phi);
      add_row(features_, i, curvature * row_dot(features_, i, v), part);
    }
    return part;
  });
  hv /= sample_size(sample);
  return hv;
}

double SigmoidLeastSquaresProblem::accuracy(const Vector& x) const {
  Index correct = 0;
  for (Index i = 0; i < size(); ++i) {
    const double predicted = row_dot(features_, i, x) >= 0.0 ? 1.0 : 0.0;
    if (predicted == labels_[static_cast<std::size_t>(i)]) ++correct;
  }
  return static_cast<double>(correct) / static_cast<double>(size());
}

// ---------------------------------------------------------------------------
// Two-layer network

namespace {

using Eigen::MatrixXd;

struct NetView {
  Eigen::Map<const MatrixXd> w1;
  Eigen::Map<const Vector> b1;
  Eigen::Map<const MatrixXd> w2;
  Eigen::Map<const Vector> b2;

  NetView(const Vector& x, Index inputs, Index hidden, Index classes)
      : w1(x.data(), hidden, inputs),
        b1(x.data() + hidden * inputs, hidden),
        w2(x.data() + hidden * inputs + hidden, classes, hidden),
        b2(x.data() + hidden * inputs + hidden + classes * hidden, classes) {}
};

// Writes the four blocks of a weight-shaped vector.
void pack(Vector& out, const MatrixXd& w1, const Vector& b1, const MatrixXd& w2, const Vector& b2) {
  const Index h = w1.rows();
  const Index p = w1.cols();
  const Index c = w2.rows();
  Eigen::Map<MatrixXd>(out.data(), h, p) = w1;
  out.segment(h * p, h) = b1;
  Eigen::Map<MatrixXd>(out.data() + h * p + h, c, h) = w2;
  out.segment(h * p + h + c * h, c) = b2;
}

MatrixXd logistic(const MatrixXd& a) {
  return a.unaryExpr([](double t) { return sigmoid(t); });
}

}  // namespace

struct TwoLayerNetProblem::Forward {
  MatrixXd inputs;    // m x p
  MatrixXd hidden;    // m x h
  MatrixXd logits;    // m x c
  MatrixXd prob;      // m x c
  Vector log_norm;    // m, logsumexp of each logits row
};

TwoLayerNetProblem::TwoLayerNetProblem(DenseRows features, std::vector<int> labels, Index hidden, Index classes)
    : FiniteSumObjective(features.rows()),
      features_(std::move(features)),
      labels_(std::move(labels)),
      inputs_(features_.cols()),
      hidden_(hidden),
      classes_(classes) {
  if (static_cast<Index>(labels_.size()) != features_.rows()) {
    throw ContractError("nn: one label per row required");
  }
  if (hidden_ < 1 || classes_ < 2) throw ContractError("nn: need hidden >= 1 and classes >= 2");
  for (int y : labels_) {
    if (y < 0 || y >= classes_) throw ContractError("nn: label outside 0..classes-1");
  }
  detail::Fnv1a h;
  h.add(std::string_view("nn"));
  h.add(hidden_);
  h.add(classes_);
  h.add(features_.rows());
  h.add(features_.cols());
  h.add_bytes(reinterpret_cast<const unsigned char*>(features_.data()),
              static_cast<std::size_t>(features_.size()) * sizeof(double));
  for (int y : labels_) h.add(y);
  fingerprint_ = h.value();
}

namespace {

TwoLayerNetProblem::DenseRows densify(const Dataset& data, IndexSpan rows) {
  TwoLayerNetProblem::DenseRows out = TwoLayerNetProblem::DenseRows::Zero(static_cast<Index>(rows.size()), data.dim());
  for (std::size_t k = 0; k < rows.size(); ++k) {
    for (SparseRows::InnerIterator it(data.rows(), rows[k]); it; ++it) {
      out(static_cast<Index>(k), it.col()) = it.value();
    }
  }
  return out;
}

std::vector<int> pick_labels(const Dataset& data, IndexSpan rows) {
  std::vector<int> out;
  out.reserve(rows.size());
  for (Index i : rows) out.push_back(data.labels()[static_cast<std::size_t>(i)]);
  return out;
}

Index infer_classes(const Dataset& data) {
  const std::vector<int> classes = data.classes();
  return classes.empty() ? 2 : std::max<Index>(2, classes.back() + 1);
}

}  // namespace

TwoLayerNetProblem::TwoLayerNetProblem(const Dataset& data, IndexSpan rows, Index hidden,
                                       std::optional<Index> classes)
    : TwoLayerNetProblem(densify(data, rows), pick_labels(data, rows), hidden,
                         classes.value_or(infer_classes(data))) {}

MatrixXd TwoLayerNetProblem::gather(IndexSpan sample) const {
  MatrixXd z(static_cast<Index>(sample.size()), inputs_);
  for (std::size_t k = 0; k < sample.size(); ++k) z.row(static_cast<Index>(k)) = features_.row(sample[k]);
  return z;
}

TwoLayerNetProblem::Forward TwoLayerNetProblem::forward(const Vector& x, IndexSpan sample) const {
  const NetView w(x, inputs_, hidden_, classes_);
  Forward f;
  f.inputs = gather(sample);
  f.hidden = logistic((f.inputs * w.w1.transpose()).rowwise() + w.b1.transpose());
  f.logits = (f.hidden * w.w2.transpose()).rowwise() + w.b2.transpose();
  const Vector row_max = f.logits.rowwise().maxCoeff();
  f.prob = (f.logits.colwise() - row_max).array().exp().matrix();
  const Vector row_sum = f.prob.rowwise().sum();
  f.log_norm = row_max.array() + row_sum.array().log();
  f.prob = f.prob.array().colwise() / row_sum.array();
  if (!f.prob.allFinite() || !f.log_norm.allFinite()) throw NumericError("nn: non-finite activations");
  return f;
}

Eigen::MatrixXd TwoLayerNetProblem::logits(const Vector& x, IndexSpan sample) const {
  check_args(x, sample);
  return forward(x, sample).logits;
}

double TwoLayerNetProblem::value(const Vector& x, IndexSpan sample) const {
  check_args(x, sample);
  const double loss = detail::reduce_blocks<double>(sample, threads(), [&](IndexSpan block) {
    const Forward f = forward(x, block);
    double s = 0.0;
    for (std::size_t k = 0; k < block.size(); ++k) {
      const auto row = static_cast<Index>(k);
      s += f.log_norm(row) - f.logits(row, labels_[static_cast<std::size_t>(block[k])]);
    }
    return s;
  });
  return loss / sample_size(sample);
}

Vector TwoLayerNetProblem::gradient(const Vector& x, IndexSpan sample) const {
  check_args(x, sample);
  const NetView w(x, inputs_, hidden_, classes_);
  Vector g = detail::reduce_blocks<Vector>(sample, threads(), [&](IndexSpan block) {
    const Forward f = forward(x, block);
    MatrixXd d_logits = f.prob;  // softmax - onehot
    for (std::size_t k = 0; k < block.size(); ++k) {
      d_logits(static_cast<Index>(k), labels_[static_cast<std::size_t>(block[k])]) -= 1.0;
    }
    const MatrixXd d_hidden = d_logits * w.w2;
    const MatrixXd d_pre = d_hidden.cwiseProduct(f.hidden.cwiseProduct((1.0 - f.hidden.array()).matrix()));
    Vector part(dim());
    pack(part, d_pre.transpose() * f.inputs, d_pre.colwise().sum().transpose(),
         d_logits.transpose() * f.hidden, d_logits.colwise().sum().transpose());
    return part;
  });
  g /= sample_size(sample);
  return g;
}

Vector TwoLayerNetProblem::hvp(const Vector& x, IndexSpan sample, const Vector& v) const {
  check_args(x, sample);
  if (v.size() != dim()) throw ContractError("nn: v has wrong dimension");
  const NetView w(x, inputs_, hidden_, classes_);
  const NetView dir(v, inputs_, hidden_, classes_);
  Vector hv = detail::reduce_blocks<Vector>(sample, threads(), [&](IndexSpan block) {
    const Forward f = forward(x, block);
    const MatrixXd& z = f.inputs;
    const MatrixXd& h = f.hidden;
    const MatrixXd slope = h.cwiseProduct((1.0 - h.array()).matrix());  // sigmoid'

    MatrixXd d_logits = f.prob;
    for (std::size_t k = 0; k < block.size(); ++k) {
      d_logits(static_cast<Index>(k), labels_[static_cast<std::size_t>(block[k])]) -= 1.0;
    }
    const MatrixXd d_hidden = d_logits * w.w2;

    // Forward R-pass.
    const MatrixXd r_pre = (z * dir.w1.transpose()).rowwise() + dir.b1.transpose();
    const MatrixXd r_hidden = slope.cwiseProduct(r_pre);
    const MatrixXd r_logits =
        ((r_hidden * w.w2.transpose() + h * dir.w2.transpose()).rowwise() + dir.b2.transpose());
    const Vector mean_r = f.prob.cwiseProduct(r_logits).rowwise().sum();
    const MatrixXd r_d_logits = f.prob.cwiseProduct((r_logits.colwise() - mean_r));

    // Backward R-pass.
    const MatrixXd r_d_hidden = r_d_logits * w.w2 + d_logits * dir.w2;
    const MatrixXd r_d_pre =
        r_d_hidden.cwiseProduct(slope) +
        d_hidden.cwiseProduct((1.0 - 2.0 * h.array()).matrix()).cwiseProduct(r_hidden);

    Vector part(dim());
    pack(part, r_d_pre.transpose() * z, r_d_pre.colwise().sum().transpose(),
         r_d_logits.transpose() * h + d_logits.transpose() * r_hidden,
         r_d_logits.colwise().sum().transpose());
    return part;
  });
  hv /= sample_size(sample);
  return hv;
}

double TwoLayerNetProblem::accuracy(const Vector& x) const {
  if (x.size() != dim()) throw ContractError("nn: x has wrong dimension");
  Index correct = 0;
  constexpr Index kChunk = 4096;
  const IndexSpan all = all_indices();
  for (Index start = 0; start < size(); start += kChunk) {
    const IndexSpan chunk = all.subspan(static_cast<std::size_t>(start),
                                        static_cast<std::size_t>(std::min(kChunk, size() - start)));
    const MatrixXd out = forward(x, chunk).logits;
    for (Index k = 0; k < out.rows(); ++k) {
      Index best = 0;
      out.row(k).maxCoeff(&best);
      if (best == labels_[static_cast<std::size_t>(chunk[static_cast<std::size_t>(k)])]) ++correct;
    }
  }
  return static_cast<double>(correct) / static_cast<double>(size());
}

// ---------------------------------------------------------------------------
// Quadratic

QuadraticProblem::QuadraticProblem(Eigen::MatrixXd centers, Vector curvature)
    : FiniteSumObjective(centers.rows()), centers_(std::move(centers)), curvature_(std::move(curvature)) {
  if (centers_.cols() != curvature_.size()) throw ContractError("quadratic: dimension mismatch");
  if (!(curvature_.array() > 0.0).all()) throw ContractError("quadratic: curvature must be positive");
  detail::Fnv1a h;
  h.add(std::string_view("quadratic"));
  h.add(centers_.rows());
  h.add(centers_.cols());
  h.add_bytes(reinterpret_cast<const unsigned char*>(centers_.data()),
              static_cast<std::size_t>(centers_.size()) * sizeof(double));
  h.add_bytes(reinterpret_cast<const unsigned char*>(curvature_.data()),
              static_cast<std::size_t>(curvature_.size()) * sizeof(double));
  fingerprint_ = h.value();
}

double QuadraticProblem::value(const Vector& x, IndexSpan sample) const {
  check_args(x, sample);
  double s = 0.0;
  for (Index i : sample) {
    const Vector r = x - centers_.row(i).transpose();
    s += 0.5 * r.dot(curvature_.cwiseProduct(r));
  }
  return s / sample_size(sample);
}

double QuadraticProblem::decrease(const Vector& x, const Vector& y, IndexSpan sample, double) const {
  check_args(x, sample);
  check_args(y, sample);
  const Vector hd = curvature_.cwiseProduct(y - x);
  double s = 0.0;
  for (Index i : sample) s -= hd.dot(0.5 * (x + y) - centers_.row(i).transpose());
  return s / sample_size(sample);
}

Vector QuadraticProblem::gradient(const Vector& x, IndexSpan sample) const {
  check_args(x, sample);
  Vector mean = Vector::Zero(dim());
  for (Index i : sample) mean += centers_.row(i).transpose();
  mean /= sample_size(sample);
  return curvature_.cwiseProduct(x - mean);
}

Vector QuadraticProblem::hvp(const Vector& x, IndexSpan sample, const Vector& v) const {
  check_args(x, sample);
  if (v.size() != dim()) throw ContractError("quadratic: v has wrong dimension");
  return curvature_.cwiseProduct(v);
}

}  // namespace astr
