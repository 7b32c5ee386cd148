#pragma once

#include "astr/data.hpp"
#include "astr/random.hpp"
#include "astr/runlog.hpp"
#include "astr/trs.hpp"

#include <Eigen/Dense>

#include <cmath>
#include <functional>
#include <sstream>
#include <string>
#include <vector>

namespace astr::testing {

inline double rel_err(const Vector& a, const Vector& b) {
  return (a - b).norm() / std::max(1e-12, std::max(a.norm(), b.norm()));
}

inline double rel_err(double a, double b) {
  return std::abs(a - b) / std::max(1e-300, std::max(std::abs(a), std::abs(b)));
}

inline Vector random_vector(Index d, Rng& rng, double scale = 1.0) {
  Vector v(d);
  for (Index i = 0; i < d; ++i) v[i] = scale * rng.normal();
  return v;
}

inline Eigen::MatrixXd random_symmetric(Index d, Rng& rng) {
  Eigen::MatrixXd m(d, d);
  for (Index i = 0; i < d; ++i) {
    for (Index j = 0; j < d; ++j) m(i, j) = rng.normal();
  }
  return 0.5 * (m + m.transpose());
}

// Central differences of a scalar function.
inline Vector fd_gradient(const std::function<double(const Vector&)>& f, const Vector& x, double h) {
  Vector g(x.size());
  Vector xp = x;
  for (Index i = 0; i < x.size(); ++i) {
    xp[i] = x[i] + h;
    const double up = f(xp);
    xp[i] = x[i] - h;
    const double down = f(xp);
    xp[i] = x[i];
    g[i] = (up - down) / (2.0 * h);
  }
  return g;
}

// (grad(x + h v) - grad(x - h v)) / 2h
inline Vector fd_hvp(const std::function<Vector(const Vector&)>& grad, const Vector& x, const Vector& v, double h) {
  return (grad(x + h * v) - grad(x - h * v)) / (2.0 * h);
}

// Largest model decrease along -g inside the ball, for an explicit A.
inline double cauchy_decrease(const Vector& g, const Eigen::MatrixXd& a, double delta) {
  const double gnorm = g.norm();
  const double gag = g.dot(a * g);
  double t = delta / gnorm;
  if (gag > 0.0) t = std::min(t, gnorm * gnorm / gag);
  return t * gnorm * gnorm - 0.5 * t * t * gag;
}

inline double spectral_norm(const Eigen::MatrixXd& a) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(a, Eigen::EigenvaluesOnly);
  return es.eigenvalues().cwiseAbs().maxCoeff();
}

// Random sparse dataset with about `density` of the entries set and +/-1 labels.
inline Dataset random_sparse_dataset(Index n, Index d, double density, std::uint64_t seed) {
  Rng rng(seed);
  std::vector<Eigen::Triplet<double>> entries;
  std::vector<int> labels;
  for (Index i = 0; i < n; ++i) {
    for (Index j = 0; j < d; ++j) {
      if (rng.uniform01() < density) entries.emplace_back(i, j, rng.normal());
    }
    labels.push_back(rng.uniform01() < 0.5 ? -1 : 1);
  }
  SparseRows rows(n, d);
  rows.setFromTriplets(entries.begin(), entries.end());
  rows.makeCompressed();
  return Dataset(std::move(rows), std::move(labels));
}

// CSV rows of a log without the wall-clock column.
inline std::vector<std::string> numeric_rows(const RunLog& log) {
  std::istringstream in(to_csv(log));
  std::vector<std::string> rows;
  for (std::string line; std::getline(in, line);) {
    const auto first = line.find(',');
    const auto second = line.find(',', first + 1);
    rows.push_back(line.substr(0, first) + line.substr(second));
  }
  return rows;
}

}  // namespace astr::testing
