#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <vector>

#include "foagp/covariance.hpp"
#include "foagp/data.hpp"
#include "foagp/kernel.hpp"
#include "foagp/simulators.hpp"

namespace testing {

inline Eigen::MatrixXd uniform_matrix(foagp::Rng& rng, Eigen::Index r, Eigen::Index c, double lo,
                                      double hi) {
  Eigen::MatrixXd M(r, c);
  for (Eigen::Index j = 0; j < c; ++j) {
    for (Eigen::Index i = 0; i < r; ++i) M(i, j) = rng.uniform(lo, hi);
  }
  return M;
}

inline foagp::Dataset random_dataset(Eigen::Index n, Eigen::Index d, std::uint64_t seed) {
  foagp::Rng rng(seed);
  foagp::Dataset data;
  data.X = uniform_matrix(rng, n, d, 0.0, 1.0);
  data.T = uniform_matrix(rng, n, 1, 0.0, 1.0).col(0);
  data.y.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    data.y[k] = foagp::grid_test_function(data.X.row(k).transpose(), data.T[k]) + 0.05 * rng.normal();
  }
  return data;
}

inline foagp::GridDataset random_grid(Eigen::Index m, Eigen::Index n, Eigen::Index d,
                                      std::uint64_t seed) {
  foagp::Rng rng(seed);
  foagp::GridDataset g;
  g.chi = uniform_matrix(rng, m, d, 0.0, 1.0);
  g.tau = uniform_matrix(rng, n, 1, 0.0, 1.0).col(0);
  g.Y.resize(m, n);
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index u = 0; u < m; ++u) {
      g.Y(u, v) = foagp::grid_test_function(g.chi.row(u).transpose(), g.tau[v]) + 0.05 * rng.normal();
    }
  }
  return g;
}

/// Moderate hyperparameters drawn at random.
inline foagp::HyperParams random_params(Eigen::Index d, std::uint64_t seed, double period = 1.0) {
  foagp::Rng rng(seed);
  foagp::HyperParams p;
  p.delta.resize(d + 2);
  p.theta.resize(d + 1);
  p.delta[0] = rng.uniform(0.05, 0.3);
  for (Eigen::Index i = 1; i < d + 2; ++i) p.delta[i] = rng.uniform(0.5, 2.0);
  for (Eigen::Index i = 0; i < d + 1; ++i) p.theta[i] = rng.uniform(0.2, 0.8);
  p.period = period;
  return p;
}

/// Base kernel straight from its definition, in long double.
inline long double naive_kernel(const foagp::KernelSpec& s, long double a, long double b) {
  const long double r = a - b;
  if (s.family == foagp::KernelFamily::SquaredExponential) {
    return std::exp(-r * r / (2.0L * s.theta * s.theta));
  }
  const long double sn = std::sin(3.14159265358979323846264338327950288L * r / s.period);
  return std::exp(-static_cast<long double>(s.theta) * s.theta * sn * sn);
}

/// k(a,b) - m(a) m(b) / mbar with moments averaged over `column`.
inline long double naive_orthogonal(const foagp::KernelSpec& s, const Eigen::VectorXd& column,
                                    long double a, long double b) {
  const auto n = static_cast<long double>(column.size());
  long double ma = 0, mb = 0, mbar = 0;
  for (Eigen::Index u = 0; u < column.size(); ++u) {
    ma += naive_kernel(s, a, column[u]);
    mb += naive_kernel(s, b, column[u]);
    for (Eigen::Index v = 0; v < column.size(); ++v) mbar += naive_kernel(s, column[u], column[v]);
  }
  ma /= n;
  mb /= n;
  mbar /= n * n;
  return naive_kernel(s, a, b) - ma * mb / mbar;
}

inline double rel_diff(double a, double b) {
  return std::abs(a - b) / std::max({std::abs(a), std::abs(b), 1e-300});
}

inline double max_rel_diff(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b) {
  const double scale = std::max(a.cwiseAbs().maxCoeff(), b.cwiseAbs().maxCoeff());
  return (a - b).cwiseAbs().maxCoeff() / std::max(scale, 1e-300);
}

}  // namespace testing
