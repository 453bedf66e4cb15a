#pragma once

#include <Eigen/Dense>
#include <variant>
#include <vector>

namespace foagp {

/// Variance weights and kernel parameters of the covariance
///   sigma2 * (delta0^2 I + delta_t^2 K_t . prod_i (1 1^T + delta_i^2 K_i)).
/// delta = [delta0, delta_1..delta_d, delta_t]; theta = [theta_1..theta_d, theta_t].
struct HyperParams {
  Eigen::VectorXd delta;
  Eigen::VectorXd theta;
  double sigma2 = 1.0;
  double period = 1.0;

  Eigen::Index dims() const { return theta.size() - 1; }
  double nugget() const { return delta[0]; }
  double input_delta(Eigen::Index i) const { return delta[1 + i]; }
  double output_delta() const { return delta[delta.size() - 1]; }
  double input_theta(Eigen::Index i) const { return theta[i]; }
  double output_theta() const { return theta[theta.size() - 1]; }

  /// Checks sizes (d+2 deltas, d+1 thetas) and strict positivity.
  void validate() const;
};

/// Dense correlation-scale covariance K (sigma2 factored out).
Eigen::MatrixXd assemble_dense(const std::vector<Eigen::MatrixXd>& input_grams,
                               const Eigen::MatrixXd& output_gram, const HyperParams& params);

/// Kronecker factors of grid covariance K = delta0^2 I + C_t (x) C_x.
struct GridCovariance {
  Eigen::MatrixXd C_t;  // delta_t^2 R_t, n x n
  Eigen::MatrixXd C_x;  // prod_i (1 1^T + delta_i^2 R_i), m x m
};

GridCovariance assemble_grid(const std::vector<Eigen::MatrixXd>& input_grams,
                             const Eigen::MatrixXd& output_gram, const HyperParams& params);

/// Materializes delta0^2 I + C_t (x) C_x. Only for small grids and test oracles.
Eigen::MatrixXd materialize(const GridCovariance& cov, double nugget_variance);

/// Cholesky factorization with jitter escalation.
class DenseFactorization {
 public:
  explicit DenseFactorization(const Eigen::MatrixXd& K);

  Eigen::VectorXd solve(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd inverse() const;
  double log_det() const { return log_det_; }
  double jitter() const { return jitter_; }
  Eigen::Index size() const { return lower_.rows(); }
  const Eigen::MatrixXd& lower() const { return lower_; }

 private:
  Eigen::MatrixXd lower_;
  double log_det_ = 0.0;
  double jitter_ = 0.0;
};

/// Eigendecomposition fast path for grid covariance. Entries of S, the spectrum of K, are
/// stored position-major like vec(Y): S[v*m + u] = delta0^2 + D[v] * Lambda[u].
class GridFactorization {
 public:
  GridFactorization(const GridCovariance& cov, double nugget_variance);

  /// (U (x) V) S^-1 (U (x) V)^T y, computed as V ((V^T Y U) ./ S) U^T.
  Eigen::VectorXd apply_inverse(const Eigen::VectorXd& y) const;
  Eigen::MatrixXd apply_inverse(const Eigen::MatrixXd& Y) const;

  /// vec(V^T Y U) for the matricized response.
  Eigen::MatrixXd rotate(const Eigen::MatrixXd& Y) const;

  double log_det() const { return log_det_; }
  Eigen::Index inputs() const { return V_.rows(); }
  Eigen::Index positions() const { return U_.rows(); }
  Eigen::Index size() const { return S_.size(); }

  const Eigen::MatrixXd& U() const { return U_; }
  const Eigen::VectorXd& D() const { return D_; }
  const Eigen::MatrixXd& V() const { return V_; }
  const Eigen::VectorXd& Lambda() const { return Lambda_; }
  /// Spectrum as an m x n matrix, S(u, v) = delta0^2 + D[v] Lambda[u].
  const Eigen::MatrixXd& S() const { return S_matrix_; }
  Eigen::VectorXd S_vector() const;

 private:
  Eigen::MatrixXd U_;
  Eigen::VectorXd D_;
  Eigen::MatrixXd V_;
  Eigen::VectorXd Lambda_;
  Eigen::MatrixXd S_matrix_;
  Eigen::VectorXd S_;
  double log_det_ = 0.0;
};

using Factorization = std::variant<DenseFactorization, GridFactorization>;

double log_det(const Factorization& fact);

/// gamma = K^-1 y for either factorization; y is position-major for the grid path.
Eigen::VectorXd solve_weights(const Factorization& fact, const Eigen::VectorXd& y);

/// Reshape a position-major vector of length m*n into the m x n matrix it stacks.
Eigen::MatrixXd matricize(const Eigen::VectorXd& v, Eigen::Index m, Eigen::Index n);
Eigen::VectorXd vectorize(const Eigen::MatrixXd& M);

}  // namespace foagp
