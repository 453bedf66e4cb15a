#pragma once

#include <Eigen/Dense>
#include <optional>
#include <span>

namespace foagp {

enum class KernelFamily { SquaredExponential, Periodic };

/// Base stationary kernel. SE: exp(-(a-b)^2 / (2 theta^2)).
/// Periodic: exp(-theta^2 sin^2(pi (a-b) / period)).
struct KernelSpec {
  KernelFamily family = KernelFamily::SquaredExponential;
  double theta = 1.0;
  double period = 1.0;

  static KernelSpec squared_exponential(double theta) {
    return {KernelFamily::SquaredExponential, theta, 1.0};
  }
  static KernelSpec periodic(double theta, double period) {
    return {KernelFamily::Periodic, theta, period};
  }

  /// Throws InvalidInput when theta or period is not a positive finite number.
  void validate() const;
};

/// Empirical kernel moments of one training column, frozen at fit time. The excesses
/// (moments minus one) are what the orthogonal kernel is built from; near-constant kernels
/// lose all precision if k - m m / mbar is formed from the moments themselves.
struct MomentCache {
  Eigen::VectorXd row_means;   // m_u = mean_v k(x_u, x_v)
  double grand_mean = 0.0;     // mean of row_means
  Eigen::VectorXd row_excess;  // m_u - 1, accumulated from k - 1
  double grand_excess = 0.0;   // mbar - 1
  Eigen::VectorXd column;      // training values the moments came from
};

/// Smallest grand mean accepted before the orthogonal kernel is declared degenerate.
inline constexpr double kGrandMeanFloor = 1e-12;

double eval_base(const KernelSpec& spec, double a, double b);

/// k(a,b) - 1 without cancellation (expm1).
double eval_excess(const KernelSpec& spec, double a, double b);

/// d k(a,b) / d log(theta).
double eval_base_dlogtheta(const KernelSpec& spec, double a, double b);

MomentCache build_moments(const KernelSpec& spec, std::span<const double> column);
MomentCache build_moments(const KernelSpec& spec, const Eigen::VectorXd& column);

/// m(a) = mean over the cached training column of k(a, x_v).
double moment_at(const KernelSpec& spec, const MomentCache& cache, double a);

/// Orthogonal kernel k(a,b) - m(a) m(b) / mbar against the cached empirical moments.
double eval_orthogonal(const KernelSpec& spec, const MomentCache& cache, double a, double b);

/// Pairwise kernel matrix. Orthogonal kernel when a cache is given, base kernel otherwise.
Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const MomentCache* cache,
                              const Eigen::VectorXd& rows, const Eigen::VectorXd& cols);

/// Orthogonal-kernel evaluations of one point against the cached training column.
Eigen::VectorXd orthogonal_vector(const KernelSpec& spec, const MomentCache& cache, double a);

/// Base-kernel evaluations of one point against a column.
Eigen::VectorXd base_vector(const KernelSpec& spec, double a, const Eigen::VectorXd& column);

/// Derivative w.r.t. log(theta) of the training Gram matrix. The orthogonal kernel is
/// differentiated with its moments, which also depend on theta.
Eigen::MatrixXd kernel_matrix_dlogtheta(const KernelSpec& spec, bool orthogonal,
                                        const Eigen::VectorXd& column);

/// Training Gram matrix of the orthogonal kernel together with its moment cache, built
/// from a single pass of base-kernel evaluations. Bit-identical to build_moments followed by
/// kernel_matrix on the same column.
struct TrainingGram {
  MomentCache cache;
  Eigen::MatrixXd gram;
};

/// When `dlogtheta` is non-null it receives the derivative of the Gram matrix w.r.t.
/// log(theta), moments included, from the same pass of kernel evaluations.
TrainingGram orthogonal_training_gram(const KernelSpec& spec, const Eigen::VectorXd& column,
                                      Eigen::MatrixXd* dlogtheta = nullptr);

/// Repeated Gram evaluations of one training column at varying theta, as needed by the
/// likelihood optimizer. Pair distances are computed once. Results are bit-identical to
/// orthogonal_training_gram (orthogonal) and kernel_matrix without a cache (base).
class PairwiseKernel {
 public:
  PairwiseKernel(KernelFamily family, double period, const Eigen::VectorXd& column);

  /// Gram matrix (orthogonal or base) at theta; derivative w.r.t. log(theta) when requested.
  void evaluate(double theta, bool orthogonal, Eigen::MatrixXd& gram,
                Eigen::MatrixXd* dlogtheta) const;

 private:
  KernelFamily family_;
  Eigen::ArrayXXd base_;  // r^2 / 2 (SE) or sin^2(pi r / T) (periodic)
};

}  // namespace foagp
