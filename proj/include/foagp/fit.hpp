#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "foagp/covariance.hpp"
#include "foagp/data.hpp"
#include "foagp/kernel.hpp"

namespace foagp {

enum class OptimizerKind { Lbfgs, Simplex };

struct FitConfig {
  KernelFamily output_family = KernelFamily::SquaredExponential;
  double period = 1.0;
  int restarts = 8;
  std::uint64_t seed = 0;
  int max_iterations = 500;
  double tolerance = 1e-8;
  OptimizerKind optimizer = OptimizerKind::Lbfgs;
  bool force_dense = false;
  int threads = 0;  // 0: FOAGP_THREADS or hardware concurrency
};

struct RestartLog {
  int index = 0;
  double initial_objective = 0.0;
  double final_objective = 0.0;
  int iterations = 0;
  int evaluations = 0;
  int failed_evaluations = 0;
  bool converged = false;
  std::string error;
};

struct FitLog {
  std::string path;  // "dense" or "grid"
  std::vector<RestartLog> restarts;
  int best_restart = -1;
  double wall_seconds = 0.0;
  std::vector<std::string> warnings;
};

/// Immutable fitted model: training data, hyperparameters, frozen moment caches, Gram matrices,
/// covariance factorization and weights gamma = K^-1 (y - y_mean).
class FittedModel {
 public:
  enum class Layout { Dense, Grid };

  /// Builds a model at fixed hyperparameters; sigma2 is replaced by its profile estimate.
  static FittedModel build(const Dataset& data, HyperParams params, KernelFamily output_family);
  static FittedModel build(const GridDataset& grid, HyperParams params,
                           KernelFamily output_family);

  /// Rebuilds a saved model. Kernel matrices and the factorization are recomputed; the stored
  /// weights and y_mean are used as-is so predictions match the saved model bit-for-bit.
  static FittedModel restore(const Dataset& data, const HyperParams& params,
                             KernelFamily output_family, double y_mean, Eigen::VectorXd gamma);
  static FittedModel restore(const GridDataset& grid, const HyperParams& params,
                             KernelFamily output_family, double y_mean, Eigen::VectorXd gamma);

  Layout layout() const { return layout_; }
  bool is_grid() const { return layout_ == Layout::Grid; }
  Eigen::Index dims() const { return params_.dims(); }
  /// Number of training responses N (m*n for grids).
  Eigen::Index size() const { return gamma_.size(); }

  const HyperParams& params() const { return params_; }
  KernelSpec input_spec(Eigen::Index i) const;
  KernelSpec output_spec() const;
  const MomentCache& moments(Eigen::Index i) const { return moments_[static_cast<std::size_t>(i)]; }
  const std::vector<MomentCache>& moments() const { return moments_; }

  /// K_i (dense, N x N) or R_i (grid, m x m).
  const std::vector<Eigen::MatrixXd>& input_grams() const { return input_grams_; }
  /// K_t (dense) or R_t (grid).
  const Eigen::MatrixXd& output_gram() const { return output_gram_; }

  /// Training values of input dimension i: X_i (dense) or chi_i (grid).
  const Eigen::VectorXd& input_column(Eigen::Index i) const {
    return moments_[static_cast<std::size_t>(i)].column;
  }
  /// Training positions: T (dense) or tau (grid).
  const Eigen::VectorXd& output_column() const { return output_column_; }

  const Dataset& dataset() const;
  const GridDataset& grid() const;

  const Factorization& factorization() const { return *fact_; }
  const Eigen::VectorXd& gamma() const { return gamma_; }
  /// gamma as an m x n matrix (grid layout only).
  Eigen::MatrixXd gamma_matrix() const;
  double y_mean() const { return y_mean_; }
  double objective() const { return objective_; }

  const FitLog& log() const { return log_; }
  void set_log(FitLog log) { log_ = std::move(log); }

 private:
  FittedModel() = default;
  void assemble(KernelFamily output_family, const Eigen::MatrixXd& input_columns,
                const Eigen::VectorXd& output_column);

  Layout layout_ = Layout::Dense;
  Dataset data_;
  GridDataset grid_;
  HyperParams params_;
  KernelFamily output_family_ = KernelFamily::SquaredExponential;
  std::vector<MomentCache> moments_;
  std::vector<Eigen::MatrixXd> input_grams_;
  Eigen::MatrixXd output_gram_;
  Eigen::VectorXd output_column_;
  std::optional<Factorization> fact_;
  Eigen::VectorXd gamma_;
  double y_mean_ = 0.0;
  double objective_ = 0.0;
  FitLog log_;
};

/// sigma2_hat = y^T K^-1 y / N. The grid path works on vec(V^T Y U) only.
double profile_sigma2(const Factorization& fact, const Eigen::VectorXd& y_centered);

/// N log(sigma2_hat) + log|K| at the given delta/theta (sigma2 ignored), after centering y.
/// Returns +infinity (and emits a warning) when the covariance cannot be factorized.
double objective(const HyperParams& phi, const Dataset& data, KernelFamily output_family);
double objective(const HyperParams& phi, const GridDataset& grid, KernelFamily output_family);

/// Multi-start maximum-likelihood fit. Grid data uses the Kronecker path unless force_dense.
FittedModel fit(const Dataset& data, const FitConfig& config);
FittedModel fit(const GridDataset& grid, const FitConfig& config);

/// Log-parameter vector [log delta..., log theta...] used by the optimizer.
Eigen::VectorXd to_log_params(const HyperParams& params);
HyperParams from_log_params(const Eigen::VectorXd& logp, Eigen::Index dims, double period);

/// Objective and gradient w.r.t. the log-parameters. Exposed for gradient checks.
/// Copies share the precomputed pairwise distances.
class LikelihoodObjective {
 public:
  LikelihoodObjective(const Dataset& data, KernelFamily output_family, double period);
  LikelihoodObjective(const GridDataset& grid, KernelFamily output_family, double period);

  double operator()(const Eigen::VectorXd& logp, Eigen::VectorXd* grad);
  Eigen::Index dims() const { return dims_; }
  int failures() const { return failures_; }
  const std::string& last_error() const { return last_error_; }

 private:
  double dense(const HyperParams& p, Eigen::VectorXd* grad);
  double gridded(const HyperParams& p, Eigen::VectorXd* grad);
  void make_kernels();

  bool grid_mode_ = false;
  Eigen::Index dims_ = 0;
  KernelFamily output_family_;
  double period_;
  Eigen::MatrixXd inputs_;  // X (N x d) or chi (m x d)
  Eigen::VectorXd positions_;
  Eigen::VectorXd y_;  // centered, position-major for grids
  Eigen::MatrixXd Y_;  // centered m x n (grid)
  std::shared_ptr<const std::vector<PairwiseKernel>> kernels_;  // inputs, then output
  int failures_ = 0;
  std::string last_error_;
};

/// Receives warnings from the library. Defaults to stderr.
void set_warning_sink(std::function<void(const std::string&)> sink);
void warn(const std::string& message);

/// Keeps large temporaries on the heap instead of fresh mappings (glibc only; no-op elsewhere).
/// Process-wide, so left to executables to call.
void tune_allocator();

/// Effective worker cap: explicit request, else FOAGP_THREADS, else hardware concurrency.
int thread_cap(int requested);

}  // namespace foagp
