#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "foagp/effects.hpp"
#include "foagp/fit.hpp"

namespace foagp {

/// Empirical variance estimators over the training inputs. Holds the subset-independent
/// matrix squares delta_i^4 K_i^2 / N and delta_t^4 K_t^2 / N (R_i^2 / m, R_t^2 / n on grids).
class VarianceEngine {
 public:
  explicit VarianceEngine(const FittedModel& model);

  /// Local variance V_u(t); zero for the empty subset.
  double local_variance(const EffectIndex& u, double t) const;
  /// Global (expected conditional) variance V_u averaged over training positions.
  double global_variance(const EffectIndex& u) const;

  Eigen::VectorXd local_variance_curve(const EffectIndex& u, const Eigen::VectorXd& t_grid) const;

  /// Local curve over t_grid and global variance sharing one subset matrix.
  std::pair<Eigen::VectorXd, double> subset_variances(const EffectIndex& u,
                                                      const Eigen::VectorXd& t_grid) const;

  const FittedModel& model() const { return model_; }

 private:
  Eigen::MatrixXd subset_matrix(const EffectIndex& u) const;
  Eigen::VectorXd position_weights(double t) const;
  double local_with(const Eigen::MatrixXd& Mu, double t) const;
  double global_with(const Eigen::MatrixXd& Mu) const;

  const FittedModel& model_;
  std::vector<Eigen::MatrixXd> input_squares_;
  Eigen::MatrixXd output_square_;
};

double local_variance(const FittedModel& model, const EffectIndex& u, double t);
double global_variance(const FittedModel& model, const EffectIndex& u);

struct SensitivityReport {
  Eigen::VectorXd t_grid;
  std::vector<EffectIndex> subsets;  // non-empty subsets, enumeration order
  Eigen::MatrixXd local_variance;    // t x subsets, clamped at 0
  Eigen::VectorXd global_variance;   // per subset, clamped at 0
  Eigen::MatrixXd local_sobol;       // t x subsets; NaN at degenerate positions
  Eigen::VectorXd ecv_index;         // per subset
  Eigen::VectorXd total_local_variance;
  double total_global_variance = 0.0;
  bool complete = false;
  Eigen::Index dims = 0;
  std::vector<std::string> warnings;

  std::vector<std::string> names() const;
  /// Position of a subset in `subsets`, or -1.
  Eigen::Index find(const EffectIndex& u) const;
};

/// Relative floor (times the training response variance) below which a total variance is
/// treated as degenerate and its indices are NaN.
inline constexpr double kDegenerateVariance = 1e-14;

SensitivityReport sensitivity_report(const FittedModel& model, int max_order,
                                     const Eigen::VectorXd& t_grid);

struct LocalSobol {
  Eigen::VectorXd t_grid;
  std::vector<EffectIndex> subsets;
  Eigen::MatrixXd values;
  std::vector<std::string> warnings;
};

struct EcvIndices {
  std::vector<EffectIndex> subsets;
  Eigen::VectorXd values;
  std::vector<std::string> warnings;

  double at(const EffectIndex& u) const;
};

LocalSobol local_sobol(const FittedModel& model, int max_order, const Eigen::VectorXd& t_grid);
EcvIndices ecv_indices(const FittedModel& model, int max_order);

/// count equispaced points over [lo, hi].
Eigen::VectorXd linspace(double lo, double hi, Eigen::Index count);

/// 101 points spanning the training positions.
Eigen::VectorXd default_t_grid(const FittedModel& model);

}  // namespace foagp
