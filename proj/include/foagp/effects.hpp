#pragma once

#include <Eigen/Dense>
#include <string>
#include <vector>

#include "foagp/fit.hpp"

namespace foagp {

/// Input subset u of {1..d}, 1-based and sorted. Empty means the mean effect f0(t).
struct EffectIndex {
  std::vector<int> indices;

  EffectIndex() = default;
  explicit EffectIndex(std::vector<int> idx) : indices(std::move(idx)) {}

  bool empty() const { return indices.empty(); }
  std::size_t order() const { return indices.size(); }
  bool contains(int i) const;

  /// Throws Index unless the indices are unique, sorted and within 1..d.
  void validate(Eigen::Index dims) const;

  /// "f0", "f1", "f12"; indices are separated by '_' when d >= 10 ("f1_10").
  std::string name(Eigen::Index dims) const;
  static EffectIndex parse(const std::string& name, Eigen::Index dims);

  friend bool operator==(const EffectIndex&, const EffectIndex&) = default;
};

/// Upper bound on enumerated subsets before decompose refuses.
inline constexpr double kMaxSubsets = 1e6;

/// Empty set first, then subsets by increasing order in lexicographic order.
std::vector<EffectIndex> enumerate_subsets(Eigen::Index dims, int max_order);

inline int default_max_order(Eigen::Index dims) { return static_cast<int>(std::min<Eigen::Index>(dims, 3)); }

/// Full prediction f(x, t) in original response units.
double predict(const FittedModel& model, const Eigen::VectorXd& x, double t);

/// Effect prediction f_u(x_u, t). Reads only the coordinates of x listed in u. The mean effect
/// includes y_mean so effects add up to predict().
double predict_effect(const FittedModel& model, const EffectIndex& u, const Eigen::VectorXd& x,
                      double t);

struct EffectTable {
  Eigen::MatrixXd X;
  Eigen::VectorXd T;
  std::vector<EffectIndex> subsets;
  Eigen::MatrixXd values;  // points x subsets
  Eigen::VectorXd total;   // predict() at each point
  bool complete = false;   // all 2^d subsets present
  std::vector<std::string> warnings;

  std::vector<std::string> names() const;
  /// Largest |total - sum of effects| over points; meaningful when complete.
  double max_sum_residual() const;
};

EffectTable decompose(const FittedModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& T,
                      int max_order);

}  // namespace foagp
