#pragma once

#include <Eigen/Dense>
#include <cstdint>

namespace foagp {

/// Scattered functional-output samples: row u is (X(u,:), T(u)) -> y(u).
struct Dataset {
  Eigen::MatrixXd X;
  Eigen::VectorXd T;
  Eigen::VectorXd y;

  Eigen::Index size() const { return y.size(); }
  Eigen::Index dims() const { return X.cols(); }

  /// Checks N >= 2, d >= 1, consistent shapes and finite entries.
  void validate() const;
};

/// Grid-structured samples: every input row chi(u,:) observed at every position tau(v).
/// Y(u, v) is the response of input u at position v.
struct GridDataset {
  Eigen::MatrixXd chi;
  Eigen::VectorXd tau;
  Eigen::MatrixXd Y;

  Eigen::Index inputs() const { return chi.rows(); }
  Eigen::Index positions() const { return tau.size(); }
  Eigen::Index size() const { return chi.rows() * tau.size(); }
  Eigen::Index dims() const { return chi.cols(); }

  void validate() const;
};

/// Long-format view of a grid. Position-major: row v*m + u holds (chi(u,:), tau(v), Y(u,v)),
/// which is the column-stacking vec(Y).
Dataset flatten(const GridDataset& grid);

/// Rows [begin, end) of a dataset.
Dataset slice(const Dataset& data, Eigen::Index begin, Eigen::Index end);

/// Every sample repeated `times` times in order (block copies).
Dataset repeat_samples(const Dataset& data, int times);

/// FNV-1a hash over the raw bytes of all arrays, used to tie a saved model to its data.
std::uint64_t fingerprint(const Dataset& data);
std::uint64_t fingerprint(const GridDataset& grid);

}  // namespace foagp
