#include "foagp/data.hpp"

#include "foagp/error.hpp"

namespace foagp {

namespace {

bool all_finite(const Eigen::MatrixXd& m) { return m.allFinite(); }

void fnv1a(std::uint64_t& h, const double* data, Eigen::Index count) {
  const auto* bytes = reinterpret_cast<const unsigned char*>(data);
  const std::size_t n = static_cast<std::size_t>(count) * sizeof(double);
  for (std::size_t i = 0; i < n; ++i) {
    h ^= bytes[i];
    h *= 1099511628211ULL;
  }
}

}  // namespace

void Dataset::validate() const {
  if (X.cols() < 1) throw Error(ErrorKind::Shape, "dataset needs at least one input column");
  if (X.rows() != T.size() || X.rows() != y.size()) {
    throw Error(ErrorKind::Shape, "dataset X, T and y row counts differ");
  }
  if (y.size() < 2) throw Error(ErrorKind::InsufficientData, "dataset needs at least 2 samples");
  if (!all_finite(X) || !T.allFinite() || !y.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "dataset contains non-finite values");
  }
}

void GridDataset::validate() const {
  if (chi.cols() < 1) throw Error(ErrorKind::Shape, "grid needs at least one input column");
  if (Y.rows() != chi.rows() || Y.cols() != tau.size()) {
    throw Error(ErrorKind::Shape, "grid response matrix must be inputs x positions");
  }
  if (chi.rows() < 2 || tau.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "grid needs at least 2 inputs and 2 positions");
  }
  if (!all_finite(chi) || !tau.allFinite() || !all_finite(Y)) {
    throw Error(ErrorKind::InvalidInput, "grid contains non-finite values");
  }
}

Dataset flatten(const GridDataset& grid) {
  const Eigen::Index m = grid.inputs();
  const Eigen::Index n = grid.positions();
  Dataset out;
  out.X.resize(m * n, grid.dims());
  out.T.resize(m * n);
  out.y.resize(m * n);
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index u = 0; u < m; ++u) {
      const Eigen::Index r = v * m + u;
      out.X.row(r) = grid.chi.row(u);
      out.T[r] = grid.tau[v];
      out.y[r] = grid.Y(u, v);
    }
  }
  return out;
}

Dataset slice(const Dataset& data, Eigen::Index begin, Eigen::Index end) {
  if (begin < 0 || end > data.size() || begin > end) {
    throw Error(ErrorKind::Index, "dataset slice out of range");
  }
  const Eigen::Index n = end - begin;
  return Dataset{data.X.middleRows(begin, n), data.T.segment(begin, n), data.y.segment(begin, n)};
}

Dataset repeat_samples(const Dataset& data, int times) {
  const Eigen::Index n = data.size();
  Dataset out;
  out.X.resize(n * times, data.dims());
  out.T.resize(n * times);
  out.y.resize(n * times);
  for (int k = 0; k < times; ++k) {
    out.X.middleRows(k * n, n) = data.X;
    out.T.segment(k * n, n) = data.T;
    out.y.segment(k * n, n) = data.y;
  }
  return out;
}

std::uint64_t fingerprint(const Dataset& data) {
  std::uint64_t h = 14695981039346656037ULL;
  fnv1a(h, data.X.data(), data.X.size());
  fnv1a(h, data.T.data(), data.T.size());
  fnv1a(h, data.y.data(), data.y.size());
  return h;
}

std::uint64_t fingerprint(const GridDataset& grid) {
  std::uint64_t h = 14695981039346656037ULL;
  fnv1a(h, grid.chi.data(), grid.chi.size());
  fnv1a(h, grid.tau.data(), grid.tau.size());
  fnv1a(h, grid.Y.data(), grid.Y.size());
  return h;
}

}  // namespace foagp
