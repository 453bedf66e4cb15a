#include "foagp/effects.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "foagp/error.hpp"

namespace foagp {

namespace {

double binomial(Eigen::Index n, Eigen::Index k) {
  double r = 1.0;
  for (Eigen::Index i = 1; i <= k; ++i) r = r * static_cast<double>(n - k + i) / static_cast<double>(i);
  return r;
}

// Per-point ingredients: effect(u) = sum_k weights[k] * prod_{i in u} scaled[i][k].
// Dense: weights = delta_t^2 k_t .* gamma over N samples; grid: weights = delta_t^2 Gamma r_t
// over m inputs.
struct PointBasis {
  Eigen::VectorXd weights;
  std::vector<Eigen::VectorXd> scaled;  // delta_i^2 k_i, filled only for requested dims
};

PointBasis point_basis(const FittedModel& model, const Eigen::VectorXd& x, double t,
                       const std::vector<bool>& needed) {
  if (x.size() != model.dims()) {
    throw Error(ErrorKind::Shape, "point has " + std::to_string(x.size()) + " coordinates, model has " +
                                      std::to_string(model.dims()));
  }
  const HyperParams& p = model.params();
  const double dt2 = p.output_delta() * p.output_delta();
  const Eigen::VectorXd kt = base_vector(model.output_spec(), t, model.output_column());
  PointBasis b;
  if (model.is_grid()) {
    const Eigen::Map<const Eigen::MatrixXd> Gamma(model.gamma().data(), model.grid().inputs(),
                                                  model.grid().positions());
    b.weights = dt2 * (Gamma * kt);
  } else {
    b.weights = dt2 * kt.cwiseProduct(model.gamma());
  }
  b.scaled.resize(static_cast<std::size_t>(model.dims()));
  for (Eigen::Index i = 0; i < model.dims(); ++i) {
    if (!needed[static_cast<std::size_t>(i)]) continue;
    const double di2 = p.input_delta(i) * p.input_delta(i);
    b.scaled[static_cast<std::size_t>(i)] =
        di2 * orthogonal_vector(model.input_spec(i), model.moments(i), x[i]);
  }
  return b;
}

double effect_from_basis(const PointBasis& b, const EffectIndex& u, double y_mean) {
  if (u.empty()) return b.weights.sum() + y_mean;
  Eigen::VectorXd prod = b.weights;
  for (int i : u.indices) prod.array() *= b.scaled[static_cast<std::size_t>(i - 1)].array();
  return prod.sum();
}

double total_from_basis(const PointBasis& b, double y_mean) {
  Eigen::VectorXd prod = b.weights;
  for (const auto& s : b.scaled) prod.array() *= (1.0 + s.array());
  return prod.sum() + y_mean;
}

}  // namespace

bool EffectIndex::contains(int i) const {
  return std::binary_search(indices.begin(), indices.end(), i);
}

void EffectIndex::validate(Eigen::Index dims) const {
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (indices[k] < 1 || indices[k] > dims) {
      throw Error(ErrorKind::Index, "effect index " + std::to_string(indices[k]) +
                                        " outside 1.." + std::to_string(dims));
    }
    if (k > 0 && indices[k] <= indices[k - 1]) {
      throw Error(ErrorKind::Index, "effect indices must be unique and ascending");
    }
  }
}

std::string EffectIndex::name(Eigen::Index dims) const {
  if (indices.empty()) return "f0";
  std::string out = "f";
  for (std::size_t k = 0; k < indices.size(); ++k) {
    if (k > 0 && dims >= 10) out += '_';
    out += std::to_string(indices[k]);
  }
  return out;
}

EffectIndex EffectIndex::parse(const std::string& name, Eigen::Index dims) {
  if (name.size() < 2 || name[0] != 'f') throw Error(ErrorKind::Index, "bad effect name: " + name);
  if (name == "f0") return EffectIndex{};
  EffectIndex u;
  const std::string body = name.substr(1);
  if (dims >= 10) {
    std::stringstream ss(body);
    std::string tok;
    while (std::getline(ss, tok, '_')) {
      if (tok.empty() || tok.find_first_not_of("0123456789") != std::string::npos) {
        throw Error(ErrorKind::Index, "bad effect name: " + name);
      }
      u.indices.push_back(std::stoi(tok));
    }
  } else {
    for (char c : body) {
      if (c < '1' || c > '9') throw Error(ErrorKind::Index, "bad effect name: " + name);
      u.indices.push_back(c - '0');
    }
  }
  u.validate(dims);
  return u;
}

std::vector<EffectIndex> enumerate_subsets(Eigen::Index dims, int max_order) {
  if (max_order < 0 || max_order > dims) {
    throw Error(ErrorKind::InvalidInput, "max_order must lie in 0..d");
  }
  double count = 0.0;
  for (int k = 0; k <= max_order; ++k) count += binomial(dims, k);
  if (count > kMaxSubsets) {
    throw Error(ErrorKind::InvalidInput, "refusing to enumerate " + std::to_string(count) +
                                             " effect subsets; lower max_order");
  }
  std::vector<EffectIndex> out;
  out.emplace_back();
  for (int k = 1; k <= max_order; ++k) {
    std::vector<int> idx(static_cast<std::size_t>(k));
    for (int j = 0; j < k; ++j) idx[static_cast<std::size_t>(j)] = j + 1;
    while (true) {
      out.emplace_back(idx);
      int pos = k - 1;
      while (pos >= 0 && idx[static_cast<std::size_t>(pos)] == dims - (k - 1 - pos)) --pos;
      if (pos < 0) break;
      ++idx[static_cast<std::size_t>(pos)];
      for (int j = pos + 1; j < k; ++j) {
        idx[static_cast<std::size_t>(j)] = idx[static_cast<std::size_t>(j - 1)] + 1;
      }
    }
  }
  return out;
}

double predict(const FittedModel& model, const Eigen::VectorXd& x, double t) {
  const std::vector<bool> all(static_cast<std::size_t>(model.dims()), true);
  return total_from_basis(point_basis(model, x, t, all), model.y_mean());
}

double predict_effect(const FittedModel& model, const EffectIndex& u, const Eigen::VectorXd& x,
                      double t) {
  u.validate(model.dims());
  std::vector<bool> needed(static_cast<std::size_t>(model.dims()), false);
  for (int i : u.indices) needed[static_cast<std::size_t>(i - 1)] = true;
  return effect_from_basis(point_basis(model, x, t, needed), u, model.y_mean());
}

std::vector<std::string> EffectTable::names() const {
  std::vector<std::string> out;
  for (const auto& u : subsets) out.push_back(u.name(X.cols()));
  return out;
}

double EffectTable::max_sum_residual() const {
  if (values.rows() == 0) return 0.0;
  return (total - values.rowwise().sum()).cwiseAbs().maxCoeff();
}

EffectTable decompose(const FittedModel& model, const Eigen::MatrixXd& X, const Eigen::VectorXd& T,
                      int max_order) {
  if (X.rows() != T.size()) throw Error(ErrorKind::Shape, "points and positions differ in count");
  if (X.cols() != model.dims()) throw Error(ErrorKind::Shape, "points have the wrong dimension");
  EffectTable table;
  table.X = X;
  table.T = T;
  table.subsets = enumerate_subsets(model.dims(), max_order);
  table.complete = max_order == model.dims();
  if (!table.complete) {
    table.warnings.push_back("max_order " + std::to_string(max_order) + " < d = " +
                             std::to_string(model.dims()) +
                             "; effect columns will not sum to the prediction");
  }
  table.values.resize(X.rows(), static_cast<Eigen::Index>(table.subsets.size()));
  table.total.resize(X.rows());
  const std::vector<bool> all(static_cast<std::size_t>(model.dims()), true);
  for (Eigen::Index r = 0; r < X.rows(); ++r) {
    const PointBasis b = point_basis(model, X.row(r).transpose(), T[r], all);
    for (std::size_t s = 0; s < table.subsets.size(); ++s) {
      table.values(r, static_cast<Eigen::Index>(s)) = effect_from_basis(b, table.subsets[s], model.y_mean());
    }
    table.total[r] = total_from_basis(b, model.y_mean());
  }
  return table;
}

}  // namespace foagp
