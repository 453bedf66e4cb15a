#include "foagp/sensitivity.hpp"

#include <cmath>
#include <limits>

#include "foagp/error.hpp"

namespace foagp {

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

double response_scale(const FittedModel& model) {
  const Eigen::VectorXd y =
      model.is_grid() ? vectorize(model.grid().Y) : Eigen::VectorXd(model.dataset().y);
  const double var = (y.array() - y.mean()).square().mean();
  return var > 0.0 ? var : 1.0;
}

std::vector<EffectIndex> nonempty_subsets(const FittedModel& model, int max_order) {
  auto all = enumerate_subsets(model.dims(), max_order);
  all.erase(all.begin());
  return all;
}

}  // namespace

VarianceEngine::VarianceEngine(const FittedModel& model) : model_(model) {
  const HyperParams& p = model.params();
  const double n_in = static_cast<double>(model.input_column(0).size());
  const double n_out = static_cast<double>(model.output_column().size());
  for (Eigen::Index i = 0; i < model.dims(); ++i) {
    const double di2 = p.input_delta(i) * p.input_delta(i);
    const Eigen::MatrixXd& K = model.input_grams()[static_cast<std::size_t>(i)];
    Eigen::MatrixXd sq = K * K;
    sq *= (di2 * di2) / n_in;
    input_squares_.push_back(std::move(sq));
  }
  const double dt2 = p.output_delta() * p.output_delta();
  const Eigen::MatrixXd& Kt = model.output_gram();
  output_square_ = Kt * Kt;
  output_square_ *= (dt2 * dt2) / n_out;
}

Eigen::MatrixXd VarianceEngine::subset_matrix(const EffectIndex& u) const {
  u.validate(model_.dims());
  Eigen::MatrixXd M = input_squares_[static_cast<std::size_t>(u.indices.front() - 1)];
  for (std::size_t k = 1; k < u.indices.size(); ++k) {
    M.array() *= input_squares_[static_cast<std::size_t>(u.indices[k] - 1)].array();
  }
  return M;
}

// Dense: gamma .* k_t over N samples. Grid: Gamma r_t over m inputs.
Eigen::VectorXd VarianceEngine::position_weights(double t) const {
  const Eigen::VectorXd kt = base_vector(model_.output_spec(), t, model_.output_column());
  if (model_.is_grid()) {
    const Eigen::Map<const Eigen::MatrixXd> Gamma(model_.gamma().data(), model_.grid().inputs(),
                                                  model_.grid().positions());
    return Gamma * kt;
  }
  return model_.gamma().cwiseProduct(kt);
}

double VarianceEngine::local_with(const Eigen::MatrixXd& Mu, double t) const {
  const double dt2 = model_.params().output_delta() * model_.params().output_delta();
  const Eigen::VectorXd w = position_weights(t);
  return (dt2 * dt2) * w.dot(Mu * w);
}

double VarianceEngine::global_with(const Eigen::MatrixXd& Mu) const {
  if (model_.is_grid()) {
    const Eigen::Map<const Eigen::MatrixXd> Gamma(model_.gamma().data(), model_.grid().inputs(),
                                                  model_.grid().positions());
    // tr(Gamma^T Mu Gamma A) through elementwise products only.
    return ((Mu * Gamma).array() * (Gamma * output_square_).array()).sum();
  }
  const Eigen::VectorXd& g = model_.gamma();
  return g.dot((output_square_.array() * Mu.array()).matrix() * g);
}

double VarianceEngine::local_variance(const EffectIndex& u, double t) const {
  if (u.empty()) return 0.0;
  return local_with(subset_matrix(u), t);
}

double VarianceEngine::global_variance(const EffectIndex& u) const {
  if (u.empty()) return 0.0;
  return global_with(subset_matrix(u));
}

std::pair<Eigen::VectorXd, double> VarianceEngine::subset_variances(
    const EffectIndex& u, const Eigen::VectorXd& t_grid) const {
  if (u.empty()) return {Eigen::VectorXd::Zero(t_grid.size()), 0.0};
  const Eigen::MatrixXd Mu = subset_matrix(u);
  Eigen::VectorXd curve(t_grid.size());
  for (Eigen::Index k = 0; k < t_grid.size(); ++k) curve[k] = local_with(Mu, t_grid[k]);
  return {curve, global_with(Mu)};
}

Eigen::VectorXd VarianceEngine::local_variance_curve(const EffectIndex& u,
                                                     const Eigen::VectorXd& t_grid) const {
  Eigen::VectorXd out = Eigen::VectorXd::Zero(t_grid.size());
  if (u.empty()) return out;
  const Eigen::MatrixXd Mu = subset_matrix(u);
  for (Eigen::Index k = 0; k < t_grid.size(); ++k) out[k] = local_with(Mu, t_grid[k]);
  return out;
}

double local_variance(const FittedModel& model, const EffectIndex& u, double t) {
  return VarianceEngine(model).local_variance(u, t);
}

double global_variance(const FittedModel& model, const EffectIndex& u) {
  return VarianceEngine(model).global_variance(u);
}

std::vector<std::string> SensitivityReport::names() const {
  std::vector<std::string> out;
  for (const auto& u : subsets) out.push_back(u.name(dims));
  return out;
}

Eigen::Index SensitivityReport::find(const EffectIndex& u) const {
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    if (subsets[k] == u) return static_cast<Eigen::Index>(k);
  }
  return -1;
}

SensitivityReport sensitivity_report(const FittedModel& model, int max_order,
                                     const Eigen::VectorXd& t_grid) {
  SensitivityReport rep;
  rep.dims = model.dims();
  rep.t_grid = t_grid;
  rep.subsets = nonempty_subsets(model, max_order);
  rep.complete = max_order == model.dims();
  if (!rep.complete) {
    rep.warnings.push_back("max_order < d; indices are normalized over the enumerated subsets only");
  }
  const auto ns = static_cast<Eigen::Index>(rep.subsets.size());
  const Eigen::Index nt = t_grid.size();
  rep.local_variance.resize(nt, ns);
  rep.global_variance.resize(ns);
  const VarianceEngine engine(model);
  const double scale = response_scale(model);
  for (Eigen::Index s = 0; s < ns; ++s) {
    const EffectIndex& u = rep.subsets[static_cast<std::size_t>(s)];
    const auto [curve, global] = engine.subset_variances(u, t_grid);
    rep.local_variance.col(s) = curve;
    rep.global_variance[s] = global;
  }
  const double floor = -1e-12 * scale;
  if (rep.local_variance.size() > 0 && rep.local_variance.minCoeff() < floor) {
    rep.warnings.push_back("local variance below the nonnegativity tolerance was clamped");
  }
  if (ns > 0 && rep.global_variance.minCoeff() < floor) {
    rep.warnings.push_back("global variance below the nonnegativity tolerance was clamped");
  }
  rep.local_variance = rep.local_variance.cwiseMax(0.0);
  rep.global_variance = rep.global_variance.cwiseMax(0.0);

  rep.total_local_variance = rep.local_variance.rowwise().sum();
  rep.total_global_variance = rep.global_variance.sum();
  rep.local_sobol.resize(nt, ns);
  int degenerate = 0;
  for (Eigen::Index k = 0; k < nt; ++k) {
    const double denom = rep.total_local_variance[k];
    if (denom < kDegenerateVariance * scale) {
      rep.local_sobol.row(k).setConstant(kNaN);
      ++degenerate;
    } else {
      rep.local_sobol.row(k) = rep.local_variance.row(k) / denom;
    }
  }
  if (degenerate > 0) {
    rep.warnings.push_back(std::to_string(degenerate) +
                           " positions have vanishing local variance; local indices are NaN there");
  }
  if (rep.total_global_variance < kDegenerateVariance * scale) {
    rep.ecv_index = Eigen::VectorXd::Constant(ns, kNaN);
    rep.warnings.push_back("total global variance vanishes; ECV indices are NaN");
  } else {
    rep.ecv_index = rep.global_variance / rep.total_global_variance;
  }
  return rep;
}

LocalSobol local_sobol(const FittedModel& model, int max_order, const Eigen::VectorXd& t_grid) {
  SensitivityReport rep = sensitivity_report(model, max_order, t_grid);
  return {rep.t_grid, rep.subsets, rep.local_sobol, rep.warnings};
}

EcvIndices ecv_indices(const FittedModel& model, int max_order) {
  SensitivityReport rep = sensitivity_report(model, max_order, Eigen::VectorXd());
  return {rep.subsets, rep.ecv_index, rep.warnings};
}

double EcvIndices::at(const EffectIndex& u) const {
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    if (subsets[k] == u) return values[static_cast<Eigen::Index>(k)];
  }
  throw Error(ErrorKind::Index, "subset not present in ECV indices");
}

Eigen::VectorXd linspace(double lo, double hi, Eigen::Index count) {
  if (count < 1) return Eigen::VectorXd();
  if (count == 1) return Eigen::VectorXd::Constant(1, lo);
  Eigen::VectorXd out(count);
  for (Eigen::Index k = 0; k < count; ++k) {
    out[k] = lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(count - 1);
  }
  return out;
}

Eigen::VectorXd default_t_grid(const FittedModel& model) {
  const Eigen::VectorXd& t = model.output_column();
  return linspace(t.minCoeff(), t.maxCoeff(), 101);
}

}  // namespace foagp
