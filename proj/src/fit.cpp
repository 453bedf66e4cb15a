#include "foagp/fit.hpp"

#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdlib>
#include <iostream>
#include <limits>
#include <mutex>
#include <random>
#include <sstream>
#include <thread>
#if defined(__GLIBC__)
#include <malloc.h>
#endif

#include "foagp/error.hpp"
#include "foagp/optimize.hpp"

namespace foagp {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

std::mutex& sink_mutex() {
  static std::mutex m;
  return m;
}

std::function<void(const std::string&)>& sink() {
  static std::function<void(const std::string&)> s = [](const std::string& msg) {
    std::cerr << "foagp: warning: " << msg << '\n';
  };
  return s;
}

bool is_constant(const Eigen::VectorXd& centered, double mean) {
  return centered.lpNorm<Eigen::Infinity>() <= 1e-12 * std::max(1.0, std::abs(mean));
}

double column_range(const Eigen::VectorXd& c) {
  const double r = c.maxCoeff() - c.minCoeff();
  return r > 0.0 ? r : 1.0;
}

double column_std(const Eigen::VectorXd& c) {
  const double mean = c.mean();
  const double var = (c.array() - mean).square().sum() / static_cast<double>(c.size());
  return var > 0.0 ? std::sqrt(var) : 1.0;
}

struct Box {
  Eigen::VectorXd lower;
  Eigen::VectorXd upper;
};

// Layout: [delta0, delta_1..delta_d, delta_t, theta_1..theta_d, theta_t] in log space.
Box make_bounds(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& positions) {
  const Eigen::Index d = inputs.cols();
  const Eigen::Index p = 2 * d + 3;
  Box b{Eigen::VectorXd(p), Eigen::VectorXd(p)};
  b.lower[0] = std::log(1e-4);
  b.upper[0] = std::log(10.0);
  for (Eigen::Index k = 1; k <= d + 1; ++k) {
    b.lower[k] = std::log(1e-3);
    b.upper[k] = std::log(1e3);
  }
  for (Eigen::Index i = 0; i <= d; ++i) {
    const double range = i < d ? column_range(inputs.col(i)) : column_range(positions);
    b.lower[d + 2 + i] = std::log(1e-3 * range);
    b.upper[d + 2 + i] = std::log(1e3 * range);
  }
  return b;
}

Eigen::VectorXd heuristic_center(const Eigen::MatrixXd& inputs, const Eigen::VectorXd& positions) {
  const Eigen::Index d = inputs.cols();
  Eigen::VectorXd x = Eigen::VectorXd::Zero(2 * d + 3);
  for (Eigen::Index i = 0; i <= d; ++i) {
    x[d + 2 + i] = std::log(i < d ? column_std(inputs.col(i)) : column_std(positions));
  }
  return x;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ULL;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
  return x ^ (x >> 31);
}

std::vector<Eigen::VectorXd> initial_points(const Eigen::VectorXd& center, const Box& box,
                                            int restarts, std::uint64_t seed) {
  std::vector<Eigen::VectorXd> out;
  const double lo = std::log(0.05);
  const double hi = std::log(5.0);
  for (int r = 0; r < restarts; ++r) {
    std::mt19937_64 rng(splitmix64(seed ^ splitmix64(static_cast<std::uint64_t>(r) + 1)));
    Eigen::VectorXd x = center;
    for (Eigen::Index k = 0; k < x.size(); ++k) {
      const double u = static_cast<double>(rng() >> 11) * 0x1.0p-53;
      x[k] += lo + (hi - lo) * u;
    }
    out.push_back(x.cwiseMax(box.lower).cwiseMin(box.upper));
  }
  return out;
}

template <typename Fn>
void run_parallel(int count, int workers, Fn&& fn) {
  workers = std::max(1, std::min(workers, count));
  if (workers == 1) {
    for (int k = 0; k < count; ++k) fn(k);
    return;
  }
  std::atomic<int> next{0};
  std::vector<std::thread> pool;
  for (int w = 0; w < workers; ++w) {
    pool.emplace_back([&] {
      for (int k = next++; k < count; k = next++) fn(k);
    });
  }
  for (auto& t : pool) t.join();
}

Eigen::ArrayXXd product_except(const std::vector<Eigen::MatrixXd>& H, std::size_t skip,
                               const Eigen::ArrayXXd& start) {
  Eigen::ArrayXXd out = start;
  for (std::size_t j = 0; j < H.size(); ++j) {
    if (j != skip) out *= H[j].array();
  }
  return out;
}

}  // namespace

void set_warning_sink(std::function<void(const std::string&)> s) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  sink() = std::move(s);
}

void warn(const std::string& message) {
  std::lock_guard<std::mutex> lock(sink_mutex());
  if (sink()) sink()(message);
}

void tune_allocator() {
#if defined(__GLIBC__)
  mallopt(M_MMAP_THRESHOLD, 32 * 1024 * 1024);
  mallopt(M_TRIM_THRESHOLD, 1024 * 1024 * 1024);
  mallopt(M_TOP_PAD, 64 * 1024 * 1024);
#endif
}

int thread_cap(int requested) {
  if (requested > 0) return requested;
  if (const char* env = std::getenv("FOAGP_THREADS")) {
    const int v = std::atoi(env);
    if (v > 0) return v;
  }
  const unsigned hw = std::thread::hardware_concurrency();
  return hw > 0 ? static_cast<int>(hw) : 1;
}

Eigen::VectorXd to_log_params(const HyperParams& params) {
  Eigen::VectorXd out(params.delta.size() + params.theta.size());
  out << params.delta.array().log().matrix(), params.theta.array().log().matrix();
  return out;
}

HyperParams from_log_params(const Eigen::VectorXd& logp, Eigen::Index dims, double period) {
  if (logp.size() != 2 * dims + 3) throw Error(ErrorKind::Shape, "log-parameter vector size");
  HyperParams p;
  p.delta = logp.head(dims + 2).array().exp();
  p.theta = logp.tail(dims + 1).array().exp();
  p.period = period;
  return p;
}

// ---------------------------------------------------------------- FittedModel

KernelSpec FittedModel::input_spec(Eigen::Index i) const {
  return KernelSpec::squared_exponential(params_.input_theta(i));
}

KernelSpec FittedModel::output_spec() const {
  return {output_family_, params_.output_theta(), params_.period};
}

const Dataset& FittedModel::dataset() const {
  if (layout_ != Layout::Dense) throw Error(ErrorKind::State, "model has grid layout");
  return data_;
}

const GridDataset& FittedModel::grid() const {
  if (layout_ != Layout::Grid) throw Error(ErrorKind::State, "model has dense layout");
  return grid_;
}

Eigen::MatrixXd FittedModel::gamma_matrix() const {
  return matricize(gamma_, grid().inputs(), grid().positions());
}

void FittedModel::assemble(KernelFamily output_family, const Eigen::MatrixXd& input_columns,
                           const Eigen::VectorXd& output_column) {
  params_.validate();
  if (params_.dims() != input_columns.cols()) {
    throw Error(ErrorKind::Shape, "hyperparameter dimension differs from data dimension");
  }
  output_family_ = output_family;
  output_column_ = output_column;
  moments_.clear();
  input_grams_.clear();
  for (Eigen::Index i = 0; i < input_columns.cols(); ++i) {
    TrainingGram tg = orthogonal_training_gram(input_spec(i), input_columns.col(i));
    moments_.push_back(std::move(tg.cache));
    input_grams_.push_back(std::move(tg.gram));
  }
  output_gram_ = kernel_matrix(output_spec(), nullptr, output_column, output_column);
  if (layout_ == Layout::Dense) {
    fact_.emplace(std::in_place_type<DenseFactorization>,
                  assemble_dense(input_grams_, output_gram_, params_));
  } else {
    fact_.emplace(std::in_place_type<GridFactorization>,
                  assemble_grid(input_grams_, output_gram_, params_),
                  params_.nugget() * params_.nugget());
  }
}

namespace {

void finish_weights(const Factorization& fact, const Eigen::VectorXd& yc, Eigen::VectorXd& gamma,
                    HyperParams& params, double& objective, bool constant) {
  const double n = static_cast<double>(yc.size());
  if (constant) {
    gamma = Eigen::VectorXd::Zero(yc.size());
    params.sigma2 = 0.0;
    objective = -kInf;
    return;
  }
  gamma = solve_weights(fact, yc);
  params.sigma2 = profile_sigma2(fact, yc);
  objective = n * std::log(params.sigma2) + log_det(fact);
}

}  // namespace

FittedModel FittedModel::build(const Dataset& data, HyperParams params,
                               KernelFamily output_family) {
  data.validate();
  FittedModel m;
  m.layout_ = Layout::Dense;
  m.data_ = data;
  m.params_ = std::move(params);
  m.y_mean_ = data.y.mean();
  const Eigen::VectorXd yc = data.y.array() - m.y_mean_;
  m.assemble(output_family, data.X, data.T);
  finish_weights(*m.fact_, yc, m.gamma_, m.params_, m.objective_, is_constant(yc, m.y_mean_));
  return m;
}

FittedModel FittedModel::build(const GridDataset& grid, HyperParams params,
                               KernelFamily output_family) {
  grid.validate();
  FittedModel m;
  m.layout_ = Layout::Grid;
  m.grid_ = grid;
  m.params_ = std::move(params);
  m.y_mean_ = grid.Y.mean();
  const Eigen::VectorXd yc = vectorize(grid.Y).array() - m.y_mean_;
  m.assemble(output_family, grid.chi, grid.tau);
  finish_weights(*m.fact_, yc, m.gamma_, m.params_, m.objective_, is_constant(yc, m.y_mean_));
  return m;
}

FittedModel FittedModel::restore(const Dataset& data, const HyperParams& params,
                                 KernelFamily output_family, double y_mean,
                                 Eigen::VectorXd gamma) {
  data.validate();
  if (gamma.size() != data.size()) throw Error(ErrorKind::Shape, "stored gamma length mismatch");
  FittedModel m;
  m.layout_ = Layout::Dense;
  m.data_ = data;
  m.params_ = params;
  m.y_mean_ = y_mean;
  m.assemble(output_family, data.X, data.T);
  m.gamma_ = std::move(gamma);
  m.objective_ = static_cast<double>(m.gamma_.size()) * std::log(m.params_.sigma2) +
                 log_det(*m.fact_);
  return m;
}

FittedModel FittedModel::restore(const GridDataset& grid, const HyperParams& params,
                                 KernelFamily output_family, double y_mean,
                                 Eigen::VectorXd gamma) {
  grid.validate();
  if (gamma.size() != grid.size()) throw Error(ErrorKind::Shape, "stored gamma length mismatch");
  FittedModel m;
  m.layout_ = Layout::Grid;
  m.grid_ = grid;
  m.params_ = params;
  m.y_mean_ = y_mean;
  m.assemble(output_family, grid.chi, grid.tau);
  m.gamma_ = std::move(gamma);
  m.objective_ = static_cast<double>(m.gamma_.size()) * std::log(m.params_.sigma2) +
                 log_det(*m.fact_);
  return m;
}

// ---------------------------------------------------------------- likelihood

double profile_sigma2(const Factorization& fact, const Eigen::VectorXd& y_centered) {
  if (y_centered.size() == 0 || y_centered.isZero(0.0)) {
    throw Error(ErrorKind::DegenerateResponse, "profile sigma2 is undefined for a zero response");
  }
  const double n = static_cast<double>(y_centered.size());
  if (const auto* grid = std::get_if<GridFactorization>(&fact)) {
    const Eigen::MatrixXd Z = grid->rotate(matricize(y_centered, grid->inputs(), grid->positions()));
    return (Z.array().square() / grid->S().array()).sum() / n;
  }
  const auto& dense = std::get<DenseFactorization>(fact);
  return y_centered.dot(dense.solve(y_centered)) / n;
}

LikelihoodObjective::LikelihoodObjective(const Dataset& data, KernelFamily output_family,
                                         double period)
    : grid_mode_(false),
      dims_(data.dims()),
      output_family_(output_family),
      period_(period),
      inputs_(data.X),
      positions_(data.T),
      y_(data.y.array() - data.y.mean()) {
  data.validate();
  make_kernels();
}

LikelihoodObjective::LikelihoodObjective(const GridDataset& grid, KernelFamily output_family,
                                         double period)
    : grid_mode_(true),
      dims_(grid.dims()),
      output_family_(output_family),
      period_(period),
      inputs_(grid.chi),
      positions_(grid.tau),
      Y_(grid.Y.array() - grid.Y.mean()) {
  grid.validate();
  y_ = vectorize(Y_);
  make_kernels();
}

void LikelihoodObjective::make_kernels() {
  auto k = std::make_shared<std::vector<PairwiseKernel>>();
  k->reserve(static_cast<std::size_t>(dims_ + 1));
  for (Eigen::Index i = 0; i < dims_; ++i) {
    k->emplace_back(KernelFamily::SquaredExponential, 1.0, inputs_.col(i));
  }
  k->emplace_back(output_family_, period_, positions_);
  kernels_ = std::move(k);
}

double LikelihoodObjective::operator()(const Eigen::VectorXd& logp, Eigen::VectorXd* grad) {
  const HyperParams p = from_log_params(logp, dims_, period_);
  try {
    return grid_mode_ ? gridded(p, grad) : dense(p, grad);
  } catch (const Error& e) {
    ++failures_;
    last_error_ = e.what();
    if (grad != nullptr) grad->setZero(logp.size());
    return kInf;
  }
}

double LikelihoodObjective::dense(const HyperParams& p, Eigen::VectorXd* grad) {
  const Eigen::Index n = y_.size();
  const Eigen::Index d = dims_;
  std::vector<Eigen::MatrixXd> K(static_cast<std::size_t>(d));
  std::vector<Eigen::MatrixXd> dK;
  std::vector<Eigen::MatrixXd> H(static_cast<std::size_t>(d));
  if (grad != nullptr) dK.resize(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto si = static_cast<std::size_t>(i);
    (*kernels_)[si].evaluate(p.input_theta(i), true, K[si], grad ? &dK[si] : nullptr);
  }
  Eigen::MatrixXd Kt, dKt;
  kernels_->back().evaluate(p.output_theta(), false, Kt, grad ? &dKt : nullptr);

  const double dt2 = p.output_delta() * p.output_delta();
  const double d02 = p.nugget() * p.nugget();
  Eigen::MatrixXd P = dt2 * Kt;
  for (Eigen::Index i = 0; i < d; ++i) {
    const double di2 = p.input_delta(i) * p.input_delta(i);
    auto& h = H[static_cast<std::size_t>(i)];
    h = (1.0 + di2 * K[static_cast<std::size_t>(i)].array()).matrix();
    P.array() *= h.array();
  }
  Eigen::MatrixXd Kmat = P;
  Kmat.diagonal().array() += d02;
  const DenseFactorization fact(Kmat);
  Kmat.resize(0, 0);

  const Eigen::VectorXd gamma = fact.solve(y_);
  const double yky = y_.dot(gamma);
  if (!(yky > 0.0) || !std::isfinite(yky)) {
    throw Error(ErrorKind::Numerical, "non-positive quadratic form y^T K^-1 y");
  }
  const double sigma2 = yky / static_cast<double>(n);
  const double value = static_cast<double>(n) * std::log(sigma2) + fact.log_det();
  if (grad == nullptr) return value;

  Eigen::VectorXd& g = *grad;
  g.resize(2 * d + 3);
  Eigen::MatrixXd W = fact.inverse();
  W.noalias() -= (gamma / sigma2) * gamma.transpose();
  const Eigen::ArrayXXd Wa = W.array();

  g[0] = 2.0 * d02 * W.trace();
  g[d + 1] = 2.0 * (Wa * P.array()).sum();
  const Eigen::ArrayXXd base_t = dt2 * Kt.array();
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const double di2 = p.input_delta(i) * p.input_delta(i);
    const Eigen::ArrayXXd E = product_except(H, si, base_t);
    g[1 + i] = 2.0 * di2 * (Wa * E * K[si].array()).sum();
    g[d + 2 + i] = di2 * (Wa * E * dK[si].array()).sum();
  }
  const Eigen::ArrayXXd Et = product_except(H, H.size(), dt2 * dKt.array());
  g[2 * d + 2] = (Wa * Et).sum();
  return value;
}

double LikelihoodObjective::gridded(const HyperParams& p, Eigen::VectorXd* grad) {
  const Eigen::Index d = dims_;
  std::vector<Eigen::MatrixXd> R(static_cast<std::size_t>(d));
  std::vector<Eigen::MatrixXd> dR;
  std::vector<Eigen::MatrixXd> H(static_cast<std::size_t>(d));
  if (grad != nullptr) dR.resize(static_cast<std::size_t>(d));
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto si = static_cast<std::size_t>(i);
    (*kernels_)[si].evaluate(p.input_theta(i), true, R[si], grad ? &dR[si] : nullptr);
  }
  Eigen::MatrixXd Rt, dRt;
  kernels_->back().evaluate(p.output_theta(), false, Rt, grad ? &dRt : nullptr);
  const double dt2 = p.output_delta() * p.output_delta();
  const double d02 = p.nugget() * p.nugget();

  GridCovariance cov;
  cov.C_t = dt2 * Rt;
  cov.C_x = Eigen::MatrixXd::Ones(inputs_.rows(), inputs_.rows());
  for (Eigen::Index i = 0; i < d; ++i) {
    const double di2 = p.input_delta(i) * p.input_delta(i);
    auto& h = H[static_cast<std::size_t>(i)];
    h = (1.0 + di2 * R[static_cast<std::size_t>(i)].array()).matrix();
    cov.C_x.array() *= h.array();
  }
  const GridFactorization fact(cov, d02);
  const Eigen::MatrixXd Z = fact.rotate(Y_);
  const Eigen::MatrixXd Zs = Z.cwiseQuotient(fact.S());
  const double yky = (Z.array() * Zs.array()).sum();
  if (!(yky > 0.0) || !std::isfinite(yky)) {
    throw Error(ErrorKind::Numerical, "non-positive quadratic form y^T K^-1 y");
  }
  const double n = static_cast<double>(y_.size());
  const double sigma2 = yky / n;
  const double value = n * std::log(sigma2) + fact.log_det();
  if (grad == nullptr) return value;

  const Eigen::MatrixXd Gamma = fact.V() * Zs * fact.U().transpose();
  const Eigen::MatrixXd invS = fact.S().cwiseInverse();
  // Trace of K^-1 (A (x) B) from the rotated diagonals of A (positions) and B (inputs).
  auto trace = [&](const Eigen::VectorXd& diag_a, const Eigen::VectorXd& diag_b) {
    return diag_b.dot(invS * diag_a);
  };
  auto rotated_diag = [](const Eigen::MatrixXd& M, const Eigen::MatrixXd& Q) -> Eigen::VectorXd {
    return (Q.array() * (M * Q).array()).colwise().sum().transpose();
  };
  // gamma^T (A (x) B) gamma = sum(Gamma .* (B Gamma A)).
  auto quad = [&](const Eigen::MatrixXd& A, const Eigen::MatrixXd& B) {
    return (Gamma.array() * (B * Gamma * A).array()).sum();
  };

  Eigen::VectorXd& g = *grad;
  g.resize(2 * d + 3);
  g[0] = 2.0 * d02 * invS.sum() - 2.0 * d02 * Gamma.squaredNorm() / sigma2;
  g[d + 1] = 2.0 * trace(fact.D(), fact.Lambda()) - 2.0 * quad(cov.C_t, cov.C_x) / sigma2;
  const Eigen::ArrayXXd ones = Eigen::ArrayXXd::Ones(inputs_.rows(), inputs_.rows());
  for (Eigen::Index i = 0; i < d; ++i) {
    const auto si = static_cast<std::size_t>(i);
    const double di2 = p.input_delta(i) * p.input_delta(i);
    const Eigen::ArrayXXd rest = product_except(H, si, ones);
    const Eigen::MatrixXd Bd = (2.0 * di2 * R[si].array() * rest).matrix();
    const Eigen::MatrixXd Bt = (di2 * dR[si].array() * rest).matrix();
    g[1 + i] = trace(fact.D(), rotated_diag(Bd, fact.V())) - quad(cov.C_t, Bd) / sigma2;
    g[d + 2 + i] = trace(fact.D(), rotated_diag(Bt, fact.V())) - quad(cov.C_t, Bt) / sigma2;
  }
  const Eigen::MatrixXd At = dt2 * dRt;
  g[2 * d + 2] = trace(rotated_diag(At, fact.U()), fact.Lambda()) - quad(At, cov.C_x) / sigma2;
  return value;
}

double objective(const HyperParams& phi, const Dataset& data, KernelFamily output_family) {
  data.validate();
  LikelihoodObjective f(data, output_family, phi.period);
  const double v = f(to_log_params(phi), nullptr);
  if (!std::isfinite(v)) warn("objective is infinite: " + f.last_error());
  return v;
}

double objective(const HyperParams& phi, const GridDataset& grid, KernelFamily output_family) {
  grid.validate();
  LikelihoodObjective f(grid, output_family, phi.period);
  const double v = f(to_log_params(phi), nullptr);
  if (!std::isfinite(v)) warn("objective is infinite: " + f.last_error());
  return v;
}

// ---------------------------------------------------------------- fit

namespace {

template <typename Data>
FittedModel fit_impl(const Data& data, const Eigen::MatrixXd& inputs,
                     const Eigen::VectorXd& positions, const Eigen::VectorXd& responses,
                     const FitConfig& config, const std::string& path) {
  if (config.restarts < 1) throw Error(ErrorKind::InvalidInput, "restarts must be >= 1");
  if (config.max_iterations < 1) throw Error(ErrorKind::InvalidInput, "max_iterations must be >= 1");
  if (!(config.period > 0.0)) throw Error(ErrorKind::InvalidInput, "period must be positive");
  const auto start = std::chrono::steady_clock::now();
  const Eigen::Index d = inputs.cols();
  const Box box = make_bounds(inputs, positions);
  const Eigen::VectorXd center = heuristic_center(inputs, positions);

  FitLog log;
  log.path = path;
  const double mean = responses.mean();
  if (is_constant((responses.array() - mean).matrix(), mean)) {
    Eigen::VectorXd x = center.cwiseMax(box.lower).cwiseMin(box.upper);
    x[0] = box.lower[0];
    log.warnings.push_back("response is constant; skipped optimization and set gamma = 0");
    warn(log.warnings.back());
    FittedModel m = FittedModel::build(data, from_log_params(x, d, config.period),
                                       config.output_family);
    log.wall_seconds =
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    m.set_log(std::move(log));
    return m;
  }

  const auto starts = initial_points(center, box, config.restarts, config.seed);
  std::vector<RestartLog> logs(starts.size());
  std::vector<Eigen::VectorXd> finals(starts.size());
  OptimizeOptions opts;
  opts.max_iterations = config.max_iterations;
  opts.tolerance = config.tolerance;

  const LikelihoodObjective prototype(data, config.output_family, config.period);
  run_parallel(config.restarts, thread_cap(config.threads), [&](int r) {
    const auto k = static_cast<std::size_t>(r);
    LikelihoodObjective f = prototype;
    Objective obj = [&f](const Eigen::VectorXd& x, Eigen::VectorXd* g) { return f(x, g); };
    OptimizeResult res = config.optimizer == OptimizerKind::Lbfgs
                             ? minimize_lbfgs(obj, starts[k], box.lower, box.upper, opts)
                             : minimize_simplex(obj, starts[k], box.lower, box.upper, opts);
    RestartLog& rl = logs[k];
    rl.index = r;
    rl.initial_objective = res.initial_value;
    rl.final_objective = res.value;
    rl.iterations = res.iterations;
    rl.evaluations = res.evaluations;
    rl.failed_evaluations = f.failures();
    rl.converged = res.converged;
    if (!std::isfinite(res.value)) rl.error = f.last_error();
    finals[k] = res.x;
  });

  int best = -1;
  for (std::size_t k = 0; k < logs.size(); ++k) {
    if (!std::isfinite(logs[k].final_objective)) continue;
    if (best < 0 || logs[k].final_objective < logs[static_cast<std::size_t>(best)].final_objective) {
      best = static_cast<int>(k);
    }
  }
  for (const auto& rl : logs) {
    if (rl.failed_evaluations > 0) {
      log.warnings.push_back("restart " + std::to_string(rl.index) + ": " +
                             std::to_string(rl.failed_evaluations) +
                             " objective evaluations failed to factorize");
    }
  }
  log.restarts = logs;
  if (best < 0) {
    std::ostringstream msg;
    msg << "all " << logs.size() << " restarts failed:";
    for (const auto& rl : logs) msg << " [restart " << rl.index << ": " << rl.error << "]";
    throw Error(ErrorKind::FitFailure, msg.str());
  }
  log.best_restart = best;
  FittedModel m = FittedModel::build(
      data, from_log_params(finals[static_cast<std::size_t>(best)], d, config.period),
      config.output_family);
  log.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  m.set_log(std::move(log));
  return m;
}

}  // namespace

FittedModel fit(const Dataset& data, const FitConfig& config) {
  data.validate();
  return fit_impl(data, data.X, data.T, data.y, config, "dense");
}

FittedModel fit(const GridDataset& grid, const FitConfig& config) {
  grid.validate();
  if (config.force_dense) return fit(flatten(grid), config);
  return fit_impl(grid, grid.chi, grid.tau, vectorize(grid.Y), config, "grid");
}

}  // namespace foagp
