#include "foagp/simulators.hpp"

#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <cmath>
#include <functional>
#include <mutex>
#include <numbers>

#include "foagp/error.hpp"

namespace foagp {

double Rng::uniform() {
  return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double Rng::normal() {
  if (has_spare_) {
    has_spare_ = false;
    return spare_;
  }
  const double u1 = 1.0 - uniform();  // (0, 1]
  const double u2 = uniform();
  const double r = std::sqrt(-2.0 * std::log(u1));
  const double a = 2.0 * std::numbers::pi * u2;
  spare_ = r * std::sin(a);
  has_spare_ = true;
  return r * std::cos(a);
}

double SimSpec::effective_noise() const {
  if (noise_sd) return *noise_sd;
  return example == Example::Example1 ? 0.1 : 0.01;
}

void SimSpec::validate() const {
  const double s = effective_noise();
  if (!(s >= 0.0) || !std::isfinite(s)) {
    throw Error(ErrorKind::InvalidInput, "noise_sd must be finite and non-negative");
  }
  if (example == Example::SyntheticGrid) {
    if (m < 2 || n < 2) throw Error(ErrorKind::InvalidInput, "grid sizes m and n must be >= 2");
    if (dims < 1) throw Error(ErrorKind::InvalidInput, "grid dimension must be >= 1");
  } else if (n_samples < 2) {
    throw Error(ErrorKind::InvalidInput, "n_samples must be >= 2");
  }
}

double example1_function(double x1, double x2, double t) {
  return 1.0 + 2.0 * t + x1 * t + 2.0 * x2 * t + x1 * x2 * t;
}

double example2_function(double x1, double x2, double t) {
  return (t + 1.0) * std::exp(-x1 * t) * std::sin(2.0 * std::numbers::pi * t / x2);
}

double grid_test_function(const Eigen::VectorXd& x, double t) {
  const double pi = std::numbers::pi;
  double f = (1.0 + x[0]) * std::sin(2.0 * pi * t);
  if (x.size() >= 2) f += 2.0 * x[1] * t + x[0] * x[1] * std::cos(pi * t);
  for (Eigen::Index i = 2; i < x.size(); ++i) f += 0.5 * x[i] * t;
  return f;
}

namespace {

Dataset generate(const SimSpec& spec, Example which) {
  SimSpec s = spec;
  s.example = which;
  s.validate();
  const double sd = s.effective_noise();
  Rng rng(s.seed);
  Dataset d;
  d.X.resize(s.n_samples, 2);
  d.T.resize(s.n_samples);
  d.y.resize(s.n_samples);
  for (Eigen::Index k = 0; k < s.n_samples; ++k) {
    double x1, x2, t;
    if (which == Example::Example1) {
      x1 = rng.normal();
      x2 = rng.normal();
      t = rng.normal();
    } else {
      x1 = rng.uniform(1.0, 2.0);
      x2 = rng.uniform(0.9, 1.1);
      t = rng.uniform(0.2, 2.0);
    }
    const double eps = rng.normal();
    const double f = which == Example::Example1 ? example1_function(x1, x2, t)
                                                : example2_function(x1, x2, t);
    d.X(k, 0) = x1;
    d.X(k, 1) = x2;
    d.T[k] = t;
    d.y[k] = f + sd * eps;
  }
  return d;
}

}  // namespace

Dataset gen_example1(const SimSpec& spec) { return generate(spec, Example::Example1); }
Dataset gen_example2(const SimSpec& spec) { return generate(spec, Example::Example2); }

Dataset gen_example(const SimSpec& spec) {
  switch (spec.example) {
    case Example::Example1: return gen_example1(spec);
    case Example::Example2: return gen_example2(spec);
    default: throw Error(ErrorKind::Unsupported, "gen_example: use gen_grid for grid data");
  }
}

GridDataset gen_grid(const SimSpec& spec) {
  SimSpec s = spec;
  s.example = Example::SyntheticGrid;
  s.validate();
  Rng rng(s.seed);
  GridDataset g;
  g.chi.resize(s.m, s.dims);
  std::vector<Eigen::Index> perm(static_cast<std::size_t>(s.m));
  for (Eigen::Index j = 0; j < s.dims; ++j) {
    for (Eigen::Index u = 0; u < s.m; ++u) perm[static_cast<std::size_t>(u)] = u;
    for (Eigen::Index k = s.m - 1; k > 0; --k) {
      const auto r = static_cast<Eigen::Index>(rng.uniform() * static_cast<double>(k + 1));
      std::swap(perm[static_cast<std::size_t>(k)], perm[static_cast<std::size_t>(std::min(r, k))]);
    }
    for (Eigen::Index u = 0; u < s.m; ++u) {
      g.chi(u, j) = (static_cast<double>(perm[static_cast<std::size_t>(u)]) + rng.uniform()) /
                    static_cast<double>(s.m);
    }
  }
  g.tau.resize(s.n);
  for (Eigen::Index v = 0; v < s.n; ++v) {
    g.tau[v] = static_cast<double>(v) / static_cast<double>(s.n - 1);
  }
  const double sd = s.effective_noise();
  g.Y.resize(s.m, s.n);
  for (Eigen::Index v = 0; v < s.n; ++v) {
    for (Eigen::Index u = 0; u < s.m; ++u) {
      const Eigen::VectorXd x = g.chi.row(u).transpose();
      g.Y(u, v) = grid_test_function(x, g.tau[v]) + sd * rng.normal();
    }
  }
  return g;
}

std::pair<Dataset, Dataset> split_train_test(const Dataset& data) {
  const Eigen::Index n = data.size();
  const Eigen::Index train = (4 * n) / 5;
  if (train < 2 || n - train < 1) {
    throw Error(ErrorKind::InsufficientData, "split_train_test needs at least 3 samples");
  }
  return {slice(data, 0, train), slice(data, train, n)};
}

std::pair<double, double> example_t_support(Example example) {
  switch (example) {
    case Example::Example1: return {-1.5, 1.5};
    case Example::Example2: return {0.2, 2.0};
    default: throw Error(ErrorKind::Unsupported, "no ground truth for synthetic grid data");
  }
}

namespace {

// Example 2 oracle by nested adaptive Gauss-Kronrod over the uniform input box.
constexpr double kX1Lo = 1.0, kX1Hi = 2.0, kX2Lo = 0.9, kX2Hi = 1.1;
constexpr double kTLo = 0.2, kTHi = 2.0;

double box_mean(const std::function<double(double)>& g, double a, double b) {
  using Quad = boost::math::quadrature::gauss_kronrod<double, 15>;
  double err = 0.0;
  const double v = Quad::integrate(g, a, b, 20, 1e-11, &err);
  return v / (b - a);
}

double ex2_mean_x2(double x1, double t) {
  return box_mean([&](double x2) { return example2_function(x1, x2, t); }, kX2Lo, kX2Hi);
}

double ex2_mean_x1(double x2, double t) {
  return box_mean([&](double x1) { return example2_function(x1, x2, t); }, kX1Lo, kX1Hi);
}

double ex2_f0(double t) {
  return box_mean([&](double x1) { return ex2_mean_x2(x1, t); }, kX1Lo, kX1Hi);
}

struct Ex2Local {
  double v1, v2, v12, total;
};

Ex2Local ex2_local(double t) {
  const double f0 = ex2_f0(t);
  Ex2Local out{};
  out.v1 = box_mean(
      [&](double x1) {
        const double e = ex2_mean_x2(x1, t) - f0;
        return e * e;
      },
      kX1Lo, kX1Hi);
  out.v2 = box_mean(
      [&](double x2) {
        const double e = ex2_mean_x1(x2, t) - f0;
        return e * e;
      },
      kX2Lo, kX2Hi);
  out.total = box_mean(
      [&](double x1) {
        return box_mean(
            [&](double x2) {
              const double e = example2_function(x1, x2, t) - f0;
              return e * e;
            },
            kX2Lo, kX2Hi);
      },
      kX1Lo, kX1Hi);
  out.v12 = out.total - out.v1 - out.v2;
  return out;
}

Eigen::VectorXd ex2_ecv() {
  static std::once_flag once;
  static Eigen::VectorXd cached;
  std::call_once(once, [] {
    const double e1 = box_mean([](double t) { return ex2_local(t).v1; }, kTLo, kTHi);
    const double e2 = box_mean([](double t) { return ex2_local(t).v2; }, kTLo, kTHi);
    const double e12 = box_mean([](double t) { return ex2_local(t).v12; }, kTLo, kTHi);
    const double tot = box_mean([](double t) { return ex2_local(t).total; }, kTLo, kTHi);
    cached.resize(3);
    cached << e1 / tot, e2 / tot, e12 / tot;
  });
  return cached;
}

void require_truth(Example example) {
  if (example != Example::Example1 && example != Example::Example2) {
    throw Error(ErrorKind::Unsupported, "no ground truth for synthetic grid data");
  }
}

void require_two_inputs(const EffectIndex& u) {
  u.validate(2);
}

}  // namespace

double truth_effect(Example example, const EffectIndex& u, const Eigen::VectorXd& x, double t) {
  require_truth(example);
  require_two_inputs(u);
  const bool has1 = u.contains(1), has2 = u.contains(2);
  if ((has1 || has2) && x.size() < 2) {
    throw Error(ErrorKind::Shape, "truth_effect needs a point with two coordinates");
  }
  if (example == Example::Example1) {
    if (u.empty()) return 1.0 + 2.0 * t;
    if (has1 && has2) return x[0] * x[1] * t;
    return has1 ? x[0] * t : 2.0 * x[1] * t;
  }
  const double f0 = ex2_f0(t);
  if (u.empty()) return f0;
  const double f1 = has1 ? ex2_mean_x2(x[0], t) - f0 : 0.0;
  const double f2 = has2 ? ex2_mean_x1(x[1], t) - f0 : 0.0;
  if (has1 && has2) return example2_function(x[0], x[1], t) - f0 - f1 - f2;
  return has1 ? f1 : f2;
}

double truth_local_variance(Example example, const EffectIndex& u, double t) {
  require_truth(example);
  require_two_inputs(u);
  if (u.empty()) return 0.0;
  const bool has1 = u.contains(1), has2 = u.contains(2);
  if (example == Example::Example1) {
    const double t2 = t * t;
    return (has1 && has2) ? t2 : (has1 ? t2 : 4.0 * t2);
  }
  const Ex2Local l = ex2_local(t);
  return (has1 && has2) ? l.v12 : (has1 ? l.v1 : l.v2);
}

TruthBundle theoretical_truth(Example example) {
  require_truth(example);
  TruthBundle b;
  b.example = example;
  b.subsets = {EffectIndex({1}), EffectIndex({2}), EffectIndex({1, 2})};
  b.ecv_reported.resize(3);
  if (example == Example::Example1) {
    b.ecv_reported << 0.1667, 0.6667, 0.1667;
    b.ecv_computed.resize(3);
    b.ecv_computed << 1.0 / 6.0, 2.0 / 3.0, 1.0 / 6.0;
  } else {
    b.ecv_reported << 0.3251, 0.6027, 0.0722;
    b.ecv_computed = ex2_ecv();
  }
  const auto [lo, hi] = example_t_support(example);
  constexpr Eigen::Index kPoints = 50;
  b.t_grid = Eigen::VectorXd::LinSpaced(kPoints, lo, hi);
  b.local_variance.resize(kPoints, 3);
  b.mean_effect.resize(kPoints, 1);
  for (Eigen::Index k = 0; k < kPoints; ++k) {
    for (Eigen::Index s = 0; s < 3; ++s) {
      b.local_variance(k, s) =
          truth_local_variance(example, b.subsets[static_cast<std::size_t>(s)], b.t_grid[k]);
    }
    b.mean_effect(k, 0) = truth_effect(example, EffectIndex(), Eigen::VectorXd(), b.t_grid[k]);
  }
  return b;
}

}  // namespace foagp
