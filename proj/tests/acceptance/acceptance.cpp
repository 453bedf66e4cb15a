// One PASS/FAIL line per acceptance criterion. Exit status is nonzero when any criterion fails.
#include <array>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <iostream>
#include <numbers>
#include <sstream>
#include <string>
#include <vector>

#include "foagp/effects.hpp"
#include "foagp/fit.hpp"
#include "foagp/hdmr.hpp"
#include "foagp/kernel.hpp"
#include "foagp/sensitivity.hpp"
#include "foagp/simulators.hpp"
#include "support.hpp"

using namespace foagp;

namespace {

constexpr int kSeeds = 5;
constexpr int kRestarts = 2;

int failures = 0;

void report(int id, bool pass, const std::string& title, const std::string& detail, double seconds) {
  std::printf("[%s] %2d %s: %s (%.1fs)\n", pass ? "PASS" : "FAIL", id, title.c_str(), detail.c_str(), seconds);
  std::fflush(stdout);
  if (!pass) ++failures;
}

double since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string fmt(double v, int prec = 4) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  return buf;
}

std::string fmt3(const Eigen::Vector3d& v, int prec = 4) {
  return "(" + fmt(v[0], prec) + ", " + fmt(v[1], prec) + ", " + fmt(v[2], prec) + ")";
}

std::string sci(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.2e", v);
  return buf;
}

const std::vector<EffectIndex> kSubsets = {EffectIndex({1}), EffectIndex({2}), EffectIndex({1, 2})};

std::uint64_t seed_for(int seed, Eigen::Index n) { return 1000 * static_cast<std::uint64_t>(n) + static_cast<std::uint64_t>(seed); }

std::pair<Dataset, Dataset> simulate(Example ex, Eigen::Index n, int seed) {
  SimSpec spec;
  spec.example = ex;
  spec.n_samples = n;
  spec.seed = seed_for(seed, n);
  return split_train_test(gen_example(spec));
}

FittedModel fit_example(const Dataset& train, int seed) {
  FitConfig cfg;
  cfg.restarts = kRestarts;
  cfg.seed = static_cast<std::uint64_t>(seed);
  return fit(train, cfg);
}

Eigen::Vector3d indices_of(const FittedModel& m) {
  const EcvIndices e = ecv_indices(m, 2);
  return {e.at(kSubsets[0]), e.at(kSubsets[1]), e.at(kSubsets[2])};
}

double mean_abs_error(const Eigen::Vector3d& s, const Eigen::VectorXd& truth) {
  return (s - truth.head(3)).cwiseAbs().mean();
}

double rmse(const Eigen::VectorXd& a, const Eigen::VectorXd& b) {
  return std::sqrt((a - b).squaredNorm() / static_cast<double>(a.size()));
}

// Per-example results gathered from the N = 2000 fits.
struct LargeRuns {
  std::vector<Eigen::Vector3d> indices;
  std::vector<double> index_error;
  std::vector<Eigen::Vector3d> local_rel_error;  // Example 1 only
  std::vector<Eigen::Vector2d> main_rmse_ratio;  // Example 2 only: RMSE / range for f1, f2
  std::vector<double> mean_rmse_ratio;           // Example 2 only: f0
  std::vector<double> test_rmse;
  Eigen::Vector3d foagp_rmse = Eigen::Vector3d::Zero();  // Example 1, first seed: f1, f2, f12
  Eigen::Vector3d hdmr_rmse = Eigen::Vector3d::Zero();
  double seconds = 0.0;
};

Eigen::VectorXd test_predictions(const FittedModel& m, const Dataset& test) {
  Eigen::VectorXd p(test.size());
  for (Eigen::Index k = 0; k < test.size(); ++k) p[k] = predict(m, test.X.row(k).transpose(), test.T[k]);
  return p;
}

// Example 1 local variances t^2, 4 t^2, t^2 on [-1.5, 1.5] away from t = 0.
Eigen::Vector3d local_variance_error(const FittedModel& m) {
  const Eigen::VectorXd grid = linspace(-1.5, 1.5, 101);
  std::vector<double> ts;
  for (Eigen::Index k = 0; k < grid.size(); ++k) {
    if (std::abs(grid[k]) >= 0.2) ts.push_back(grid[k]);
  }
  const VarianceEngine engine(m);
  Eigen::Vector3d err = Eigen::Vector3d::Zero();
  for (int s = 0; s < 3; ++s) {
    for (double t : ts) {
      const double truth = truth_local_variance(Example::Example1, kSubsets[static_cast<std::size_t>(s)], t);
      err[s] += std::abs(engine.local_variance(kSubsets[static_cast<std::size_t>(s)], t) - truth) / truth;
    }
  }
  return err / static_cast<double>(ts.size());
}

// Example 1 effect RMSE against theory at the test points for FOAGP and HDMR (order 4).
void hdmr_comparison(const FittedModel& m, const Dataset& train, const Dataset& test, LargeRuns& out) {
  const HdmrModel h = fit_hdmr(train, 4, 0.0, {InputScaling::normal_cdf(0, 1), InputScaling::normal_cdf(0, 1)},
                               InputScaling::normal_cdf(0, 1));
  const Eigen::Index n = test.size();
  Eigen::MatrixXd truth(n, 3), fo(n, 3), hd(n, 3);
  for (Eigen::Index k = 0; k < n; ++k) {
    const Eigen::VectorXd x = test.X.row(k).transpose();
    const double t = test.T[k];
    const HdmrEffects e = hdmr_effects(h, x, t);
    for (int s = 0; s < 3; ++s) {
      truth(k, s) = truth_effect(Example::Example1, kSubsets[static_cast<std::size_t>(s)], x, t);
      fo(k, s) = predict_effect(m, kSubsets[static_cast<std::size_t>(s)], x, t);
    }
    hd(k, 0) = e.main[0];
    hd(k, 1) = e.main[1];
    hd(k, 2) = e.pairs.front().second;
  }
  for (int s = 0; s < 3; ++s) {
    out.foagp_rmse[s] = rmse(fo.col(s), truth.col(s));
    out.hdmr_rmse[s] = rmse(hd.col(s), truth.col(s));
  }
}

// Example 2 main-effect and mean curves against the quadrature oracle on a tensor grid.
struct Ex2Oracle {
  Eigen::VectorXd x1 = linspace(1.0, 2.0, 21);
  Eigen::VectorXd x2 = linspace(0.9, 1.1, 21);
  Eigen::VectorXd t = linspace(0.2, 2.0, 50);
  Eigen::MatrixXd f1, f2;  // x by t
  Eigen::VectorXd f0;

  Ex2Oracle() {
    f1.resize(x1.size(), t.size());
    f2.resize(x2.size(), t.size());
    f0.resize(t.size());
    for (Eigen::Index v = 0; v < t.size(); ++v) {
      f0[v] = truth_effect(Example::Example2, EffectIndex(), Eigen::Vector2d(1.5, 1.0), t[v]);
      for (Eigen::Index a = 0; a < x1.size(); ++a) {
        f1(a, v) = truth_effect(Example::Example2, kSubsets[0], Eigen::Vector2d(x1[a], 1.0), t[v]);
        f2(a, v) = truth_effect(Example::Example2, kSubsets[1], Eigen::Vector2d(1.5, x2[a]), t[v]);
      }
    }
  }

  void score(const FittedModel& m, LargeRuns& out) const {
    Eigen::MatrixXd g1(f1.rows(), f1.cols()), g2(f2.rows(), f2.cols());
    Eigen::VectorXd g0(f0.size());
    for (Eigen::Index v = 0; v < t.size(); ++v) {
      g0[v] = predict_effect(m, EffectIndex(), Eigen::Vector2d(1.5, 1.0), t[v]);
      for (Eigen::Index a = 0; a < x1.size(); ++a) {
        g1(a, v) = predict_effect(m, kSubsets[0], Eigen::Vector2d(x1[a], 1.0), t[v]);
        g2(a, v) = predict_effect(m, kSubsets[1], Eigen::Vector2d(1.5, x2[a]), t[v]);
      }
    }
    auto ratio = [](const Eigen::MatrixXd& fit, const Eigen::MatrixXd& truth) {
      const double r = std::sqrt((fit - truth).squaredNorm() / static_cast<double>(truth.size()));
      return r / (truth.maxCoeff() - truth.minCoeff());
    };
    out.main_rmse_ratio.emplace_back(ratio(g1, f1), ratio(g2, f2));
    out.mean_rmse_ratio.push_back(ratio(g0, f0));
  }
};

LargeRuns run_large(Example ex, const Ex2Oracle* oracle) {
  const auto t0 = std::chrono::steady_clock::now();
  const TruthBundle tb = theoretical_truth(ex);
  LargeRuns out;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const auto [train, test] = simulate(ex, 2000, seed);
    const FittedModel m = fit_example(train, seed);
    out.indices.push_back(indices_of(m));
    out.index_error.push_back(mean_abs_error(out.indices.back(), tb.ecv_reported));
    out.test_rmse.push_back(rmse(test_predictions(m, test), test.y));
    if (ex == Example::Example1) {
      out.local_rel_error.push_back(local_variance_error(m));
      if (seed == 0) hdmr_comparison(m, train, test, out);
    } else {
      oracle->score(m, out);
    }
    std::printf("      %s seed %d: S = %s, test RMSE %s, %.1fs\n", ex == Example::Example1 ? "example1" : "example2",
                seed, fmt3(out.indices.back()).c_str(), fmt(out.test_rmse.back()).c_str(), since(t0));
    std::fflush(stdout);
  }
  out.seconds = since(t0);
  return out;
}

std::vector<double> small_errors(Example ex, std::vector<FittedModel>* keep) {
  const TruthBundle tb = theoretical_truth(ex);
  std::vector<double> err;
  for (int seed = 0; seed < kSeeds; ++seed) {
    const Dataset train = simulate(ex, 200, seed).first;
    FittedModel m = fit_example(train, seed);
    err.push_back(mean_abs_error(indices_of(m), tb.ecv_reported));
    if (keep != nullptr && seed == 0) keep->push_back(std::move(m));
  }
  return err;
}

double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

Eigen::Vector3d mean(const std::vector<Eigen::Vector3d>& v) {
  Eigen::Vector3d s = Eigen::Vector3d::Zero();
  for (const auto& x : v) s += x;
  return s / static_cast<double>(v.size());
}

// ------------------------------------------------------------------ individual criteria

void criterion_index(int id, const std::string& name, const LargeRuns& runs, const TruthBundle& tb) {
  const Eigen::Vector3d s = mean(runs.indices);
  const Eigen::Vector3d target = tb.ecv_reported.head(3);
  const double dev = (s - target).cwiseAbs().maxCoeff();
  report(id, dev <= 0.05 && runs.seconds <= 600.0, name + " ECV indices",
         "5-seed mean S = " + fmt3(s) + ", target " + fmt3(target) + ", max |dev| " + fmt(dev) +
             " (tol 0.05), mean test RMSE " + fmt(mean(runs.test_rmse)) + ", runtime " + fmt(runs.seconds, 0) +
             "s (limit 600s)",
         runs.seconds);
}

void criterion_local_curves(const LargeRuns& runs) {
  Eigen::Vector3d worst = Eigen::Vector3d::Zero();
  for (const auto& e : runs.local_rel_error) worst = worst.cwiseMax(e);
  const Eigen::Vector3d avg = mean(runs.local_rel_error);
  report(3, worst.maxCoeff() <= 0.10, "Example 1 local variance curves",
         "mean relative error of V1, V2, V12 vs t^2, 4t^2, t^2 on |t| in [0.2, 1.5]: 5-seed mean " + fmt3(avg) +
             ", worst seed " + fmt3(worst) + " (tol 0.10 for every seed)",
         0.0);
}

void criterion_ex2_effects(const LargeRuns& runs) {
  double w1 = 0.0, w2 = 0.0, w0 = 0.0;
  for (std::size_t k = 0; k < runs.main_rmse_ratio.size(); ++k) {
    w1 = std::max(w1, runs.main_rmse_ratio[k][0]);
    w2 = std::max(w2, runs.main_rmse_ratio[k][1]);
    w0 = std::max(w0, runs.mean_rmse_ratio[k]);
  }
  report(4, w1 <= 0.05 && w2 <= 0.05, "Example 2 decomposition vs quadrature",
         "worst-seed RMSE / range: f1 " + fmt(w1) + ", f2 " + fmt(w2) + " (tol 0.05); mean effect f0 " + fmt(w0), 0.0);
}

void criterion_dense_grid() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  // worst per quantity: log|K|, sigma2, gamma, predictions, local V_u, global V_u
  std::array<double, 6> parts{};
  Rng rng(2024);
  for (int trial = 0; trial < 10; ++trial) {
    const Eigen::Index m = 5 + static_cast<Eigen::Index>(rng.uniform() * 16);
    const Eigen::Index n = 5 + static_cast<Eigen::Index>(rng.uniform() * 16);
    const Eigen::Index d = 1 + trial % 3;
    const KernelFamily fam = trial % 2 ? KernelFamily::Periodic : KernelFamily::SquaredExponential;
    const GridDataset g = testing::random_grid(m, n, d, 500 + static_cast<std::uint64_t>(trial));
    const HyperParams p = testing::random_params(d, 600 + static_cast<std::uint64_t>(trial), 0.8);
    const FittedModel mg = FittedModel::build(g, p, fam);
    const FittedModel md = FittedModel::build(flatten(g), p, fam);
    auto track = [&](std::size_t q, double v) {
      worst = std::max(worst, v);
      parts[q] = std::max(parts[q], v);
    };
    track(0, testing::rel_diff(log_det(mg.factorization()), log_det(md.factorization())));
    track(1, testing::rel_diff(mg.params().sigma2, md.params().sigma2));
    track(2, testing::max_rel_diff(mg.gamma(), md.gamma()));
    Eigen::VectorXd pg(30), pd(30);
    for (int k = 0; k < 30; ++k) {
      const Eigen::VectorXd x = testing::uniform_matrix(rng, d, 1, 0, 1).col(0);
      const double t = rng.uniform();
      pg[k] = predict(mg, x, t);
      pd[k] = predict(md, x, t);
    }
    track(3, testing::max_rel_diff(pg, pd));
    const VarianceEngine eg(mg), ed(md);
    for (const auto& u : enumerate_subsets(d, static_cast<int>(d))) {
      if (u.empty()) continue;
      track(5, testing::rel_diff(eg.global_variance(u), ed.global_variance(u)));
      // Local variances are compared as curves over t, normalized by the curve maximum like the
      // other vector quantities; pointwise ratios are meaningless where the true effect vanishes.
      Eigen::VectorXd ts(21 + g.tau.size());
      ts << linspace(0.0, 1.0, 21), g.tau;
      track(4, testing::max_rel_diff(eg.local_variance_curve(u, ts), ed.local_variance_curve(u, ts)));
    }
  }
  const double secs = since(t0);
  report(5, worst <= 1e-8 && secs <= 60.0, "Dense and Kronecker paths agree",
         "10 grids (m, n <= 20; SE and periodic outputs), worst relative difference over log|K|, sigma2, gamma, "
         "predictions, V_u: " + sci(worst) + " (tol 1e-8); by quantity " + sci(parts[0]) + ", " + sci(parts[1]) + ", " +
             sci(parts[2]) + ", " + sci(parts[3]) + ", local " + sci(parts[4]) + ", global " + sci(parts[5]),
         secs);
}

void criterion_orthogonality(const std::vector<FittedModel>& models) {
  const auto t0 = std::chrono::steady_clock::now();
  double zero_mean = 0.0, ortho = 0.0;
  Rng rng(77);
  const auto all = enumerate_subsets(2, 2);
  for (const FittedModel& m : models) {
    const Eigen::VectorXd& c1 = m.input_column(0);
    const Eigen::VectorXd& c2 = m.input_column(1);
    const double tlo = m.output_column().minCoeff(), thi = m.output_column().maxCoeff();
    // Residual of each conditional mean, scaled by the effect's largest magnitude over all
    // sampled slices.
    std::array<double, 3> resid{}, scale{};
    for (int k = 0; k < 50; ++k) {
      const double t = rng.uniform(tlo, thi);
      const Eigen::Vector2d base(c1[static_cast<Eigen::Index>(rng.uniform() * c1.size())],
                                 c2[static_cast<Eigen::Index>(rng.uniform() * c2.size())]);
      for (std::size_t s = 0; s < kSubsets.size(); ++s) {
        const EffectIndex& u = kSubsets[s];
        for (int i : u.indices) {
          const Eigen::VectorXd& col = m.input_column(i - 1);
          double sum = 0.0;
          for (Eigen::Index w = 0; w < col.size(); ++w) {
            Eigen::Vector2d x = base;
            x[i - 1] = col[w];
            const double f = predict_effect(m, u, x, t);
            sum += f;
            scale[s] = std::max(scale[s], std::abs(f));
          }
          resid[s] = std::max(resid[s], std::abs(sum / static_cast<double>(col.size())));
        }
      }
    }
    for (std::size_t s = 0; s < kSubsets.size(); ++s) zero_mean = std::max(zero_mean, resid[s] / scale[s]);
    for (int k = 0; k < 5; ++k) {
      const double t = rng.uniform(tlo, thi);
      Eigen::MatrixXd F(c1.size() * c2.size(), 4);
      for (Eigen::Index a = 0; a < c1.size(); ++a) {
        for (Eigen::Index b = 0; b < c2.size(); ++b) {
          const Eigen::Vector2d x(c1[a], c2[b]);
          for (Eigen::Index s = 0; s < 4; ++s) F(a * c2.size() + b, s) = predict_effect(m, all[static_cast<std::size_t>(s)], x, t);
        }
      }
      for (Eigen::Index u = 0; u < 4; ++u) {
        for (Eigen::Index v = u + 1; v < 4; ++v) {
          const double inner = F.col(u).dot(F.col(v)) / static_cast<double>(F.rows());
          const double scale = F.col(u).cwiseAbs().maxCoeff() * F.col(v).cwiseAbs().maxCoeff();
          ortho = std::max(ortho, std::abs(inner) / scale);
        }
      }
    }
  }
  const double secs = since(t0);
  report(6, zero_mean <= 1e-10 && ortho <= 1e-8 && secs <= 60.0, "Orthogonality of fitted effects",
         "fitted Example 1 and 2 models: conditional zero mean " + sci(zero_mean) +
             " x effect scale at 50 random t (tol 1e-10), product-measure inner products " + sci(ortho) + " x scale (tol 1e-8)",
         secs);
}

// Mean of f_u^2 over the per-dimension product grid of training values.
double brute_local(const FittedModel& m, const EffectIndex& u, double t) {
  const Eigen::VectorXd& c1 = m.input_column(u.indices[0] - 1);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(m.dims());
  double sum = 0.0;
  if (u.order() == 1) {
    for (Eigen::Index a = 0; a < c1.size(); ++a) {
      x[u.indices[0] - 1] = c1[a];
      sum += std::pow(predict_effect(m, u, x, t), 2);
    }
    return sum / static_cast<double>(c1.size());
  }
  const Eigen::VectorXd& c2 = m.input_column(u.indices[1] - 1);
  for (Eigen::Index a = 0; a < c1.size(); ++a) {
    x[u.indices[0] - 1] = c1[a];
    for (Eigen::Index b = 0; b < c2.size(); ++b) {
      x[u.indices[1] - 1] = c2[b];
      sum += std::pow(predict_effect(m, u, x, t), 2);
    }
  }
  return sum / static_cast<double>(c1.size() * c2.size());
}

void criterion_variance_oracle() {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset train = simulate(Example::Example2, 125, 0).first;  // N = 100
  const FittedModel dense = fit_example(train, 0);
  const GridDataset g = testing::random_grid(14, 12, 3, 31);
  const FittedModel grid = FittedModel::build(g, testing::random_params(3, 32), KernelFamily::SquaredExponential);
  double worst = 0.0;
  for (const FittedModel* m : {&dense, &grid}) {
    const VarianceEngine engine(*m);
    const Eigen::VectorXd& T = m->output_column();
    Eigen::VectorXd uniq = T;
    if (m->is_grid()) uniq = m->grid().tau;
    for (const auto& u : enumerate_subsets(m->dims(), 2)) {
      if (u.empty()) continue;
      double global = 0.0;
      for (Eigen::Index k = 0; k < uniq.size(); ++k) {
        const double b = brute_local(*m, u, uniq[k]);
        global += b;
        worst = std::max(worst, testing::rel_diff(engine.local_variance(u, uniq[k]), b));
      }
      global /= static_cast<double>(uniq.size());
      worst = std::max(worst, testing::rel_diff(engine.global_variance(u), global));
    }
  }
  const double secs = since(t0);
  report(7, worst <= 1e-10 && secs <= 60.0, "Variance estimators vs brute-force enumeration",
         "|u| <= 2, fitted dense model N = 100 and grid model 14 x 12 (d = 3): worst relative difference over local and "
         "global variances " + sci(worst) + " (tol 1e-10)",
         secs);
}

void criterion_sum_identity() {
  const auto t0 = std::chrono::steady_clock::now();
  double worst = 0.0;
  for (int d = 1; d <= 3; ++d) {
    const Dataset data = testing::random_dataset(80, d, 700 + static_cast<std::uint64_t>(d));
    FitConfig cfg;
    cfg.restarts = 2;
    const FittedModel m = fit(data, cfg);
    Rng rng(800 + static_cast<std::uint64_t>(d));
    const Eigen::MatrixXd X = testing::uniform_matrix(rng, 200, d, -0.1, 1.1);
    const Eigen::VectorXd T = testing::uniform_matrix(rng, 200, 1, -0.1, 1.1).col(0);
    const EffectTable table = decompose(m, X, T, d);
    worst = std::max(worst, table.max_sum_residual() / std::max(1.0, table.total.cwiseAbs().maxCoeff()));
  }
  report(8, worst <= 1e-10, "Decomposition sum identity",
         "fitted models d = 1, 2, 3, 200 points each: max |total - sum of 2^d effects| / scale = " + sci(worst) +
             " (tol 1e-10)",
         since(t0));
}

void criterion_rescale(const FittedModel& fitted) {
  const auto t0 = std::chrono::steady_clock::now();
  const Dataset& data = fitted.dataset();
  const HyperParams& p = fitted.params();
  const Eigen::VectorXd t = linspace(-1.5, 1.5, 31);
  const SensitivityReport ref = sensitivity_report(fitted, 2, t);
  bool identical = true;
  for (double a : {2.0, 0.125, -4.0}) {
    for (int i = 0; i < 2; ++i) {
      Dataset s = data;
      s.X.col(i) *= a;
      HyperParams q = p;
      q.theta[i] *= std::abs(a);
      const FittedModel m = FittedModel::build(s, q, KernelFamily::SquaredExponential);
      const SensitivityReport rep = sensitivity_report(m, 2, t);
      identical = identical && (rep.ecv_index.array() == ref.ecv_index.array()).all() &&
                  (rep.local_variance.array() == ref.local_variance.array()).all() &&
                  (m.gamma().array() == fitted.gamma().array()).all();
    }
  }
  double general = 0.0;
  for (auto [a, b] : {std::pair{3.0, 0.7}, std::pair{-0.37, 11.0}}) {
    Dataset s = data;
    s.X.col(0) = (a * s.X.col(0).array() + b).matrix();
    HyperParams q = p;
    q.theta[0] *= std::abs(a);
    const SensitivityReport rep = sensitivity_report(FittedModel::build(s, q, KernelFamily::SquaredExponential), 2, t);
    general = std::max(general, (rep.ecv_index - ref.ecv_index).cwiseAbs().maxCoeff());
  }
  report(9, identical, "Affine rescale invariance",
         std::string("x -> a x with theta -> |a| theta, a in {2, 1/8, -4}, each input of a fitted Example 1 model: "
                     "indices, local variances and gamma ") +
             (identical ? "bit-identical" : "differ") + "; general a x + b (inexact scaling) max index change " +
             sci(general),
         since(t0));
}

void criterion_convergence(const LargeRuns& ex1, const LargeRuns& ex2, const std::vector<double>& small1,
                           const std::vector<double>& small2, double seconds) {
  const double s1 = mean(small1), l1 = mean(ex1.index_error);
  const double s2 = mean(small2), l2 = mean(ex2.index_error);
  report(10, l1 < s1 && l2 < s2, "Index error shrinks with N",
         "5-seed mean |S - S_true|: Example 1 N=200 " + fmt(s1) + " -> N=2000 " + fmt(l1) + "; Example 2 N=200 " +
             fmt(s2) + " -> N=2000 " + fmt(l2),
         seconds);
}

void criterion_hdmr(const LargeRuns& ex1) {
  const bool pass = ex1.foagp_rmse[0] < ex1.hdmr_rmse[0] && ex1.foagp_rmse[1] < ex1.hdmr_rmse[1];
  report(11, pass, "FOAGP beats HDMR on Example 1 main effects",
         "RMSE vs theory at the test points (f1, f2, f12): FOAGP " + fmt3(ex1.foagp_rmse) + ", HDMR order 4 " +
             fmt3(ex1.hdmr_rmse),
         0.0);
}

void criterion_periodic() {
  const auto t0 = std::chrono::steady_clock::now();
  bool exact = true;
  Rng rng(12);
  for (double period : {1.0, 0.37, 2.0, 5.5}) {
    for (double theta : {0.01, 1.0, 30.0, 1000.0}) {
      const auto spec = KernelSpec::periodic(theta, period);
      for (int k = 0; k < 500; ++k) {
        const double t = rng.uniform(-10, 10);
        exact = exact && eval_base(spec, t, t + period) == 1.0;
      }
    }
  }
  // Periodic-output grid model with the Kronecker path, checked against the dense path.
  const GridDataset g = testing::random_grid(16, 20, 2, 90);
  const HyperParams p = testing::random_params(2, 91, 0.5);
  const FittedModel mg = FittedModel::build(g, p, KernelFamily::Periodic);
  const FittedModel md = FittedModel::build(flatten(g), p, KernelFamily::Periodic);
  const double diff = testing::max_rel_diff(mg.gamma(), md.gamma());
  report(12, exact && diff <= 1e-8, "Fuselage case: not reproducible (no published data)",
         std::string("substitute checks only: periodic k(t, t+T) == 1 exactly over 8000 draws: ") +
             (exact ? "yes" : "no") + "; periodic Kronecker vs dense gamma " + sci(diff) + " (tol 1e-8)",
         since(t0));
}

}  // namespace

int main(int argc, char** argv) {
  // --quick stops after the criteria that need no N = 2000 fits.
  const bool quick = argc > 1 && std::string(argv[1]) == "--quick";
  tune_allocator();
  set_warning_sink([](const std::string&) {});
  const auto start = std::chrono::steady_clock::now();

  // Fast structural criteria first.
  criterion_dense_grid();
  criterion_variance_oracle();
  criterion_sum_identity();
  criterion_periodic();

  const auto small_t0 = std::chrono::steady_clock::now();
  std::vector<FittedModel> small_models;
  const std::vector<double> small1 = small_errors(Example::Example1, &small_models);
  const std::vector<double> small2 = small_errors(Example::Example2, &small_models);
  const double small_seconds = since(small_t0);
  criterion_orthogonality(small_models);
  criterion_rescale(small_models.front());
  if (quick) {
    std::printf("acceptance (quick): %d criteria failed\n", failures);
    return failures == 0 ? 0 : 1;
  }

  const TruthBundle tb1 = theoretical_truth(Example::Example1);
  const TruthBundle tb2 = theoretical_truth(Example::Example2);
  const LargeRuns ex1 = run_large(Example::Example1, nullptr);
  criterion_index(1, "Example 1", ex1, tb1);
  criterion_local_curves(ex1);
  criterion_hdmr(ex1);

  const Ex2Oracle oracle;
  const LargeRuns ex2 = run_large(Example::Example2, &oracle);
  criterion_index(2, "Example 2", ex2, tb2);
  criterion_ex2_effects(ex2);
  criterion_convergence(ex1, ex2, small1, small2, small_seconds + ex1.seconds + ex2.seconds);

  std::printf("acceptance: %d criteria failed, total %.0fs\n", failures, since(start));
  return failures == 0 ? 0 : 1;
}
