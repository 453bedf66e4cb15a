#include <cmath>

#include "doctest.h"
#include "foagp/effects.hpp"
#include "foagp/error.hpp"
#include "foagp/fit.hpp"
#include "support.hpp"

using namespace foagp;

namespace {

// K from the kernel definitions, one entry at a time.
Eigen::MatrixXd naive_covariance(const HyperParams& p, const Dataset& data, KernelFamily fam) {
  const Eigen::Index n = data.size(), d = data.dims();
  std::vector<Eigen::VectorXd> cols;
  for (Eigen::Index i = 0; i < d; ++i) cols.push_back(data.X.col(i));
  const KernelSpec out = fam == KernelFamily::Periodic ? KernelSpec::periodic(p.output_theta(), p.period)
                                                       : KernelSpec::squared_exponential(p.output_theta());
  Eigen::MatrixXd K(n, n);
  for (Eigen::Index a = 0; a < n; ++a) {
    for (Eigen::Index b = 0; b < n; ++b) {
      long double v = p.output_delta() * p.output_delta() * testing::naive_kernel(out, data.T[a], data.T[b]);
      for (Eigen::Index i = 0; i < d; ++i) {
        const auto s = KernelSpec::squared_exponential(p.input_theta(i));
        v *= 1.0L + p.input_delta(i) * p.input_delta(i) *
                        testing::naive_orthogonal(s, cols[static_cast<std::size_t>(i)], data.X(a, i), data.X(b, i));
      }
      K(a, b) = static_cast<double>(v) + (a == b ? p.nugget() * p.nugget() : 0.0);
    }
  }
  return K;
}

double naive_neg_loglik(const Eigen::MatrixXd& K, const Eigen::VectorXd& y, double sigma2) {
  const Eigen::LLT<Eigen::MatrixXd> llt(K);
  const double logdet = 2.0 * llt.matrixLLT().diagonal().array().log().sum();
  const double quad = y.dot(llt.solve(y));
  return static_cast<double>(y.size()) * std::log(sigma2) + logdet + quad / sigma2;
}

}  // namespace

TEST_SUITE("fit") {

TEST_CASE("profile sigma2 on identity covariances") {
  Eigen::VectorXd y(4);
  y << 1, -1, 1, -1;
  CHECK(profile_sigma2(DenseFactorization(Eigen::MatrixXd::Identity(4, 4)), y) == 1.0);
  CHECK(profile_sigma2(DenseFactorization(4.0 * Eigen::MatrixXd::Identity(4, 4)), y) == 0.25);
  CHECK_THROWS_AS(profile_sigma2(DenseFactorization(Eigen::MatrixXd::Identity(4, 4)), Eigen::VectorXd::Zero(4)),
                  Error);
}

TEST_CASE("objective matches a direct evaluation") {
  for (int fam = 0; fam < 2; ++fam) {
    const KernelFamily family = fam ? KernelFamily::Periodic : KernelFamily::SquaredExponential;
    const Dataset data = testing::random_dataset(25, 2, 100 + fam);
    const HyperParams p = testing::random_params(2, 7, 0.8);
    const Eigen::VectorXd yc = (data.y.array() - data.y.mean()).matrix();
    const Eigen::MatrixXd K = naive_covariance(p, data, family);
    const double s2 = yc.dot(K.llt().solve(yc)) / 25.0;
    const double want = 25.0 * std::log(s2) + std::log(K.determinant());
    CHECK(objective(p, data, family) == doctest::Approx(want).epsilon(1e-9));
    const FittedModel m = FittedModel::build(data, p, family);
    CHECK(m.params().sigma2 == doctest::Approx(s2).epsilon(1e-10));
    CHECK(testing::max_rel_diff(K * m.gamma(), yc) < 1e-8);
  }
}

TEST_CASE("profile sigma2 minimizes the likelihood") {
  const Dataset data = testing::random_dataset(30, 2, 3);
  const HyperParams p = testing::random_params(2, 4);
  const FittedModel m = FittedModel::build(data, p, KernelFamily::SquaredExponential);
  const Eigen::MatrixXd K = naive_covariance(p, data, KernelFamily::SquaredExponential);
  const Eigen::VectorXd yc = (data.y.array() - data.y.mean()).matrix();
  const double s2 = m.params().sigma2;
  const double at = naive_neg_loglik(K, yc, s2);
  CHECK(naive_neg_loglik(K, yc, 1.1 * s2) > at);
  CHECK(naive_neg_loglik(K, yc, 0.9 * s2) > at);
}

TEST_CASE("objective is invariant to sample order") {
  const Dataset data = testing::random_dataset(20, 2, 5);
  const HyperParams p = testing::random_params(2, 6);
  Dataset rev = data;
  rev.X = data.X.colwise().reverse();
  rev.T = data.T.reverse();
  rev.y = data.y.reverse();
  CHECK(objective(p, rev, KernelFamily::SquaredExponential) ==
        doctest::Approx(objective(p, data, KernelFamily::SquaredExponential)).epsilon(1e-12));
}

TEST_CASE("doubling the response shifts the objective by N log 4") {
  const Dataset data = testing::random_dataset(20, 1, 8);
  Dataset twice = data;
  twice.y *= 2.0;
  const HyperParams p = testing::random_params(1, 9);
  const double a = objective(p, data, KernelFamily::SquaredExponential);
  const double b = objective(p, twice, KernelFamily::SquaredExponential);
  CHECK(b - a == doctest::Approx(20.0 * std::log(4.0)).epsilon(1e-10));
}

TEST_CASE("dense and grid objectives agree") {
  for (int fam = 0; fam < 2; ++fam) {
    const KernelFamily family = fam ? KernelFamily::Periodic : KernelFamily::SquaredExponential;
    const GridDataset g = testing::random_grid(7, 5, 2, 11 + fam);
    const HyperParams p = testing::random_params(2, 12, 0.9);
    CHECK(objective(p, g, family) == doctest::Approx(objective(p, flatten(g), family)).epsilon(1e-10).scale(1.0));
    const FittedModel mg = FittedModel::build(g, p, family);
    const FittedModel md = FittedModel::build(flatten(g), p, family);
    CHECK(testing::rel_diff(mg.params().sigma2, md.params().sigma2) < 1e-10);
  }
}

TEST_CASE("analytic gradient matches central differences") {
  for (int mode = 0; mode < 4; ++mode) {
    const KernelFamily family = mode % 2 ? KernelFamily::Periodic : KernelFamily::SquaredExponential;
    const bool grid = mode >= 2;
    const GridDataset g = testing::random_grid(6, 5, 2, 20 + mode);
    const Dataset data = testing::random_dataset(30, 2, 30 + mode);
    LikelihoodObjective f = grid ? LikelihoodObjective(g, family, 0.9) : LikelihoodObjective(data, family, 0.9);
    for (int trial = 0; trial < 3; ++trial) {
      const Eigen::VectorXd x = to_log_params(testing::random_params(2, 50 + 10 * mode + trial, 0.9));
      Eigen::VectorXd grad(x.size());
      f(x, &grad);
      const double h = 1e-5;
      for (Eigen::Index k = 0; k < x.size(); ++k) {
        Eigen::VectorXd up = x, dn = x;
        up[k] += h;
        dn[k] -= h;
        const double fd = (f(up, nullptr) - f(dn, nullptr)) / (2 * h);
        CHECK(std::abs(fd - grad[k]) <= 1e-5 * std::max(1.0, grad.cwiseAbs().maxCoeff()));
      }
    }
  }
}

TEST_CASE("log-parameter mapping round trips") {
  const HyperParams p = testing::random_params(3, 2, 1.7);
  const HyperParams q = from_log_params(to_log_params(p), 3, 1.7);
  CHECK(testing::max_rel_diff(p.delta, q.delta) < 1e-15);
  CHECK(testing::max_rel_diff(p.theta, q.theta) < 1e-15);
}

TEST_CASE("refits with the same seed are bit-identical") {
  const Dataset data = testing::random_dataset(40, 2, 60);
  FitConfig cfg;
  cfg.restarts = 3;
  cfg.seed = 17;
  const FittedModel a = fit(data, cfg);
  const FittedModel b = fit(data, cfg);
  CHECK((a.params().delta.array() == b.params().delta.array()).all());
  CHECK((a.params().theta.array() == b.params().theta.array()).all());
  CHECK(a.objective() == b.objective());
  for (const auto& r : a.log().restarts) CHECK(a.objective() <= r.initial_objective);
  CHECK(a.log().path == "dense");
}

TEST_CASE("simplex optimizer also improves on every start") {
  const Dataset data = testing::random_dataset(30, 1, 61);
  FitConfig cfg;
  cfg.restarts = 2;
  cfg.optimizer = OptimizerKind::Simplex;
  const FittedModel m = fit(data, cfg);
  for (const auto& r : m.log().restarts) CHECK(m.objective() <= r.initial_objective);
}

TEST_CASE("fitted model respects the bounds") {
  const GridDataset g = testing::random_grid(8, 6, 2, 62);
  FitConfig cfg;
  cfg.restarts = 2;
  const FittedModel m = fit(g, cfg);
  CHECK(m.log().path == "grid");
  const HyperParams& p = m.params();
  CHECK(p.nugget() >= 1e-4 * (1 - 1e-12));
  CHECK(p.nugget() <= 10 * (1 + 1e-12));
  for (Eigen::Index i = 1; i < p.delta.size(); ++i) {
    CHECK(p.delta[i] >= 1e-3 * (1 - 1e-12));
    CHECK(p.delta[i] <= 1e3 * (1 + 1e-12));
  }
  cfg.force_dense = true;
  CHECK(fit(g, cfg).log().path == "dense");
}

TEST_CASE("constant response is reproduced through the mean") {
  Dataset data = testing::random_dataset(20, 2, 63);
  data.y.setConstant(3.25);
  FitConfig cfg;
  cfg.restarts = 1;
  const FittedModel m = fit(data, cfg);
  CHECK(m.gamma().isZero(0.0));
  CHECK(predict(m, Eigen::Vector2d(0.3, 0.7), 0.5) == 3.25);
}

TEST_CASE("invalid configurations and data are rejected") {
  const Dataset data = testing::random_dataset(10, 1, 64);
  FitConfig cfg;
  cfg.restarts = 0;
  CHECK_THROWS_AS(fit(data, cfg), Error);
  Dataset bad = data;
  bad.y[3] = std::nan("");
  CHECK_THROWS_AS(fit(bad, FitConfig{}), Error);
  Dataset one = slice(data, 0, 1);
  CHECK_THROWS_AS(one.validate(), Error);
}

TEST_CASE("thread cap honors the environment") {
  CHECK(thread_cap(3) == 3);
  setenv("FOAGP_THREADS", "2", 1);
  CHECK(thread_cap(0) == 2);
  unsetenv("FOAGP_THREADS");
  CHECK(thread_cap(0) >= 1);
}

}
