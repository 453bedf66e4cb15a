#include <cmath>

#include "doctest.h"
#include "foagp/effects.hpp"
#include "foagp/error.hpp"
#include "support.hpp"

using namespace foagp;

namespace {

// f_u(x, t) = delta_t^2 sum_k gamma_k k_t(t, T_k) prod_{i in u} delta_i^2 k~_i(x_i, X_ki).
double naive_effect(const FittedModel& m, const Dataset& data, const EffectIndex& u, const Eigen::VectorXd& x,
                    double t) {
  const HyperParams& p = m.params();
  long double sum = 0;
  for (Eigen::Index k = 0; k < data.size(); ++k) {
    long double term = m.gamma()[k] * testing::naive_kernel(m.output_spec(), t, data.T[k]);
    for (int i1 : u.indices) {
      const Eigen::Index i = i1 - 1;
      term *= p.input_delta(i) * p.input_delta(i) *
              testing::naive_orthogonal(m.input_spec(i), data.X.col(i), x[i], data.X(k, i));
    }
    sum += term;
  }
  return static_cast<double>(p.output_delta() * p.output_delta() * sum) + (u.empty() ? m.y_mean() : 0.0);
}

}  // namespace

TEST_SUITE("effects") {

TEST_CASE("effect index naming and validation") {
  CHECK(EffectIndex().name(2) == "f0");
  CHECK(EffectIndex({1, 2}).name(2) == "f12");
  CHECK(EffectIndex({1, 10}).name(10) == "f1_10");
  CHECK(EffectIndex::parse("f12", 2) == EffectIndex({1, 2}));
  CHECK(EffectIndex::parse("f3_10", 12) == EffectIndex({3, 10}));
  CHECK_THROWS_AS(EffectIndex({2, 1}).validate(2), Error);
  CHECK_THROWS_AS(EffectIndex({1, 1}).validate(2), Error);
  CHECK_THROWS_AS(EffectIndex({3}).validate(2), Error);
}

TEST_CASE("subset enumeration order and counts") {
  const auto s = enumerate_subsets(3, 3);
  REQUIRE(s.size() == 8);
  CHECK(s[0].empty());
  CHECK(s[1] == EffectIndex({1}));
  CHECK(s[4] == EffectIndex({1, 2}));
  CHECK(s[7] == EffectIndex({1, 2, 3}));
  CHECK(enumerate_subsets(10, 1).size() == 11);
  CHECK(default_max_order(10) == 3);
}

TEST_CASE("effects match the direct formula") {
  const Dataset data = testing::random_dataset(30, 2, 1);
  const FittedModel m = FittedModel::build(data, testing::random_params(2, 2), KernelFamily::SquaredExponential);
  Rng rng(3);
  for (int k = 0; k < 10; ++k) {
    const Eigen::Vector2d x(rng.uniform(), rng.uniform());
    const double t = rng.uniform();
    for (const auto& u : enumerate_subsets(2, 2)) {
      CHECK(predict_effect(m, u, x, t) == doctest::Approx(naive_effect(m, data, u, x, t)).epsilon(1e-10).scale(1.0));
    }
  }
}

TEST_CASE("zero weights give the mean everywhere") {
  Dataset data = testing::random_dataset(15, 2, 4);
  const FittedModel base = FittedModel::build(data, testing::random_params(2, 5), KernelFamily::SquaredExponential);
  const FittedModel m = FittedModel::restore(data, base.params(), KernelFamily::SquaredExponential, 1.5,
                                             Eigen::VectorXd::Zero(15));
  CHECK(predict(m, Eigen::Vector2d(0.2, 0.9), 0.4) == 1.5);
  CHECK(predict_effect(m, EffectIndex({1}), Eigen::Vector2d(0.2, 0.9), 0.4) == 0.0);
}

TEST_CASE("sum identity over all subsets") {
  for (int d = 1; d <= 3; ++d) {
    const Dataset data = testing::random_dataset(40, d, 10 + d);
    const FittedModel m = FittedModel::build(data, testing::random_params(d, 20 + d), KernelFamily::SquaredExponential);
    Rng rng(30 + d);
    const Eigen::MatrixXd X = testing::uniform_matrix(rng, 25, d, -0.2, 1.2);
    const Eigen::VectorXd T = testing::uniform_matrix(rng, 25, 1, -0.2, 1.2).col(0);
    const EffectTable table = decompose(m, X, T, d);
    CHECK(table.complete);
    CHECK(table.values.cols() == (1 << d));
    const double scale = std::max(1.0, table.total.cwiseAbs().maxCoeff());
    CHECK(table.max_sum_residual() <= 1e-10 * scale);
    for (Eigen::Index r = 0; r < X.rows(); ++r) CHECK(table.total[r] == predict(m, X.row(r).transpose(), T[r]));
  }
}

TEST_CASE("truncated decomposition warns") {
  const Dataset data = testing::random_dataset(20, 3, 40);
  const FittedModel m = FittedModel::build(data, testing::random_params(3, 41), KernelFamily::SquaredExponential);
  const EffectTable table = decompose(m, data.X.topRows(3), data.T.head(3), 1);
  CHECK(!table.complete);
  CHECK(table.values.cols() == 4);
  CHECK(!table.warnings.empty());
}

TEST_CASE("effects read only their own coordinates") {
  const Dataset data = testing::random_dataset(25, 3, 42);
  const FittedModel m = FittedModel::build(data, testing::random_params(3, 43), KernelFamily::SquaredExponential);
  const Eigen::Vector3d x(0.1, 0.5, 0.9);
  Eigen::Vector3d y = x;
  y[1] = 123.0;
  for (const auto& u : enumerate_subsets(3, 3)) {
    if (u.contains(2)) continue;
    CHECK(predict_effect(m, u, x, 0.3) == predict_effect(m, u, y, 0.3));
  }
}

TEST_CASE("conditional zero mean over the training column") {
  for (int grid = 0; grid < 2; ++grid) {
    const Dataset data = testing::random_dataset(50, 2, 50);
    const GridDataset g = testing::random_grid(12, 8, 2, 51);
    const FittedModel m = grid ? FittedModel::build(g, testing::random_params(2, 52), KernelFamily::SquaredExponential)
                               : FittedModel::build(data, testing::random_params(2, 52), KernelFamily::SquaredExponential);
    Rng rng(53);
    for (int k = 0; k < 20; ++k) {
      const double t = rng.uniform(-0.5, 1.5);
      const Eigen::Vector2d base(rng.uniform(), rng.uniform());
      for (const auto& u : {EffectIndex({1}), EffectIndex({2}), EffectIndex({1, 2})}) {
        for (int i : u.indices) {
          const Eigen::VectorXd& col = m.input_column(i - 1);
          double sum = 0.0, scale = 0.0;
          for (Eigen::Index w = 0; w < col.size(); ++w) {
            Eigen::Vector2d x = base;
            x[i - 1] = col[w];
            const double f = predict_effect(m, u, x, t);
            sum += f;
            scale = std::max(scale, std::abs(f));
          }
          CHECK(std::abs(sum / col.size()) <= 1e-10 * std::max(scale, 1e-300));
        }
      }
    }
  }
}

TEST_CASE("effects are orthogonal under the product of marginals") {
  const Dataset data = testing::random_dataset(40, 2, 60);
  const FittedModel m = FittedModel::build(data, testing::random_params(2, 61), KernelFamily::SquaredExponential);
  const auto subsets = enumerate_subsets(2, 2);
  for (double t : {-0.3, 0.2, 0.6, 1.1}) {
    const Eigen::Index n = data.size();
    Eigen::MatrixXd F(n * n, 4);
    for (Eigen::Index a = 0; a < n; ++a) {
      for (Eigen::Index b = 0; b < n; ++b) {
        const Eigen::Vector2d x(data.X(a, 0), data.X(b, 1));
        for (std::size_t s = 0; s < 4; ++s) F(a * n + b, static_cast<Eigen::Index>(s)) = predict_effect(m, subsets[s], x, t);
      }
    }
    for (Eigen::Index u = 1; u < 4; ++u) {
      for (Eigen::Index v = 0; v < 4; ++v) {
        if (u == v) continue;
        const double inner = F.col(u).dot(F.col(v)) / static_cast<double>(F.rows());
        const double scale = F.col(u).cwiseAbs().maxCoeff() * F.col(v).cwiseAbs().maxCoeff();
        CHECK(std::abs(inner) <= 1e-8 * scale);
      }
    }
  }
}

TEST_CASE("decompose checks shapes") {
  const Dataset data = testing::random_dataset(10, 2, 70);
  const FittedModel m = FittedModel::build(data, testing::random_params(2, 71), KernelFamily::SquaredExponential);
  CHECK_THROWS_AS(decompose(m, Eigen::MatrixXd::Zero(3, 3), Eigen::VectorXd::Zero(3), 2), Error);
  CHECK_THROWS_AS(decompose(m, Eigen::MatrixXd::Zero(3, 2), Eigen::VectorXd::Zero(2), 2), Error);
}

}
