#include "foagp/optimize.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <limits>
#include <numeric>
#include <vector>

namespace foagp {

namespace {

Eigen::VectorXd clamp(const Eigen::VectorXd& x, const Eigen::VectorXd& lo,
                      const Eigen::VectorXd& hi) {
  return x.cwiseMax(lo).cwiseMin(hi);
}

// Zeroes gradient components that push against an active bound.
Eigen::VectorXd free_gradient(const Eigen::VectorXd& x, const Eigen::VectorXd& g,
                              const Eigen::VectorXd& lo, const Eigen::VectorXd& hi) {
  Eigen::VectorXd out = g;
  for (Eigen::Index i = 0; i < x.size(); ++i) {
    if ((x[i] <= lo[i] && g[i] > 0.0) || (x[i] >= hi[i] && g[i] < 0.0)) out[i] = 0.0;
  }
  return out;
}

constexpr double kNoiseFloor = 1e-12;
constexpr double kMinStep = 1e-10;
constexpr int kMaxBacktracks = 25;

struct Pair {
  Eigen::VectorXd s;
  Eigen::VectorXd y;
  double rho;
};

Eigen::VectorXd two_loop(const std::deque<Pair>& hist, const Eigen::VectorXd& g) {
  Eigen::VectorXd q = g;
  std::vector<double> alpha(hist.size());
  for (std::size_t k = hist.size(); k-- > 0;) {
    alpha[k] = hist[k].rho * hist[k].s.dot(q);
    q -= alpha[k] * hist[k].y;
  }
  if (!hist.empty()) {
    const auto& last = hist.back();
    q *= last.s.dot(last.y) / last.y.squaredNorm();
  }
  for (std::size_t k = 0; k < hist.size(); ++k) {
    const double beta = hist[k].rho * hist[k].y.dot(q);
    q += (alpha[k] - beta) * hist[k].s;
  }
  return -q;
}

}  // namespace

OptimizeResult minimize_lbfgs(const Objective& f, const Eigen::VectorXd& x0,
                              const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                              const OptimizeOptions& options) {
  OptimizeResult res;
  const Eigen::Index n = x0.size();
  Eigen::VectorXd x = clamp(x0, lower, upper);
  Eigen::VectorXd g(n);
  double fx = f(x, &g);
  ++res.evaluations;
  res.initial_value = fx;
  res.x = x;
  res.value = fx;
  if (!std::isfinite(fx)) return res;

  std::deque<Pair> hist;
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    const Eigen::VectorXd gf = free_gradient(x, g, lower, upper);
    if (gf.lpNorm<Eigen::Infinity>() < 1e-12) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd dir = two_loop(hist, gf);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (gf[i] == 0.0) dir[i] = 0.0;
    }
    if (!(dir.dot(gf) < 0.0)) {
      hist.clear();
      dir = -gf;
    }
    double step = hist.empty() ? std::min(1.0, 1.0 / gf.norm()) : 1.0;
    // Objective noise from cancellation in nearly flat regions; a step within it counts
    // as no progress and ends the run through the improvement test below.
    const double slack = kNoiseFloor * (1.0 + std::abs(fx));
    Eigen::VectorXd x_new;
    Eigen::VectorXd g_new(n);
    double f_new = std::numeric_limits<double>::infinity();
    bool accepted = false;
    for (int ls = 0; ls < kMaxBacktracks; ++ls) {
      x_new = clamp(x + step * dir, lower, upper);
      if ((x_new - x).lpNorm<Eigen::Infinity>() < kMinStep) break;
      f_new = f(x_new, &g_new);
      ++res.evaluations;
      const double slope = g.dot(x_new - x);
      if (std::isfinite(f_new) && f_new <= fx + 1e-4 * slope + slack) {
        accepted = true;
        break;
      }
      // Minimizer of the quadratic through f(x), its slope and f_new, kept in [0.1, 0.5].
      double shrink = 0.5;
      if (std::isfinite(f_new) && slope < 0.0) {
        shrink = std::clamp(-slope / (2.0 * (f_new - fx - slope)), 0.1, 0.5);
      }
      step *= shrink;
    }
    if (!accepted) {
      if (!hist.empty()) {
        hist.clear();
        continue;
      }
      res.converged = true;
      break;
    }
    const Eigen::VectorXd s = x_new - x;
    const Eigen::VectorXd yv = g_new - g;
    const double sy = s.dot(yv);
    if (sy > 1e-10 * s.norm() * yv.norm()) {
      hist.push_back({s, yv, 1.0 / sy});
      if (static_cast<int>(hist.size()) > options.history) hist.pop_front();
    }
    const double improvement = fx - f_new;
    x = x_new;
    g = g_new;
    fx = f_new;
    if (improvement < options.tolerance) {
      res.converged = true;
      ++res.iterations;
      break;
    }
  }
  res.x = x;
  res.value = fx;
  return res;
}

OptimizeResult minimize_simplex(const Objective& f, const Eigen::VectorXd& x0,
                                const Eigen::VectorXd& lower, const Eigen::VectorXd& upper,
                                const OptimizeOptions& options) {
  OptimizeResult res;
  const Eigen::Index n = x0.size();
  std::vector<Eigen::VectorXd> pts;
  std::vector<double> vals;
  auto eval = [&](const Eigen::VectorXd& x) {
    ++res.evaluations;
    const double v = f(x, nullptr);
    return std::isfinite(v) ? v : std::numeric_limits<double>::infinity();
  };
  pts.push_back(clamp(x0, lower, upper));
  vals.push_back(eval(pts[0]));
  res.initial_value = vals[0];
  for (Eigen::Index i = 0; i < n; ++i) {
    Eigen::VectorXd p = pts[0];
    p[i] += (p[i] + 0.5 <= upper[i]) ? 0.5 : -0.5;
    p = clamp(p, lower, upper);
    pts.push_back(p);
    vals.push_back(eval(p));
  }
  std::vector<std::size_t> order(pts.size());
  for (res.iterations = 0; res.iterations < options.max_iterations; ++res.iterations) {
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(),
                     [&](std::size_t a, std::size_t b) { return vals[a] < vals[b]; });
    const std::size_t best = order.front();
    const std::size_t worst = order.back();
    const std::size_t second = order[order.size() - 2];
    if (std::isfinite(vals[worst]) && vals[worst] - vals[best] < options.tolerance) {
      res.converged = true;
      break;
    }
    Eigen::VectorXd centroid = Eigen::VectorXd::Zero(n);
    for (std::size_t k = 0; k + 1 < order.size(); ++k) centroid += pts[order[k]];
    centroid /= static_cast<double>(n);

    const Eigen::VectorXd refl = clamp(centroid + (centroid - pts[worst]), lower, upper);
    const double fr = eval(refl);
    if (fr < vals[best]) {
      const Eigen::VectorXd exp = clamp(centroid + 2.0 * (centroid - pts[worst]), lower, upper);
      const double fe = eval(exp);
      if (fe < fr) {
        pts[worst] = exp;
        vals[worst] = fe;
      } else {
        pts[worst] = refl;
        vals[worst] = fr;
      }
      continue;
    }
    if (fr < vals[second]) {
      pts[worst] = refl;
      vals[worst] = fr;
      continue;
    }
    const bool outside = fr < vals[worst];
    const Eigen::VectorXd con = outside ? Eigen::VectorXd(centroid + 0.5 * (refl - centroid))
                                        : Eigen::VectorXd(centroid + 0.5 * (pts[worst] - centroid));
    const double fc = eval(con);
    if (fc < (outside ? fr : vals[worst])) {
      pts[worst] = con;
      vals[worst] = fc;
      continue;
    }
    for (std::size_t k = 1; k < order.size(); ++k) {
      const std::size_t idx = order[k];
      pts[idx] = pts[best] + 0.5 * (pts[idx] - pts[best]);
      vals[idx] = eval(pts[idx]);
    }
  }
  const auto it = std::min_element(vals.begin(), vals.end());
  res.x = pts[static_cast<std::size_t>(it - vals.begin())];
  res.value = *it;
  return res;
}

}  // namespace foagp
