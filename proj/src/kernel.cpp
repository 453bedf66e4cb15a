#include "foagp/kernel.hpp"

#include <cmath>
#include <numbers>
#include <string>
#include <vector>

#include "foagp/error.hpp"

namespace foagp {

namespace {

void require_finite(double a, double b) {
  if (!std::isfinite(a) || !std::isfinite(b)) {
    throw Error(ErrorKind::InvalidInput, "kernel evaluated at a non-finite point");
  }
}

// Mean of k(a, column[v]) - 1 with a fixed left-to-right summation order.
double excess_against(const KernelSpec& spec, double a, const Eigen::VectorXd& column) {
  double sum = 0.0;
  for (Eigen::Index v = 0; v < column.size(); ++v) sum += eval_excess(spec, a, column[v]);
  return sum / static_cast<double>(column.size());
}

void check_cache(const MomentCache& cache) {
  if (!(cache.grand_mean >= kGrandMeanFloor)) {
    throw Error(ErrorKind::DegenerateKernel,
                "orthogonal kernel grand mean " + std::to_string(cache.grand_mean) +
                    " is below the floor; the length-scale is pathological");
  }
}

// k - m_a m_b / mbar written in excesses: with k = 1 + e, m = 1 + ea, mbar = 1 + ebar the
// constant ones cancel exactly. Symmetric in (ea, eb) bit-for-bit.
inline double orthogonal_from_excess(double e, double ea, double eb, double ebar) {
  return (((e + ebar) - (ea + eb)) + (e * ebar - ea * eb)) / (1.0 + ebar);
}

// Moment of an arbitrary point against the training column. Training points have m >= 1/N from
// their own term; a point whose moment falls below half of that lies far from the data, where
// the excesses are all close to -1 and carry no relative precision. Such points keep the plain
// moment and use the plain form k - m_a m_b / mbar instead.
struct PointMoment {
  double excess = 0.0;
  double mean = 1.0;
  bool far = false;
};

PointMoment point_moment(const KernelSpec& spec, double a, const Eigen::VectorXd& column) {
  PointMoment pm;
  pm.excess = excess_against(spec, a, column);
  const double n = static_cast<double>(column.size());
  if (1.0 + pm.excess < 0.5 / n) {
    double sum = 0.0;
    for (Eigen::Index v = 0; v < column.size(); ++v) sum += eval_base(spec, a, column[v]);
    pm.mean = sum / n;
    pm.far = true;
  } else {
    pm.mean = 1.0 + pm.excess;
  }
  return pm;
}

double orthogonal_entry(const KernelSpec& spec, double a, double b, const PointMoment& ma,
                        const PointMoment& mb, const MomentCache& cache) {
  if (ma.far || mb.far) return eval_base(spec, a, b) - (ma.mean * mb.mean) / cache.grand_mean;
  return orthogonal_from_excess(eval_excess(spec, a, b), ma.excess, mb.excess, cache.grand_excess);
}

PointMoment training_moment(const MomentCache& cache, Eigen::Index v) {
  return {cache.row_excess[v], cache.row_means[v], false};
}

void finalize_cache(MomentCache& cache) {
  cache.row_means = cache.row_excess.array() + 1.0;
  double sum = 0.0;
  for (Eigen::Index u = 0; u < cache.row_excess.size(); ++u) sum += cache.row_excess[u];
  cache.grand_excess = sum / static_cast<double>(cache.row_excess.size());
  cache.grand_mean = 1.0 + cache.grand_excess;
}

}  // namespace

void KernelSpec::validate() const {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw Error(ErrorKind::InvalidInput, "kernel theta must be positive and finite");
  }
  if (family == KernelFamily::Periodic && (!(period > 0.0) || !std::isfinite(period))) {
    throw Error(ErrorKind::InvalidInput, "periodic kernel period must be positive and finite");
  }
}

double eval_base(const KernelSpec& spec, double a, double b) {
  require_finite(a, b);
  const double r = std::abs(a - b);
  switch (spec.family) {
    case KernelFamily::SquaredExponential:
      return std::exp(-0.5 * (r * r) / (spec.theta * spec.theta));
    case KernelFamily::Periodic: {
      const double s = std::sin(std::numbers::pi * r / spec.period);
      return std::exp(-(spec.theta * spec.theta) * (s * s));
    }
  }
  return 0.0;
}

double eval_excess(const KernelSpec& spec, double a, double b) {
  require_finite(a, b);
  const double r = std::abs(a - b);
  switch (spec.family) {
    case KernelFamily::SquaredExponential:
      return std::expm1(-0.5 * (r * r) / (spec.theta * spec.theta));
    case KernelFamily::Periodic: {
      const double s = std::sin(std::numbers::pi * r / spec.period);
      return std::expm1(-(spec.theta * spec.theta) * (s * s));
    }
  }
  return 0.0;
}

double eval_base_dlogtheta(const KernelSpec& spec, double a, double b) {
  require_finite(a, b);
  const double r = std::abs(a - b);
  switch (spec.family) {
    case KernelFamily::SquaredExponential: {
      const double q = (r * r) / (spec.theta * spec.theta);
      return std::exp(-0.5 * q) * q;
    }
    case KernelFamily::Periodic: {
      const double s = std::sin(std::numbers::pi * r / spec.period);
      const double q = (spec.theta * spec.theta) * (s * s);
      return -2.0 * q * std::exp(-q);
    }
  }
  return 0.0;
}

MomentCache build_moments(const KernelSpec& spec, const Eigen::VectorXd& column) {
  spec.validate();
  const Eigen::Index n = column.size();
  if (n < 2) {
    throw Error(ErrorKind::InsufficientData, "moment cache needs at least 2 training values");
  }
  for (Eigen::Index u = 0; u < n; ++u) {
    if (!std::isfinite(column[u])) {
      throw Error(ErrorKind::InvalidInput, "non-finite training value in kernel column");
    }
  }
  MomentCache cache;
  cache.column = column;
  cache.row_excess.resize(n);
  for (Eigen::Index u = 0; u < n; ++u) cache.row_excess[u] = excess_against(spec, column[u], column);
  finalize_cache(cache);
  return cache;
}

MomentCache build_moments(const KernelSpec& spec, std::span<const double> column) {
  Eigen::VectorXd v(static_cast<Eigen::Index>(column.size()));
  for (std::size_t i = 0; i < column.size(); ++i) v[static_cast<Eigen::Index>(i)] = column[i];
  return build_moments(spec, v);
}

double moment_at(const KernelSpec& spec, const MomentCache& cache, double a) {
  return point_moment(spec, a, cache.column).mean;
}

double eval_orthogonal(const KernelSpec& spec, const MomentCache& cache, double a, double b) {
  check_cache(cache);
  const PointMoment ma = point_moment(spec, a, cache.column);
  const PointMoment mb = point_moment(spec, b, cache.column);
  return orthogonal_entry(spec, a, b, ma, mb, cache);
}

Eigen::VectorXd base_vector(const KernelSpec& spec, double a, const Eigen::VectorXd& column) {
  Eigen::VectorXd out(column.size());
  for (Eigen::Index v = 0; v < column.size(); ++v) out[v] = eval_base(spec, a, column[v]);
  return out;
}

Eigen::VectorXd orthogonal_vector(const KernelSpec& spec, const MomentCache& cache, double a) {
  check_cache(cache);
  const Eigen::Index n = cache.column.size();
  Eigen::VectorXd e(n);
  double sum = 0.0;
  for (Eigen::Index v = 0; v < n; ++v) {
    e[v] = eval_excess(spec, a, cache.column[v]);
    sum += e[v];
  }
  const double ea = sum / static_cast<double>(n);
  Eigen::VectorXd out(n);
  if (1.0 + ea < 0.5 / static_cast<double>(n)) {
    const PointMoment ma = point_moment(spec, a, cache.column);
    for (Eigen::Index v = 0; v < n; ++v) {
      out[v] = orthogonal_entry(spec, a, cache.column[v], ma, training_moment(cache, v), cache);
    }
    return out;
  }
  for (Eigen::Index v = 0; v < n; ++v) {
    out[v] = orthogonal_from_excess(e[v], ea, cache.row_excess[v], cache.grand_excess);
  }
  return out;
}

Eigen::MatrixXd kernel_matrix(const KernelSpec& spec, const MomentCache* cache,
                              const Eigen::VectorXd& rows, const Eigen::VectorXd& cols) {
  spec.validate();
  const bool square = rows.size() == cols.size() && rows == cols;
  Eigen::MatrixXd out(rows.size(), cols.size());
  std::vector<PointMoment> row_m, col_m;
  if (cache != nullptr) {
    check_cache(*cache);
    auto moments = [&](const Eigen::VectorXd& pts) {
      std::vector<PointMoment> m(static_cast<std::size_t>(pts.size()));
      const bool training = pts.size() == cache->column.size() && pts == cache->column;
      for (Eigen::Index k = 0; k < pts.size(); ++k) {
        m[static_cast<std::size_t>(k)] =
            training ? training_moment(*cache, k) : point_moment(spec, pts[k], cache->column);
      }
      return m;
    };
    row_m = moments(rows);
    col_m = square ? row_m : moments(cols);
  }
  auto entry = [&](Eigen::Index r, Eigen::Index c) {
    if (cache == nullptr) return eval_base(spec, rows[r], cols[c]);
    return orthogonal_entry(spec, rows[r], cols[c], row_m[static_cast<std::size_t>(r)],
                            col_m[static_cast<std::size_t>(c)], *cache);
  };
  if (square) {
    for (Eigen::Index c = 0; c < cols.size(); ++c) {
      for (Eigen::Index r = 0; r <= c; ++r) {
        const double k = entry(r, c);
        out(r, c) = k;
        out(c, r) = k;
      }
    }
  } else {
    for (Eigen::Index c = 0; c < cols.size(); ++c) {
      for (Eigen::Index r = 0; r < rows.size(); ++r) out(r, c) = entry(r, c);
    }
  }
  return out;
}

namespace {

// Derivative of the orthogonal Gram matrix from base values k = 1 + e and base derivatives.
void orthogonal_derivative(const Eigen::MatrixXd& excess, Eigen::MatrixXd& deriv) {
  const Eigen::Index n = excess.rows();
  const double inv_n = 1.0 / static_cast<double>(n);
  Eigen::VectorXd m(n), dm(n);
  for (Eigen::Index c = 0; c < n; ++c) {
    double se = 0.0, sd = 0.0;
    for (Eigen::Index v = 0; v < n; ++v) {
      se += excess(v, c);
      sd += deriv(v, c);
    }
    m[c] = 1.0 + se * inv_n;
    dm[c] = sd * inv_n;
  }
  const double mbar = m.mean();
  const double dmbar = dm.mean();
  if (!(mbar >= kGrandMeanFloor)) {
    throw Error(ErrorKind::DegenerateKernel, "orthogonal kernel grand mean below the floor");
  }
  const double s = dmbar / (mbar * mbar);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      deriv(r, c) += (m[r] * m[c]) * s - (dm[r] * m[c] + m[r] * dm[c]) / mbar;
    }
  }
}

// Turns a filled excess matrix (k - 1) into the orthogonal Gram matrix and its moments.
void orthogonal_finish(Eigen::MatrixXd& g, Eigen::MatrixXd* dlogtheta, MomentCache& cache) {
  const Eigen::Index n = g.rows();
  if (dlogtheta != nullptr) orthogonal_derivative(g, *dlogtheta);
  cache.row_excess.resize(n);
  // Column c of a symmetric matrix holds row c; summation order matches excess_against.
  for (Eigen::Index c = 0; c < n; ++c) {
    double sum = 0.0;
    for (Eigen::Index v = 0; v < n; ++v) sum += g(v, c);
    cache.row_excess[c] = sum / static_cast<double>(n);
  }
  finalize_cache(cache);
  check_cache(cache);
  const Eigen::VectorXd& e = cache.row_excess;
  const double ebar = cache.grand_excess;
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) g(r, c) = orthogonal_from_excess(g(r, c), e[r], e[c], ebar);
  }
}

// SE: b = r^2 / 2, e = expm1(-b / theta^2), dk = (1 + e) 2b / theta^2.
// Periodic: b = sin^2(pi r / T), e = expm1(-theta^2 b), dk = -2 theta^2 b (1 + e).
inline double pair_base(KernelFamily family, double period, double a, double b) {
  const double r = std::abs(a - b);
  if (family == KernelFamily::SquaredExponential) return 0.5 * (r * r);
  const double s = std::sin(std::numbers::pi * r / period);
  return s * s;
}

// Fills excess (and derivative) column by column from pair bases.
template <class Base>
void fill_excess(KernelFamily family, double theta, Eigen::Index n, Base base, Eigen::MatrixXd& g,
                 Eigen::MatrixXd* dlogtheta) {
  g.resize(n, n);
  if (dlogtheta != nullptr) dlogtheta->resize(n, n);
  const double t2 = theta * theta;
  const bool se = family == KernelFamily::SquaredExponential;
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) {
      const double b = base(r, c);
      const double e = se ? std::expm1(-b / t2) : std::expm1(-t2 * b);
      g(r, c) = e;
      if (dlogtheta != nullptr) {
        (*dlogtheta)(r, c) = se ? (1.0 + e) * ((2.0 * b) / t2) : -2.0 * (t2 * b) * (1.0 + e);
      }
    }
  }
}

}  // namespace

Eigen::MatrixXd kernel_matrix_dlogtheta(const KernelSpec& spec, bool orthogonal,
                                        const Eigen::VectorXd& column) {
  spec.validate();
  const Eigen::Index n = column.size();
  if (orthogonal) {
    Eigen::MatrixXd deriv;
    orthogonal_training_gram(spec, column, &deriv);
    return deriv;
  }
  Eigen::MatrixXd deriv(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r <= c; ++r) {
      deriv(r, c) = deriv(c, r) = eval_base_dlogtheta(spec, column[r], column[c]);
    }
  }
  return deriv;
}

TrainingGram orthogonal_training_gram(const KernelSpec& spec, const Eigen::VectorXd& column,
                                      Eigen::MatrixXd* dlogtheta) {
  spec.validate();
  const Eigen::Index n = column.size();
  if (n < 2) {
    throw Error(ErrorKind::InsufficientData, "moment cache needs at least 2 training values");
  }
  if (!column.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "kernel evaluated at a non-finite point");
  }
  TrainingGram out;
  fill_excess(
      spec.family, spec.theta, n,
      [&](Eigen::Index r, Eigen::Index c) {
        return pair_base(spec.family, spec.period, column[r], column[c]);
      },
      out.gram, dlogtheta);
  out.cache.column = column;
  orthogonal_finish(out.gram, dlogtheta, out.cache);
  return out;
}

PairwiseKernel::PairwiseKernel(KernelFamily family, double period, const Eigen::VectorXd& column)
    : family_(family) {
  KernelSpec{family, 1.0, period}.validate();
  if (column.size() < 2) {
    throw Error(ErrorKind::InsufficientData, "moment cache needs at least 2 training values");
  }
  if (!column.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "non-finite training value in kernel column");
  }
  const Eigen::Index n = column.size();
  base_.resize(n, n);
  for (Eigen::Index c = 0; c < n; ++c) {
    for (Eigen::Index r = 0; r < n; ++r) base_(r, c) = pair_base(family, period, column[r], column[c]);
  }
}

void PairwiseKernel::evaluate(double theta, bool orthogonal, Eigen::MatrixXd& gram,
                              Eigen::MatrixXd* dlogtheta) const {
  if (!(theta > 0.0) || !std::isfinite(theta)) {
    throw Error(ErrorKind::InvalidInput, "kernel theta must be positive and finite");
  }
  const Eigen::Index n = base_.rows();
  if (!orthogonal) {
    const double t2 = theta * theta;
    const bool se = family_ == KernelFamily::SquaredExponential;
    gram.resize(n, n);
    if (dlogtheta != nullptr) dlogtheta->resize(n, n);
    for (Eigen::Index c = 0; c < n; ++c) {
      for (Eigen::Index r = 0; r < n; ++r) {
        const double b = base_(r, c);
        const double k = se ? std::exp(-b / t2) : std::exp(-t2 * b);
        gram(r, c) = k;
        if (dlogtheta != nullptr) (*dlogtheta)(r, c) = se ? k * ((2.0 * b) / t2) : -2.0 * (t2 * b) * k;
      }
    }
    return;
  }
  fill_excess(
      family_, theta, n, [&](Eigen::Index r, Eigen::Index c) { return base_(r, c); }, gram,
      dlogtheta);
  MomentCache cache;
  orthogonal_finish(gram, dlogtheta, cache);
}

}  // namespace foagp
