#include "foagp/hdmr.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "foagp/error.hpp"

namespace foagp {

double legendre(int p, double x) {
  if (p < 0) throw Error(ErrorKind::Domain, "Legendre degree must be non-negative");
  if (!(std::abs(x) <= 1.0 + 1e-12)) throw Error(ErrorKind::Domain, "Legendre argument outside [-1, 1]");
  if (p == 0) return 1.0;
  double prev = 1.0;
  double cur = x;
  for (int k = 1; k < p; ++k) {
    const double next = ((2.0 * k + 1.0) * x * cur - k * prev) / (k + 1.0);
    prev = cur;
    cur = next;
  }
  return cur;
}

InputScaling InputScaling::affine(double lower, double upper) {
  if (!(upper > lower)) throw Error(ErrorKind::InvalidInput, "affine scaling needs upper > lower");
  InputScaling s;
  s.kind = Kind::Affine;
  s.a = lower;
  s.b = upper;
  return s;
}

InputScaling InputScaling::normal_cdf(double mean, double sd) {
  if (!(sd > 0.0)) throw Error(ErrorKind::InvalidInput, "normal scaling needs sd > 0");
  InputScaling s;
  s.kind = Kind::NormalCdf;
  s.a = mean;
  s.b = sd;
  return s;
}

InputScaling InputScaling::empirical(const Eigen::VectorXd& values) {
  if (values.size() < 2) throw Error(ErrorKind::InsufficientData, "empirical scaling needs 2 values");
  InputScaling s;
  s.kind = Kind::Empirical;
  s.sorted = values;
  std::sort(s.sorted.data(), s.sorted.data() + s.sorted.size());
  return s;
}

double InputScaling::apply(double x) const {
  double u = 0.0;
  switch (kind) {
    case Kind::Affine:
      u = (x - a) / (b - a);
      break;
    case Kind::NormalCdf:
      u = 0.5 * std::erfc(-(x - a) / (b * std::numbers::sqrt2));
      break;
    case Kind::Empirical: {
      // Piecewise-linear ECDF through (sorted[k], (k + 0.5) / n), flat beyond the ends.
      const Eigen::Index n = sorted.size();
      const double* first = sorted.data();
      const double* last = first + n;
      if (x <= sorted[0]) {
        u = 0.5 / static_cast<double>(n);
      } else if (x >= sorted[n - 1]) {
        u = (static_cast<double>(n) - 0.5) / static_cast<double>(n);
      } else {
        const auto hi = static_cast<Eigen::Index>(std::upper_bound(first, last, x) - first);
        const Eigen::Index lo = hi - 1;
        const double span = sorted[hi] - sorted[lo];
        const double frac = span > 0.0 ? (x - sorted[lo]) / span : 0.0;
        u = (static_cast<double>(lo) + 0.5 + frac) / static_cast<double>(n);
      }
      break;
    }
  }
  return std::clamp(2.0 * u - 1.0, -1.0, 1.0);
}

std::vector<HdmrTerm> hdmr_basis(Eigen::Index dims, int order) {
  if (order < 1) throw Error(ErrorKind::InvalidInput, "HDMR order must be >= 1");
  std::vector<HdmrTerm> terms;
  for (int q = 0; q <= order; ++q) terms.push_back({-1, -1, 0, 0, q});
  for (int i = 0; i < dims; ++i) {
    for (int p = 1; p <= order; ++p) {
      for (int q = 0; p + q <= order; ++q) terms.push_back({i, -1, p, 0, q});
    }
  }
  for (int i = 0; i < dims; ++i) {
    for (int j = i + 1; j < dims; ++j) {
      for (int p = 1; p <= order; ++p) {
        for (int q = 1; p + q <= order; ++q) {
          for (int r = 0; p + q + r <= order; ++r) terms.push_back({i, j, p, q, r});
        }
      }
    }
  }
  return terms;
}

namespace {

struct ScaledPoint {
  std::vector<std::vector<double>> x;  // per input: P_0..P_o
  std::vector<double> t;
};

ScaledPoint scaled_point(const HdmrModel& model, const Eigen::VectorXd& x, double t) {
  if (x.size() != model.dims) throw Error(ErrorKind::Shape, "HDMR point dimension mismatch");
  ScaledPoint sp;
  sp.x.resize(static_cast<std::size_t>(model.dims));
  for (Eigen::Index i = 0; i < model.dims; ++i) {
    const double u = model.input_scaling[static_cast<std::size_t>(i)].apply(x[i]);
    for (int p = 0; p <= model.order; ++p) sp.x[static_cast<std::size_t>(i)].push_back(legendre(p, u));
  }
  const double ut = model.output_scaling.apply(t);
  for (int p = 0; p <= model.order; ++p) sp.t.push_back(legendre(p, ut));
  return sp;
}

double term_value(const HdmrTerm& term, const ScaledPoint& sp) {
  double v = sp.t[static_cast<std::size_t>(term.r)];
  if (term.i >= 0) v *= sp.x[static_cast<std::size_t>(term.i)][static_cast<std::size_t>(term.p)];
  if (term.j >= 0) v *= sp.x[static_cast<std::size_t>(term.j)][static_cast<std::size_t>(term.q)];
  return v;
}

}  // namespace

HdmrModel fit_hdmr(const Dataset& data, int order, double ridge,
                   std::vector<InputScaling> input_scaling, InputScaling output_scaling) {
  data.validate();
  if (!(ridge >= 0.0)) throw Error(ErrorKind::InvalidInput, "ridge must be non-negative");
  if (static_cast<Eigen::Index>(input_scaling.size()) != data.dims()) {
    throw Error(ErrorKind::Shape, "one input scaling per dimension is required");
  }
  HdmrModel model;
  model.order = order;
  model.ridge = ridge;
  model.dims = data.dims();
  model.terms = hdmr_basis(data.dims(), order);
  model.input_scaling = std::move(input_scaling);
  model.output_scaling = std::move(output_scaling);

  const Eigen::Index n = data.size();
  const auto nb = static_cast<Eigen::Index>(model.terms.size());
  Eigen::MatrixXd A(n, nb);
  for (Eigen::Index r = 0; r < n; ++r) {
    const ScaledPoint sp = scaled_point(model, data.X.row(r).transpose(), data.T[r]);
    for (Eigen::Index c = 0; c < nb; ++c) A(r, c) = term_value(model.terms[static_cast<std::size_t>(c)], sp);
  }
  if (ridge == 0.0) {
    Eigen::ColPivHouseholderQR<Eigen::MatrixXd> qr(A);
    if (qr.rank() < nb) {
      throw Error(ErrorKind::Numerical, "HDMR design matrix is rank deficient (rank " +
                                            std::to_string(qr.rank()) + " < " +
                                            std::to_string(nb) + "); use ridge > 0");
    }
    model.coefficients = qr.solve(data.y);
  } else {
    Eigen::MatrixXd G = A.transpose() * A;
    G.diagonal().array() += ridge;
    model.coefficients = G.ldlt().solve(A.transpose() * data.y);
  }
  model.training_rmse = std::sqrt((A * model.coefficients - data.y).squaredNorm() / static_cast<double>(n));
  return model;
}

HdmrModel fit_hdmr(const Dataset& data, int order, double ridge) {
  data.validate();
  std::vector<InputScaling> scaling;
  for (Eigen::Index i = 0; i < data.dims(); ++i) scaling.push_back(InputScaling::empirical(data.X.col(i)));
  return fit_hdmr(data, order, ridge, std::move(scaling), InputScaling::empirical(data.T));
}

double HdmrEffects::total() const {
  double s = mean + main.sum();
  for (const auto& p : pairs) s += p.second;
  return s;
}

HdmrEffects hdmr_effects(const HdmrModel& model, const Eigen::VectorXd& x, double t) {
  const ScaledPoint sp = scaled_point(model, x, t);
  HdmrEffects e;
  e.main = Eigen::VectorXd::Zero(model.dims);
  for (int i = 0; i < model.dims; ++i) {
    for (int j = i + 1; j < model.dims; ++j) e.pairs.push_back({{i + 1, j + 1}, 0.0});
  }
  auto pair_slot = [&](int i, int j) {
    // Pairs are stored row-major over i < j.
    const int d = static_cast<int>(model.dims);
    return static_cast<std::size_t>(i * d - i * (i + 1) / 2 + (j - i - 1));
  };
  for (std::size_t k = 0; k < model.terms.size(); ++k) {
    const HdmrTerm& term = model.terms[k];
    const double v = model.coefficients[static_cast<Eigen::Index>(k)] * term_value(term, sp);
    if (term.i < 0) {
      e.mean += v;
    } else if (term.j < 0) {
      e.main[term.i] += v;
    } else {
      e.pairs[pair_slot(term.i, term.j)].second += v;
    }
  }
  return e;
}

double hdmr_predict(const HdmrModel& model, const Eigen::VectorXd& x, double t) {
  const ScaledPoint sp = scaled_point(model, x, t);
  double s = 0.0;
  for (std::size_t k = 0; k < model.terms.size(); ++k) {
    s += model.coefficients[static_cast<Eigen::Index>(k)] * term_value(model.terms[k], sp);
  }
  return s;
}

}  // namespace foagp
