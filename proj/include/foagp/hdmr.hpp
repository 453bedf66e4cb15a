#pragma once

#include <Eigen/Dense>
#include <string>
#include <utility>
#include <vector>

#include "foagp/data.hpp"

namespace foagp {

/// Legendre polynomial P_p(x) on [-1, 1] by the three-term recurrence.
double legendre(int p, double x);

/// Map from a raw variable to [-1, 1].
struct InputScaling {
  enum class Kind { Affine, NormalCdf, Empirical };
  Kind kind = Kind::Affine;
  double a = 0.0;  // Affine: lower bound; NormalCdf: mean
  double b = 1.0;  // Affine: upper bound; NormalCdf: standard deviation
  Eigen::VectorXd sorted;  // Empirical: sorted training values

  static InputScaling affine(double lower, double upper);
  static InputScaling normal_cdf(double mean, double sd);
  static InputScaling empirical(const Eigen::VectorXd& values);

  double apply(double x) const;
};

/// One basis term: Legendre degrees for (x_i, x_j, t); j < 0 for main terms, i < 0 for mean terms.
struct HdmrTerm {
  int i = -1;
  int j = -1;
  int p = 0;
  int q = 0;
  int r = 0;
};

struct HdmrModel {
  int order = 4;
  double ridge = 0.0;
  Eigen::Index dims = 0;
  std::vector<HdmrTerm> terms;
  Eigen::VectorXd coefficients;
  std::vector<InputScaling> input_scaling;
  InputScaling output_scaling;
  double training_rmse = 0.0;
};

/// Mean-in-t group, one main group per input, one group per input pair.
struct HdmrEffects {
  double mean = 0.0;
  Eigen::VectorXd main;
  std::vector<std::pair<std::pair<int, int>, double>> pairs;  // 1-based (i, j)

  double total() const;
};

/// Basis of the truncated time-variant HDMR: mean terms P_q(t) for q <= o; main terms
/// P_p(x_i) P_q(t) with p >= 1, p + q <= o; pair terms P_p(x_i) P_q(x_j) P_r(t) with
/// p, q >= 1, p + q + r <= o.
std::vector<HdmrTerm> hdmr_basis(Eigen::Index dims, int order);

/// Ridge least squares over the basis on scaled inputs. Throws Numerical when the design is
/// rank deficient and ridge == 0.
HdmrModel fit_hdmr(const Dataset& data, int order, double ridge,
                   std::vector<InputScaling> input_scaling, InputScaling output_scaling);

/// Same, with empirical-CDF scaling of every variable.
HdmrModel fit_hdmr(const Dataset& data, int order, double ridge);

HdmrEffects hdmr_effects(const HdmrModel& model, const Eigen::VectorXd& x, double t);
double hdmr_predict(const HdmrModel& model, const Eigen::VectorXd& x, double t);

}  // namespace foagp
