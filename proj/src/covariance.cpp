#include "foagp/covariance.hpp"

#include <cmath>
#include <sstream>

#include "foagp/error.hpp"

namespace foagp {

void HyperParams::validate() const {
  if (theta.size() < 1 || delta.size() != theta.size() + 1) {
    throw Error(ErrorKind::Shape, "hyperparameters need d+2 deltas and d+1 thetas");
  }
  if (!(delta.array() > 0.0).all() || !(theta.array() > 0.0).all() || !delta.allFinite() ||
      !theta.allFinite()) {
    throw Error(ErrorKind::InvalidInput, "hyperparameters must be positive and finite");
  }
  if (!(sigma2 >= 0.0) || !(period > 0.0)) {
    throw Error(ErrorKind::InvalidInput, "sigma2 must be non-negative and period positive");
  }
}

Eigen::MatrixXd assemble_dense(const std::vector<Eigen::MatrixXd>& input_grams,
                               const Eigen::MatrixXd& output_gram, const HyperParams& params) {
  const Eigen::Index n = output_gram.rows();
  if (output_gram.cols() != n) throw Error(ErrorKind::Shape, "output Gram matrix must be square");
  if (static_cast<Eigen::Index>(input_grams.size()) != params.dims()) {
    throw Error(ErrorKind::Shape, "number of input Gram matrices differs from hyperparameter d");
  }
  for (const auto& g : input_grams) {
    if (g.rows() != n || g.cols() != n) {
      throw Error(ErrorKind::Shape, "input Gram matrix size differs from output Gram matrix");
    }
  }
  const double dt2 = params.output_delta() * params.output_delta();
  Eigen::MatrixXd K = dt2 * output_gram;
  for (std::size_t i = 0; i < input_grams.size(); ++i) {
    const double di2 = params.input_delta(static_cast<Eigen::Index>(i)) *
                       params.input_delta(static_cast<Eigen::Index>(i));
    K.array() *= (1.0 + di2 * input_grams[i].array());
  }
  K.diagonal().array() += params.nugget() * params.nugget();
  return K;
}

GridCovariance assemble_grid(const std::vector<Eigen::MatrixXd>& input_grams,
                             const Eigen::MatrixXd& output_gram, const HyperParams& params) {
  if (output_gram.rows() != output_gram.cols()) {
    throw Error(ErrorKind::Shape, "output Gram matrix must be square");
  }
  if (static_cast<Eigen::Index>(input_grams.size()) != params.dims() || input_grams.empty()) {
    throw Error(ErrorKind::Shape, "number of input Gram matrices differs from hyperparameter d");
  }
  const Eigen::Index m = input_grams.front().rows();
  GridCovariance cov;
  const double dt2 = params.output_delta() * params.output_delta();
  cov.C_t = dt2 * output_gram;
  cov.C_x = Eigen::MatrixXd::Ones(m, m);
  for (std::size_t i = 0; i < input_grams.size(); ++i) {
    const auto& g = input_grams[i];
    if (g.rows() != m || g.cols() != m) {
      throw Error(ErrorKind::Shape, "input Gram matrices of a grid must all be m x m");
    }
    const double di2 = params.input_delta(static_cast<Eigen::Index>(i)) *
                       params.input_delta(static_cast<Eigen::Index>(i));
    cov.C_x.array() *= (1.0 + di2 * g.array());
  }
  return cov;
}

Eigen::MatrixXd materialize(const GridCovariance& cov, double nugget_variance) {
  const Eigen::Index m = cov.C_x.rows();
  const Eigen::Index n = cov.C_t.rows();
  Eigen::MatrixXd K(m * n, m * n);
  for (Eigen::Index v = 0; v < n; ++v) {
    for (Eigen::Index w = 0; w < n; ++w) K.block(v * m, w * m, m, m) = cov.C_t(v, w) * cov.C_x;
  }
  K.diagonal().array() += nugget_variance;
  return K;
}

DenseFactorization::DenseFactorization(const Eigen::MatrixXd& K) {
  if (K.rows() != K.cols()) throw Error(ErrorKind::Shape, "covariance must be square");
  const Eigen::Index n = K.rows();
  const double mean_diag = K.diagonal().mean();
  Eigen::LLT<Eigen::MatrixXd> llt(K);
  if (llt.info() != Eigen::Success) {
    for (double scale = 1e-10; scale <= 1e-6 * (1.0 + 1e-9); scale *= 10.0) {
      Eigen::MatrixXd jittered = K;
      jittered.diagonal().array() += scale * mean_diag;
      llt.compute(jittered);
      if (llt.info() == Eigen::Success) {
        jitter_ = scale * mean_diag;
        break;
      }
    }
    if (llt.info() != Eigen::Success) {
      Eigen::LDLT<Eigen::MatrixXd> ldlt(K);
      std::ostringstream msg;
      msg << "Cholesky factorization failed after maximum jitter; min pivot estimate "
          << ldlt.vectorD().minCoeff() << ", mean diagonal " << mean_diag << ", N = " << n;
      throw Error(ErrorKind::Numerical, msg.str());
    }
  }
  lower_ = llt.matrixL();
  log_det_ = 2.0 * lower_.diagonal().array().log().sum();
}

Eigen::VectorXd DenseFactorization::solve(const Eigen::VectorXd& y) const {
  if (y.size() != lower_.rows()) throw Error(ErrorKind::Shape, "solve: length mismatch");
  Eigen::VectorXd z = lower_.triangularView<Eigen::Lower>().solve(y);
  lower_.triangularView<Eigen::Lower>().transpose().solveInPlace(z);
  return z;
}

namespace {

// In-place inverse of a lower-triangular block by recursive halving:
// [A 0; B C]^-1 = [A^-1 0; -C^-1 B A^-1  C^-1].
void invert_lower(Eigen::Ref<Eigen::MatrixXd> L) {
  const Eigen::Index n = L.rows();
  if (n <= 96) {
    Eigen::MatrixXd inv = Eigen::MatrixXd::Identity(n, n);
    L.triangularView<Eigen::Lower>().solveInPlace(inv);
    L = inv;
    return;
  }
  const Eigen::Index h = n / 2;
  invert_lower(L.topLeftCorner(h, h));
  invert_lower(L.bottomRightCorner(n - h, n - h));
  const Eigen::MatrixXd X =
      L.bottomLeftCorner(n - h, h) * L.topLeftCorner(h, h).triangularView<Eigen::Lower>();
  L.bottomLeftCorner(n - h, h).noalias() =
      -(L.bottomRightCorner(n - h, n - h).triangularView<Eigen::Lower>() * X);
}

}  // namespace

Eigen::MatrixXd DenseFactorization::inverse() const {
  Eigen::MatrixXd linv = lower_;
  linv.triangularView<Eigen::StrictlyUpper>().setZero();
  invert_lower(linv);
  return linv.transpose().triangularView<Eigen::Upper>() * linv;
}

GridFactorization::GridFactorization(const GridCovariance& cov, double nugget_variance) {
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> et(cov.C_t);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> ex(cov.C_x);
  if (et.info() != Eigen::Success || ex.info() != Eigen::Success) {
    throw Error(ErrorKind::Numerical, "eigendecomposition of a Kronecker factor failed");
  }
  U_ = et.eigenvectors();
  D_ = et.eigenvalues().cwiseMax(0.0);
  V_ = ex.eigenvectors();
  Lambda_ = ex.eigenvalues().cwiseMax(0.0);
  S_matrix_ = (Lambda_ * D_.transpose()).array() + nugget_variance;
  if (!(S_matrix_.minCoeff() > 0.0)) {
    throw Error(ErrorKind::Numerical, "grid covariance spectrum is not positive; nugget too small");
  }
  S_ = vectorize(S_matrix_);
  log_det_ = S_.array().log().sum();
}

Eigen::VectorXd GridFactorization::S_vector() const { return S_; }

Eigen::MatrixXd GridFactorization::rotate(const Eigen::MatrixXd& Y) const {
  return V_.transpose() * Y * U_;
}

Eigen::MatrixXd GridFactorization::apply_inverse(const Eigen::MatrixXd& Y) const {
  if (Y.rows() != V_.rows() || Y.cols() != U_.rows()) {
    throw Error(ErrorKind::Shape, "grid apply_inverse: response must be m x n");
  }
  const Eigen::MatrixXd Z = rotate(Y).cwiseQuotient(S_matrix_);
  return V_ * Z * U_.transpose();
}

Eigen::VectorXd GridFactorization::apply_inverse(const Eigen::VectorXd& y) const {
  if (y.size() != S_.size()) throw Error(ErrorKind::Shape, "grid apply_inverse: length mismatch");
  return vectorize(apply_inverse(matricize(y, V_.rows(), U_.rows())));
}

double log_det(const Factorization& fact) {
  return std::visit([](const auto& f) { return f.log_det(); }, fact);
}

Eigen::VectorXd solve_weights(const Factorization& fact, const Eigen::VectorXd& y) {
  return std::visit(
      [&](const auto& f) -> Eigen::VectorXd {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, DenseFactorization>) {
          return f.solve(y);
        } else {
          return f.apply_inverse(y);
        }
      },
      fact);
}

Eigen::MatrixXd matricize(const Eigen::VectorXd& v, Eigen::Index m, Eigen::Index n) {
  if (v.size() != m * n) throw Error(ErrorKind::Shape, "matricize: length is not m*n");
  return Eigen::Map<const Eigen::MatrixXd>(v.data(), m, n);
}

Eigen::VectorXd vectorize(const Eigen::MatrixXd& M) {
  return Eigen::Map<const Eigen::VectorXd>(M.data(), M.size());
}

}  // namespace foagp
