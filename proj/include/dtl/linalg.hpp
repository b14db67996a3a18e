#ifndef DTL_LINALG_HPP
#define DTL_LINALG_HPP

#include <Eigen/Cholesky>
#include <Eigen/Eigenvalues>
#include <Eigen/LU>

#include <cmath>
#include <limits>
#include <utility>

#include "dtl/types.hpp"

namespace dtl {

template <typename Scalar>
struct LogAbsDet {
  Scalar value;  // log|det A|; -inf when singular
  int sign;      // -1, 0, +1
};

/// log|det A| and the determinant sign via a partial-pivot LU.
template <typename Scalar>
LogAbsDet<Scalar> logabsdet(const Matrix<Scalar>& a) {
  if (a.rows() != a.cols())
    throw InvalidInput("logabsdet: matrix must be square");
  Eigen::PartialPivLU<Matrix<Scalar>> lu(a);
  int sign = lu.permutationP().determinant() > 0 ? 1 : -1;
  Scalar value = 0;
  for (Index i = 0; i < a.rows(); ++i) {
    const Scalar u = lu.matrixLU()(i, i);
    if (u == Scalar(0))
      return {-std::numeric_limits<Scalar>::infinity(), 0};
    if (u < Scalar(0)) sign = -sign;
    value += std::log(std::abs(u));
  }
  return {value, sign};
}

/// Cholesky of a symmetric positive-definite matrix. On failure adds the
/// jitter 1e-10 * trace(G)/d * I once and retries; a second failure throws.
template <typename Scalar>
Eigen::LLT<Matrix<Scalar>> cholesky_with_jitter(Matrix<Scalar> g) {
  Eigen::LLT<Matrix<Scalar>> llt(g);
  if (llt.info() == Eigen::Success) return llt;
  const Scalar jitter = Scalar(1e-10) * g.trace() / Scalar(g.rows());
  g.diagonal().array() += jitter;
  llt.compute(g);
  if (llt.info() != Eigen::Success)
    throw NumericalError(
        "cholesky_with_jitter: matrix not positive definite after jitter");
  return llt;
}

/// Condition number of a symmetric PSD matrix (lambda_max / lambda_min);
/// +inf when the smallest eigenvalue is non-positive.
template <typename Scalar>
Scalar spd_condition(const Matrix<Scalar>& g) {
  Eigen::SelfAdjointEigenSolver<Matrix<Scalar>> es(g,
                                                   Eigen::EigenvaluesOnly);
  const Scalar lo = es.eigenvalues().minCoeff();
  const Scalar hi = es.eigenvalues().maxCoeff();
  if (!(lo > Scalar(0)))
    return std::numeric_limits<Scalar>::infinity();
  return hi / lo;
}

}  // namespace dtl

#endif  // DTL_LINALG_HPP
