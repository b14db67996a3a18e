#ifndef DTL_TRANSFORM_HPP
#define DTL_TRANSFORM_HPP

#include <Eigen/SVD>

#include <cmath>
#include <limits>
#include <utility>
#include <vector>

#include "dtl/linalg.hpp"
#include "dtl/thresholding.hpp"
#include "dtl/types.hpp"

namespace dtl {

/// Closed-form minimizer of
///   ||T X - Z||_F^2 + lambda (epsilon ||T||_F^2 - log|det T|)
/// over square T. Factor G = X X^T + lambda*epsilon*I = L L^T, take the
/// full SVD L^-1 X Z^T = U S V^T and set
///   T = 0.5 V (S + (S^2 + 2 lambda I)^{1/2}) U^T L^-1.
/// The result is full rank whenever lambda > 0.
template <typename Scalar>
Matrix<Scalar> transform_update(const Matrix<Scalar>& x,
                                const Matrix<Scalar>& z,
                                const RegParams& params) {
  params.validate();
  if (z.cols() != x.cols())
    throw InvalidInput("transform_update: X and Z must have equal column counts");
  if (z.rows() != x.rows())
    throw InvalidInput("transform_update: Z must have as many rows as X (square transform)");
  const Index d = x.rows();
  const Scalar lambda = static_cast<Scalar>(params.lambda);

  Matrix<Scalar> g = x * x.transpose();
  g.diagonal().array() += lambda * static_cast<Scalar>(params.epsilon);
  Eigen::LLT<Matrix<Scalar>> llt;
  if (lambda > Scalar(0)) {
    llt = cholesky_with_jitter(std::move(g));  // PD by construction; jitter
                                               // only absorbs roundoff
  } else {
    llt.compute(g);
    if (llt.info() != Eigen::Success)
      throw NumericalError(
          "transform_update: X X^T is not positive definite "
          "(rank-deficient data with lambda == 0)");
  }

  const Matrix<Scalar> b = llt.matrixL().solve(x * z.transpose());
  Eigen::BDCSVD<Matrix<Scalar>> svd(b, Eigen::ComputeFullU | Eigen::ComputeFullV);
  Vector<Scalar> s = svd.singularValues();
  Vector<Scalar> dvals =
      Scalar(0.5) * (s.array() + (s.array().square() + Scalar(2) * lambda).sqrt());

  const Matrix<Scalar> a =
      svd.matrixV() * dvals.asDiagonal() * svd.matrixU().transpose();
  // T = A L^-1, computed as a triangular solve from the right.
  Matrix<Scalar> t = llt.matrixU().solve(a.transpose()).transpose();
  require_finite(t, "transform_update: result");
  return t;
}

/// Exact per-term value of the regularized objective at (T, Z). The log-det
/// penalty uses log|det T|; a singular T reports +inf (and total +inf)
/// unless lambda == 0, in which case the whole regularizer vanishes.
template <typename Scalar>
CostBreakdown single_objective(const Matrix<Scalar>& t, const Matrix<Scalar>& x,
                               const Matrix<Scalar>& z,
                               const RegParams& params) {
  params.validate();
  if (t.rows() != t.cols()) throw InvalidInput("single_objective: T must be square");
  if (x.rows() != t.cols() || z.rows() != t.rows() || z.cols() != x.cols())
    throw InvalidInput("single_objective: shapes do not conform");

  const double residual = static_cast<double>((t * x - z).squaredNorm());
  double frob = 0.0;
  double logdet = 0.0;
  if (params.lambda > 0.0) {
    frob = params.lambda * params.epsilon * static_cast<double>(t.squaredNorm());
    const auto lad = logabsdet(t);
    logdet = lad.sign == 0 ? std::numeric_limits<double>::infinity()
                           : -params.lambda * static_cast<double>(lad.value);
  }
  return CostBreakdown::sum(residual, frob, logdet, 0.0);
}

template <typename Scalar>
CostBreakdown objective_eval(const TransformLayer<Scalar>& layer,
                             const Matrix<Scalar>& x, const Matrix<Scalar>& z) {
  return single_objective(layer.t, x, z, layer.params);
}

template <typename Scalar>
struct LearnResult {
  TransformLayer<Scalar> layer;
  Matrix<Scalar> codes;
  std::vector<CostBreakdown> trace;
};

inline bool converged(double prev, double cur, double tol) {
  if (!std::isfinite(prev)) return false;
  const double denom = std::max(std::abs(prev), std::numeric_limits<double>::min());
  return (prev - cur) / denom < tol;
}

/// Alternating minimization of the regularized objective: each iteration
/// runs the exact coding step followed by the closed-form transform update,
/// so the recorded cost trace is non-increasing. Stops early once the
/// relative decrease of the total cost falls below tol.
template <typename Scalar>
LearnResult<Scalar> transform_learn(const Matrix<Scalar>& x,
                                    TransformLayer<Scalar> layer, int iters,
                                    double tol) {
  if (iters < 1) throw InvalidInput("transform_learn: iters must be >= 1");
  if (!(tol > 0.0)) throw InvalidInput("transform_learn: tol must be > 0");
  layer.params.validate();
  layer.budget.validate(x.rows());
  require_finite(x, "transform_learn: X");
  if (layer.t.rows() != x.rows() || layer.t.cols() != x.rows())
    throw InvalidInput("transform_learn: init transform must be d x d");

  LearnResult<Scalar> result;
  result.trace.reserve(static_cast<std::size_t>(iters));
  Matrix<Scalar> z;
  for (int it = 0; it < iters; ++it) {
    z = sparse_code_update(layer.t * x, layer.budget);
    layer.t = transform_update(x, z, layer.params);
    result.trace.push_back(single_objective(layer.t, x, z, layer.params));
    const std::size_t n = result.trace.size();
    if (n > 1 && converged(result.trace[n - 2].total, result.trace[n - 1].total, tol))
      break;
  }
  result.layer = std::move(layer);
  result.codes = std::move(z);
  return result;
}

}  // namespace dtl

#endif  // DTL_TRANSFORM_HPP
