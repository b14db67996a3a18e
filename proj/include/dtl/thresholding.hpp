#ifndef DTL_THRESHOLDING_HPP
#define DTL_THRESHOLDING_HPP

#include <algorithm>
#include <cmath>
#include <numeric>
#include <vector>

#include "dtl/types.hpp"

namespace dtl {

/// Keeps the tau largest-magnitude entries of each column and zeroes the
/// rest. Ties at the boundary keep the lowest row index, so the result is
/// deterministic. This is the exact minimizer of ||C - Z||_F^2 subject to
/// the per-column constraint ||z||_0 <= tau.
template <typename Derived>
Matrix<typename Derived::Scalar> hard_threshold(
    const Eigen::MatrixBase<Derived>& coeffs, Index tau) {
  using Scalar = typename Derived::Scalar;
  Matrix<Scalar> z = coeffs;
  const Index d = z.rows();
  if (tau < 1 || tau > d)
    throw InvalidInput("hard_threshold: tau must lie in [1, d]");
  if (tau == d) return z;

  std::vector<Index> order(static_cast<std::size_t>(d));
  for (Index j = 0; j < z.cols(); ++j) {
    std::iota(order.begin(), order.end(), Index(0));
    std::nth_element(order.begin(), order.begin() + tau, order.end(),
                     [&](Index a, Index b) {
                       const Scalar ma = std::abs(z(a, j));
                       const Scalar mb = std::abs(z(b, j));
                       if (ma != mb) return ma > mb;
                       return a < b;
                     });
    for (Index k = tau; k < d; ++k) z(order[static_cast<std::size_t>(k)], j) = Scalar(0);
  }
  return z;
}

/// Analysis sparse-coding step: solves
///   min_Z ||C - Z||_F^2  s.t.  ||z_j||_0 <= tau  per column,
/// where C holds the raw analysis coefficients T*X. A dense budget returns
/// the input unchanged.
template <typename Derived>
Matrix<typename Derived::Scalar> sparse_code_update(
    const Eigen::MatrixBase<Derived>& tx, const Sparsity& budget) {
  if (!budget.active()) return tx;
  budget.validate(tx.rows());
  return hard_threshold(tx, *budget.tau);
}

}  // namespace dtl

#endif  // DTL_THRESHOLDING_HPP
