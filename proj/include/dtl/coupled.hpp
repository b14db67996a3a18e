#ifndef DTL_COUPLED_HPP
#define DTL_COUPLED_HPP

#include <utility>
#include <vector>

#include "dtl/linalg.hpp"
#include "dtl/thresholding.hpp"
#include "dtl/transform.hpp"
#include "dtl/types.hpp"

namespace dtl {

enum class RidgeMode { Off, Auto };

/// Two-domain model with one directional mapping M taking domain-1 codes
/// into domain-2 code space:
///   ||T1 X1 - Z1||^2 + ||T2 X2 - Z2||^2
///     + lambda (eps ||T1||^2 + eps ||T2||^2 - log|det T1| - log|det T2|)
///     + mu ||Z2 - M Z1||^2
template <typename Scalar>
struct SemiCoupledModel {
  TransformLayer<Scalar> layer1, layer2;
  Matrix<Scalar> z1, z2;
  Matrix<Scalar> mapping;  // domain-1 codes -> domain-2 codes
  RegParams params;
};

/// Two-domain model with mappings in both directions; the coupling term is
///   mu (||Z2 - M1 Z1||^2 + ||Z1 - M2 Z2||^2).
template <typename Scalar>
struct SymCoupledModel {
  TransformLayer<Scalar> layer1, layer2;
  Matrix<Scalar> z1, z2;
  Matrix<Scalar> map_12, map_21;
  RegParams params;
};

namespace detail {

template <typename Scalar>
void check_paired(const Matrix<Scalar>& a, const Matrix<Scalar>& b,
                  const char* what) {
  if (a.cols() != b.cols())
    throw InvalidInput(std::string(what) + ": column counts must match");
  if (a.rows() != b.rows())
    throw InvalidInput(std::string(what) +
                       ": feature dimensions must match (equalize upstream)");
}

}  // namespace detail

/// Sequential closed-form code updates for the semi-coupled objective.
/// Z1 solves (I + mu M^T M) Z1 = T1X1 + mu M^T Z2 using the current Z2;
/// Z2 then solves (1 + mu) Z2 = T2X2 + mu M Z1 using the new Z1.
/// With mu == 0 the codes are the raw analyses.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> update_codes_semi(
    const Matrix<Scalar>& t1x1, const Matrix<Scalar>& t2x2,
    const Matrix<Scalar>& m, Scalar mu, const Matrix<Scalar>& z2_current) {
  detail::check_paired(t1x1, t2x2, "update_codes_semi");
  if (!(mu >= Scalar(0))) throw InvalidInput("update_codes_semi: mu must be >= 0");
  if (mu == Scalar(0)) return {t1x1, t2x2};
  if (m.rows() != t2x2.rows() || m.cols() != t1x1.rows())
    throw InvalidInput("update_codes_semi: mapping shape does not conform");
  if (z2_current.rows() != t2x2.rows() || z2_current.cols() != t2x2.cols())
    throw InvalidInput("update_codes_semi: Z2 shape does not conform");

  Matrix<Scalar> a = mu * (m.transpose() * m);
  a.diagonal().array() += Scalar(1);
  const Matrix<Scalar> z1 =
      Eigen::LLT<Matrix<Scalar>>(a).solve(t1x1 + mu * (m.transpose() * z2_current));
  Matrix<Scalar> z2 = (t2x2 + mu * (m * z1)) / (Scalar(1) + mu);
  return {z1, std::move(z2)};
}

/// Sequential closed-form code updates for the symmetric objective.
/// Z1 solves ((1+mu) I + mu M1^T M1) Z1 = T1X1 + mu M1^T Z2 + mu M2 Z2;
/// Z2 then solves ((1+mu) I + mu M2^T M2) Z2 = T2X2 + mu M1 Z1 + mu M2^T Z1.
template <typename Scalar>
std::pair<Matrix<Scalar>, Matrix<Scalar>> update_codes_sym(
    const Matrix<Scalar>& t1x1, const Matrix<Scalar>& t2x2,
    const Matrix<Scalar>& m12, const Matrix<Scalar>& m21, Scalar mu,
    const Matrix<Scalar>& z2_current) {
  detail::check_paired(t1x1, t2x2, "update_codes_sym");
  if (!(mu >= Scalar(0))) throw InvalidInput("update_codes_sym: mu must be >= 0");
  if (mu == Scalar(0)) return {t1x1, t2x2};
  const Index d = t1x1.rows();
  if (m12.rows() != d || m12.cols() != d || m21.rows() != d || m21.cols() != d)
    throw InvalidInput("update_codes_sym: mapping shapes do not conform");
  if (z2_current.rows() != d || z2_current.cols() != t2x2.cols())
    throw InvalidInput("update_codes_sym: Z2 shape does not conform");

  Matrix<Scalar> a1 = mu * (m12.transpose() * m12);
  a1.diagonal().array() += Scalar(1) + mu;
  const Matrix<Scalar> z1 = Eigen::LLT<Matrix<Scalar>>(a1).solve(
      t1x1 + mu * (m12.transpose() * z2_current) + mu * (m21 * z2_current));

  Matrix<Scalar> a2 = mu * (m21.transpose() * m21);
  a2.diagonal().array() += Scalar(1) + mu;
  Matrix<Scalar> z2 = Eigen::LLT<Matrix<Scalar>>(a2).solve(
      t2x2 + mu * (m12 * z1) + mu * (m21.transpose() * z1));
  return {z1, std::move(z2)};
}

/// Least-squares minimizer of ||z_to - M z_from||_F^2:
///   M = z_to z_from^T (z_from z_from^T + ridge I)^-1.
/// With ridge == 0 a numerically rank-deficient code Gram matrix
/// (condition estimate > 1e12) is an error.
template <typename Scalar>
Matrix<Scalar> update_mapping(const Matrix<Scalar>& z_from,
                              const Matrix<Scalar>& z_to, Scalar ridge = Scalar(0)) {
  if (z_from.cols() != z_to.cols())
    throw InvalidInput("update_mapping: column counts must match");
  if (!(ridge >= Scalar(0))) throw InvalidInput("update_mapping: ridge must be >= 0");

  Matrix<Scalar> gram = z_from * z_from.transpose();
  if (ridge == Scalar(0)) {
    if (spd_condition(gram) > Scalar(1e12))
      throw NumericalError(
          "update_mapping: code Gram matrix is numerically rank-deficient; "
          "supply a ridge or enable auto-ridge");
  } else {
    gram.diagonal().array() += ridge;
  }
  return cholesky_with_jitter(std::move(gram))
      .solve(z_from * z_to.transpose())
      .transpose();
}

/// Ridge used by RidgeMode::Auto: 1e-8 * trace(Gram)/d when the Gram matrix
/// is numerically rank-deficient (condition estimate > 1e12), else 0.
template <typename Scalar>
Scalar auto_ridge(const Matrix<Scalar>& z_from) {
  const Matrix<Scalar> gram = z_from * z_from.transpose();
  if (spd_condition(gram) > Scalar(1e12))
    return Scalar(1e-8) * gram.trace() / Scalar(gram.rows());
  return Scalar(0);
}

template <typename Scalar>
Matrix<Scalar> update_mapping_mode(const Matrix<Scalar>& z_from,
                                   const Matrix<Scalar>& z_to, RidgeMode mode) {
  return update_mapping(z_from, z_to,
                        mode == RidgeMode::Auto ? auto_ridge(z_from) : Scalar(0));
}

/// Full semi-coupled objective value, term by term.
template <typename Scalar>
CostBreakdown semi_objective(const Matrix<Scalar>& t1, const Matrix<Scalar>& t2,
                             const Matrix<Scalar>& z1, const Matrix<Scalar>& z2,
                             const Matrix<Scalar>& m, const Matrix<Scalar>& x1,
                             const Matrix<Scalar>& x2, const RegParams& params) {
  const CostBreakdown c1 = single_objective(t1, x1, z1, params);
  const CostBreakdown c2 = single_objective(t2, x2, z2, params);
  const double coupling =
      params.mu * static_cast<double>((z2 - m * z1).squaredNorm());
  return CostBreakdown::sum(c1.residual + c2.residual,
                            c1.frob_penalty + c2.frob_penalty,
                            c1.logdet_penalty + c2.logdet_penalty, coupling);
}

/// Full symmetric objective value, term by term.
template <typename Scalar>
CostBreakdown sym_objective(const Matrix<Scalar>& t1, const Matrix<Scalar>& t2,
                            const Matrix<Scalar>& z1, const Matrix<Scalar>& z2,
                            const Matrix<Scalar>& m12, const Matrix<Scalar>& m21,
                            const Matrix<Scalar>& x1, const Matrix<Scalar>& x2,
                            const RegParams& params) {
  const CostBreakdown c1 = single_objective(t1, x1, z1, params);
  const CostBreakdown c2 = single_objective(t2, x2, z2, params);
  const double coupling =
      params.mu * (static_cast<double>((z2 - m12 * z1).squaredNorm()) +
                   static_cast<double>((z1 - m21 * z2).squaredNorm()));
  return CostBreakdown::sum(c1.residual + c2.residual,
                            c1.frob_penalty + c2.frob_penalty,
                            c1.logdet_penalty + c2.logdet_penalty, coupling);
}

template <typename Scalar>
struct SemiFitResult {
  SemiCoupledModel<Scalar> model;
  std::vector<CostBreakdown> trace;
};

template <typename Scalar>
struct SymFitResult {
  SymCoupledModel<Scalar> model;
  std::vector<CostBreakdown> trace;
};

namespace detail {

template <typename Scalar>
void check_fit_inputs(const Matrix<Scalar>& x1, const Matrix<Scalar>& x2,
                      const RegParams& params, const Sparsity& budget,
                      int iters, double tol) {
  params.validate();
  check_paired(x1, x2, "coupled fit");
  budget.validate(x1.rows());
  require_finite(x1, "coupled fit: X1");
  require_finite(x2, "coupled fit: X2");
  if (iters < 1) throw InvalidInput("coupled fit: iters must be >= 1");
  if (!(tol > 0.0)) throw InvalidInput("coupled fit: tol must be > 0");
}

}  // namespace detail

/// Block-coordinate minimization of the semi-coupled objective. Sweep
/// order: T1, T2, Z1, Z2, M. Every block is solved exactly, so the
/// per-sweep cost trace is non-increasing when no sparsity budget is set;
/// a budget thresholds the codes after their closed-form update.
template <typename Scalar>
SemiFitResult<Scalar> semi_coupled_fit(const Matrix<Scalar>& x1,
                                       const Matrix<Scalar>& x2,
                                       const RegParams& params,
                                       const Sparsity& budget, int iters,
                                       double tol,
                                       RidgeMode ridge = RidgeMode::Off) {
  detail::check_fit_inputs(x1, x2, params, budget, iters, tol);
  const Index d = x1.rows();
  const Scalar mu = static_cast<Scalar>(params.mu);

  SemiFitResult<Scalar> result;
  SemiCoupledModel<Scalar>& model = result.model;
  model.params = params;
  model.layer1 = {Matrix<Scalar>::Identity(d, d), params, budget};
  model.layer2 = {Matrix<Scalar>::Identity(d, d), params, budget};
  model.z1 = sparse_code_update(x1, budget);  // coded T X at the identity init
  model.z2 = sparse_code_update(x2, budget);
  model.mapping = Matrix<Scalar>::Identity(d, d);

  for (int it = 0; it < iters; ++it) {
    model.layer1.t = transform_update(x1, model.z1, params);
    model.layer2.t = transform_update(x2, model.z2, params);
    auto codes = update_codes_semi(Matrix<Scalar>(model.layer1.t * x1),
                                   Matrix<Scalar>(model.layer2.t * x2),
                                   model.mapping, mu, model.z2);
    model.z1 = std::move(codes.first);
    model.z2 = std::move(codes.second);
    if (budget.active()) {
      model.z1 = hard_threshold(model.z1, *budget.tau);
      model.z2 = hard_threshold(model.z2, *budget.tau);
    }
    model.mapping = update_mapping_mode(model.z1, model.z2, ridge);

    result.trace.push_back(semi_objective(model.layer1.t, model.layer2.t,
                                          model.z1, model.z2, model.mapping,
                                          x1, x2, params));
    const std::size_t n = result.trace.size();
    if (n > 1 && converged(result.trace[n - 2].total, result.trace[n - 1].total, tol))
      break;
  }
  return result;
}

/// Block-coordinate minimization of the symmetric objective. Sweep order:
/// T1, T2, Z1, Z2, M1, M2.
template <typename Scalar>
SymFitResult<Scalar> sym_coupled_fit(const Matrix<Scalar>& x1,
                                     const Matrix<Scalar>& x2,
                                     const RegParams& params,
                                     const Sparsity& budget, int iters,
                                     double tol,
                                     RidgeMode ridge = RidgeMode::Off) {
  detail::check_fit_inputs(x1, x2, params, budget, iters, tol);
  const Index d = x1.rows();
  const Scalar mu = static_cast<Scalar>(params.mu);

  SymFitResult<Scalar> result;
  SymCoupledModel<Scalar>& model = result.model;
  model.params = params;
  model.layer1 = {Matrix<Scalar>::Identity(d, d), params, budget};
  model.layer2 = {Matrix<Scalar>::Identity(d, d), params, budget};
  model.z1 = sparse_code_update(x1, budget);
  model.z2 = sparse_code_update(x2, budget);
  model.map_12 = Matrix<Scalar>::Identity(d, d);
  model.map_21 = Matrix<Scalar>::Identity(d, d);

  for (int it = 0; it < iters; ++it) {
    model.layer1.t = transform_update(x1, model.z1, params);
    model.layer2.t = transform_update(x2, model.z2, params);
    auto codes = update_codes_sym(Matrix<Scalar>(model.layer1.t * x1),
                                  Matrix<Scalar>(model.layer2.t * x2),
                                  model.map_12, model.map_21, mu, model.z2);
    model.z1 = std::move(codes.first);
    model.z2 = std::move(codes.second);
    if (budget.active()) {
      model.z1 = hard_threshold(model.z1, *budget.tau);
      model.z2 = hard_threshold(model.z2, *budget.tau);
    }
    model.map_12 = update_mapping_mode(model.z1, model.z2, ridge);
    model.map_21 = update_mapping_mode(model.z2, model.z1, ridge);

    result.trace.push_back(sym_objective(model.layer1.t, model.layer2.t,
                                         model.z1, model.z2, model.map_12,
                                         model.map_21, x1, x2, params));
    const std::size_t n = result.trace.size();
    if (n > 1 && converged(result.trace[n - 2].total, result.trace[n - 1].total, tol))
      break;
  }
  return result;
}

}  // namespace dtl

#endif  // DTL_COUPLED_HPP
