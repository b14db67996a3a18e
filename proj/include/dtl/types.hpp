#ifndef DTL_TYPES_HPP
#define DTL_TYPES_HPP

#include <Eigen/Core>

#include <optional>
#include <stdexcept>
#include <string>

namespace dtl {

using Index = Eigen::Index;

template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;

using MatrixD = Matrix<double>;
using VectorD = Vector<double>;

/// Base class for all library errors.
class Error : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Malformed or inconsistent input: shape mismatches, bad parameters,
/// unparseable or invalid files.
class InvalidInput : public Error {
public:
  using Error::Error;
};

/// Numerical failure: singular systems, failed factorizations,
/// non-finite intermediates.
class NumericalError : public Error {
public:
  using Error::Error;
};

/// Weights of the regularized analysis objective
///   ||T X - Z||_F^2 + lambda (epsilon ||T||_F^2 - log|det T|)
/// plus the coupling weight mu used by the cross-domain objectives.
struct RegParams {
  double lambda = 0.01;
  double epsilon = 1.0;
  double mu = 1.0;

  void validate() const {
    if (!(lambda >= 0.0)) throw InvalidInput("RegParams: lambda must be >= 0");
    if (!(epsilon > 0.0)) throw InvalidInput("RegParams: epsilon must be > 0");
    if (!(mu >= 0.0)) throw InvalidInput("RegParams: mu must be >= 0");
  }
};

/// Per-column count of retained coefficients; absent means dense coding.
struct Sparsity {
  std::optional<Index> tau;

  static Sparsity dense() { return {}; }
  static Sparsity of(Index t) { return {t}; }

  bool active() const { return tau.has_value(); }

  void validate(Index dim) const {
    if (!tau) return;
    if (*tau < 1 || *tau > dim)
      throw InvalidInput("Sparsity: tau must lie in [1, " +
                         std::to_string(dim) + "], got " + std::to_string(*tau));
  }
};

/// One learned square transform with its objective parameters.
template <typename Scalar>
struct TransformLayer {
  Matrix<Scalar> t;
  RegParams params;
  Sparsity budget;

  Index dim() const { return t.rows(); }
};

template <typename Scalar>
TransformLayer<Scalar> identity_layer(Index dim, const RegParams& params = {},
                                      const Sparsity& budget = {}) {
  params.validate();
  budget.validate(dim);
  return {Matrix<Scalar>::Identity(dim, dim), params, budget};
}

/// Term-by-term value of the (possibly coupled) objective. `total` is the
/// exact floating-point sum of the four parts.
struct CostBreakdown {
  double residual = 0.0;        // ||T X - Z||_F^2, summed over domains
  double frob_penalty = 0.0;    // lambda * epsilon * ||T||_F^2
  double logdet_penalty = 0.0;  // -lambda * log|det T|; +inf when det T == 0
  double coupling = 0.0;        // mu-weighted mapping residuals
  double total = 0.0;

  static CostBreakdown sum(double residual, double frob, double logdet,
                           double coupling) {
    return {residual, frob, logdet, coupling,
            residual + frob + logdet + coupling};
  }
};

template <typename Derived>
void require_finite(const Eigen::MatrixBase<Derived>& m, const char* what) {
  if (!m.allFinite())
    throw InvalidInput(std::string(what) + ": entries must be finite");
}

}  // namespace dtl

#endif  // DTL_TYPES_HPP
