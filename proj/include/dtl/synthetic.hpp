#ifndef DTL_SYNTHETIC_HPP
#define DTL_SYNTHETIC_HPP

#include <Eigen/QR>

#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "dtl/linalg.hpp"
#include "dtl/types.hpp"

namespace dtl {

/// Parameters of the planted coupled-domain generator. `noise` is relative:
/// the added perturbation has Frobenius norm exactly noise * ||signal||_F.
struct SyntheticSpec {
  Index dim = 16;
  Index subjects = 20;
  Index samples_per_subject = 4;
  double noise = 0.0;
  double cond_bound = 50.0;
  std::uint64_t seed = 0;

  Index sample_count() const { return subjects * samples_per_subject; }

  void validate() const {
    if (dim < 1 || subjects < 1 || samples_per_subject < 1)
      throw InvalidInput("SyntheticSpec: dim, subjects and samples_per_subject must be >= 1");
    if (!(noise >= 0.0)) throw InvalidInput("SyntheticSpec: noise must be >= 0");
    if (!(cond_bound >= 1.0))
      throw InvalidInput("SyntheticSpec: condition bound below 1 is infeasible");
  }
};

/// Planted data plus the ground truth that generated it:
///   Z2* = M1* Z1*,  X_i = T_i*^-1 Z_i* + noise,  M2* = M1*^-1.
template <typename Scalar>
struct SyntheticData {
  Matrix<Scalar> x1, x2;
  std::vector<std::string> labels;
  Matrix<Scalar> true_t1, true_t2;
  Matrix<Scalar> true_map_12, true_map_21;
  Matrix<Scalar> true_z1, true_z2;
};

namespace detail {

template <typename Scalar, typename Rng>
Matrix<Scalar> randn(Index rows, Index cols, Rng& rng) {
  std::normal_distribution<Scalar> normal(Scalar(0), Scalar(1));
  Matrix<Scalar> m(rows, cols);
  for (Index j = 0; j < cols; ++j)
    for (Index i = 0; i < rows; ++i) m(i, j) = normal(rng);
  return m;
}

template <typename Scalar, typename Rng>
Matrix<Scalar> random_orthogonal(Index d, Rng& rng) {
  const Matrix<Scalar> g = randn<Scalar>(d, d, rng);
  Eigen::HouseholderQR<Matrix<Scalar>> qr(g);
  Matrix<Scalar> q = qr.householderQ();
  // Fix the sign convention so Q is a deterministic function of G.
  const Matrix<Scalar> r = qr.matrixQR().template triangularView<Eigen::Upper>();
  for (Index j = 0; j < d; ++j)
    if (r(j, j) < Scalar(0)) q.col(j) = -q.col(j);
  return q;
}

/// Random d x d matrix with singular values in [1, bound], hence condition
/// number at most bound and guaranteed invertibility.
template <typename Scalar, typename Rng>
Matrix<Scalar> random_conditioned(Index d, Scalar bound, Rng& rng) {
  const Matrix<Scalar> u = random_orthogonal<Scalar>(d, rng);
  const Matrix<Scalar> v = random_orthogonal<Scalar>(d, rng);
  std::uniform_real_distribution<Scalar> unif(Scalar(1), bound);
  Vector<Scalar> s(d);
  for (Index i = 0; i < d; ++i) s(i) = unif(rng);
  return u * s.asDiagonal() * v.transpose();
}

}  // namespace detail

/// Draws per-subject latent codes (subject centroids plus a small
/// within-subject spread), plants Z2* = M1* Z1*, and observes
/// X_i = T_i*^-1 Z_i* plus relative noise. Deterministic for a fixed seed.
template <typename Scalar>
SyntheticData<Scalar> gen_synthetic_coupled(const SyntheticSpec& spec) {
  spec.validate();
  std::mt19937_64 rng(spec.seed);
  const Index d = spec.dim;
  const Index n = spec.sample_count();
  const Scalar bound = static_cast<Scalar>(spec.cond_bound);

  SyntheticData<Scalar> data;
  data.true_t1 = detail::random_conditioned<Scalar>(d, bound, rng);
  data.true_t2 = detail::random_conditioned<Scalar>(d, bound, rng);
  data.true_map_12 = detail::random_conditioned<Scalar>(d, bound, rng);
  data.true_map_21 = data.true_map_12.partialPivLu().inverse();

  // Latent codes: unit-variance subject centroids, within-subject spread
  // an order of magnitude smaller so identities stay separable.
  const Scalar kSubjectSpread = Scalar(0.1);
  data.true_z1.resize(d, n);
  data.labels.reserve(static_cast<std::size_t>(n));
  const int width = static_cast<int>(std::to_string(spec.subjects).size());
  for (Index s = 0; s < spec.subjects; ++s) {
    const Vector<Scalar> centroid = detail::randn<Scalar>(d, 1, rng);
    std::string label = std::to_string(s + 1);
    label = "s" + std::string(static_cast<std::size_t>(width) - label.size(), '0') + label;
    for (Index r = 0; r < spec.samples_per_subject; ++r) {
      data.true_z1.col(s * spec.samples_per_subject + r) =
          centroid + kSubjectSpread * detail::randn<Scalar>(d, 1, rng);
      data.labels.push_back(label);
    }
  }
  data.true_z2 = data.true_map_12 * data.true_z1;

  data.x1 = data.true_t1.partialPivLu().solve(data.true_z1);
  data.x2 = data.true_t2.partialPivLu().solve(data.true_z2);
  if (spec.noise > 0.0) {
    for (Matrix<Scalar>* x : {&data.x1, &data.x2}) {
      const Matrix<Scalar> perturbation = detail::randn<Scalar>(d, n, rng);
      *x += perturbation *
            (static_cast<Scalar>(spec.noise) * x->norm() / perturbation.norm());
    }
  }
  return data;
}

}  // namespace dtl

#endif  // DTL_SYNTHETIC_HPP
