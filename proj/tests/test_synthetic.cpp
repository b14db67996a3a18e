#include <doctest.h>

#include <Eigen/SVD>

#include "dtl/synthetic.hpp"
#include "oracles.hpp"

using dtl::MatrixD;
using dtl::SyntheticSpec;

namespace {

double condition_number(const MatrixD& m) {
  Eigen::JacobiSVD<MatrixD> svd(m);
  return svd.singularValues()(0) / svd.singularValues()(svd.singularValues().size() - 1);
}

}  // namespace

TEST_CASE("same seed, same data") {
  SyntheticSpec spec;
  spec.dim = 9;
  spec.subjects = 7;
  spec.samples_per_subject = 3;
  spec.noise = 0.0;
  spec.seed = 1234;
  const auto a = dtl::gen_synthetic_coupled<double>(spec);
  const auto b = dtl::gen_synthetic_coupled<double>(spec);
  CHECK(a.x1 == b.x1);
  CHECK(a.x2 == b.x2);
  CHECK(a.true_t1 == b.true_t1);
  CHECK(a.true_map_12 == b.true_map_12);
  CHECK(a.labels == b.labels);

  spec.seed = 1235;
  const auto c = dtl::gen_synthetic_coupled<double>(spec);
  CHECK(a.x1 != c.x1);
}

TEST_CASE("noise-free data satisfies the planted identity") {
  SyntheticSpec spec;
  spec.dim = 12;
  spec.subjects = 10;
  spec.samples_per_subject = 2;
  spec.noise = 0.0;
  spec.seed = 9;
  const auto data = dtl::gen_synthetic_coupled<double>(spec);
  // X2 = T2*^-1 M1* T1* X1
  const MatrixD reconstructed = data.true_t2.partialPivLu().solve(
      data.true_map_12 * (data.true_t1 * data.x1));
  CHECK((reconstructed - data.x2).norm() <= 1e-10 * data.x2.norm());
  // and the stored codes are consistent
  CHECK((data.true_z2 - data.true_map_12 * data.true_z1).norm() <=
        1e-12 * data.true_z2.norm());
}

TEST_CASE("labels enumerate r samples per subject") {
  SyntheticSpec spec;
  spec.dim = 4;
  spec.subjects = 5;
  spec.samples_per_subject = 3;
  spec.seed = 2;
  const auto data = dtl::gen_synthetic_coupled<double>(spec);
  REQUIRE(data.labels.size() == 15);
  CHECK(data.x1.cols() == 15);
  for (int s = 0; s < 5; ++s)
    for (int r = 0; r < 3; ++r)
      CHECK(data.labels[static_cast<std::size_t>(3 * s + r)] == data.labels[static_cast<std::size_t>(3 * s)]);
  CHECK(data.labels[0] != data.labels[3]);
}

TEST_CASE("planted matrices respect the condition bound") {
  SyntheticSpec spec;
  spec.dim = 10;
  spec.subjects = 4;
  spec.samples_per_subject = 2;
  spec.cond_bound = 7.0;
  spec.seed = 3;
  const auto data = dtl::gen_synthetic_coupled<double>(spec);
  CHECK(condition_number(data.true_t1) <= 7.0 * (1 + 1e-10));
  CHECK(condition_number(data.true_t2) <= 7.0 * (1 + 1e-10));
  CHECK(condition_number(data.true_map_12) <= 7.0 * (1 + 1e-10));
  // the reverse map is the exact inverse
  CHECK((data.true_map_12 * data.true_map_21 - MatrixD::Identity(10, 10)).norm() < 1e-10);
}

TEST_CASE("noise magnitude is exactly relative") {
  SyntheticSpec spec;
  spec.dim = 8;
  spec.subjects = 12;
  spec.samples_per_subject = 2;
  spec.seed = 4;
  spec.noise = 0.0;
  const auto clean = dtl::gen_synthetic_coupled<double>(spec);
  spec.noise = 0.1;
  const auto noisy = dtl::gen_synthetic_coupled<double>(spec);
  // Same seed: the signal part is identical, the perturbation sits on top.
  const double rel1 = (noisy.x1 - clean.x1).norm() / clean.x1.norm();
  CHECK(rel1 == doctest::Approx(0.1).epsilon(1e-12));
}

TEST_CASE("invalid specs are rejected") {
  SyntheticSpec spec;
  spec.dim = 0;
  CHECK_THROWS_AS(dtl::gen_synthetic_coupled<double>(spec), dtl::InvalidInput);
  spec.dim = 4;
  spec.cond_bound = 0.5;  // condition numbers below 1 are infeasible
  CHECK_THROWS_AS(dtl::gen_synthetic_coupled<double>(spec), dtl::InvalidInput);
  spec.cond_bound = 10.0;
  spec.noise = -0.1;
  CHECK_THROWS_AS(dtl::gen_synthetic_coupled<double>(spec), dtl::InvalidInput);
}
