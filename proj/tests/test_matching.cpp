#include <doctest.h>

#include <algorithm>

#include "dtl/matching.hpp"
#include "oracles.hpp"

using dtl::Gallery;
using dtl::MatrixD;
using dtl::Metric;

namespace {

std::vector<std::string> labels_of(std::initializer_list<const char*> names) {
  return {names.begin(), names.end()};
}

}  // namespace

TEST_CASE("enrollment basics") {
  oracle::Rng rng(51);
  const MatrixD codes = oracle::randn(4, 3, rng);
  const auto gallery = dtl::enroll(codes, labels_of({"a", "b", "c"}), Metric::Euclidean);
  CHECK(gallery.size() == 3);
  CHECK(gallery.label_count() == 3);

  CHECK_THROWS_AS(dtl::enroll(codes, labels_of({"a", "b"}), Metric::Euclidean),
                  dtl::InvalidInput);
  CHECK_THROWS_AS(dtl::enroll(codes, labels_of({"a", "", "c"}), Metric::Euclidean),
                  dtl::InvalidInput);

  // Multi-image subjects are fine.
  const auto multi = dtl::enroll(codes, labels_of({"a", "b", "a"}), Metric::Euclidean);
  CHECK(multi.size() == 3);
  CHECK(multi.label_count() == 2);
}

TEST_CASE("cosine enrollment rejects zero-norm columns") {
  MatrixD codes = MatrixD::Zero(3, 2);
  codes(0, 0) = 1.0;
  CHECK_THROWS_AS(dtl::enroll(codes, labels_of({"a", "b"}), Metric::Cosine),
                  dtl::InvalidInput);
  CHECK_NOTHROW(dtl::enroll(codes, labels_of({"a", "b"}), Metric::Euclidean));
}

TEST_CASE("a probe equal to a unique gallery column ranks first at distance zero") {
  oracle::Rng rng(52);
  const MatrixD codes = oracle::randn(5, 4, rng);
  const auto gallery = dtl::enroll(codes, labels_of({"w", "x", "y", "z"}),
                                   Metric::Euclidean);
  const MatrixD probe = codes.col(2);
  const auto results = dtl::identify(gallery, probe, labels_of({"y"}));
  REQUIRE(results.size() == 1);
  CHECK(results[0].rank_of_true == 1);
  CHECK(results[0].ranking[0].first == "y");
  CHECK(results[0].ranking[0].second == 0.0);
  CHECK(std::is_sorted(results[0].ranking.begin(), results[0].ranking.end(),
                       [](const auto& a, const auto& b) { return a.second < b.second; }));
}

TEST_CASE("single-label gallery always ranks that label first") {
  oracle::Rng rng(53);
  const MatrixD codes = oracle::randn(3, 5, rng);
  const auto gallery = dtl::enroll(
      codes, std::vector<std::string>(5, "only"), Metric::Euclidean);
  const MatrixD probes = oracle::randn(3, 4, rng);
  const auto results = dtl::identify(
      gallery, probes, std::vector<std::string>(4, "only"));
  for (const auto& r : results) {
    CHECK(r.rank_of_true == 1);
    CHECK(r.ranking.size() == 1);
  }
}

TEST_CASE("unenrolled probe labels have no true rank") {
  oracle::Rng rng(54);
  const MatrixD codes = oracle::randn(3, 3, rng);
  const auto gallery = dtl::enroll(codes, labels_of({"a", "b", "c"}), Metric::Euclidean);
  const auto results = dtl::identify(gallery, MatrixD(oracle::randn(3, 1, rng)),
                                     labels_of({"stranger"}));
  CHECK(!results[0].rank_of_true.has_value());
}

TEST_CASE("dimension mismatches are rejected") {
  oracle::Rng rng(55);
  const auto gallery = dtl::enroll(MatrixD(oracle::randn(4, 2, rng)),
                                   labels_of({"a", "b"}), Metric::Euclidean);
  CHECK_THROWS_AS(dtl::identify(gallery, MatrixD(oracle::randn(3, 1, rng)),
                                labels_of({"a"})),
                  dtl::InvalidInput);
}

TEST_CASE("label distance is the minimum over its columns") {
  MatrixD codes(2, 3);
  codes << 0, 10, 3,
           0, 0, 4;  // label "a" has columns at distance 0 and 5 from origin
  const auto gallery = dtl::enroll(codes, labels_of({"a", "b", "a"}), Metric::Euclidean);
  const MatrixD probe = MatrixD::Zero(2, 1);
  const auto results = dtl::identify(gallery, probe, labels_of({"a"}));
  CHECK(results[0].rank_of_true == 1);
  CHECK(results[0].ranking[0].second == 0.0);

  // Adding a duplicate column can only improve (never worsen) a label's rank.
  MatrixD more(2, 4);
  more << 0, 10, 3, 9,
          0, 0, 4, 0;
  const auto bigger = dtl::enroll(more, labels_of({"a", "b", "a", "b"}),
                                  Metric::Euclidean);
  const auto results2 = dtl::identify(bigger, probe, labels_of({"a"}));
  CHECK(results2[0].rank_of_true.value() <= results[0].rank_of_true.value());
}

TEST_CASE("ties break by gallery insertion order") {
  MatrixD codes(2, 2);
  codes << 1, -1,
           0, 0;  // both labels equidistant from the origin
  const auto gallery = dtl::enroll(codes, labels_of({"first", "second"}),
                                   Metric::Euclidean);
  const auto results = dtl::identify(gallery, MatrixD(MatrixD::Zero(2, 1)),
                                     labels_of({"second"}));
  CHECK(results[0].ranking[0].first == "first");
  CHECK(results[0].rank_of_true == 2);
}

TEST_CASE("gallery column permutation does not change ranks (no ties)") {
  oracle::Rng rng(56);
  const int n = 12;
  const MatrixD codes = oracle::randn(6, n, rng);
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) labels.push_back("s" + std::to_string(i % 6));
  const MatrixD probes = oracle::randn(6, 5, rng);
  const auto probe_labels = labels_of({"s0", "s1", "s2", "s3", "s4"});

  const auto base = dtl::identify(dtl::enroll(codes, labels, Metric::Euclidean),
                                  probes, probe_labels);
  std::vector<int> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  MatrixD shuffled(6, n);
  std::vector<std::string> shuffled_labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    shuffled.col(i) = codes.col(perm[static_cast<std::size_t>(i)]);
    shuffled_labels[static_cast<std::size_t>(i)] =
        labels[static_cast<std::size_t>(perm[static_cast<std::size_t>(i)])];
  }
  const auto permuted = dtl::identify(
      dtl::enroll(shuffled, shuffled_labels, Metric::Euclidean), probes, probe_labels);
  for (std::size_t p = 0; p < base.size(); ++p)
    CHECK(base[p].rank_of_true == permuted[p].rank_of_true);
}

TEST_CASE("cosine ranking is invariant to positive rescaling") {
  oracle::Rng rng(57);
  const int n = 8;
  MatrixD codes = oracle::randn(5, n, rng);
  std::vector<std::string> labels;
  for (int i = 0; i < n; ++i) labels.push_back("g" + std::to_string(i));
  MatrixD probes = oracle::randn(5, 3, rng);
  const auto probe_labels = labels_of({"g0", "g1", "g2"});

  const auto base = dtl::identify(dtl::enroll(codes, labels, Metric::Cosine),
                                  probes, probe_labels);
  std::uniform_real_distribution<double> scale(0.1, 10.0);
  for (int i = 0; i < n; ++i) codes.col(i) *= scale(rng);
  for (int i = 0; i < 3; ++i) probes.col(i) *= scale(rng);
  const auto scaled = dtl::identify(dtl::enroll(codes, labels, Metric::Cosine),
                                    probes, probe_labels);
  for (std::size_t p = 0; p < base.size(); ++p) {
    CHECK(base[p].rank_of_true == scaled[p].rank_of_true);
    for (std::size_t k = 0; k < base[p].ranking.size(); ++k)
      CHECK(base[p].ranking[k].first == scaled[p].ranking[k].first);
  }
}

TEST_CASE("CMC values from hand-counted ranks") {
  std::vector<dtl::MatchResult> results(3);
  for (auto& r : results)
    r.ranking = {{"a", 0.1}, {"b", 0.2}, {"c", 0.3}, {"d", 0.4}};
  results[0].rank_of_true = 1;
  results[1].rank_of_true = 2;
  results[2].rank_of_true = 4;
  const auto curve = dtl::cmc_compute(results, 4);
  REQUIRE(curve.accuracies.size() == 4);
  CHECK(curve.accuracies[0] == doctest::Approx(1.0 / 3));
  CHECK(curve.accuracies[1] == doctest::Approx(2.0 / 3));
  CHECK(curve.accuracies[2] == doctest::Approx(2.0 / 3));
  CHECK(curve.accuracies[3] == doctest::Approx(1.0));
  CHECK(dtl::rank_k_accuracy(results, 1) == curve.accuracies[0]);
  CHECK(dtl::rank_k_accuracy(results, 3) == curve.accuracies[2]);
}

TEST_CASE("CMC is constant 1 when every probe ranks first") {
  std::vector<dtl::MatchResult> results(5);
  for (auto& r : results) {
    r.ranking = {{"x", 0.0}, {"y", 1.0}};
    r.rank_of_true = 1;
  }
  const auto curve = dtl::cmc_compute(results, 2);
  for (double a : curve.accuracies) CHECK(a == 1.0);
}

TEST_CASE("CMC is non-decreasing and ends at the enrolled fraction") {
  oracle::Rng rng(58);
  const int n_gallery = 10, n_probes = 40;
  const MatrixD codes = oracle::randn(4, n_gallery, rng);
  std::vector<std::string> labels;
  for (int i = 0; i < n_gallery; ++i) labels.push_back("s" + std::to_string(i));
  const auto gallery = dtl::enroll(codes, labels, Metric::Euclidean);

  const MatrixD probes = oracle::randn(4, n_probes, rng);
  std::vector<std::string> probe_labels;
  int enrolled = 0;
  for (int i = 0; i < n_probes; ++i) {
    if (i % 4 == 0) {
      probe_labels.push_back("unknown");  // not enrolled
    } else {
      probe_labels.push_back("s" + std::to_string(i % n_gallery));
      ++enrolled;
    }
  }
  const auto results = dtl::identify(gallery, probes, probe_labels);
  const auto curve = dtl::cmc_compute(results, n_gallery);
  for (std::size_t k = 1; k < curve.accuracies.size(); ++k)
    CHECK(curve.accuracies[k] >= curve.accuracies[k - 1]);
  CHECK(curve.accuracies.back() ==
        doctest::Approx(static_cast<double>(enrolled) / n_probes));
}

TEST_CASE("CMC input validation") {
  CHECK_THROWS_AS(dtl::cmc_compute({}, 3), dtl::InvalidInput);
  std::vector<dtl::MatchResult> results(1);
  results[0].ranking = {{"a", 0.0}};
  results[0].rank_of_true = 1;
  CHECK_THROWS_AS(dtl::cmc_compute(results, 2), dtl::InvalidInput);
  CHECK_THROWS_AS(dtl::cmc_compute(results, 0), dtl::InvalidInput);
  CHECK_THROWS_AS(dtl::rank_k_accuracy(results, 0), dtl::InvalidInput);
  // rank_k beyond the gallery depth counts enrolled hits.
  CHECK(dtl::rank_k_accuracy(results, 5) == 1.0);
}
