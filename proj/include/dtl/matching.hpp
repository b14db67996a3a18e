#ifndef DTL_MATCHING_HPP
#define DTL_MATCHING_HPP

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <optional>
#include <string>
#include <unordered_map>
#include <utility>
#include <vector>

#include "dtl/types.hpp"

namespace dtl {

enum class Metric { Euclidean, Cosine };

/// Enrolled reference set. Columns sharing a label form a multi-image
/// subject; a label's distance to a probe is the minimum over its columns.
template <typename Scalar>
struct Gallery {
  Matrix<Scalar> codes;
  std::vector<std::string> labels;  // one per column
  Metric metric = Metric::Euclidean;

  // Distinct labels in insertion order of first occurrence, with the
  // columns enrolled under each.
  std::vector<std::string> distinct;
  std::vector<std::vector<Index>> columns_of;

  Index size() const { return codes.cols(); }
  Index label_count() const { return static_cast<Index>(distinct.size()); }
};

struct MatchResult {
  // Full ranking over distinct gallery labels, distances non-decreasing,
  // ties broken by gallery insertion order.
  std::vector<std::pair<std::string, double>> ranking;
  // 1-based rank of the probe's true label; absent when not enrolled.
  std::optional<int> rank_of_true;
};

/// Rank-k identification accuracies for k = 1..max rank.
struct CmcCurve {
  std::vector<double> accuracies;
  Index n_probes = 0;
};

namespace detail {

template <typename Scalar>
double column_distance(Metric metric, const Eigen::Ref<const Vector<Scalar>>& a,
                       const Eigen::Ref<const Vector<Scalar>>& b) {
  if (metric == Metric::Euclidean)
    return static_cast<double>((a - b).norm());
  const double denom = static_cast<double>(a.norm()) * static_cast<double>(b.norm());
  return 1.0 - static_cast<double>(a.dot(b)) / denom;
}

}  // namespace detail

template <typename Scalar>
Gallery<Scalar> enroll(Matrix<Scalar> codes, std::vector<std::string> labels,
                       Metric metric) {
  if (codes.rows() < 1 || codes.cols() < 1)
    throw InvalidInput("enroll: gallery must contain at least one code");
  if (static_cast<Index>(labels.size()) != codes.cols())
    throw InvalidInput("enroll: label count must equal gallery code count");
  require_finite(codes, "enroll: codes");
  for (const auto& label : labels)
    if (label.empty()) throw InvalidInput("enroll: labels must be non-empty");
  if (metric == Metric::Cosine)
    for (Index j = 0; j < codes.cols(); ++j)
      if (codes.col(j).norm() == Scalar(0))
        throw InvalidInput("enroll: zero-norm column " + std::to_string(j) +
                           " is invalid under the cosine metric");

  Gallery<Scalar> gallery{std::move(codes), std::move(labels), metric, {}, {}};
  std::unordered_map<std::string, std::size_t> seen;
  for (Index j = 0; j < gallery.codes.cols(); ++j) {
    const auto& label = gallery.labels[static_cast<std::size_t>(j)];
    auto [it, inserted] = seen.emplace(label, gallery.distinct.size());
    if (inserted) {
      gallery.distinct.push_back(label);
      gallery.columns_of.emplace_back();
    }
    gallery.columns_of[it->second].push_back(j);
  }
  return gallery;
}

/// Ranks every distinct gallery label for each probe, nearest first.
template <typename Scalar>
std::vector<MatchResult> identify(const Gallery<Scalar>& gallery,
                                  const Matrix<Scalar>& probe_codes,
                                  const std::vector<std::string>& probe_labels) {
  if (probe_codes.rows() != gallery.codes.rows())
    throw InvalidInput("identify: probe code dimension must equal gallery code dimension");
  if (static_cast<Index>(probe_labels.size()) != probe_codes.cols())
    throw InvalidInput("identify: probe label count must equal probe code count");
  require_finite(probe_codes, "identify: probe codes");
  if (gallery.metric == Metric::Cosine)
    for (Index j = 0; j < probe_codes.cols(); ++j)
      if (probe_codes.col(j).norm() == Scalar(0))
        throw InvalidInput("identify: zero-norm probe column " + std::to_string(j) +
                           " is invalid under the cosine metric");

  const Index n_labels = gallery.label_count();
  std::vector<MatchResult> results;
  results.reserve(static_cast<std::size_t>(probe_codes.cols()));
  std::vector<Index> order(static_cast<std::size_t>(n_labels));
  std::vector<double> dist(static_cast<std::size_t>(n_labels));

  for (Index p = 0; p < probe_codes.cols(); ++p) {
    const Vector<Scalar> probe = probe_codes.col(p);
    for (Index l = 0; l < n_labels; ++l) {
      double best = std::numeric_limits<double>::infinity();
      for (Index col : gallery.columns_of[static_cast<std::size_t>(l)])
        best = std::min(best, detail::column_distance<Scalar>(
                                  gallery.metric, probe, gallery.codes.col(col)));
      dist[static_cast<std::size_t>(l)] = best;
    }
    std::iota(order.begin(), order.end(), Index(0));
    std::stable_sort(order.begin(), order.end(), [&](Index a, Index b) {
      return dist[static_cast<std::size_t>(a)] < dist[static_cast<std::size_t>(b)];
    });

    MatchResult r;
    r.ranking.reserve(static_cast<std::size_t>(n_labels));
    for (Index k = 0; k < n_labels; ++k) {
      const Index l = order[static_cast<std::size_t>(k)];
      r.ranking.emplace_back(gallery.distinct[static_cast<std::size_t>(l)],
                             dist[static_cast<std::size_t>(l)]);
      if (gallery.distinct[static_cast<std::size_t>(l)] ==
          probe_labels[static_cast<std::size_t>(p)])
        r.rank_of_true = static_cast<int>(k) + 1;
    }
    results.push_back(std::move(r));
  }
  return results;
}

/// Cumulative match characteristic: accuracies[k-1] is the fraction of
/// probes whose true label ranks within the top k.
inline CmcCurve cmc_compute(const std::vector<MatchResult>& results,
                            int max_rank) {
  if (results.empty()) throw InvalidInput("cmc_compute: no match results");
  if (max_rank < 1) throw InvalidInput("cmc_compute: max_rank must be >= 1");
  const auto n_labels = results.front().ranking.size();
  if (static_cast<std::size_t>(max_rank) > n_labels)
    throw InvalidInput("cmc_compute: max_rank exceeds the number of gallery labels");

  CmcCurve curve;
  curve.n_probes = static_cast<Index>(results.size());
  curve.accuracies.resize(static_cast<std::size_t>(max_rank), 0.0);
  for (const auto& r : results) {
    if (!r.rank_of_true) continue;
    for (int k = *r.rank_of_true; k <= max_rank; ++k)
      curve.accuracies[static_cast<std::size_t>(k - 1)] += 1.0;
  }
  for (auto& a : curve.accuracies) a /= static_cast<double>(curve.n_probes);
  return curve;
}

/// Fraction of probes whose true label ranks within the top k.
inline double rank_k_accuracy(const std::vector<MatchResult>& results, int k) {
  if (results.empty()) throw InvalidInput("rank_k_accuracy: no match results");
  if (k < 1) throw InvalidInput("rank_k_accuracy: k must be >= 1");
  std::size_t hits = 0;
  for (const auto& r : results)
    if (r.rank_of_true && *r.rank_of_true <= k) ++hits;
  return static_cast<double>(hits) / static_cast<double>(results.size());
}

}  // namespace dtl

#endif  // DTL_MATCHING_HPP
