#ifndef DTL_DEEP_HPP
#define DTL_DEEP_HPP

#include <optional>
#include <utility>
#include <vector>

#include "dtl/coupled.hpp"
#include "dtl/transform.hpp"
#include "dtl/types.hpp"

namespace dtl {

enum class CouplingKind { Semi, Symmetric };
enum class MapDirection { OneToTwo, TwoToOne };

/// Greedy layer-wise trained stack of square transforms for two domains,
/// with cross-domain mapping(s) learned at the final layer. A semi model
/// maps domain-1 codes into domain-2 code space only; a symmetric model
/// carries both directions.
template <typename Scalar>
struct DeepTransform {
  CouplingKind kind = CouplingKind::Semi;
  std::vector<TransformLayer<Scalar>> layers1, layers2;
  Matrix<Scalar> map_12;
  std::optional<Matrix<Scalar>> map_21;

  Index depth() const { return static_cast<Index>(layers1.size()); }
  Index dim() const { return layers1.empty() ? 0 : layers1.front().dim(); }

  void validate() const {
    if (layers1.empty() || layers1.size() != layers2.size())
      throw InvalidInput("DeepTransform: layer stacks must be non-empty and equal length");
    if ((kind == CouplingKind::Symmetric) != map_21.has_value())
      throw InvalidInput("DeepTransform: map_21 must be present exactly for symmetric models");
    const Index d = dim();
    for (const auto* stack : {&layers1, &layers2})
      for (const auto& layer : *stack)
        if (layer.t.rows() != d || layer.t.cols() != d)
          throw InvalidInput("DeepTransform: all transforms must be d x d");
    if (map_12.rows() != d || map_12.cols() != d)
      throw InvalidInput("DeepTransform: map_12 must be d x d");
    if (map_21 && (map_21->rows() != d || map_21->cols() != d))
      throw InvalidInput("DeepTransform: map_21 must be d x d");
  }
};

/// Per-layer training settings; one record is shared by both domains.
struct LayerSettings {
  RegParams params;
  Sparsity budget;
  int iters = 50;
  double tol = 1e-6;
};

struct LayerSchedule {
  std::vector<LayerSettings> layers;

  static LayerSchedule uniform(int depth, const LayerSettings& settings) {
    if (depth < 1) throw InvalidInput("LayerSchedule: depth must be >= 1");
    return {std::vector<LayerSettings>(static_cast<std::size_t>(depth), settings)};
  }

  int depth() const { return static_cast<int>(layers.size()); }
};

/// Cost traces recorded while fitting one layer: the two single-domain
/// traces for uncoupled layers, or the coupled trace for the final layer.
struct LayerTraces {
  std::vector<CostBreakdown> domain1, domain2, coupled;
};

template <typename Scalar>
struct DeepFitResult {
  DeepTransform<Scalar> model;
  std::vector<LayerTraces> traces;     // one entry per layer
  Matrix<Scalar> codes1, codes2;       // final-layer training codes
};

/// Greedy layer-wise training: layers 1..k-1 are fit as independent
/// single-domain transform-learning problems on each domain (no coupling
/// term), feeding each layer's codes to the next; the final layer is fit
/// with the semi- or symmetrically-coupled objective. Depth 1 is a single
/// coupled fit on the raw inputs.
template <typename Scalar>
DeepFitResult<Scalar> fit_deep(const Matrix<Scalar>& x1, const Matrix<Scalar>& x2,
                               CouplingKind kind, const LayerSchedule& schedule,
                               RidgeMode ridge = RidgeMode::Off) {
  const int depth = schedule.depth();
  if (depth < 1) throw InvalidInput("fit_deep: schedule must cover at least one layer");
  detail::check_paired(x1, x2, "fit_deep");
  const Index d = x1.rows();

  DeepFitResult<Scalar> result;
  result.model.kind = kind;
  result.traces.resize(static_cast<std::size_t>(depth));

  Matrix<Scalar> in1 = x1, in2 = x2;
  for (int j = 0; j + 1 < depth; ++j) {
    const LayerSettings& s = schedule.layers[static_cast<std::size_t>(j)];
    auto r1 = transform_learn(in1, identity_layer<Scalar>(d, s.params, s.budget),
                              s.iters, s.tol);
    auto r2 = transform_learn(in2, identity_layer<Scalar>(d, s.params, s.budget),
                              s.iters, s.tol);
    result.traces[static_cast<std::size_t>(j)].domain1 = std::move(r1.trace);
    result.traces[static_cast<std::size_t>(j)].domain2 = std::move(r2.trace);
    result.model.layers1.push_back(std::move(r1.layer));
    result.model.layers2.push_back(std::move(r2.layer));
    in1 = std::move(r1.codes);
    in2 = std::move(r2.codes);
  }

  const LayerSettings& last = schedule.layers.back();
  if (kind == CouplingKind::Semi) {
    auto fit = semi_coupled_fit(in1, in2, last.params, last.budget, last.iters,
                                last.tol, ridge);
    result.traces.back().coupled = std::move(fit.trace);
    result.model.layers1.push_back(std::move(fit.model.layer1));
    result.model.layers2.push_back(std::move(fit.model.layer2));
    result.model.map_12 = std::move(fit.model.mapping);
    result.codes1 = std::move(fit.model.z1);
    result.codes2 = std::move(fit.model.z2);
  } else {
    auto fit = sym_coupled_fit(in1, in2, last.params, last.budget, last.iters,
                               last.tol, ridge);
    result.traces.back().coupled = std::move(fit.trace);
    result.model.layers1.push_back(std::move(fit.model.layer1));
    result.model.layers2.push_back(std::move(fit.model.layer2));
    result.model.map_12 = std::move(fit.model.map_12);
    result.model.map_21 = std::move(fit.model.map_21);
    result.codes1 = std::move(fit.model.z1);
    result.codes2 = std::move(fit.model.z2);
  }
  return result;
}

/// Test-time encoding: the plain linear cascade z = T^k ... T^1 x for the
/// chosen domain. No sparsification is applied unless apply_budget is set,
/// in which case each layer's own budget thresholds its output.
template <typename Scalar>
Matrix<Scalar> encode(const DeepTransform<Scalar>& model, const Matrix<Scalar>& x,
                      int domain, bool apply_budget = false) {
  if (domain != 1 && domain != 2)
    throw InvalidInput("encode: domain must be 1 or 2");
  model.validate();
  if (x.rows() != model.dim())
    throw InvalidInput("encode: input dimension does not match the model");
  const auto& stack = domain == 1 ? model.layers1 : model.layers2;
  Matrix<Scalar> z = x;
  for (const auto& layer : stack) {
    z = layer.t * z;
    if (apply_budget && layer.budget.active())
      z = hard_threshold(z, *layer.budget.tau);
  }
  return z;
}

/// Applies the learned cross-domain mapping to codes. Direction 2->1
/// requires a symmetric model.
template <typename Scalar>
Matrix<Scalar> map_codes(const DeepTransform<Scalar>& model,
                         const Matrix<Scalar>& z, MapDirection direction) {
  model.validate();
  if (z.rows() != model.dim())
    throw InvalidInput("map_codes: code dimension does not match the model");
  if (direction == MapDirection::OneToTwo) return model.map_12 * z;
  if (!model.map_21)
    throw InvalidInput("map_codes: direction 2->1 is unsupported for a semi model");
  return *model.map_21 * z;
}

}  // namespace dtl

#endif  // DTL_DEEP_HPP
