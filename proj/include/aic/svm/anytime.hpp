#pragma once

#include <algorithm>
#include <cstddef>
#include <limits>
#include <optional>
#include <span>
#include <stdexcept>
#include <vector>

#include <fmt/format.h>

#include "aic/error.hpp"

namespace aic::svm {

// One-vs-rest linear model evaluated feature by feature.
//
// Class h scores a sample x as  S_h = bias_h + sum_j w_hj * x_j.  The anytime
// evaluation adds the features in `order`, so after p steps only the first p
// scheduled features contribute. `accuracy_lut[p]` is the expected
// probability that the label after p features equals the label after all n.
struct AnytimeModel {
  std::size_t classes = 0;
  std::size_t features = 0;
  std::vector<double> weights;  // classes x features, row-major
  std::vector<double> biases;
  std::vector<std::size_t> order;
  std::vector<double> feature_cost;  // microjoules, indexed by feature
  std::vector<double> accuracy_lut;  // size features + 1

  double weight(std::size_t h, std::size_t j) const { return weights[h * features + j]; }

  std::span<const double> hyperplane(std::size_t h) const {
    return std::span<const double>(weights).subspan(h * features, features);
  }

  // Energy of the p-th scheduled feature (0-based step).
  double step_cost(std::size_t step) const { return feature_cost[order[step]]; }

  // Hyperplanes, biases, schedule and costs. The LUT may still be missing.
  void validate_structure() const {
    if (classes < 2) throw Error("model needs at least 2 classes");
    if (features < 1) throw Error("model needs at least 1 feature");
    if (weights.size() != classes * features)
      throw Error(fmt::format("model has {} coefficients, expected {}", weights.size(),
                              classes * features));
    if (biases.size() != classes) throw Error("model needs one bias per class");
    if (order.size() != features) throw Error("feature order must cover every feature");
    std::vector<bool> seen(features, false);
    for (auto j : order) {
      if (j >= features || seen[j]) throw Error("feature order is not a permutation");
      seen[j] = true;
    }
    if (feature_cost.size() != features) throw Error("need one energy cost per feature");
    for (double c : feature_cost)
      if (!(c >= 0.0)) throw Error("feature costs must be non-negative");
  }

  void validate() const {
    validate_structure();
    if (accuracy_lut.size() != features + 1)
      throw Error("accuracy table must have one entry per feature count 0..n");
    for (double v : accuracy_lut)
      if (!(v >= 0.0 && v <= 1.0)) throw Error("accuracy table entries must be in [0, 1]");
    if (accuracy_lut.back() != 1.0) throw Error("accuracy table must be 1 at p = n");
  }
};

struct PartialScore {
  std::vector<double> scores;
  std::size_t used = 0;

  friend bool operator==(const PartialScore&, const PartialScore&) = default;
};

struct Classification {
  std::size_t label = 0;
  std::size_t features_used = 0;
  double margin = 0.0;  // best score minus runner-up
};

inline PartialScore init_partial(const AnytimeModel& model) {
  return PartialScore{model.biases, 0};
}

// Add the next scheduled feature of x to every class score.
inline PartialScore& advance(PartialScore& ps, const AnytimeModel& model,
                             std::span<const double> x) {
  if (ps.used >= model.features) throw std::out_of_range("advance: all features already used");
  if (x.size() != model.features) throw std::invalid_argument("advance: feature vector size");
  const std::size_t j = model.order[ps.used];
  const double xj = x[j];
  for (std::size_t h = 0; h < model.classes; ++h) ps.scores[h] += model.weight(h, j) * xj;
  ++ps.used;
  return ps;
}

// Argmax over the scores; ties go to the lowest class index.
inline Classification classify(const PartialScore& ps) {
  Classification out;
  out.features_used = ps.used;
  if (ps.scores.empty()) return out;
  for (std::size_t h = 1; h < ps.scores.size(); ++h)
    if (ps.scores[h] > ps.scores[out.label]) out.label = h;
  if (ps.scores.size() > 1) {
    double second = -std::numeric_limits<double>::infinity();
    for (std::size_t h = 0; h < ps.scores.size(); ++h)
      if (h != out.label) second = std::max(second, ps.scores[h]);
    out.margin = ps.scores[out.label] - second;
  }
  return out;
}

inline PartialScore score_prefix(const AnytimeModel& model, std::span<const double> x,
                                 std::size_t p) {
  auto ps = init_partial(model);
  for (std::size_t i = 0; i < p; ++i) advance(ps, model, x);
  return ps;
}

inline Classification classify_full(const AnytimeModel& model, std::span<const double> x) {
  return classify(score_prefix(model, x, model.features));
}

// True when the label at the current step matches the label using every feature.
inline bool coherent(const PartialScore& ps, const AnytimeModel& model,
                     std::span<const double> x) {
  if (ps.used == model.features) return true;
  auto full = ps;
  while (full.used < model.features) advance(full, model, x);
  return classify(ps).label == classify(full).label;
}

// Fewest features whose expected coherence reaches `floor`, if any.
inline std::optional<std::size_t> features_for_accuracy(std::span<const double> lut,
                                                        double floor) {
  for (std::size_t p = 0; p < lut.size(); ++p)
    if (lut[p] >= floor) return p;
  return std::nullopt;
}

}  // namespace aic::svm
