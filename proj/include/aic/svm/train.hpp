#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <numeric>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "aic/error.hpp"
#include "aic/rng.hpp"
#include "aic/svm/anytime.hpp"

namespace aic::svm {

struct GeneratorParams {
  std::size_t classes = 6;
  std::size_t features = 140;
  std::size_t per_class = 100;
  double separation = 10.0;
  // Per-feature informativeness decays geometrically with the feature index,
  // so a few features carry most of the class signal.
  double informative_decay = 0.97;
  std::uint64_t seed = 1;

  void validate() const {
    if (classes < 2) throw Error("dataset needs at least 2 classes");
    if (features < 1) throw Error("dataset needs at least 1 feature");
    if (per_class < 1) throw Error("dataset needs at least 1 sample per class");
    if (!(separation >= 0.0)) throw Error("separation must be non-negative");
    if (!(informative_decay > 0.0 && informative_decay <= 1.0))
      throw Error("informative decay must be in (0, 1]");
  }
};

struct Dataset {
  std::size_t classes = 0;
  std::size_t features = 0;
  std::vector<double> x;  // size() x features, row-major
  std::vector<std::size_t> labels;
  GeneratorParams params;

  std::size_t size() const noexcept { return labels.size(); }
  std::span<const double> sample(std::size_t i) const {
    return std::span<const double>(x).subspan(i * features, features);
  }
  std::size_t label(std::size_t i) const { return labels[i]; }

  void push_back(std::span<const double> v, std::size_t label) {
    x.insert(x.end(), v.begin(), v.end());
    labels.push_back(label);
  }

  void validate() const {
    if (x.size() != labels.size() * features) throw Error("dataset vectors have the wrong length");
    std::vector<std::size_t> per(classes, 0);
    for (auto l : labels) {
      if (l >= classes) throw Error("dataset label out of range");
      ++per[l];
    }
    for (auto c : per)
      if (c == 0) throw Error("dataset has a class without samples");
  }
};

// Gaussian class clusters with unit-variance noise. Class means are mutually
// orthogonal directions (Gram-Schmidt over decay-weighted random vectors)
// scaled so every pair of means is exactly `separation` apart, then centred.
class DatasetGenerator {
 public:
  explicit DatasetGenerator(GeneratorParams params) : params_(params), rng_(params.seed) {
    params_.validate();
    const std::size_t c = params_.classes, n = params_.features;
    means_.assign(c * n, 0.0);
    Rng mean_rng(derive_seed(params_.seed, 0x6d65616e));
    std::vector<double> weight(n);
    for (std::size_t j = 0; j < n; ++j) weight[j] = std::pow(params_.informative_decay, double(j));

    for (std::size_t h = 0; h < c; ++h) {
      std::span<double> m(means_.data() + h * n, n);
      for (std::size_t j = 0; j < n; ++j) m[j] = weight[j] * mean_rng.normal();
      if (h < n) {
        for (std::size_t g = 0; g < h; ++g) {
          std::span<const double> prev(means_.data() + g * n, n);
          const double dot = std::inner_product(m.begin(), m.end(), prev.begin(), 0.0);
          for (std::size_t j = 0; j < n; ++j) m[j] -= dot * prev[j];
        }
      }
      const double norm = std::sqrt(std::inner_product(m.begin(), m.end(), m.begin(), 0.0));
      for (auto& v : m) v /= norm;
    }
    const double scale = params_.separation / std::sqrt(2.0);
    for (std::size_t j = 0; j < n; ++j) {
      double centre = 0.0;
      for (std::size_t h = 0; h < c; ++h) centre += means_[h * n + j];
      centre /= double(c);
      for (std::size_t h = 0; h < c; ++h) means_[h * n + j] = scale * (means_[h * n + j] - centre);
    }
  }

  const GeneratorParams& params() const noexcept { return params_; }
  std::span<const double> mean(std::size_t h) const {
    return std::span<const double>(means_).subspan(h * params_.features, params_.features);
  }

  void draw(std::size_t label, std::span<double> out) { draw(label, out, rng_); }

  void draw(std::size_t label, std::span<double> out, Rng& rng) const {
    if (label >= params_.classes) throw Error("label out of range");
    if (out.size() != params_.features) throw Error("sample buffer has the wrong length");
    const auto m = mean(label);
    for (std::size_t j = 0; j < params_.features; ++j) out[j] = m[j] + rng.normal();
  }

  // `per_class` samples of every class, interleaved by class.
  Dataset generate(std::size_t per_class) {
    Dataset d;
    d.classes = params_.classes;
    d.features = params_.features;
    d.params = params_;
    d.params.per_class = per_class;
    std::vector<double> v(params_.features);
    for (std::size_t i = 0; i < per_class; ++i)
      for (std::size_t h = 0; h < params_.classes; ++h) {
        draw(h, v);
        d.push_back(v, h);
      }
    return d;
  }

 private:
  GeneratorParams params_;
  Rng rng_;
  std::vector<double> means_;
};

inline Dataset gen_dataset(std::size_t classes, std::size_t features, std::size_t per_class,
                           double separation, std::uint64_t seed) {
  GeneratorParams p;
  p.classes = classes;
  p.features = features;
  p.per_class = per_class;
  p.separation = separation;
  p.seed = seed;
  return DatasetGenerator(p).generate(per_class);
}

inline Dataset gen_dataset(const GeneratorParams& p) { return DatasetGenerator(p).generate(p.per_class); }

// Seeded shuffle, then the first (1 - holdout_fraction) go to training.
inline std::pair<Dataset, Dataset> split_holdout(const Dataset& d, double holdout_fraction,
                                                 std::uint64_t seed) {
  if (!(holdout_fraction > 0.0 && holdout_fraction < 1.0))
    throw Error("holdout fraction must be in (0, 1)");
  std::vector<std::size_t> idx(d.size());
  std::iota(idx.begin(), idx.end(), std::size_t{0});
  Rng rng(seed);
  rng.shuffle(idx.begin(), idx.end());
  const auto n_train = static_cast<std::size_t>(std::round(double(d.size()) * (1.0 - holdout_fraction)));
  Dataset train, hold;
  for (auto* part : {&train, &hold}) {
    part->classes = d.classes;
    part->features = d.features;
    part->params = d.params;
  }
  for (std::size_t k = 0; k < idx.size(); ++k)
    (k < n_train ? train : hold).push_back(d.sample(idx[k]), d.label(idx[k]));
  return {std::move(train), std::move(hold)};
}

struct TrainConfig {
  double lambda = 0.1;
  std::size_t epochs = 30;
  // Step size 1 / (lambda * (t + t0)).
  double t0 = 0.0;
  bool fit_bias = false;
  // Allowed relative growth of the objective from one epoch to the next.
  double divergence_tolerance = 0.25;
  std::uint64_t seed = 1;

  void validate() const {
    if (!(lambda > 0.0)) throw Error("regularization lambda must be positive");
    if (epochs < 1) throw Error("need at least one epoch");
    if (t0 < 0.0) throw Error("t0 must be non-negative");
  }
};

struct LinearOvr {
  std::size_t classes = 0;
  std::size_t features = 0;
  std::vector<double> weights;  // classes x features
  std::vector<double> biases;
  // objective[h][e]: regularized hinge objective of class h after epoch e.
  std::vector<std::vector<double>> objective;
};

// lambda/2 |w|^2 + mean hinge loss of "class h vs rest".
inline double ovr_objective(const Dataset& d, std::span<const double> w, double b,
                            std::size_t h, double lambda) {
  double hinge = 0.0;
  for (std::size_t i = 0; i < d.size(); ++i) {
    const double y = d.label(i) == h ? 1.0 : -1.0;
    const auto x = d.sample(i);
    const double s = std::inner_product(w.begin(), w.end(), x.begin(), b);
    hinge += std::max(0.0, 1.0 - y * s);
  }
  const double norm2 = std::inner_product(w.begin(), w.end(), w.begin(), 0.0);
  return 0.5 * lambda * norm2 + hinge / double(d.size());
}

// One binary hinge-loss problem per class, solved with Pegasos-style
// stochastic subgradient steps and the 1/sqrt(lambda) ball projection.
// Each epoch reports the average of its iterates.
inline LinearOvr train_ovr(const Dataset& d, const TrainConfig& cfg) {
  d.validate();
  cfg.validate();
  const std::size_t n = d.features;
  LinearOvr model;
  model.classes = d.classes;
  model.features = n;
  model.weights.assign(d.classes * n, 0.0);
  model.biases.assign(d.classes, 0.0);
  model.objective.resize(d.classes);

  std::vector<std::size_t> idx(d.size());
  std::vector<double> w(n), avg(n);
  const double radius = 1.0 / std::sqrt(cfg.lambda);
  for (std::size_t h = 0; h < d.classes; ++h) {
    std::span<double> out(model.weights.data() + h * n, n);
    std::fill(w.begin(), w.end(), 0.0);
    double b = 0.0;
    Rng rng(derive_seed(cfg.seed, h));
    double t = cfg.t0;
    double previous = ovr_objective(d, w, b, h, cfg.lambda);
    for (std::size_t e = 0; e < cfg.epochs; ++e) {
      std::iota(idx.begin(), idx.end(), std::size_t{0});
      rng.shuffle(idx.begin(), idx.end());
      std::fill(avg.begin(), avg.end(), 0.0);
      double avg_b = 0.0;
      for (auto i : idx) {
        t += 1.0;
        const double eta = 1.0 / (cfg.lambda * t);
        const double y = d.label(i) == h ? 1.0 : -1.0;
        const auto x = d.sample(i);
        const double s = std::inner_product(w.begin(), w.end(), x.begin(), b);
        const double shrink = 1.0 - eta * cfg.lambda;
        for (auto& v : w) v *= shrink;
        if (y * s < 1.0) {
          for (std::size_t j = 0; j < n; ++j) w[j] += eta * y * x[j];
          if (cfg.fit_bias) b += eta * y * cfg.lambda;
        }
        const double norm = std::sqrt(std::inner_product(w.begin(), w.end(), w.begin(), 0.0));
        if (norm > radius)
          for (auto& v : w) v *= radius / norm;
        for (std::size_t j = 0; j < n; ++j) avg[j] += w[j];
        avg_b += b;
      }
      // The epoch's answer is the mean of its iterates.
      const double k = double(idx.size());
      for (std::size_t j = 0; j < n; ++j) out[j] = avg[j] / k;
      model.biases[h] = avg_b / k;
      const double obj = ovr_objective(d, out, model.biases[h], h, cfg.lambda);
      model.objective[h].push_back(obj);
      if (e > 0 && obj > previous * (1.0 + cfg.divergence_tolerance))
        throw DivergenceError(fmt::format(
            "class {} objective rose from {:.6g} to {:.6g} in epoch {}", h, previous, obj, e));
      previous = obj;
    }
  }
  return model;
}

// Features by descending sum over classes of |coefficient|; ties keep index order.
inline std::vector<std::size_t> order_features(std::span<const double> weights,
                                               std::size_t classes, std::size_t features) {
  if (weights.size() != classes * features) throw Error("weight matrix has the wrong size");
  std::vector<double> importance(features, 0.0);
  for (std::size_t h = 0; h < classes; ++h)
    for (std::size_t j = 0; j < features; ++j) importance[j] += std::abs(weights[h * features + j]);
  std::vector<std::size_t> order(features);
  std::iota(order.begin(), order.end(), std::size_t{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](std::size_t a, std::size_t b) { return importance[a] > importance[b]; });
  return order;
}

inline std::vector<std::size_t> order_features(const LinearOvr& m) {
  return order_features(m.weights, m.classes, m.features);
}

enum class CostKind { uniform, profile, heavy_tail };

struct CostModel {
  CostKind kind = CostKind::uniform;
  double base_uj = 90.0;             // uniform value, or heavy-tail median
  std::vector<double> profile;       // profile mode
  std::uint64_t seed = 1;            // heavy-tail mode

  static CostModel uniform(double c) { return {CostKind::uniform, c, {}, 1}; }
  static CostModel from_profile(std::vector<double> p) { return {CostKind::profile, 0.0, std::move(p), 1}; }
  static CostModel heavy_tail(std::uint64_t seed, double median = 90.0) {
    return {CostKind::heavy_tail, median, {}, seed};
  }
};

// Per-feature energy cost in microjoules. Heavy-tail costs are log-normal
// (sigma 0.75) around the median, so a few features are much dearer.
inline std::vector<double> assign_costs(std::size_t n, const CostModel& m) {
  std::vector<double> out;
  switch (m.kind) {
    case CostKind::uniform:
      if (m.base_uj < 0.0) throw Error("feature cost must be non-negative");
      out.assign(n, m.base_uj);
      break;
    case CostKind::profile:
      if (m.profile.size() != n)
        throw Error(fmt::format("cost profile has {} entries, expected {}", m.profile.size(), n));
      for (double c : m.profile)
        if (!(c >= 0.0)) throw Error("feature cost must be non-negative");
      out = m.profile;
      break;
    case CostKind::heavy_tail: {
      if (!(m.base_uj > 0.0)) throw Error("heavy-tail median must be positive");
      Rng rng(m.seed);
      out.reserve(n);
      for (std::size_t j = 0; j < n; ++j) out.push_back(m.base_uj * std::exp(0.75 * rng.normal()));
      break;
    }
  }
  return out;
}

inline AnytimeModel make_model(const LinearOvr& ovr, std::vector<std::size_t> order,
                               std::vector<double> costs) {
  AnytimeModel m;
  m.classes = ovr.classes;
  m.features = ovr.features;
  m.weights = ovr.weights;
  m.biases = ovr.biases;
  m.order = std::move(order);
  m.feature_cost = std::move(costs);
  m.validate_structure();
  return m;
}

// Streams samples and counts, for every p, how many keep their full label.
class LutAccumulator {
 public:
  explicit LutAccumulator(const AnytimeModel& model)
      : model_(&model), coherent_(model.features + 1, 0) {
    model.validate_structure();
  }

  void add(std::span<const double> x) {
    const auto& m = *model_;
    labels_.resize(m.features + 1);
    auto ps = init_partial(m);
    labels_[0] = classify(ps).label;
    for (std::size_t p = 1; p <= m.features; ++p) labels_[p] = classify(advance(ps, m, x)).label;
    for (std::size_t p = 0; p <= m.features; ++p)
      if (labels_[p] == labels_[m.features]) ++coherent_[p];
    ++count_;
  }

  std::uint64_t count() const noexcept { return count_; }
  const std::vector<std::uint64_t>& coherent_counts() const noexcept { return coherent_; }

  std::vector<double> lut() const {
    if (count_ == 0) throw Error("accuracy table needs a non-empty holdout set");
    std::vector<double> out(coherent_.size());
    for (std::size_t p = 0; p < out.size(); ++p) out[p] = double(coherent_[p]) / double(count_);
    out.back() = 1.0;
    return out;
  }

 private:
  const AnytimeModel* model_;
  std::vector<std::uint64_t> coherent_;
  std::vector<std::size_t> labels_;
  std::uint64_t count_ = 0;
};

// Empirical coherence of the p-feature label with the full label, p = 0..n.
inline std::vector<double> build_lut(const AnytimeModel& model, const Dataset& holdout) {
  if (holdout.size() == 0) throw Error("accuracy table needs a non-empty holdout set");
  if (holdout.features != model.features) throw Error("holdout feature count mismatch");
  LutAccumulator acc(model);
  for (std::size_t i = 0; i < holdout.size(); ++i) acc.add(holdout.sample(i));
  return acc.lut();
}

inline double accuracy(const AnytimeModel& model, const Dataset& d) {
  std::size_t ok = 0;
  for (std::size_t i = 0; i < d.size(); ++i)
    if (classify_full(model, d.sample(i)).label == d.label(i)) ++ok;
  return d.size() ? double(ok) / double(d.size()) : 0.0;
}

}  // namespace aic::svm
