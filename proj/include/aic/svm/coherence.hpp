#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <future>
#include <numbers>
#include <optional>
#include <span>
#include <vector>

#include <Eigen/Dense>
#include <boost/math/quadrature/gauss_kronrod.hpp>

#include "aic/error.hpp"
#include "aic/rng.hpp"

namespace aic::svm {

// Distribution of one feature's coefficient and of its input value, both
// normal and independent of each other.
struct FeatureStats {
  double coef_mean = 0.0;
  double coef_sd = 1.0;
  double input_mean = 0.0;
  double input_sd = 1.0;
};

// Statistics of the decision hyperplane(s), listed in evaluation order: the
// first p entries are the features used after p steps.
//
// With two classes there is a single decision hyperplane and the label is
// "class 0 iff S >= 0". With c > 2 classes each class draws its own
// hyperplane from the same statistics.
struct CoefficientStats {
  std::vector<FeatureStats> features;
  // Optional n x n coefficient covariance; replaces the per-feature coef_sd.
  std::optional<Eigen::MatrixXd> coef_covariance;

  static CoefficientStats iid(std::size_t n, double coef_sd = 1.0, double input_sd = 1.0) {
    CoefficientStats s;
    s.features.assign(n, FeatureStats{0.0, coef_sd, 0.0, input_sd});
    return s;
  }

  std::size_t size() const noexcept { return features.size(); }

  CoefficientStats permuted(std::span<const std::size_t> order) const {
    CoefficientStats out;
    out.features.reserve(order.size());
    for (auto j : order) out.features.push_back(features.at(j));
    if (coef_covariance) {
      const auto n = static_cast<Eigen::Index>(order.size());
      Eigen::MatrixXd m(n, n);
      for (Eigen::Index a = 0; a < n; ++a)
        for (Eigen::Index b = 0; b < n; ++b)
          m(a, b) = (*coef_covariance)(static_cast<Eigen::Index>(order[a]),
                                       static_cast<Eigen::Index>(order[b]));
      out.coef_covariance = std::move(m);
    }
    return out;
  }

  void validate() const {
    if (features.empty()) throw Error("coefficient statistics are empty");
    for (const auto& f : features) {
      if (!(f.input_sd > 0.0)) throw Error("input standard deviations must be positive");
      if (!coef_covariance && !(f.coef_sd > 0.0))
        throw Error("coefficient standard deviations must be positive");
    }
    if (coef_covariance) {
      const auto& c = *coef_covariance;
      const auto n = static_cast<Eigen::Index>(features.size());
      if (c.rows() != n || c.cols() != n) throw Error("covariance must be n x n");
      if (!c.isApprox(c.transpose(), 1e-12)) throw Error("covariance must be symmetric");
      Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(c);
      const double tol = 1e-10 * std::max(1.0, es.eigenvalues().cwiseAbs().maxCoeff());
      if (es.eigenvalues().minCoeff() < -tol)
        throw Error("covariance is not positive semidefinite");
    }
  }
};

namespace detail {

struct Moments {
  double mean = 0.0;
  double var = 0.0;
};

// First two moments of sum_j c_j x_j over features [first, last).
inline Moments product_sum_moments(const CoefficientStats& s, std::size_t first,
                                   std::size_t last) {
  Moments m;
  for (std::size_t j = first; j < last; ++j) {
    const auto& f = s.features[j];
    const double mc = f.coef_mean, vc = f.coef_sd * f.coef_sd;
    const double mx = f.input_mean, vx = f.input_sd * f.input_sd;
    m.mean += mc * mx;
    m.var += vc * vx + mc * mc * vx + mx * mx * vc;
  }
  return m;
}

inline double normal_cdf(double z) { return 0.5 * std::erfc(-z / std::numbers::sqrt2); }

inline double normal_pdf(double z) {
  return std::exp(-0.5 * z * z) / std::sqrt(2.0 * std::numbers::pi);
}

}  // namespace detail

// Probability that the two-class label after p of n features matches the
// label after all n, for independent normal coefficients and inputs.
//
// With S the partial sum and R the remaining contribution, the labels agree
// when S and S + R fall on the same side of zero:
//   P = int_{k>0} f_S(k) (1 - F_R(-k)) dk + int_{k<0} f_S(k) F_R(-k) dk,
// which reduces to 2 int_0^inf f_S(k) F_R(k) dk for symmetric zero-mean
// statistics. f_S and F_R use normal laws matched to the exact first two
// moments of the product sums (products of normals are not normal).
inline double estimate_coherence_analytic(const CoefficientStats& stats, std::size_t p,
                                          std::size_t n) {
  if (stats.coef_covariance)
    throw Error("analytic coherence needs independent coefficients; use Monte Carlo");
  if (n == 0 || n > stats.size()) throw Error("feature count out of range");
  if (p > n) throw Error("p out of range");
  stats.validate();

  const auto s = detail::product_sum_moments(stats, 0, p);
  const auto r = detail::product_sum_moments(stats, p, n);
  if (p == n) return 1.0;

  const double sd_r = std::sqrt(r.var);
  // P(R >= -k) and P(R < -k); R is a point mass when its variance vanishes.
  auto r_at_least = [&](double k) {
    if (sd_r <= 0.0) return r.mean >= -k ? 1.0 : 0.0;
    return 1.0 - detail::normal_cdf((-k - r.mean) / sd_r);
  };

  if (s.var <= 0.0) {
    // S is the constant s.mean (p = 0 gives S = 0, labelled class 0).
    return s.mean >= 0.0 ? r_at_least(s.mean) : 1.0 - r_at_least(s.mean);
  }

  const double sd_s = std::sqrt(s.var);
  auto f_s = [&](double k) { return detail::normal_pdf((k - s.mean) / sd_s) / sd_s; };
  const double lo = s.mean - 10.0 * sd_s;
  const double hi = s.mean + 10.0 * sd_s;

  using Quad = boost::math::quadrature::gauss_kronrod<double, 31>;
  constexpr unsigned max_depth = 15;
  constexpr double tol = 1e-6;
  double total = 0.0;
  if (hi > 0.0) {
    total += Quad::integrate([&](double k) { return f_s(k) * r_at_least(k); },
                             std::max(0.0, lo), hi, max_depth, tol);
  }
  if (lo < 0.0) {
    total += Quad::integrate([&](double k) { return f_s(k) * (1.0 - r_at_least(k)); }, lo,
                             std::min(0.0, hi), max_depth, tol);
  }
  return std::clamp(total, 0.0, 1.0);
}

struct McEstimate {
  double probability = 0.0;
  double std_error = 0.0;
  std::uint64_t draws = 0;
  std::uint64_t coherent = 0;
};

namespace detail {

inline McEstimate make_estimate(std::uint64_t coherent, std::uint64_t draws) {
  McEstimate e;
  e.draws = draws;
  e.coherent = coherent;
  e.probability = draws ? static_cast<double>(coherent) / static_cast<double>(draws) : 0.0;
  e.std_error = draws ? std::sqrt(e.probability * (1.0 - e.probability) / static_cast<double>(draws))
                      : 0.0;
  return e;
}

// Coherent-draw counts for every p in 0..n over one shard of draws.
inline std::vector<std::uint64_t> mc_shard(const CoefficientStats& stats, std::size_t n,
                                           std::size_t classes, std::uint64_t draws,
                                           std::uint64_t seed,
                                           const std::optional<Eigen::MatrixXd>& factor) {
  std::vector<std::uint64_t> counts(n + 1, 0);
  Rng rng(seed);
  const std::size_t planes = classes == 2 ? 1 : classes;
  std::vector<double> coef(planes * n), x(n), prefix(planes * (n + 1));
  std::vector<std::size_t> label(n + 1);
  Eigen::VectorXd z(static_cast<Eigen::Index>(n));

  for (std::uint64_t d = 0; d < draws; ++d) {
    for (std::size_t h = 0; h < planes; ++h) {
      if (factor) {
        for (std::size_t j = 0; j < n; ++j) z[static_cast<Eigen::Index>(j)] = rng.normal();
        const Eigen::VectorXd c = (*factor) * z;
        for (std::size_t j = 0; j < n; ++j)
          coef[h * n + j] = stats.features[j].coef_mean + c[static_cast<Eigen::Index>(j)];
      } else {
        for (std::size_t j = 0; j < n; ++j)
          coef[h * n + j] = rng.normal(stats.features[j].coef_mean, stats.features[j].coef_sd);
      }
    }
    for (std::size_t j = 0; j < n; ++j)
      x[j] = rng.normal(stats.features[j].input_mean, stats.features[j].input_sd);

    for (std::size_t h = 0; h < planes; ++h) {
      double acc = 0.0;
      prefix[h * (n + 1)] = 0.0;
      for (std::size_t j = 0; j < n; ++j) {
        acc += coef[h * n + j] * x[j];
        prefix[h * (n + 1) + j + 1] = acc;
      }
    }
    for (std::size_t p = 0; p <= n; ++p) {
      if (planes == 1) {
        label[p] = prefix[p] >= 0.0 ? 0 : 1;
      } else {
        std::size_t best = 0;
        for (std::size_t h = 1; h < planes; ++h)
          if (prefix[h * (n + 1) + p] > prefix[best * (n + 1) + p]) best = h;
        label[p] = best;
      }
    }
    for (std::size_t p = 0; p <= n; ++p)
      if (label[p] == label[n]) ++counts[p];
  }
  return counts;
}

}  // namespace detail

struct McConfig {
  std::size_t classes = 2;
  std::uint64_t draws = 100000;
  std::uint64_t seed = 1;
  unsigned shards = 4;  // each shard has its own derived seed; result is independent of threads
};

// Monte Carlo coherence for every p in 0..n. Shards run concurrently and
// their counts are merged, so the estimate depends only on (seed, shards).
inline std::vector<McEstimate> coherence_curve_mc(const CoefficientStats& stats, std::size_t n,
                                                  const McConfig& cfg) {
  if (cfg.draws < 1) throw Error("Monte Carlo needs at least one draw");
  if (cfg.classes < 2) throw Error("need at least 2 classes");
  if (n == 0 || n > stats.size()) throw Error("feature count out of range");
  stats.validate();

  std::optional<Eigen::MatrixXd> factor;
  if (stats.coef_covariance) {
    const auto ni = static_cast<Eigen::Index>(n);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(stats.coef_covariance->topLeftCorner(ni, ni));
    const Eigen::VectorXd root = es.eigenvalues().cwiseMax(0.0).cwiseSqrt();
    factor = es.eigenvectors() * root.asDiagonal();
  }

  const unsigned shards = std::max(1u, cfg.shards);
  std::vector<std::future<std::vector<std::uint64_t>>> parts;
  for (unsigned s = 0; s < shards; ++s) {
    const std::uint64_t share = cfg.draws / shards + (s < cfg.draws % shards ? 1 : 0);
    parts.push_back(std::async(std::launch::async, detail::mc_shard, std::cref(stats), n,
                               cfg.classes, share, derive_seed(cfg.seed, s), std::cref(factor)));
  }
  std::vector<std::uint64_t> total(n + 1, 0);
  for (auto& f : parts) {
    const auto counts = f.get();
    for (std::size_t p = 0; p <= n; ++p) total[p] += counts[p];
  }
  std::vector<McEstimate> out;
  out.reserve(n + 1);
  for (std::size_t p = 0; p <= n; ++p) out.push_back(detail::make_estimate(total[p], cfg.draws));
  return out;
}

inline McEstimate estimate_coherence_mc(const CoefficientStats& stats, std::size_t p,
                                        std::size_t n, std::size_t classes, std::uint64_t draws,
                                        std::uint64_t seed) {
  if (p > n) throw Error("p out of range");
  return coherence_curve_mc(stats, n, McConfig{classes, draws, seed})[p];
}

}  // namespace aic::svm
