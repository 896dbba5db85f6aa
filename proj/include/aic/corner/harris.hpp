#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <numeric>
#include <optional>
#include <ostream>
#include <span>
#include <vector>

#include <fmt/format.h>

#include "aic/corner/image.hpp"
#include "aic/error.hpp"
#include "aic/rng.hpp"

namespace aic::corner {

struct HarrisParams {
  int window = 3;                   // gradient and structure-tensor window
  double k = 0.04;
  double threshold_fraction = 0.1;  // of the largest computed response
  int nms_radius = 3;

  void validate() const {
    if (window < 3 || window % 2 == 0) throw Error("Harris window must be odd and >= 3");
    if (!(k > 0.0 && k < 0.25)) throw Error("Harris k must be in (0, 0.25)");
    if (!(threshold_fraction > 0.0 && threshold_fraction < 1.0))
      throw Error("threshold fraction must be in (0, 1)");
    if (nms_radius < 1) throw Error("non-max radius must be >= 1");
  }
};

struct Corner {
  int x = 0;
  int y = 0;
  double response = 0.0;

  friend bool operator==(const Corner&, const Corner&) = default;
};

using CornerSet = std::vector<Corner>;

// Which loop iterations (pixels) run. A pixel runs iff its keyed uniform
// draw u(seed, pixel) >= threshold, i.e. an independent Bernoulli trial per
// pixel. Plans built for an exact iteration count put the threshold at the
// matching order statistic.
struct PerforationPlan {
  double skip_fraction = 0.0;
  double threshold = 0.0;
  std::uint64_t seed = 0;

  static PerforationPlan none() { return {}; }

  static PerforationPlan bernoulli(double skip_fraction, std::uint64_t seed) {
    if (!(skip_fraction >= 0.0 && skip_fraction < 1.0))
      throw Error("skip fraction must be in [0, 1)");
    return {skip_fraction, skip_fraction, seed};
  }

  // Exactly `executed` of `iterations` pixels run.
  static PerforationPlan with_executed(std::size_t executed, std::size_t iterations,
                                       std::uint64_t seed) {
    if (executed > iterations) throw Error("cannot execute more iterations than exist");
    PerforationPlan plan;
    plan.seed = seed;
    plan.skip_fraction = 1.0 - double(executed) / double(iterations);
    if (executed == iterations) return plan;
    if (executed == 0) {
      plan.threshold = 2.0;
      return plan;
    }
    std::vector<double> u(iterations);
    for (std::size_t i = 0; i < iterations; ++i) u[i] = unit_hash(seed, i);
    std::nth_element(u.begin(), u.begin() + std::ptrdiff_t(executed - 1), u.end(), std::greater<>());
    plan.threshold = u[executed - 1];
    return plan;
  }

  bool executes(std::size_t pixel) const noexcept {
    return threshold <= 0.0 || unit_hash(seed, pixel) >= threshold;
  }

  std::size_t executed_count(std::size_t iterations) const noexcept {
    std::size_t n = 0;
    for (std::size_t i = 0; i < iterations; ++i) n += executes(i);
    return n;
  }
};

// Pixels in the order a perforated loop with this seed would keep them:
// running the first k reproduces PerforationPlan::with_executed(k, ...).
inline std::vector<std::uint32_t> execution_order(std::size_t iterations, std::uint64_t seed) {
  std::vector<std::uint32_t> idx(iterations);
  std::iota(idx.begin(), idx.end(), 0u);
  std::vector<double> u(iterations);
  for (std::size_t i = 0; i < iterations; ++i) u[i] = unit_hash(seed, i);
  std::sort(idx.begin(), idx.end(), [&](std::uint32_t a, std::uint32_t b) {
    return u[a] > u[b] || (u[a] == u[b] && a < b);
  });
  return idx;
}

// Harris response per pixel. Gradients are 3x3 Sobel on [0,1] intensities
// with replicated borders; the structure tensor sums over a window x window
// neighbourhood.
class HarrisResponder {
 public:
  HarrisResponder(const GrayImage& img, const HarrisParams& params)
      : width_(img.width), height_(img.height), params_(params) {
    img.validate();
    params.validate();
    if (img.width < params.window || img.height < params.window)
      throw Error("image is smaller than the Harris window");
    const std::size_t n = img.size();
    ixx_.resize(n);
    iyy_.resize(n);
    ixy_.resize(n);
    auto v = [&](int x, int y) { return img.clamped(x, y) / 255.0; };
    for (int y = 0; y < height_; ++y)
      for (int x = 0; x < width_; ++x) {
        const double gx = (v(x + 1, y - 1) + 2 * v(x + 1, y) + v(x + 1, y + 1)) -
                          (v(x - 1, y - 1) + 2 * v(x - 1, y) + v(x - 1, y + 1));
        const double gy = (v(x - 1, y + 1) + 2 * v(x, y + 1) + v(x + 1, y + 1)) -
                          (v(x - 1, y - 1) + 2 * v(x, y - 1) + v(x + 1, y - 1));
        const auto i = index(x, y);
        ixx_[i] = gx * gx;
        iyy_[i] = gy * gy;
        ixy_[i] = gx * gy;
      }
  }

  int width() const noexcept { return width_; }
  int height() const noexcept { return height_; }
  std::size_t iterations() const noexcept { return ixx_.size(); }

  // One loop iteration: the corner response at a pixel.
  double response(std::size_t pixel) const {
    const int x = int(pixel % std::size_t(width_)), y = int(pixel / std::size_t(width_));
    const int half = params_.window / 2;
    double a = 0, b = 0, c = 0;
    for (int dy = -half; dy <= half; ++dy)
      for (int dx = -half; dx <= half; ++dx) {
        const auto i = index(std::clamp(x + dx, 0, width_ - 1), std::clamp(y + dy, 0, height_ - 1));
        a += ixx_[i];
        b += iyy_[i];
        c += ixy_[i];
      }
    const double tr = a + b;
    return a * b - c * c - params_.k * tr * tr;
  }

 private:
  std::size_t index(int x, int y) const { return std::size_t(y) * std::size_t(width_) + std::size_t(x); }

  int width_, height_;
  HarrisParams params_;
  std::vector<double> ixx_, iyy_, ixy_;
};

// Threshold + non-maximum suppression over the computed responses. Skipped
// pixels neither become corners nor suppress neighbours. Equal responses are
// resolved in raster order.
inline CornerSet select_corners(std::span<const double> response, std::span<const std::uint8_t> computed,
                                int width, int height, const HarrisParams& params) {
  double best = 0.0;
  for (std::size_t i = 0; i < response.size(); ++i)
    if (computed[i]) best = std::max(best, response[i]);
  CornerSet out;
  if (best <= 0.0) return out;
  const double threshold = params.threshold_fraction * best;
  const int r = params.nms_radius;
  for (int y = 0; y < height; ++y)
    for (int x = 0; x < width; ++x) {
      const std::size_t i = std::size_t(y) * std::size_t(width) + std::size_t(x);
      if (!computed[i] || response[i] <= threshold) continue;
      bool is_max = true;
      for (int qy = std::max(0, y - r); is_max && qy <= std::min(height - 1, y + r); ++qy)
        for (int qx = std::max(0, x - r); qx <= std::min(width - 1, x + r); ++qx) {
          const std::size_t q = std::size_t(qy) * std::size_t(width) + std::size_t(qx);
          if (q == i || !computed[q]) continue;
          if (response[q] > response[i] || (response[q] == response[i] && q < i)) {
            is_max = false;
            break;
          }
        }
      if (is_max) out.push_back({x, y, response[i]});
    }
  return out;
}

inline CornerSet detect_corners(const GrayImage& img, const PerforationPlan& plan,
                                const HarrisParams& params = {}) {
  HarrisResponder harris(img, params);
  const std::size_t n = harris.iterations();
  std::vector<double> response(n, 0.0);
  std::vector<std::uint8_t> computed(n, 0);
  for (std::size_t i = 0; i < n; ++i) {
    if (!plan.executes(i)) continue;
    computed[i] = 1;
    response[i] = harris.response(i);
  }
  return select_corners(response, computed, img.width, img.height, params);
}

// Same count, and every approximate corner is strictly closer to one
// reference corner than to any other, with no reference corner claimed twice.
inline bool equivalence_check(const CornerSet& reference, const CornerSet& approx) {
  if (reference.size() != approx.size()) return false;
  if (reference.empty()) return true;
  std::vector<bool> claimed(reference.size(), false);
  for (const auto& a : approx) {
    double best = std::numeric_limits<double>::infinity(), second = best;
    std::size_t best_i = 0;
    for (std::size_t i = 0; i < reference.size(); ++i) {
      const double dx = a.x - reference[i].x, dy = a.y - reference[i].y;
      const double d2 = dx * dx + dy * dy;
      if (d2 < best) {
        second = best;
        best = d2;
        best_i = i;
      } else if (d2 < second) {
        second = d2;
      }
    }
    if (!(best < second) || claimed[best_i]) return false;
    claimed[best_i] = true;
  }
  return true;
}

struct CornerCostModel {
  double per_iteration_uj = 1.0;
  double overhead_uj = 300.0;  // image load, gradients, NMS
  double output_uj = 50.0;

  void validate() const {
    if (!(per_iteration_uj > 0.0) || overhead_uj < 0.0 || output_uj < 0.0)
      throw Error("invalid corner cost model");
  }
};

inline double iteration_energy(const CornerCostModel& m) { return m.per_iteration_uj; }

// Overhead plus executed iterations; the output packet is not included.
inline double detection_energy(const CornerCostModel& m, std::size_t executed) {
  return m.overhead_uj + double(executed) * m.per_iteration_uj;
}

// Largest iteration count that still leaves room for the output. Empty when
// even the overhead and the output do not fit.
inline std::optional<PerforationPlan> choose_skip(double budget_uj, const GrayImage& img,
                                                  const CornerCostModel& m, std::uint64_t seed) {
  m.validate();
  const double fixed = m.overhead_uj + m.output_uj;
  if (budget_uj < fixed) return std::nullopt;
  const std::size_t total = img.size();
  const double room = (budget_uj - fixed) / m.per_iteration_uj;
  const std::size_t executed =
      room >= double(total) ? total : static_cast<std::size_t>(std::floor(room + 1e-9));
  return PerforationPlan::with_executed(executed, total, seed);
}

inline void write_corners_csv(std::ostream& out, const CornerSet& corners) {
  out << "x,y,response\n";
  for (const auto& c : corners) out << fmt::format("{},{},{}\n", c.x, c.y, c.response);
}

}  // namespace aic::corner
