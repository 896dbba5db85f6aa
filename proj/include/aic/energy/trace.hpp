#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <limits>
#include <ostream>
#include <sstream>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "aic/error.hpp"
#include "aic/rng.hpp"

namespace aic {

struct TraceSample {
  double t_s = 0.0;
  double power_uw = 0.0;

  friend bool operator==(const TraceSample&, const TraceSample&) = default;
};

// Harvested power over time, zero-order held between samples. The trace
// covers [front().t_s, back().t_s].
class EnergyTrace {
 public:
  EnergyTrace(std::string name, std::vector<TraceSample> samples)
      : name_(std::move(name)), samples_(std::move(samples)) {
    if (samples_.size() < 2) throw Error("energy trace needs at least 2 samples");
    for (std::size_t i = 0; i < samples_.size(); ++i) {
      const auto& s = samples_[i];
      if (!std::isfinite(s.t_s) || !std::isfinite(s.power_uw))
        throw Error(fmt::format("trace sample {} is not finite", i));
      if (s.power_uw < 0.0) throw Error(fmt::format("trace sample {} has negative power", i));
      if (i > 0 && !(s.t_s > samples_[i - 1].t_s))
        throw Error(fmt::format("trace timestamps not strictly increasing at sample {}", i));
    }
  }

  const std::string& name() const noexcept { return name_; }
  const std::vector<TraceSample>& samples() const noexcept { return samples_; }
  std::size_t size() const noexcept { return samples_.size(); }
  double start() const noexcept { return samples_.front().t_s; }
  double end() const noexcept { return samples_.back().t_s; }
  double duration() const noexcept { return end() - start(); }

  // Power held from the latest sample at or before t.
  double power_at(double t) const noexcept {
    auto it = std::upper_bound(samples_.begin(), samples_.end(), t,
                               [](double v, const TraceSample& s) { return v < s.t_s; });
    if (it == samples_.begin()) return samples_.front().power_uw;
    return std::prev(it)->power_uw;
  }

  // Exact integral of the held power over [a, b], in microjoules.
  double energy_between(double a, double b) const noexcept {
    double total = 0.0;
    for (std::size_t i = 0; i + 1 < samples_.size(); ++i) {
      const double lo = std::max(a, samples_[i].t_s);
      const double hi = std::min(b, samples_[i + 1].t_s);
      if (hi > lo) total += samples_[i].power_uw * (hi - lo);
    }
    return total;
  }

  // Sequential lookups with non-decreasing time; amortised O(1).
  class Cursor {
   public:
    explicit Cursor(const EnergyTrace& trace) : trace_(&trace) {}

    double power_at(double t) noexcept {
      const auto& s = trace_->samples_;
      while (index_ + 1 < s.size() && s[index_ + 1].t_s <= t) ++index_;
      return s[index_].power_uw;
    }

    // Time of the next sample boundary strictly after t (or +inf).
    double next_change(double t) noexcept {
      const auto& s = trace_->samples_;
      power_at(t);
      return index_ + 1 < s.size() ? s[index_ + 1].t_s : std::numeric_limits<double>::infinity();
    }

   private:
    const EnergyTrace* trace_;
    std::size_t index_ = 0;
  };

 private:
  std::string name_;
  std::vector<TraceSample> samples_;
};

// Input files either carry power directly or a source voltage that is
// converted with P = V^2 / R_load.
enum class TraceFormat { power_csv, voltage_csv };

namespace detail {

inline std::string_view trim(std::string_view s) {
  while (!s.empty() && (s.front() == ' ' || s.front() == '\t')) s.remove_prefix(1);
  while (!s.empty() && (s.back() == ' ' || s.back() == '\t' || s.back() == '\r')) s.remove_suffix(1);
  return s;
}

inline bool parse_double(std::string_view s, double& out) {
  s = trim(s);
  if (s.empty()) return false;
  const auto* end = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(s.data(), end, out);
  return ec == std::errc() && ptr == end;
}

}  // namespace detail

inline EnergyTrace read_trace(std::istream& in, std::string name,
                              TraceFormat format = TraceFormat::power_csv,
                              double r_load_ohm = 0.0) {
  if (format == TraceFormat::voltage_csv && !(r_load_ohm > 0.0))
    throw Error("voltage traces need a positive load resistance");
  const std::string_view expected_header =
      format == TraceFormat::power_csv ? "t_s,power_uw" : "t_s,voltage_v";

  std::vector<TraceSample> samples;
  std::string line;
  std::size_t lineno = 0;
  bool header_seen = false;
  while (std::getline(in, line)) {
    ++lineno;
    const auto body = detail::trim(line);
    if (body.empty() || body.front() == '#') continue;
    if (!header_seen) {
      header_seen = true;
      if (body == expected_header) continue;
      if (body.find_first_not_of("0123456789+-.eE, \t") != std::string_view::npos)
        throw ParseError(fmt::format("unexpected trace header '{}', want '{}'", body,
                                     expected_header),
                         lineno);
    }
    const auto comma = body.find(',');
    double t = 0.0, v = 0.0;
    if (comma == std::string_view::npos || !detail::parse_double(body.substr(0, comma), t) ||
        !detail::parse_double(body.substr(comma + 1), v))
      throw ParseError("malformed trace row '" + std::string(body) + "'", lineno);
    if (format == TraceFormat::voltage_csv) v = v * v / r_load_ohm * 1e6;
    if (v < 0.0) throw ParseError("negative power", lineno);
    if (!samples.empty() && !(t > samples.back().t_s))
      throw ParseError("timestamps not strictly increasing", lineno);
    samples.push_back({t, v});
  }
  if (samples.empty()) throw Error("empty energy trace");
  return EnergyTrace(std::move(name), std::move(samples));
}

inline EnergyTrace load_trace(const std::filesystem::path& path,
                              TraceFormat format = TraceFormat::power_csv,
                              double r_load_ohm = 0.0, std::string name = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open trace file " + path.string());
  if (name.empty()) name = path.stem().string();
  return read_trace(in, std::move(name), format, r_load_ohm);
}

inline void write_trace(std::ostream& out, const EnergyTrace& trace) {
  out << "t_s,power_uw\n";
  for (const auto& s : trace.samples()) out << fmt::format("{},{}\n", s.t_s, s.power_uw);
}

inline void save_trace(const std::filesystem::path& path, const EnergyTrace& trace) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write trace file " + path.string());
  write_trace(out, trace);
}

enum class SynthKind { constant, square_wave, random_walk };

struct SynthParams {
  double sample_period_s = 0.1;
  // constant
  double level_uw = 100.0;
  // square-wave
  double high_uw = 200.0;
  double low_uw = 0.0;
  double period_s = 2.0;
  double duty = 0.5;
  // random-walk: mean-reverting walk clamped to [min, max]
  double walk_mean_uw = 100.0;
  double walk_step_uw = 10.0;
  double walk_reversion = 0.05;
  double walk_min_uw = 0.0;
  double walk_max_uw = std::numeric_limits<double>::infinity();
};

inline EnergyTrace synth_trace(SynthKind kind, const SynthParams& p, std::uint64_t seed,
                               double duration_s, std::string name = {}) {
  if (!(duration_s > 0.0)) throw Error("synthetic trace duration must be positive");
  if (!(p.sample_period_s > 0.0)) throw Error("sample period must be positive");
  switch (kind) {
    case SynthKind::constant:
      if (p.level_uw < 0.0) throw Error("negative power level");
      break;
    case SynthKind::square_wave:
      if (p.high_uw < 0.0 || p.low_uw < 0.0) throw Error("negative power level");
      if (!(p.period_s > 0.0)) throw Error("square-wave period must be positive");
      if (!(p.duty > 0.0 && p.duty < 1.0)) throw Error("square-wave duty must be in (0, 1)");
      break;
    case SynthKind::random_walk:
      if (p.walk_mean_uw < 0.0 || p.walk_step_uw < 0.0 || p.walk_min_uw < 0.0)
        throw Error("negative random-walk parameter");
      if (p.walk_max_uw < p.walk_min_uw) throw Error("random-walk max below min");
      if (p.walk_reversion < 0.0 || p.walk_reversion > 1.0)
        throw Error("random-walk reversion must be in [0, 1]");
      break;
  }

  const auto count = static_cast<std::size_t>(std::floor(duration_s / p.sample_period_s + 1e-9)) + 1;
  std::vector<TraceSample> samples;
  samples.reserve(std::max<std::size_t>(count, 2));
  Rng rng(seed);
  double walk = std::clamp(p.walk_mean_uw, p.walk_min_uw, p.walk_max_uw);
  for (std::size_t i = 0; i < std::max<std::size_t>(count, 2); ++i) {
    const double t = static_cast<double>(i) * p.sample_period_s;
    double v = 0.0;
    switch (kind) {
      case SynthKind::constant:
        v = p.level_uw;
        break;
      case SynthKind::square_wave: {
        const double phase = std::fmod(t, p.period_s) / p.period_s;
        v = phase + 1e-12 < p.duty ? p.high_uw : p.low_uw;
        break;
      }
      case SynthKind::random_walk:
        if (i > 0) {
          walk += p.walk_reversion * (p.walk_mean_uw - walk) + p.walk_step_uw * rng.normal();
          walk = std::clamp(walk, p.walk_min_uw, p.walk_max_uw);
        }
        v = walk;
        break;
    }
    samples.push_back({t, v});
  }
  if (name.empty()) {
    constexpr const char* names[] = {"constant", "square-wave", "random-walk"};
    name = names[static_cast<int>(kind)];
  }
  return EnergyTrace(std::move(name), std::move(samples));
}

// Synthetic stand-ins for the five reference harvesting traces. Qualitative
// shape only: SOM is the most stable and richest, RF the most variable and
// poorest; RF and SIR deliver about the same total energy.
inline std::vector<std::string> named_trace_kinds() { return {"RF", "SOM", "SIM", "SOR", "SIR"}; }

inline EnergyTrace named_trace(std::string_view name, std::uint64_t seed, double duration_s) {
  SynthParams p;
  p.sample_period_s = 1.0;
  if (name == "SOM") {
    p.walk_mean_uw = 420.0, p.walk_step_uw = 8.0, p.walk_reversion = 0.05;
  } else if (name == "SOR") {
    p.walk_mean_uw = 300.0, p.walk_step_uw = 25.0, p.walk_reversion = 0.05;
  } else if (name == "SIM") {
    p.walk_mean_uw = 180.0, p.walk_step_uw = 30.0, p.walk_reversion = 0.08;
  } else if (name == "SIR") {
    p.walk_mean_uw = 120.0, p.walk_step_uw = 4.0, p.walk_reversion = 0.05;
  } else if (name == "RF") {
    p.walk_mean_uw = 100.0, p.walk_step_uw = 90.0, p.walk_reversion = 0.3;
  } else {
    throw Error("unknown named trace '" + std::string(name) + "'");
  }
  p.walk_min_uw = 0.0;
  return synth_trace(SynthKind::random_walk, p, seed, duration_s, std::string(name));
}

inline SynthKind parse_synth_kind(std::string_view s) {
  if (s == "constant") return SynthKind::constant;
  if (s == "square-wave") return SynthKind::square_wave;
  if (s == "random-walk") return SynthKind::random_walk;
  throw Error("unknown trace kind '" + std::string(s) + "'");
}

}  // namespace aic
