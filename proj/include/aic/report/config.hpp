#pragma once

#include <charconv>
#include <filesystem>
#include <functional>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <utility>
#include <vector>

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>
#include <fmt/format.h>

#include "aic/corner/harris.hpp"
#include "aic/energy/harvester.hpp"
#include "aic/energy/trace.hpp"
#include "aic/error.hpp"
#include "aic/runtime/engine.hpp"
#include "aic/svm/train.hpp"

namespace aic::report {

struct TrainSettings {
  svm::GeneratorParams generator;
  svm::TrainConfig train;
  double holdout_fraction = 0.3;
  std::size_t lut_samples = 20000;  // fresh samples for the accuracy table
  std::string cost = "uniform";     // uniform | heavy-tail
  double cost_uj = 90.0;
};

struct TraceSettings {
  std::string kind = "constant";  // constant | square-wave | random-walk | RF SOM SIM SOR SIR
  double duration_s = 3600.0;
  SynthParams synth;
};

// Every tunable of a simulation, one struct per INI section.
struct SimConfig {
  runtime::RuntimeConfig runtime;
  runtime::StrategyConfig strategy;  // checkpoint and smart defaults
  double svm_overhead_uj = 200.0;
  double svm_output_uj = 50.0;
  corner::CornerCostModel corner_cost;
  corner::HarrisParams harris;
  std::vector<std::string> scenes = corner::scene_names();
  TrainSettings train;
  TraceSettings trace;
};

namespace detail {

template <class T>
T parse_value(const std::string& key, const std::string& s) {
  T v{};
  const auto* first = s.data();
  const auto* last = s.data() + s.size();
  auto [ptr, ec] = std::from_chars(first, last, v);
  if (ec != std::errc() || ptr != last)
    throw Error(fmt::format("config key '{}': cannot parse '{}'", key, s));
  return v;
}

struct Entry {
  std::string key;
  std::function<void(const std::string&)> set;
  std::function<std::string()> get;
};

template <class T>
Entry field(std::string key, T& ref) {
  Entry e;
  e.key = key;
  if constexpr (std::is_same_v<T, std::string>) {
    e.set = [&ref](const std::string& s) { ref = s; };
    e.get = [&ref] { return ref; };
  } else if constexpr (std::is_same_v<T, bool>) {
    e.set = [&ref, key](const std::string& s) {
      if (s == "true" || s == "1") ref = true;
      else if (s == "false" || s == "0") ref = false;
      else throw Error(fmt::format("config key '{}': expected true or false", key));
    };
    e.get = [&ref] { return std::string(ref ? "true" : "false"); };
  } else {
    e.set = [&ref, key](const std::string& s) { ref = parse_value<T>(key, s); };
    e.get = [&ref] { return fmt::format("{}", ref); };
  }
  return e;
}

// Optional numbers use 0 for "unset".
template <class T>
Entry optional_field(std::string key, std::optional<T>& ref) {
  Entry e;
  e.key = key;
  e.set = [&ref, key](const std::string& s) {
    const T v = parse_value<T>(key, s);
    ref = v == T{} ? std::nullopt : std::optional<T>(v);
  };
  e.get = [&ref] { return fmt::format("{}", ref.value_or(T{})); };
  return e;
}

inline std::string join(const std::vector<std::string>& v) {
  std::string out;
  for (const auto& s : v) out += (out.empty() ? "" : ",") + s;
  return out;
}

inline std::vector<std::string> split(const std::string& s) {
  std::vector<std::string> out;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ','))
    if (!item.empty()) out.push_back(item);
  return out;
}

inline std::vector<Entry> entries(SimConfig& c) {
  auto& rt = c.runtime;
  auto& st = c.strategy;
  auto& tr = c.train;
  auto& ts = c.trace;
  std::vector<Entry> e = {
      field("energy.capacitance_f", rt.cap.capacitance_f),
      field("energy.voltage_on", rt.cap.voltage_on),
      field("energy.voltage_off", rt.cap.voltage_off),
      field("energy.voltage_max", rt.cap.voltage_max),
      field("energy.initial_uj", rt.cap.energy_uj),
      field("energy.dt_s", rt.clock.dt_s),
      field("energy.efficiency", rt.clock.efficiency),
      optional_field("runtime.period_s", rt.period_s),
      field("runtime.active_power_uw", rt.active_power_uw),
      field("runtime.idle_power_uw", rt.idle_power_uw),
      field("runtime.livelock_cycles", rt.livelock_cycles),
      optional_field("runtime.max_items", rt.max_items),
      field("checkpoint.interval", st.checkpoint_interval),
      field("checkpoint.bytes", st.checkpoint_bytes),
      field("checkpoint.write_uj_per_byte", st.nvm_write_uj_per_byte),
      field("checkpoint.read_uj_per_byte", st.nvm_read_uj_per_byte),
      field("smart.accuracy_floor", st.accuracy_floor),
      field("svm.overhead_uj", c.svm_overhead_uj),
      field("svm.output_uj", c.svm_output_uj),
      field("corner.per_iteration_uj", c.corner_cost.per_iteration_uj),
      field("corner.overhead_uj", c.corner_cost.overhead_uj),
      field("corner.output_uj", c.corner_cost.output_uj),
      field("corner.window", c.harris.window),
      field("corner.k", c.harris.k),
      field("corner.threshold_fraction", c.harris.threshold_fraction),
      field("corner.nms_radius", c.harris.nms_radius),
      field("train.classes", tr.generator.classes),
      field("train.features", tr.generator.features),
      field("train.per_class", tr.generator.per_class),
      field("train.separation", tr.generator.separation),
      field("train.informative_decay", tr.generator.informative_decay),
      field("train.seed", tr.generator.seed),
      field("train.lambda", tr.train.lambda),
      field("train.epochs", tr.train.epochs),
      field("train.t0", tr.train.t0),
      field("train.divergence_tolerance", tr.train.divergence_tolerance),
      field("train.fit_bias", tr.train.fit_bias),
      field("train.holdout_fraction", tr.holdout_fraction),
      field("train.lut_samples", tr.lut_samples),
      field("train.cost", tr.cost),
      field("train.cost_uj", tr.cost_uj),
      field("trace.kind", ts.kind),
      field("trace.duration_s", ts.duration_s),
      field("trace.sample_period_s", ts.synth.sample_period_s),
      field("trace.level_uw", ts.synth.level_uw),
      field("trace.high_uw", ts.synth.high_uw),
      field("trace.low_uw", ts.synth.low_uw),
      field("trace.period_s", ts.synth.period_s),
      field("trace.duty", ts.synth.duty),
      field("trace.walk_mean_uw", ts.synth.walk_mean_uw),
      field("trace.walk_step_uw", ts.synth.walk_step_uw),
      field("trace.walk_reversion", ts.synth.walk_reversion),
      field("trace.walk_min_uw", ts.synth.walk_min_uw),
      field("trace.walk_max_uw", ts.synth.walk_max_uw),
  };
  Entry scenes;
  scenes.key = "corner.scenes";
  scenes.set = [&c](const std::string& s) {
    c.scenes = split(s);
    if (c.scenes.empty()) throw Error("config key 'corner.scenes' must list at least one scene");
  };
  scenes.get = [&c] { return join(c.scenes); };
  e.push_back(std::move(scenes));
  return e;
}

}  // namespace detail

// Set one "section.key" value.
inline void set_option(SimConfig& c, const std::string& key, const std::string& value) {
  for (auto& e : detail::entries(c))
    if (e.key == key) return e.set(value);
  throw Error("unknown config key '" + key + "'");
}

// Flat "section.key" / value pairs of the effective configuration.
inline std::vector<std::pair<std::string, std::string>> config_entries(const SimConfig& c) {
  auto copy = c;
  std::vector<std::pair<std::string, std::string>> out;
  for (auto& e : detail::entries(copy)) out.emplace_back(e.key, e.get());
  return out;
}

// INI file with [energy], [runtime], [checkpoint], [smart], [svm], [corner],
// [train] and [trace] sections. Unknown keys are errors.
inline void apply_ini(SimConfig& c, std::istream& in) {
  boost::property_tree::ptree tree;
  try {
    boost::property_tree::ini_parser::read_ini(in, tree);
  } catch (const boost::property_tree::ini_parser_error& e) {
    throw ParseError(e.message(), e.line());
  }
  for (const auto& [section, body] : tree) {
    if (body.empty() && !body.data().empty())
      throw Error("config key '" + section + "' is outside a section");
    for (const auto& [key, value] : body) set_option(c, section + "." + key, value.data());
  }
}

inline SimConfig load_config(const std::filesystem::path& path, SimConfig base = {}) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open config file " + path.string());
  apply_ini(base, in);
  return base;
}

inline void write_ini(std::ostream& out, const SimConfig& c) {
  // Sections in order of first appearance, each written once.
  std::vector<std::string> order;
  std::map<std::string, std::vector<std::pair<std::string, std::string>>> body;
  for (const auto& [key, value] : config_entries(c)) {
    const auto dot = key.find('.');
    const auto s = key.substr(0, dot);
    if (!body.count(s)) order.push_back(s);
    body[s].emplace_back(key.substr(dot + 1), value);
  }
  for (std::size_t i = 0; i < order.size(); ++i) {
    out << (i ? "\n" : "") << '[' << order[i] << "]\n";
    for (const auto& [k, v] : body[order[i]]) out << k << " = " << v << '\n';
  }
}

inline EnergyTrace make_trace(const TraceSettings& t, std::uint64_t seed) {
  for (const auto& n : named_trace_kinds())
    if (n == t.kind) return named_trace(n, seed, t.duration_s);
  return synth_trace(parse_synth_kind(t.kind), t.synth, seed, t.duration_s);
}

}  // namespace aic::report
