#pragma once

#include <cmath>
#include <map>
#include <optional>
#include <ostream>
#include <string>
#include <utility>
#include <vector>

#include <fmt/format.h>

#include "aic/error.hpp"
#include "aic/runtime/log.hpp"
#include "aic/runtime/workload.hpp"

namespace aic::report {

using runtime::RunLog;

struct StrategyMetrics {
  std::string strategy;
  std::size_t items = 0;
  std::size_t started = 0;
  std::size_t outputs = 0;
  std::map<std::string, std::size_t> drops;  // by reason
  std::optional<double> accuracy;            // needs ground truth
  std::optional<double> coherence;           // needs the reference log
  std::size_t coherence_samples = 0;
  double throughput_norm = 0.0;
  double mean_knob = 0.0;
  std::map<std::size_t, std::size_t> latency_hist;  // cycles -> outputs
  runtime::EnergySplit energy;
  double consumed_uj = 0.0;
  std::size_t deaths = 0;
  std::size_t checkpoints = 0;
  std::size_t restores = 0;
  bool conserved = false;
};

struct SimReport {
  std::string workload;
  std::string trace;
  std::uint64_t seed = 0;
  std::size_t items = 0;
  std::string reference;
  std::vector<StrategyMetrics> strategies;

  const StrategyMetrics& at(std::string_view strategy) const {
    for (const auto& s : strategies)
      if (s.strategy == strategy) return s;
    throw Error("no metrics for strategy '" + std::string(strategy) + "'");
  }
};

inline void check_same_schedule(const RunLog& a, const RunLog& b) {
  const auto& x = a.header();
  const auto& y = b.header();
  if (x.workload != y.workload || x.trace != y.trace || x.seed != y.seed || x.items != y.items ||
      x.period_s != y.period_s || x.start_s != y.start_s)
    throw Error(fmt::format("run logs do not share an item schedule ({} on {} seed {} vs {} on {} seed {})",
                            x.strategy, x.trace, x.seed, y.strategy, y.trace, y.seed));
}

// Coherence and throughput are taken against the `reference` strategy (the
// continuous run by default); with no such log they are left empty / 0.
inline SimReport compute_metrics(const std::vector<RunLog>& logs, std::string reference = "continuous") {
  if (logs.empty()) throw Error("no run logs to report on");
  for (const auto& l : logs) check_same_schedule(logs.front(), l);

  SimReport rep;
  const auto& h0 = logs.front().header();
  rep.workload = h0.workload;
  rep.trace = h0.trace;
  rep.seed = h0.seed;
  rep.items = h0.items;
  rep.reference = reference;

  const RunLog* ref = nullptr;
  for (const auto& l : logs)
    if (l.header().strategy == reference) ref = &l;

  std::map<std::size_t, runtime::json> ref_out;
  if (ref)
    for (const auto& o : ref->outputs()) ref_out[o.item] = o.result;

  for (const auto& l : logs) {
    StrategyMetrics m;
    m.strategy = l.header().strategy;
    m.items = l.header().items;
    std::map<std::size_t, bool> seen;
    std::size_t correct = 0, labelled = 0, coherent = 0;
    double knob = 0.0;
    for (const auto& e : l.events) {
      if (std::holds_alternative<runtime::ev::ItemStarted>(e)) {
        ++m.started;
      } else if (const auto* o = std::get_if<runtime::ev::Output>(&e)) {
        if (seen[o->item]) throw Error(fmt::format("item {} has two outputs in {}", o->item, m.strategy));
        seen[o->item] = true;
        ++m.outputs;
        knob += o->knob;
        ++m.latency_hist[o->cycle - o->cycle_started];
        if (!o->truth.is_null()) {
          ++labelled;
          if (runtime::results_match(rep.workload, o->truth, o->result)) ++correct;
        }
        if (auto it = ref_out.find(o->item); it != ref_out.end()) {
          ++m.coherence_samples;
          if (runtime::results_match(rep.workload, it->second, o->result)) ++coherent;
        }
      } else if (const auto* d = std::get_if<runtime::ev::ItemDropped>(&e)) {
        ++m.drops[std::string(runtime::to_string(d->reason))];
      } else if (std::holds_alternative<runtime::ev::Death>(e)) {
        ++m.deaths;
      } else if (std::holds_alternative<runtime::ev::CheckpointWritten>(e)) {
        ++m.checkpoints;
      } else if (std::holds_alternative<runtime::ev::CheckpointRestored>(e)) {
        ++m.restores;
      }
    }
    if (labelled) m.accuracy = double(correct) / double(labelled);
    if (m.coherence_samples) m.coherence = double(coherent) / double(m.coherence_samples);
    if (ref && !ref_out.empty()) m.throughput_norm = double(m.outputs) / double(ref_out.size());
    m.mean_knob = m.outputs ? knob / double(m.outputs) : 0.0;
    const auto& end = l.end();
    m.energy = end.energy;
    m.consumed_uj = end.ledger.consumed_uj;
    m.conserved = end.conserved && end.ledger.conserves(end.final_uj, end.efficiency) &&
                  std::abs(end.energy.total() - end.ledger.consumed_uj) <=
                      1e-6 * std::max(1.0, end.ledger.consumed_uj);
    rep.strategies.push_back(std::move(m));
  }
  return rep;
}

inline constexpr std::string_view report_schema = "aic-report/1";

// Shortest round-trip formatting keeps the output byte-stable.
inline std::string num(double v) { return fmt::format("{}", v); }

// One row per (strategy, metric) and one per latency bucket. Leading '#'
// lines echo the report identity and the effective configuration.
inline std::vector<std::pair<std::string, std::string>> metric_rows(const StrategyMetrics& m) {
  std::vector<std::pair<std::string, std::string>> r;
  r.emplace_back("items", fmt::format("{}", m.items));
  r.emplace_back("started", fmt::format("{}", m.started));
  r.emplace_back("outputs", fmt::format("{}", m.outputs));
  for (const auto& [reason, n] : m.drops) r.emplace_back("dropped_" + reason, fmt::format("{}", n));
  r.emplace_back("accuracy", m.accuracy ? num(*m.accuracy) : "");
  r.emplace_back("coherence", m.coherence ? num(*m.coherence) : "");
  r.emplace_back("coherence_samples", fmt::format("{}", m.coherence_samples));
  r.emplace_back("throughput_norm", num(m.throughput_norm));
  r.emplace_back("mean_knob", num(m.mean_knob));
  r.emplace_back("deaths", fmt::format("{}", m.deaths));
  r.emplace_back("checkpoints", fmt::format("{}", m.checkpoints));
  r.emplace_back("restores", fmt::format("{}", m.restores));
  r.emplace_back("energy_work_uj", num(m.energy.work_uj));
  r.emplace_back("energy_checkpoint_write_uj", num(m.energy.checkpoint_write_uj));
  r.emplace_back("energy_checkpoint_read_uj", num(m.energy.checkpoint_read_uj));
  r.emplace_back("energy_output_uj", num(m.energy.output_uj));
  r.emplace_back("energy_idle_uj", num(m.energy.idle_uj));
  r.emplace_back("energy_consumed_uj", num(m.consumed_uj));
  r.emplace_back("conserved", m.conserved ? "1" : "0");
  return r;
}

inline void write_report_csv(std::ostream& out, const SimReport& rep,
                             const std::vector<std::pair<std::string, std::string>>& config = {}) {
  out << "# " << report_schema << '\n';
  out << "# workload=" << rep.workload << '\n';
  out << "# trace=" << rep.trace << '\n';
  out << "# seed=" << rep.seed << '\n';
  out << "# items=" << rep.items << '\n';
  out << "# reference=" << rep.reference << '\n';
  for (const auto& [k, v] : config) out << "# " << k << '=' << v << '\n';
  out << "section,strategy,key,value\n";
  for (const auto& m : rep.strategies)
    for (const auto& [k, v] : metric_rows(m)) out << "metric," << m.strategy << ',' << k << ',' << v << '\n';
  for (const auto& m : rep.strategies)
    for (const auto& [cycles, n] : m.latency_hist)
      out << "latency," << m.strategy << ',' << cycles << ',' << n << '\n';
}

}  // namespace aic::report
