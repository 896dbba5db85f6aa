#pragma once

#include <cstdint>
#include <filesystem>
#include <fstream>
#include <istream>
#include <optional>
#include <ostream>
#include <string>
#include <variant>
#include <vector>

#include <nlohmann/json.hpp>

#include "aic/energy/harvester.hpp"
#include "aic/error.hpp"

namespace aic::runtime {

using json = nlohmann::json;

inline constexpr std::string_view log_format_tag = "aic-runlog/1";

// Energy drawn by a run, by purpose. Idle is the sleep-time draw.
struct EnergySplit {
  double work_uj = 0.0;  // per-item overhead and work units
  double checkpoint_write_uj = 0.0;
  double checkpoint_read_uj = 0.0;
  double output_uj = 0.0;
  double idle_uj = 0.0;

  double total() const noexcept {
    return work_uj + checkpoint_write_uj + checkpoint_read_uj + output_uj + idle_uj;
  }
  friend bool operator==(const EnergySplit&, const EnergySplit&) = default;
};

enum class DropReason { off, busy, energy, accuracy, unreachable, unfinished };

inline std::string_view to_string(DropReason r) {
  switch (r) {
    case DropReason::off: return "off";
    case DropReason::busy: return "busy";
    case DropReason::energy: return "energy";
    case DropReason::accuracy: return "accuracy";
    case DropReason::unreachable: return "unreachable";
    case DropReason::unfinished: return "unfinished";
  }
  return "?";
}

inline DropReason parse_drop_reason(std::string_view s) {
  for (auto r : {DropReason::off, DropReason::busy, DropReason::energy, DropReason::accuracy,
                 DropReason::unreachable, DropReason::unfinished})
    if (to_string(r) == s) return r;
  throw ParseError("unknown drop reason '" + std::string(s) + "'");
}

namespace ev {

struct RunHeader {
  std::string workload;
  std::string strategy;
  std::string trace;
  std::uint64_t seed = 0;
  std::size_t items = 0;  // items offered over the trace
  double period_s = 0.0;
  double start_s = 0.0;
  json config = json::object();
};
struct Wake {
  std::size_t cycle = 0;
  double t = 0.0;
  double budget_uj = 0.0;
};
struct ItemStarted {
  std::size_t item = 0;
  std::size_t cycle = 0;
  double t = 0.0;
};
// Units [from, to) executed in one stretch.
struct Work {
  std::size_t item = 0;
  std::size_t from = 0;
  std::size_t to = 0;
  double energy_uj = 0.0;
  double t = 0.0;
};
struct CheckpointWritten {
  std::size_t item = 0;
  std::size_t units = 0;
  std::size_t bytes = 0;
  double cost_uj = 0.0;
  double t = 0.0;
};
struct CheckpointRestored {
  std::size_t item = 0;
  std::size_t units = 0;
  std::size_t bytes = 0;
  double cost_uj = 0.0;
  double t = 0.0;
};
struct Output {
  std::size_t item = 0;
  std::size_t cycle = 0;
  std::size_t cycle_started = 0;
  double t = 0.0;
  std::size_t units = 0;
  double knob = 0.0;
  json result;
  json truth;  // null when there is no ground truth
  double cost_uj = 0.0;
};
struct ItemDropped {
  std::size_t item = 0;
  DropReason reason = DropReason::off;
  double t = 0.0;
};
struct Death {
  std::size_t cycle = 0;
  double t = 0.0;
  std::string during;  // work, checkpoint_write, checkpoint_read, output, idle
  double spent_uj = 0.0;
};
struct Warning {
  std::string message;
};
struct RunEnd {
  double t = 0.0;
  EnergyLedger ledger;
  EnergySplit energy;
  double final_uj = 0.0;
  double efficiency = 1.0;
  bool conserved = false;
};

}  // namespace ev

using Event = std::variant<ev::RunHeader, ev::Wake, ev::ItemStarted, ev::Work, ev::CheckpointWritten,
                           ev::CheckpointRestored, ev::Output, ev::ItemDropped, ev::Death, ev::Warning,
                           ev::RunEnd>;

struct RunLog {
  std::vector<Event> events;

  const ev::RunHeader& header() const {
    if (events.empty() || !std::holds_alternative<ev::RunHeader>(events.front()))
      throw Error("run log has no header");
    return std::get<ev::RunHeader>(events.front());
  }
  const ev::RunEnd& end() const {
    if (events.empty() || !std::holds_alternative<ev::RunEnd>(events.back()))
      throw Error("run log is incomplete (no end record)");
    return std::get<ev::RunEnd>(events.back());
  }

  template <class T>
  std::vector<T> all() const {
    std::vector<T> out;
    for (const auto& e : events)
      if (const auto* p = std::get_if<T>(&e)) out.push_back(*p);
    return out;
  }

  std::vector<ev::Output> outputs() const { return all<ev::Output>(); }
  std::vector<ev::ItemDropped> drops() const { return all<ev::ItemDropped>(); }
};

namespace detail {

inline json ledger_json(const EnergyLedger& l) {
  return {{"initial_uj", l.initial_uj},   {"harvested_uj", l.harvested_uj},
          {"offered_uj", l.offered_uj},   {"stored_uj", l.stored_uj},
          {"consumed_uj", l.consumed_uj}, {"external_uj", l.external_uj}};
}

inline EnergyLedger ledger_from(const json& j) {
  EnergyLedger l;
  l.initial_uj = j.at("initial_uj");
  l.harvested_uj = j.at("harvested_uj");
  l.offered_uj = j.at("offered_uj");
  l.stored_uj = j.at("stored_uj");
  l.consumed_uj = j.at("consumed_uj");
  l.external_uj = j.at("external_uj");
  return l;
}

inline json split_json(const EnergySplit& s) {
  return {{"work_uj", s.work_uj},
          {"checkpoint_write_uj", s.checkpoint_write_uj},
          {"checkpoint_read_uj", s.checkpoint_read_uj},
          {"output_uj", s.output_uj},
          {"idle_uj", s.idle_uj}};
}

inline EnergySplit split_from(const json& j) {
  EnergySplit s;
  s.work_uj = j.at("work_uj");
  s.checkpoint_write_uj = j.at("checkpoint_write_uj");
  s.checkpoint_read_uj = j.at("checkpoint_read_uj");
  s.output_uj = j.at("output_uj");
  s.idle_uj = j.at("idle_uj");
  return s;
}

struct ToJson {
  json operator()(const ev::RunHeader& e) const {
    return {{"event", "run"},       {"format", log_format_tag}, {"workload", e.workload},
            {"strategy", e.strategy}, {"trace", e.trace},       {"seed", e.seed},
            {"items", e.items},     {"period_s", e.period_s},   {"start_s", e.start_s},
            {"config", e.config}};
  }
  json operator()(const ev::Wake& e) const {
    return {{"event", "wake"}, {"cycle", e.cycle}, {"t", e.t}, {"budget_uj", e.budget_uj}};
  }
  json operator()(const ev::ItemStarted& e) const {
    return {{"event", "item_started"}, {"item", e.item}, {"cycle", e.cycle}, {"t", e.t}};
  }
  json operator()(const ev::Work& e) const {
    return {{"event", "work"}, {"item", e.item},           {"from", e.from},
            {"to", e.to},      {"energy_uj", e.energy_uj}, {"t", e.t}};
  }
  json operator()(const ev::CheckpointWritten& e) const {
    return {{"event", "checkpoint_written"}, {"item", e.item},       {"units", e.units},
            {"bytes", e.bytes},              {"cost_uj", e.cost_uj}, {"t", e.t}};
  }
  json operator()(const ev::CheckpointRestored& e) const {
    return {{"event", "checkpoint_restored"}, {"item", e.item},       {"units", e.units},
            {"bytes", e.bytes},               {"cost_uj", e.cost_uj}, {"t", e.t}};
  }
  json operator()(const ev::Output& e) const {
    return {{"event", "output"}, {"item", e.item},   {"cycle", e.cycle},   {"cycle_started", e.cycle_started},
            {"t", e.t},          {"units", e.units}, {"knob", e.knob},     {"result", e.result},
            {"truth", e.truth},  {"cost_uj", e.cost_uj}};
  }
  json operator()(const ev::ItemDropped& e) const {
    return {{"event", "item_dropped"}, {"item", e.item}, {"reason", to_string(e.reason)}, {"t", e.t}};
  }
  json operator()(const ev::Death& e) const {
    return {{"event", "death"}, {"cycle", e.cycle}, {"t", e.t}, {"during", e.during}, {"spent_uj", e.spent_uj}};
  }
  json operator()(const ev::Warning& e) const { return {{"event", "warning"}, {"message", e.message}}; }
  json operator()(const ev::RunEnd& e) const {
    return {{"event", "end"},
            {"t", e.t},
            {"ledger", ledger_json(e.ledger)},
            {"energy", split_json(e.energy)},
            {"final_uj", e.final_uj},
            {"efficiency", e.efficiency},
            {"conserved", e.conserved}};
  }
};

}  // namespace detail

inline json event_to_json(const Event& e) { return std::visit(detail::ToJson{}, e); }

inline Event event_from_json(const json& j) {
  const std::string kind = j.at("event");
  if (kind == "run") {
    if (j.at("format") != log_format_tag) throw ParseError("unsupported run log format");
    return ev::RunHeader{j.at("workload"), j.at("strategy"), j.at("trace"), j.at("seed"),
                         j.at("items"),    j.at("period_s"), j.at("start_s"), j.at("config")};
  }
  if (kind == "wake") return ev::Wake{j.at("cycle"), j.at("t"), j.at("budget_uj")};
  if (kind == "item_started") return ev::ItemStarted{j.at("item"), j.at("cycle"), j.at("t")};
  if (kind == "work") return ev::Work{j.at("item"), j.at("from"), j.at("to"), j.at("energy_uj"), j.at("t")};
  if (kind == "checkpoint_written")
    return ev::CheckpointWritten{j.at("item"), j.at("units"), j.at("bytes"), j.at("cost_uj"), j.at("t")};
  if (kind == "checkpoint_restored")
    return ev::CheckpointRestored{j.at("item"), j.at("units"), j.at("bytes"), j.at("cost_uj"), j.at("t")};
  if (kind == "output")
    return ev::Output{j.at("item"),  j.at("cycle"), j.at("cycle_started"), j.at("t"),      j.at("units"),
                      j.at("knob"), j.at("result"), j.at("truth"),        j.at("cost_uj")};
  if (kind == "item_dropped")
    return ev::ItemDropped{j.at("item"), parse_drop_reason(j.at("reason").get<std::string>()), j.at("t")};
  if (kind == "death") return ev::Death{j.at("cycle"), j.at("t"), j.at("during"), j.at("spent_uj")};
  if (kind == "warning") return ev::Warning{j.at("message")};
  if (kind == "end")
    return ev::RunEnd{j.at("t"),        detail::ledger_from(j.at("ledger")), detail::split_from(j.at("energy")),
                      j.at("final_uj"), j.at("efficiency"),                  j.at("conserved")};
  throw ParseError("unknown event '" + kind + "'");
}

// One JSON object per line.
inline void write_log(std::ostream& out, const RunLog& log) {
  for (const auto& e : log.events) out << event_to_json(e).dump() << '\n';
}

inline RunLog read_log(std::istream& in) {
  RunLog log;
  std::string line;
  std::size_t lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (line.empty()) continue;
    try {
      log.events.push_back(event_from_json(json::parse(line)));
    } catch (const ParseError& e) {
      throw ParseError(e.what(), lineno);
    } catch (const json::exception& e) {
      throw ParseError(std::string("bad run log record: ") + e.what(), lineno);
    }
  }
  log.header();
  log.end();
  return log;
}

inline void save_log(const std::filesystem::path& path, const RunLog& log) {
  std::ofstream out(path);
  if (!out) throw Error("cannot write run log " + path.string());
  write_log(out, log);
}

inline RunLog load_log(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open run log " + path.string());
  return read_log(in);
}

}  // namespace aic::runtime
