#pragma once

#include <cmath>
#include <cstdint>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include <fmt/format.h>

#include "aic/energy/harvester.hpp"
#include "aic/error.hpp"
#include "aic/runtime/log.hpp"
#include "aic/runtime/workload.hpp"
#include "aic/svm/anytime.hpp"

namespace aic::runtime {

enum class StrategyKind { continuous, greedy, smart, checkpoint };

struct StrategyConfig {
  StrategyKind kind = StrategyKind::greedy;
  double accuracy_floor = 0.8;           // smart
  std::size_t checkpoint_interval = 10;  // checkpoint: units between checkpoints
  std::size_t checkpoint_bytes = 2048;
  double nvm_write_uj_per_byte = 0.01;
  double nvm_read_uj_per_byte = 0.005;

  double write_cost() const noexcept { return double(checkpoint_bytes) * nvm_write_uj_per_byte; }
  double read_cost() const noexcept { return double(checkpoint_bytes) * nvm_read_uj_per_byte; }

  void validate() const {
    if (kind == StrategyKind::smart && !(accuracy_floor > 0.0 && accuracy_floor <= 1.0))
      throw Error("accuracy floor must be in (0, 1]");
    if (kind == StrategyKind::checkpoint) {
      if (checkpoint_interval == 0) throw Error("checkpoint interval must be positive");
      if (checkpoint_bytes == 0) throw Error("checkpoint size must be positive");
      if (!(nvm_write_uj_per_byte > 0.0) || !(nvm_read_uj_per_byte > 0.0))
        throw Error("NVM costs must be positive");
    }
  }

  // continuous | greedy | smart:A | checkpoint:interval
  std::string label() const {
    switch (kind) {
      case StrategyKind::continuous: return "continuous";
      case StrategyKind::greedy: return "greedy";
      case StrategyKind::smart: return fmt::format("smart:{}", accuracy_floor);
      case StrategyKind::checkpoint: return fmt::format("checkpoint:{}", checkpoint_interval);
    }
    return "?";
  }
};

inline StrategyConfig parse_strategy(std::string_view s, StrategyConfig base = {}) {
  const auto colon = s.find(':');
  const std::string head(s.substr(0, colon));
  const std::string arg = colon == std::string_view::npos ? "" : std::string(s.substr(colon + 1));
  auto number = [&](auto& out) {
    std::size_t used = 0;
    try {
      if constexpr (std::is_floating_point_v<std::decay_t<decltype(out)>>)
        out = std::stod(arg, &used);
      else
        out = std::stoul(arg, &used);
    } catch (const std::exception&) {
      used = 0;
    }
    if (arg.empty() || used != arg.size()) throw Error("bad strategy argument in '" + std::string(s) + "'");
  };
  if (head == "continuous" && arg.empty()) {
    base.kind = StrategyKind::continuous;
  } else if (head == "greedy" && arg.empty()) {
    base.kind = StrategyKind::greedy;
  } else if (head == "smart") {
    base.kind = StrategyKind::smart;
    if (!arg.empty()) number(base.accuracy_floor);
  } else if (head == "checkpoint") {
    base.kind = StrategyKind::checkpoint;
    if (!arg.empty()) number(base.checkpoint_interval);
  } else {
    throw Error("unknown strategy '" + std::string(s) +
                "' (expected continuous, greedy, smart[:A] or checkpoint[:interval])");
  }
  base.validate();
  return base;
}

struct RuntimeConfig {
  std::optional<double> period_s;  // item sampling period; workload default when empty
  double active_power_uw = 3000.0;  // sets how long a unit of work takes
  double idle_power_uw = 1.0;
  std::size_t livelock_cycles = 16;
  std::optional<std::size_t> max_items;
  Capacitor cap;
  SimClock clock;

  void validate() const {
    if (period_s && !(*period_s > 0.0)) throw Error("period must be positive");
    if (!(active_power_uw > 0.0)) throw Error("active power must be positive");
    if (idle_power_uw < 0.0) throw Error("idle power must be non-negative");
    if (livelock_cycles == 0) throw Error("livelock guard must be positive");
    cap.validate();
    clock.validate();
  }
};

// --------------------------------------------------------------------------
// Per-step decisions, free of simulation state.

enum class GreedyAction { advance, emit, sleep };

// `next_cost` is empty when the knob is at its maximum. Sleep means there is
// not even enough left for the output.
inline GreedyAction greedy_step(double remaining_uj, std::optional<double> next_cost, double output_cost) {
  if (remaining_uj < output_cost) return GreedyAction::sleep;
  if (next_cost && remaining_uj - *next_cost >= output_cost) return GreedyAction::advance;
  return GreedyAction::emit;
}

struct SmartDecision {
  bool proceed = false;
  std::size_t min_units = 0;   // p'
  bool unreachable = false;    // no table entry reaches the floor
};

inline SmartDecision smart_gate(double budget_uj, std::span<const double> lut, double floor,
                                const Workload& w) {
  SmartDecision d;
  const auto p = svm::features_for_accuracy(lut, floor);
  if (!p) {
    d.unreachable = true;
    return d;
  }
  d.min_units = *p;
  d.proceed = w.prefix_cost(*p) + w.output_cost() <= budget_uj;
  return d;
}

enum class CheckpointAction { work, write_checkpoint, emit };

// What a checkpointing runtime does next with an item that has `done` of
// `units` units finished, `since` of them after the last checkpoint.
inline CheckpointAction checkpoint_step(std::size_t done, std::size_t units, std::size_t since,
                                        std::size_t interval) {
  if (done >= units) return CheckpointAction::emit;
  if (since >= interval && done > 0) return CheckpointAction::write_checkpoint;
  return CheckpointAction::work;
}

// --------------------------------------------------------------------------

namespace detail {

class Engine {
 public:
  Engine(const EnergyTrace& trace, const Workload& w, const StrategyConfig& s, const RuntimeConfig& cfg,
         std::uint64_t seed)
      : trace_(trace), w_(w), s_(s), cfg_(cfg), seed_(seed), h_(trace, cfg.cap, cfg.clock) {
    s.validate();
    cfg.validate();
    period_ = cfg.period_s.value_or(w.default_period());
    items_ = static_cast<std::size_t>(std::floor(trace.duration() / period_ + 1e-9));
    if (cfg.max_items) items_ = std::min(items_, *cfg.max_items);
    if (s.kind == StrategyKind::smart && !w.accuracy_lut())
      throw Error("smart strategy needs a workload with an accuracy table");
  }

  RunLog run() {
    ev::RunHeader hdr;
    hdr.workload = w_.name();
    hdr.strategy = s_.label();
    hdr.trace = trace_.name();
    hdr.seed = seed_;
    hdr.items = items_;
    hdr.period_s = period_;
    hdr.start_s = trace_.start();
    hdr.config = config_json();
    log_.events.push_back(hdr);

    if (s_.kind == StrategyKind::smart) {
      if (!svm::features_for_accuracy(*w_.accuracy_lut(), s_.accuracy_floor))
        log_.events.push_back(ev::Warning{fmt::format(
            "accuracy floor {} is above every accuracy table entry; every item will be dropped",
            s_.accuracy_floor)});
    }

    if (s_.kind == StrategyKind::continuous)
      run_continuous();
    else
      run_intermittent();

    ev::RunEnd end;
    end.t = h_.now();
    end.ledger = h_.ledger();
    end.energy = split_;
    end.final_uj = h_.cap().energy_uj;
    end.efficiency = cfg_.clock.efficiency;
    end.conserved = h_.ledger().conserves(end.final_uj, end.efficiency);
    log_.events.push_back(end);
    return std::move(log_);
  }

 private:
  double arrival(std::size_t k) const { return trace_.start() + double(k + 1) * period_; }

  json config_json() const {
    json j = {{"active_power_uw", cfg_.active_power_uw},
              {"idle_power_uw", cfg_.idle_power_uw},
              {"capacitance_f", cfg_.cap.capacitance_f},
              {"voltage_on", cfg_.cap.voltage_on},
              {"voltage_off", cfg_.cap.voltage_off},
              {"voltage_max", cfg_.cap.voltage_max},
              {"initial_uj", cfg_.cap.energy_uj},
              {"dt_s", cfg_.clock.dt_s},
              {"efficiency", cfg_.clock.efficiency},
              {"overhead_uj", w_.overhead_cost()},
              {"output_uj", w_.output_cost()},
              {"units", w_.units()},
              {"full_item_uj", w_.full_cost()}};
    if (s_.kind == StrategyKind::smart) j["accuracy_floor"] = s_.accuracy_floor;
    if (s_.kind == StrategyKind::checkpoint) {
      j["checkpoint_interval"] = s_.checkpoint_interval;
      j["checkpoint_bytes"] = s_.checkpoint_bytes;
      j["nvm_write_uj_per_byte"] = s_.nvm_write_uj_per_byte;
      j["nvm_read_uj_per_byte"] = s_.nvm_read_uj_per_byte;
    }
    return j;
  }

  // Mains-powered reference: every item runs to completion on arrival.
  void run_continuous() {
    for (std::size_t k = 0; k < items_; ++k) {
      h_.advance_clock(arrival(k));
      const double t = arrival(k);
      log_.events.push_back(ev::ItemStarted{k, 0, t});
      auto job = w_.start(k, seed_);
      double work = w_.overhead_cost();
      for (std::size_t u = 0; u < w_.units(); ++u) {
        work += w_.unit_cost(u);
        job->advance();
      }
      h_.draw_external(work);
      split_.work_uj += work;
      log_.events.push_back(ev::Work{k, 0, w_.units(), work, t});
      h_.draw_external(w_.output_cost());
      split_.output_uj += w_.output_cost();
      emit(k, 0, *job, t);
    }
  }

  void emit(std::size_t k, std::size_t started, const Job& job, double t) {
    log_.events.push_back(ev::Output{k, cycle_, started, t, job.done(), job.knob(), job.result(),
                                     w_.truth(k, seed_), w_.output_cost()});
  }

  // Spend energy for `category`; on brown-out, log the death and turn off.
  bool spend(double cost, double& bucket, const char* category) {
    const auto r = h_.spend(cost);
    bucket += r.spent_uj;
    if (r.outcome == Outcome::died) {
      die(category, r.spent_uj);
      return false;
    }
    return true;
  }

  void die(const char* category, double spent) {
    log_.events.push_back(ev::Death{cycle_, h_.now(), category, spent});
    on_ = false;
  }

  double unit_time(double cost) const { return cost / cfg_.active_power_uw; }

  void drop(std::size_t k, DropReason r, double t) { log_.events.push_back(ev::ItemDropped{k, r, t}); }

  // Items whose arrival passed while the device was off or occupied.
  void miss_arrivals_until(double t, DropReason r) {
    while (next_ < items_ && arrival(next_) <= t) {
      drop(next_, r, arrival(next_));
      ++next_;
    }
  }

  bool wake() {
    // Returns false when the trace ends before the device turns on.
    const double limit = next_ < items_ ? arrival(next_) : h_.end();
    if (!h_.charge_until_on(limit)) return false;
    on_ = true;
    ++cycle_;
    log_.events.push_back(ev::Wake{cycle_, h_.now(), h_.cap().available()});
    return true;
  }

  void run_intermittent() {
    cycle_ = static_cast<std::size_t>(-1);
    while (!h_.exhausted()) {
      if (!on_) {
        const bool woke = wake();
        // Arrivals at or before this instant found the device off.
        if (!woke) {
          if (next_ < items_ && h_.now() >= arrival(next_)) {
            drop(next_, active_ ? DropReason::busy : DropReason::off, arrival(next_));
            ++next_;
          }
          continue;
        }
        if (active_) {
          resume_checkpoint_item();
          continue;
        }
      }
      if (active_) {
        resume_checkpoint_item();
        continue;
      }
      if (next_ >= items_) {
        double spent = 0.0;
        if (h_.idle_until(h_.end(), cfg_.idle_power_uw, spent)) die("idle", 0.0);
        split_.idle_uj += spent;
        break;
      }
      double spent = 0.0;
      const bool died = h_.idle_until(arrival(next_), cfg_.idle_power_uw, spent);
      split_.idle_uj += spent;
      if (died) {
        die("idle", spent);
        continue;
      }
      if (h_.now() < arrival(next_)) break;  // trace ended
      const std::size_t k = next_++;
      switch (s_.kind) {
        case StrategyKind::greedy: run_greedy(k, std::nullopt); break;
        case StrategyKind::smart: run_smart(k); break;
        case StrategyKind::checkpoint: start_checkpoint_item(k); break;
        case StrategyKind::continuous: break;
      }
      miss_arrivals_until(h_.now(), DropReason::busy);
    }
    // Anything not offered before the trace ended, or still in flight.
    if (active_) drop(active_item_, DropReason::unfinished, h_.now());
    for (; next_ < items_; ++next_) drop(next_, DropReason::off, arrival(next_));
  }

  // Runs work units greedily. Returns once the item is emitted or abandoned.
  void run_greedy(std::size_t k, std::optional<std::size_t> min_units) {
    const double t0 = h_.now();
    if (h_.cap().available() < w_.overhead_cost() + w_.output_cost()) {
      drop(k, DropReason::energy, t0);
      return;
    }
    log_.events.push_back(ev::ItemStarted{k, cycle_, t0});
    if (!spend(w_.overhead_cost(), split_.work_uj, "work")) {
      drop(k, DropReason::unfinished, h_.now());
      return;
    }
    h_.run_for(unit_time(w_.overhead_cost()));
    auto job = w_.start(k, seed_);
    const std::size_t n = w_.units();
    const std::size_t from = 0;
    double work = 0.0;
    for (;;) {
      const std::optional<double> next =
          job->done() < n ? std::optional<double>(w_.unit_cost(job->done())) : std::nullopt;
      // Under Smart the p' prefix was paid for up front; it is never cut short.
      const bool forced = min_units && job->done() < *min_units;
      const auto action = forced ? GreedyAction::advance
                                 : greedy_step(h_.cap().available(), next, w_.output_cost());
      if (action == GreedyAction::advance) {
        const double c = *next;
        if (!spend(c, split_.work_uj, "work")) {
          log_work(k, from, job->done(), work);
          drop(k, DropReason::unfinished, h_.now());
          return;
        }
        work += c;
        h_.run_for(unit_time(c));
        job->advance();
        continue;
      }
      log_work(k, from, job->done(), work);
      if (action == GreedyAction::sleep) {
        drop(k, DropReason::energy, h_.now());
        return;
      }
      if (!spend(w_.output_cost(), split_.output_uj, "output")) {
        drop(k, DropReason::unfinished, h_.now());
        return;
      }
      h_.run_for(unit_time(w_.output_cost()));
      emit(k, cycle_, *job, h_.now());
      return;
    }
  }

  void run_smart(std::size_t k) {
    const auto d = smart_gate(h_.cap().available(), *w_.accuracy_lut(), s_.accuracy_floor, w_);
    if (d.unreachable) {
      drop(k, DropReason::unreachable, h_.now());
      return;
    }
    if (!d.proceed) {
      drop(k, DropReason::accuracy, h_.now());
      return;
    }
    run_greedy(k, d.min_units);
  }

  void log_work(std::size_t k, std::size_t from, std::size_t to, double energy) {
    if (to > from) log_.events.push_back(ev::Work{k, from, to, energy, h_.now()});
  }

  // ---- checkpointing baseline ----

  void start_checkpoint_item(std::size_t k) {
    active_ = true;
    active_item_ = k;
    started_cycle_ = cycle_;
    job_.reset();
    snapshot_.reset();
    progress_cycle_ = cycle_;
    log_.events.push_back(ev::ItemStarted{k, cycle_, h_.now()});
    resume_checkpoint_item();
  }

  // Work on the active item until it is emitted or the device dies.
  void resume_checkpoint_item() {
    const std::size_t k = active_item_;
    if (cycle_ - progress_cycle_ >= cfg_.livelock_cycles)
      throw LivelockError(fmt::format(
          "no progress on item {} in {} power cycles: one checkpoint interval ({} units) plus a "
          "checkpoint costs more than a power cycle provides",
          k, cfg_.livelock_cycles, s_.checkpoint_interval));

    if (!job_) {
      if (snapshot_) {
        const double c = s_.read_cost();
        if (!spend(c, split_.checkpoint_read_uj, "checkpoint_read")) return;
        h_.run_for(unit_time(c));
        job_ = snapshot_->clone();
        log_.events.push_back(ev::CheckpointRestored{k, job_->done(), s_.checkpoint_bytes, c, h_.now()});
      } else {
        if (!spend(w_.overhead_cost(), split_.work_uj, "work")) return;
        h_.run_for(unit_time(w_.overhead_cost()));
        job_ = w_.start(k, seed_);
      }
      since_ = 0;
    }

    const std::size_t n = w_.units();
    std::size_t from = job_->done();
    double work = 0.0;
    for (;;) {
      miss_arrivals_until(h_.now(), DropReason::busy);
      const auto action = checkpoint_step(job_->done(), n, since_, s_.checkpoint_interval);
      if (action == CheckpointAction::work) {
        const double c = w_.unit_cost(job_->done());
        if (!spend(c, split_.work_uj, "work")) {
          log_work(k, from, job_->done(), work);
          job_.reset();
          return;
        }
        work += c;
        h_.run_for(unit_time(c));
        job_->advance();
        ++since_;
      } else if (action == CheckpointAction::write_checkpoint) {
        log_work(k, from, job_->done(), work);
        from = job_->done();
        work = 0.0;
        const double c = s_.write_cost();
        if (!spend(c, split_.checkpoint_write_uj, "checkpoint_write")) {
          job_.reset();
          return;
        }
        h_.run_for(unit_time(c));
        snapshot_ = job_->clone();
        since_ = 0;
        progress_cycle_ = cycle_;
        log_.events.push_back(ev::CheckpointWritten{k, job_->done(), s_.checkpoint_bytes, c, h_.now()});
      } else {
        log_work(k, from, job_->done(), work);
        if (!spend(w_.output_cost(), split_.output_uj, "output")) {
          job_.reset();
          return;
        }
        h_.run_for(unit_time(w_.output_cost()));
        emit(k, started_cycle_, *job_, h_.now());
        active_ = false;
        job_.reset();
        snapshot_.reset();
        miss_arrivals_until(h_.now(), DropReason::busy);
        return;
      }
      if (h_.exhausted()) {
        log_work(k, from, job_->done(), work);
        return;
      }
    }
  }

  const EnergyTrace& trace_;
  const Workload& w_;
  StrategyConfig s_;
  RuntimeConfig cfg_;
  std::uint64_t seed_;
  Harvester h_;
  RunLog log_;
  EnergySplit split_;
  double period_ = 60.0;
  std::size_t items_ = 0;
  std::size_t next_ = 0;
  std::size_t cycle_ = 0;
  bool on_ = false;

  bool active_ = false;
  std::size_t active_item_ = 0;
  std::size_t started_cycle_ = 0;
  std::size_t progress_cycle_ = 0;
  std::size_t since_ = 0;
  std::unique_ptr<Job> job_;
  std::unique_ptr<Job> snapshot_;
};

}  // namespace detail

// Drive `workload` over `trace` under one strategy. Items arrive every period
// from the trace start; the device starts with the capacitor's initial charge
// and switched off. Deterministic in (inputs, seed).
inline RunLog run(const EnergyTrace& trace, const Workload& workload, const StrategyConfig& strategy,
                  const RuntimeConfig& cfg, std::uint64_t seed) {
  return detail::Engine(trace, workload, strategy, cfg, seed).run();
}

}  // namespace aic::runtime
