#pragma once

#include <algorithm>
#include <cmath>
#include <optional>
#include <stdexcept>
#include <vector>

#include "aic/energy/capacitor.hpp"
#include "aic/energy/trace.hpp"

namespace aic {

struct SimClock {
  double dt_s = 1e-3;
  double efficiency = 0.8;

  void validate() const {
    if (!(dt_s > 0.0)) throw Error("time step must be positive");
    if (!(efficiency > 0.0 && efficiency <= 1.0)) throw Error("efficiency must be in (0, 1]");
  }
};

// Running totals for the conservation check:
//   consumed + final - initial <= efficiency * harvested  (+ external supply)
struct EnergyLedger {
  double initial_uj = 0.0;
  double harvested_uj = 0.0;  // raw power integrated over time
  double offered_uj = 0.0;    // after converter efficiency
  double stored_uj = 0.0;     // what the buffer actually absorbed
  double consumed_uj = 0.0;
  double external_uj = 0.0;   // mains-powered reference runs

  bool conserves(double final_uj, double efficiency, double rel_tol = 1e-6) const noexcept {
    const double lhs = consumed_uj + final_uj - initial_uj;
    const double rhs = efficiency * harvested_uj + external_uj;
    const double scale = std::max({1.0, std::abs(lhs), std::abs(rhs), initial_uj});
    return lhs <= rhs + rel_tol * scale;
  }
};

// Steps a capacitor through an energy trace at a fixed time step. All
// workload-facing simulation goes through this type.
class Harvester {
 public:
  Harvester(const EnergyTrace& trace, Capacitor cap, SimClock clock)
      : trace_(&trace), cursor_(trace), cap_(cap), clock_(clock), t_(trace.start()) {
    cap_.validate();
    clock_.validate();
    ledger_.initial_uj = cap_.energy_uj;
  }

  double now() const noexcept { return t_; }
  double end() const noexcept { return trace_->end(); }
  bool exhausted() const noexcept { return t_ >= trace_->end(); }
  const Capacitor& cap() const noexcept { return cap_; }
  const EnergyLedger& ledger() const noexcept { return ledger_; }
  const SimClock& clock() const noexcept { return clock_; }

  // Device off: charge without load until the buffer reaches V_on or the
  // clock reaches `until`. Returns true on wake-up.
  bool charge_until_on(double until) {
    until = std::min(until, end());
    if (cap_.energy_uj >= cap_.energy_on()) return true;
    while (t_ < until) {
      step(std::min(clock_.dt_s, until - t_), 0.0);
      if (cap_.energy_uj >= cap_.energy_on()) return true;
    }
    return false;
  }

  // Device on and sleeping: charge while drawing `load_uw` until `until`.
  // Returns true if the device browned out; `spent` accumulates the draw.
  bool idle_until(double until, double load_uw, double& spent) {
    until = std::min(until, end());
    while (t_ < until) {
      if (!step(std::min(clock_.dt_s, until - t_), load_uw, &spent)) return true;
    }
    return false;
  }

  // Draw energy for an action. On brown-out the buffer is left at V_off.
  ConsumeResult spend(double cost_uj) {
    auto r = consume(cap_, cost_uj);
    cap_ = r.cap;
    ledger_.consumed_uj += r.spent_uj;
    return r;
  }

  // Let time pass while busy; the action's energy was already drawn.
  void run_for(double duration_s) {
    const double until = std::min(end(), t_ + duration_s);
    while (t_ < until) step(std::min(clock_.dt_s, until - t_), 0.0);
  }

  // Jump the clock without harvesting (mains-powered runs).
  void advance_clock(double t) { t_ = std::max(t_, std::min(t, end())); }

  // Energy drawn from an external supply; the buffer is untouched.
  void draw_external(double uj) {
    if (uj < 0.0) throw std::invalid_argument("draw_external: negative energy");
    ledger_.external_uj += uj;
    ledger_.consumed_uj += uj;
  }

 private:
  // Charge, then draw `load_uw` over h seconds. Returns false on brown-out.
  bool step(double h, double load_uw, double* spent = nullptr) {
    const double p = cursor_.power_at(t_);
    const double before = cap_.energy_uj;
    cap_ = step_charge(cap_, p, h, clock_.efficiency);
    ledger_.harvested_uj += p * h;
    ledger_.offered_uj += clock_.efficiency * p * h;
    ledger_.stored_uj += cap_.energy_uj - before;
    t_ += h;
    if (load_uw <= 0.0) return true;
    const auto r = spend(load_uw * h);
    if (spent) *spent += r.spent_uj;
    return r.outcome == Outcome::ok;
  }

  const EnergyTrace* trace_;
  EnergyTrace::Cursor cursor_;
  Capacitor cap_;
  SimClock clock_;
  EnergyLedger ledger_;
  double t_;
};

struct PowerCycle {
  std::size_t index = 0;
  double wake_time = 0.0;
  std::optional<double> death_time;  // empty: still alive when the trace ends
  double budget_uj = 0.0;

  friend bool operator==(const PowerCycle&, const PowerCycle&) = default;
};

// Split a trace into power cycles for a device that only sleeps, drawing
// `idle_load_uw` while on. The device starts off.
inline std::vector<PowerCycle> segment_cycles(const EnergyTrace& trace, const Capacitor& cap,
                                              double idle_load_uw, SimClock clock = {}) {
  if (idle_load_uw < 0.0) throw Error("idle load must be non-negative");
  Harvester h(trace, cap, clock);
  std::vector<PowerCycle> cycles;
  double spent = 0.0;
  for (;;) {
    if (!h.charge_until_on(h.end())) break;
    PowerCycle c;
    c.index = cycles.size();
    c.wake_time = h.now();
    c.budget_uj = cap.usable_budget();
    if (h.idle_until(h.end(), idle_load_uw, spent)) c.death_time = h.now();
    cycles.push_back(c);
    if (!c.death_time) break;
  }
  return cycles;
}

}  // namespace aic
