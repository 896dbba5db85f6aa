#pragma once

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "aic/error.hpp"

namespace aic {

// Energy buffer. Energies are in microjoules, voltages in volts.
struct Capacitor {
  double capacitance_f = 1470e-6;
  double voltage_on = 2.8;
  double voltage_off = 1.8;
  double voltage_max = 3.3;
  double energy_uj = 0.0;

  double energy_at(double volts) const noexcept { return 0.5 * capacitance_f * volts * volts * 1e6; }
  double energy_max() const noexcept { return energy_at(voltage_max); }
  double energy_on() const noexcept { return energy_at(voltage_on); }
  double energy_off() const noexcept { return energy_at(voltage_off); }

  // Energy available in one power cycle, from turn-on down to brown-out.
  double usable_budget() const noexcept { return energy_on() - energy_off(); }

  // Energy that can be spent right now before brown-out.
  double available() const noexcept { return std::max(0.0, energy_uj - energy_off()); }

  double voltage() const noexcept { return std::sqrt(2.0 * energy_uj * 1e-6 / capacitance_f); }

  void validate() const {
    if (!(capacitance_f > 0.0)) throw Error("capacitance must be positive");
    if (!(voltage_off > 0.0 && voltage_off < voltage_on && voltage_on <= voltage_max))
      throw Error("capacitor thresholds must satisfy 0 < V_off < V_on <= V_max");
    if (energy_uj < 0.0 || energy_uj > energy_max() * (1.0 + 1e-12))
      throw Error("capacitor energy outside [0, E_max]");
  }
};

inline Capacitor step_charge(Capacitor cap, double power_uw, double dt_s, double efficiency) {
  if (!(dt_s > 0.0)) throw std::invalid_argument("step_charge: dt must be positive");
  if (!(efficiency > 0.0 && efficiency <= 1.0))
    throw std::invalid_argument("step_charge: efficiency must be in (0, 1]");
  if (power_uw < 0.0) throw std::invalid_argument("step_charge: negative power");
  cap.energy_uj = std::min(cap.energy_max(), cap.energy_uj + efficiency * power_uw * dt_s);
  return cap;
}

enum class Outcome { ok, died };

struct ConsumeResult {
  Capacitor cap;
  Outcome outcome = Outcome::ok;
  double spent_uj = 0.0;  // energy actually drawn, also on death
};

// Draw `cost` from the buffer. If that would take the voltage below V_off the
// device browns out: the buffer is left at the V_off level and only the
// energy above it counts as spent.
inline ConsumeResult consume(Capacitor cap, double cost_uj) {
  if (cost_uj < 0.0) throw std::invalid_argument("consume: negative cost");
  if (cost_uj == 0.0) return {cap, Outcome::ok, 0.0};
  const double floor = cap.energy_off();
  if (cap.energy_uj - cost_uj >= floor) {
    cap.energy_uj -= cost_uj;
    return {cap, Outcome::ok, cost_uj};
  }
  const double spent = std::max(0.0, cap.energy_uj - floor);
  cap.energy_uj = std::min(cap.energy_uj, floor);
  return {cap, Outcome::died, spent};
}

}  // namespace aic
