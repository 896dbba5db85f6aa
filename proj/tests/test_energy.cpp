#include <cmath>
#include <filesystem>
#include <sstream>

#include <gtest/gtest.h>

#include "aic/energy/capacitor.hpp"
#include "aic/energy/harvester.hpp"
#include "aic/energy/trace.hpp"

using namespace aic;

namespace {

EnergyTrace parse(const std::string& text) {
  std::istringstream in(text);
  return read_trace(in, "t");
}

Capacitor cap_at(double energy) {
  Capacitor c;
  c.energy_uj = energy;
  return c;
}

}  // namespace

TEST(Trace, ParsesTwoSamples) {
  const auto t = parse("0.0,100\n1.0,100\n");
  ASSERT_EQ(t.size(), 2u);
  EXPECT_EQ(t.samples()[0], (TraceSample{0.0, 100.0}));
  EXPECT_EQ(t.samples()[1], (TraceSample{1.0, 100.0}));
}

TEST(Trace, AcceptsHeader) {
  const auto t = parse("t_s,power_uw\n0,5\n2,7\n");
  EXPECT_EQ(t.size(), 2u);
  EXPECT_DOUBLE_EQ(t.duration(), 2.0);
}

TEST(Trace, RejectsNonMonotoneTimestamps) {
  try {
    parse("1.0,10\n0.5,10\n");
    FAIL() << "expected a parse error";
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 2u);
  }
}

TEST(Trace, RejectsMalformedRowsWithLineNumbers) {
  try {
    parse("t_s,power_uw\n0,1\nbanana\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(parse("0,-1\n1,2\n"), ParseError);
  EXPECT_THROW(parse(""), Error);
  EXPECT_THROW(parse("0,1\n"), Error);  // a single sample has no duration
}

TEST(Trace, VoltageInputConvertsThroughLoad) {
  std::istringstream in("t_s,voltage_v\n0,2\n1,1\n");
  const auto t = read_trace(in, "v", TraceFormat::voltage_csv, 1000.0);
  EXPECT_DOUBLE_EQ(t.samples()[0].power_uw, 4.0 / 1000.0 * 1e6);
  EXPECT_DOUBLE_EQ(t.samples()[1].power_uw, 1.0 / 1000.0 * 1e6);
}

TEST(Trace, ZeroOrderHold) {
  const auto t = parse("0,10\n1,20\n3,0\n");
  EXPECT_EQ(t.power_at(0.0), 10.0);
  EXPECT_EQ(t.power_at(0.999), 10.0);
  EXPECT_EQ(t.power_at(1.0), 20.0);
  EXPECT_EQ(t.power_at(2.5), 20.0);
  EXPECT_DOUBLE_EQ(t.energy_between(0.5, 2.0), 0.5 * 10 + 1.0 * 20);
}

TEST(Trace, FileRoundTripKeepsNameAndSamples) {
  SynthParams p;
  p.sample_period_s = 1.0;
  p.walk_step_uw = 90.0;
  p.walk_reversion = 0.3;
  const auto t = synth_trace(SynthKind::random_walk, p, 3, 9999.0, "RF");
  ASSERT_EQ(t.size(), 10000u);
  const auto path = std::filesystem::temp_directory_path() / "RF.csv";
  save_trace(path, t);
  const auto back = load_trace(path);
  EXPECT_EQ(back.name(), "RF");
  EXPECT_EQ(back.samples(), t.samples());
  std::filesystem::remove(path);
}

TEST(Synth, ConstantAndSquareWave) {
  const auto c = synth_trace(SynthKind::constant, {}, 1, 10.0);
  for (const auto& s : c.samples()) EXPECT_EQ(s.power_uw, 100.0);
  SynthParams p;
  p.sample_period_s = 0.5;
  const auto sq = synth_trace(SynthKind::square_wave, p, 1, 8.0);
  for (const auto& s : sq.samples()) {
    const bool high = std::fmod(s.t_s, 2.0) < 1.0;
    EXPECT_EQ(s.power_uw, high ? 200.0 : 0.0) << s.t_s;
  }
}

TEST(Synth, RandomWalkIsDeterministicPerSeed) {
  const auto a = synth_trace(SynthKind::random_walk, {}, 7, 100.0);
  const auto b = synth_trace(SynthKind::random_walk, {}, 7, 100.0);
  const auto c = synth_trace(SynthKind::random_walk, {}, 8, 100.0);
  EXPECT_EQ(a.samples(), b.samples());
  EXPECT_NE(a.samples(), c.samples());
  for (const auto& s : a.samples()) EXPECT_GE(s.power_uw, 0.0);
}

TEST(Synth, NamedTracesHaveTheirCharacter) {
  auto sd = [](const EnergyTrace& t) {
    double m = 0, v = 0;
    for (const auto& s : t.samples()) m += s.power_uw;
    m /= double(t.size());
    for (const auto& s : t.samples()) v += (s.power_uw - m) * (s.power_uw - m);
    return std::sqrt(v / double(t.size()));
  };
  const auto som = named_trace("SOM", 1, 20000), rf = named_trace("RF", 1, 20000);
  EXPECT_EQ(som.name(), "SOM");
  EXPECT_LT(sd(som) / som.energy_between(som.start(), som.end()),
            sd(rf) / rf.energy_between(rf.start(), rf.end()));
  EXPECT_THROW(named_trace("XYZ", 1, 10), Error);
}

TEST(Capacitor, DefaultBudget) {
  const Capacitor c;
  EXPECT_NEAR(c.usable_budget(), 0.5 * 1470e-6 * (2.8 * 2.8 - 1.8 * 1.8) * 1e6, 1e-9);
  EXPECT_NEAR(c.usable_budget(), 3381.0, 1e-6);
  EXPECT_NEAR(c.energy_max(), 8004.15, 1e-6);
}

TEST(StepCharge, UnitArithmetic) {
  const auto c = step_charge(cap_at(0.0), 100.0, 1.0, 1.0);
  EXPECT_DOUBLE_EQ(c.energy_uj, 100.0);
}

TEST(StepCharge, SaturatesAtMax) {
  Capacitor c;
  c = step_charge(cap_at(c.energy_max()), 500.0, 1.0, 0.8);
  EXPECT_DOUBLE_EQ(c.energy_uj, c.energy_max());
}

TEST(StepCharge, TimeToFullMatchesClosedForm) {
  Capacitor c = cap_at(0.0);
  const double dt = 1e-3;
  double t = 0.0;
  while (c.energy_uj < c.energy_max()) {
    c = step_charge(c, 1000.0, dt, 0.8);
    t += dt;
  }
  const double expected = 0.5 * 1470e-6 * 3.3 * 3.3 / 800e-6;
  EXPECT_NEAR(expected, 10.0, 0.01);
  EXPECT_NEAR(t, expected, dt + 1e-9);
}

TEST(StepCharge, RejectsBadInputs) {
  EXPECT_THROW(step_charge(cap_at(0), -1.0, 1.0, 0.8), std::invalid_argument);
  EXPECT_THROW(step_charge(cap_at(0), 1.0, -1.0, 0.8), std::invalid_argument);
  EXPECT_THROW(step_charge(cap_at(0), 1.0, 1.0, 1.5), std::invalid_argument);
}

TEST(Consume, Examples) {
  const Capacitor base;
  const double off = base.energy_off();
  auto r = consume(cap_at(off + 500.0), 100.0);
  EXPECT_EQ(r.outcome, Outcome::ok);
  EXPECT_NEAR(r.cap.energy_uj - off, 400.0, 1e-9);

  r = consume(cap_at(off + 500.0), 0.0);
  EXPECT_EQ(r.outcome, Outcome::ok);
  EXPECT_EQ(r.cap.energy_uj, off + 500.0);

  r = consume(cap_at(off + 500.0), 600.0);
  EXPECT_EQ(r.outcome, Outcome::died);
  EXPECT_DOUBLE_EQ(r.cap.energy_uj, off);
  EXPECT_NEAR(r.spent_uj, 500.0, 1e-9);
}

TEST(Cycles, ConstantPowerNoLoadIsOneOpenCycle) {
  const auto t = synth_trace(SynthKind::constant, {}, 1, 600.0);
  const auto cycles = segment_cycles(t, cap_at(0.0), 0.0);
  ASSERT_EQ(cycles.size(), 1u);
  EXPECT_FALSE(cycles[0].death_time.has_value());
}

TEST(Cycles, ZeroPowerNeverWakes) {
  SynthParams p;
  p.level_uw = 0.0;
  EXPECT_TRUE(segment_cycles(synth_trace(SynthKind::constant, p, 1, 100.0), cap_at(0.0), 1.0).empty());
}

// Each high phase charges one usable budget from the brown-out level (plus a
// margin); the load drains it during the low phase.
TEST(Cycles, SquareWaveGivesOneCyclePerPeriod) {
  Capacitor cap;
  cap.energy_uj = cap.energy_off();
  const double high = 1000.0, eff = 0.8, period = 10.0;
  const double charge_time = cap.usable_budget() / (high * eff);  // ~4.23 s
  SynthParams p;
  p.sample_period_s = 0.05;
  p.high_uw = high;
  p.low_uw = 0.0;
  p.period_s = period;
  p.duty = 0.45;
  const auto trace = synth_trace(SynthKind::square_wave, p, 1, 100.0);
  const auto cycles = segment_cycles(trace, cap, 2000.0);
  ASSERT_EQ(cycles.size(), 10u);
  for (const auto& c : cycles) {
    EXPECT_NEAR(c.wake_time, double(c.index) * period + charge_time, 2e-3);
    ASSERT_TRUE(c.death_time.has_value());
    EXPECT_LT(*c.death_time, double(c.index + 1) * period);
    EXPECT_NEAR(c.budget_uj, cap.usable_budget(), 1e-9);
  }
  for (std::size_t i = 1; i < cycles.size(); ++i)
    EXPECT_GT(cycles[i].wake_time, *cycles[i - 1].death_time);
  EXPECT_EQ(cycles, segment_cycles(trace, cap, 2000.0));
}

// Property: random traces and loads conserve energy and keep the buffer in range.
TEST(Harvester, ConservationOverRandomTraces) {
  for (std::uint64_t seed = 1; seed <= 20; ++seed) {
    Rng rng(seed);
    SynthParams p;
    p.walk_mean_uw = 50.0 + 400.0 * rng.uniform();
    p.walk_step_uw = 100.0 * rng.uniform();
    p.sample_period_s = 0.5;
    const auto trace = synth_trace(SynthKind::random_walk, p, seed, 300.0);
    Harvester h(trace, cap_at(0.0), {});
    double spent = 0.0;
    while (!h.exhausted()) {
      if (!h.charge_until_on(h.end())) break;
      const double cost = 3000.0 * rng.uniform();
      h.spend(cost);
      h.run_for(1.0);
      EXPECT_GE(h.cap().energy_uj, 0.0);
      EXPECT_LE(h.cap().energy_uj, h.cap().energy_max() * (1 + 1e-12));
      h.idle_until(h.now() + 20.0 * rng.uniform(), 50.0, spent);
    }
    const auto& l = h.ledger();
    EXPECT_TRUE(l.conserves(h.cap().energy_uj, 0.8)) << seed;
    // Stored energy never exceeds what the converter offered.
    EXPECT_LE(l.stored_uj, l.offered_uj * (1 + 1e-9));
    EXPECT_NEAR(l.initial_uj + l.stored_uj - l.consumed_uj, h.cap().energy_uj, 1e-6 * l.offered_uj + 1e-9);
  }
}

TEST(Harvester, ExternalSupplyIsBooked) {
  const auto t = synth_trace(SynthKind::constant, {}, 1, 10.0);
  Harvester h(t, cap_at(0.0), {});
  h.draw_external(1e6);
  EXPECT_EQ(h.ledger().external_uj, 1e6);
  EXPECT_TRUE(h.ledger().conserves(0.0, 0.8));
}
