#include <sstream>

#include <gtest/gtest.h>

#include "support.hpp"

using namespace aic;
using namespace aic::report;
using namespace aic::runtime;
using aic::testing::constant_trace;
using aic::testing::runtime_config;

namespace {

// Hand-built log: `outputs` is a list of (item, cycle_started, cycle, label).
RunLog fixture(std::string strategy, std::size_t items,
               const std::vector<std::tuple<std::size_t, std::size_t, std::size_t, int>>& outputs,
               EnergySplit split = {}) {
  RunLog log;
  ev::RunHeader h;
  h.workload = "svm";
  h.strategy = std::move(strategy);
  h.trace = "fixture";
  h.seed = 1;
  h.items = items;
  h.period_s = 60;
  log.events.push_back(h);
  std::vector<bool> out(items, false);
  for (auto [item, started, cycle, label] : outputs) {
    log.events.push_back(ev::ItemStarted{item, started, double(item)});
    ev::Output o;
    o.item = item;
    o.cycle_started = started;
    o.cycle = cycle;
    o.t = double(item) + 0.5;
    o.result = {{"label", label}};
    o.truth = {{"label", 1}};
    log.events.push_back(o);
    out[item] = true;
  }
  for (std::size_t i = 0; i < items; ++i)
    if (!out[i]) log.events.push_back(ev::ItemDropped{i, DropReason::energy, double(i)});
  ev::RunEnd end;
  end.energy = split;
  end.ledger.harvested_uj = 1e9;
  end.ledger.consumed_uj = split.total();
  end.efficiency = 0.8;
  end.conserved = true;
  log.events.push_back(end);
  return log;
}

std::vector<std::tuple<std::size_t, std::size_t, std::size_t, int>> all_items(std::size_t n, int label = 1) {
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, int>> v;
  for (std::size_t i = 0; i < n; ++i) v.emplace_back(i, i, i, label);
  return v;
}

}  // namespace

TEST(Metrics, ContinuousAgainstItself) {
  const auto rep = compute_metrics({fixture("continuous", 100, all_items(100))});
  const auto& m = rep.at("continuous");
  EXPECT_EQ(m.outputs, 100u);
  EXPECT_EQ(*m.coherence, 1.0);
  EXPECT_EQ(m.throughput_norm, 1.0);
  EXPECT_EQ(*m.accuracy, 1.0);
  ASSERT_EQ(m.latency_hist.size(), 1u);
  EXPECT_EQ(m.latency_hist.at(0), 100u);
}

TEST(Metrics, PartialThroughputWithMatchingLabels) {
  auto greedy = all_items(70);
  const auto rep = compute_metrics({fixture("continuous", 100, all_items(100)), fixture("greedy", 100, greedy)});
  const auto& g = rep.at("greedy");
  EXPECT_EQ(*g.coherence, 1.0);
  EXPECT_DOUBLE_EQ(g.throughput_norm, 0.7);
  EXPECT_EQ(g.coherence_samples, 70u);
  EXPECT_EQ(g.drops.at("energy"), 30u);
}

TEST(Metrics, CoherenceAndAccuracyAreSeparate) {
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, int>> ref, approx;
  for (std::size_t i = 0; i < 10; ++i) {
    ref.emplace_back(i, i, i, i < 6 ? 1 : 2);        // 6 of 10 right
    approx.emplace_back(i, i, i, i < 8 ? (i < 6 ? 1 : 2) : 3);  // agrees with ref on 8
  }
  const auto rep = compute_metrics({fixture("continuous", 10, ref), fixture("greedy", 10, approx)});
  EXPECT_DOUBLE_EQ(*rep.at("continuous").accuracy, 0.6);
  EXPECT_DOUBLE_EQ(*rep.at("greedy").coherence, 0.8);
  EXPECT_DOUBLE_EQ(*rep.at("greedy").accuracy, 0.6);
}

TEST(Metrics, LatencyHistogramFromKnownCycles) {
  // Items 0..5 finish 0,1,1,3,2,1 cycles after they started.
  const std::vector<std::size_t> lag{0, 1, 1, 3, 2, 1};
  std::vector<std::tuple<std::size_t, std::size_t, std::size_t, int>> outs;
  std::size_t cycle = 0;
  for (std::size_t i = 0; i < lag.size(); ++i) {
    outs.emplace_back(i, cycle, cycle + lag[i], 1);
    cycle += lag[i] + 1;
  }
  const auto rep = compute_metrics({fixture("checkpoint:5", 6, outs)});
  const std::map<std::size_t, std::size_t> expect{{0, 1}, {1, 3}, {2, 1}, {3, 1}};
  EXPECT_EQ(rep.at("checkpoint:5").latency_hist, expect);
  EXPECT_FALSE(rep.at("checkpoint:5").coherence.has_value());
  EXPECT_EQ(rep.at("checkpoint:5").throughput_norm, 0.0);
}

TEST(Metrics, ScheduleMismatchAndDuplicatesAreErrors) {
  auto a = fixture("continuous", 10, all_items(10));
  auto b = fixture("greedy", 12, all_items(10));
  EXPECT_THROW(compute_metrics({a, b}), Error);
  auto dup = fixture("greedy", 10, all_items(10));
  dup.events.insert(dup.events.end() - 1, dup.outputs().front());
  EXPECT_THROW(compute_metrics({a, dup}), Error);
  EXPECT_THROW(compute_metrics({}), Error);
}

TEST(Metrics, NoReferenceLeavesCoherenceEmpty) {
  const auto rep = compute_metrics({fixture("greedy", 5, all_items(5))});
  EXPECT_FALSE(rep.at("greedy").coherence.has_value());
  EXPECT_THROW(rep.at("smart:0.8"), Error);
}

// Invariants on simulated runs: fractions in [0, 1], histogram sums to the
// output count, split sums to consumption.
TEST(Metrics, InvariantsOnSimulatedRuns) {
  const auto model = aic::testing::small_svm_model();
  const SvmWorkload w(model.model, *model.generator);
  for (const char* trace_name : {"RF", "SOM"}) {
    const auto trace = named_trace(trace_name, 4, 7200.0);
    const auto logs = run_with_reference(trace, w,
                                         {parse_strategy("greedy"), parse_strategy("smart:0.7"),
                                          parse_strategy("checkpoint:5")},
                                         runtime_config(), 4);
    const auto rep = compute_metrics(logs);
    ASSERT_EQ(rep.strategies.size(), 4u);
    EXPECT_EQ(rep.at("continuous").throughput_norm, 1.0);
    EXPECT_EQ(*rep.at("checkpoint:5").coherence, 1.0);
    for (const auto& m : rep.strategies) {
      if (m.accuracy) {
        EXPECT_GE(*m.accuracy, 0.0);
        EXPECT_LE(*m.accuracy, 1.0);
      }
      if (m.coherence) {
        EXPECT_GE(*m.coherence, 0.0);
        EXPECT_LE(*m.coherence, 1.0);
      }
      std::size_t hist = 0;
      for (const auto& [k, n] : m.latency_hist) hist += n;
      EXPECT_EQ(hist, m.outputs);
      EXPECT_NEAR(m.energy.total(), m.consumed_uj, 1e-6 * std::max(1.0, m.consumed_uj));
      EXPECT_TRUE(m.conserved) << m.strategy;
    }
  }
}

TEST(ReportCsv, LayoutAndEcho) {
  EnergySplit split;
  split.work_uj = 12.5;
  split.output_uj = 1.0;
  const auto rep = compute_metrics({fixture("continuous", 2, all_items(2), split)});
  std::ostringstream out;
  write_report_csv(out, rep, {{"energy.dt_s", "0.001"}});
  const std::string s = out.str();
  EXPECT_EQ(s.rfind("# aic-report/1\n# workload=svm\n# trace=fixture\n# seed=1\n# items=2\n# reference=continuous\n"
                    "# energy.dt_s=0.001\nsection,strategy,key,value\n",
                    0),
            0u);
  EXPECT_NE(s.find("metric,continuous,outputs,2\n"), std::string::npos);
  EXPECT_NE(s.find("metric,continuous,energy_work_uj,12.5\n"), std::string::npos);
  EXPECT_NE(s.find("metric,continuous,energy_consumed_uj,13.5\n"), std::string::npos);
  EXPECT_NE(s.find("latency,continuous,0,2\n"), std::string::npos);
}

TEST(Config, SetOptionAndEcho) {
  SimConfig c;
  set_option(c, "energy.capacitance_f", "0.001");
  set_option(c, "runtime.period_s", "45");
  set_option(c, "checkpoint.interval", "7");
  set_option(c, "train.fit_bias", "true");
  set_option(c, "corner.scenes", "rectangle,cross");
  EXPECT_EQ(c.runtime.cap.capacitance_f, 0.001);
  EXPECT_EQ(c.runtime.period_s, 45.0);
  EXPECT_EQ(c.strategy.checkpoint_interval, 7u);
  EXPECT_TRUE(c.train.train.fit_bias);
  EXPECT_EQ(c.scenes, (std::vector<std::string>{"rectangle", "cross"}));
  set_option(c, "runtime.period_s", "0");
  EXPECT_FALSE(c.runtime.period_s.has_value());
  EXPECT_THROW(set_option(c, "runtime.warp", "1"), Error);
  EXPECT_THROW(set_option(c, "checkpoint.interval", "seven"), Error);
  EXPECT_THROW(set_option(c, "train.fit_bias", "maybe"), Error);
  EXPECT_THROW(set_option(c, "corner.scenes", ""), Error);
}

TEST(Config, DefaultsEchoed) {
  std::map<std::string, std::string> e;
  for (const auto& [k, v] : config_entries(SimConfig{})) e[k] = v;
  EXPECT_EQ(e.at("energy.capacitance_f"), "0.00147");
  EXPECT_EQ(e.at("energy.voltage_on"), "2.8");
  EXPECT_EQ(e.at("energy.voltage_off"), "1.8");
  EXPECT_EQ(e.at("checkpoint.bytes"), "2048");
  EXPECT_EQ(e.at("svm.output_uj"), "50");
  EXPECT_EQ(e.at("smart.accuracy_floor"), "0.8");
  EXPECT_EQ(e.at("train.holdout_fraction"), "0.3");
  EXPECT_EQ(e.at("train.features"), "140");
  EXPECT_EQ(e.at("train.classes"), "6");
  EXPECT_EQ(e.at("corner.nms_radius"), "3");
}

TEST(Config, IniRoundTrip) {
  SimConfig c;
  set_option(c, "energy.efficiency", "0.7");
  set_option(c, "trace.kind", "square-wave");
  set_option(c, "train.lambda", "0.05");
  std::stringstream ss;
  write_ini(ss, c);
  SimConfig back;
  apply_ini(back, ss);
  EXPECT_EQ(config_entries(back), config_entries(c));
}

TEST(Config, IniErrors) {
  SimConfig c;
  std::istringstream unknown("[energy]\nwarp = 9\n");
  EXPECT_THROW(apply_ini(c, unknown), Error);
  std::istringstream broken("[energy\ncapacitance_f = 1\n");
  EXPECT_THROW(apply_ini(c, broken), ParseError);
  EXPECT_THROW(load_config("/nonexistent/aic.ini"), Error);
}

TEST(Config, TraceSettings) {
  TraceSettings t;
  t.kind = "square-wave";
  t.duration_s = 100.0;
  EXPECT_EQ(make_trace(t, 1).name(), "square-wave");
  t.kind = "SIR";
  EXPECT_EQ(make_trace(t, 1).name(), "SIR");
  t.kind = "sawtooth";
  EXPECT_THROW(make_trace(t, 1), Error);
}

TEST(Pipeline, TrainModelIsDeterministicAndAccurate) {
  TrainSettings s;
  s.generator.features = 40;
  s.lut_samples = 3000;
  const auto a = train_model(s), b = train_model(s);
  EXPECT_EQ(a.file.model.weights, b.file.model.weights);
  EXPECT_EQ(a.file.model.accuracy_lut, b.file.model.accuracy_lut);
  EXPECT_GE(a.holdout_accuracy, 0.95);
  EXPECT_EQ(a.file.model.accuracy_lut.back(), 1.0);
  s.cost = "flat";
  EXPECT_THROW(train_model(s), Error);
}

TEST(Pipeline, WorkloadFactory) {
  SimConfig c;
  EXPECT_THROW(make_workload("svm", c, nullptr), Error);
  EXPECT_THROW(make_workload("video", c, nullptr), Error);
  c.scenes = {"rectangle"};
  const auto w = make_workload("corner", c, nullptr);
  EXPECT_EQ(w->name(), "corner");
  const auto model = aic::testing::small_svm_model();
  c.svm_output_uj = 75;
  EXPECT_EQ(make_workload("svm", c, &model)->output_cost(), 75.0);
}

TEST(Pipeline, SweepCsvKeepsInputOrder) {
  const auto model = aic::testing::small_svm_model();
  const SvmWorkload w(model.model, *model.generator);
  SimConfig c;
  const std::vector<EnergyTrace> traces{named_trace("RF", 1, 1800), named_trace("SOM", 1, 1800)};
  const auto cases = run_sweep(c, w, traces, {3, 1}, {parse_strategy("greedy"), parse_strategy("checkpoint:5")});
  ASSERT_EQ(cases.size(), 4u);
  EXPECT_EQ(cases[0].trace, "RF");
  EXPECT_EQ(cases[0].seed, 3u);
  EXPECT_EQ(cases[3].trace, "SOM");
  EXPECT_EQ(cases[3].seed, 1u);
  std::ostringstream a, b;
  write_sweep_csv(a, cases, {});
  write_sweep_csv(b, run_sweep(c, w, traces, {3, 1}, {parse_strategy("greedy"), parse_strategy("checkpoint:5")}), {});
  EXPECT_EQ(a.str(), b.str());
  EXPECT_NE(a.str().find("\nRF,3,greedy,throughput_norm,"), std::string::npos);
}

TEST(Pipeline, ReportFromSavedLogsMatches) {
  const auto model = aic::testing::small_svm_model();
  const SvmWorkload w(model.model, *model.generator);
  const auto logs = run_with_reference(constant_trace(80.0, 3600.0), w, {parse_strategy("greedy")}, runtime_config(), 2);
  std::vector<RunLog> reread;
  for (const auto& l : logs) {
    std::stringstream ss;
    write_log(ss, l);
    reread.push_back(read_log(ss));
  }
  std::ostringstream a, b;
  write_report_csv(a, compute_metrics(logs));
  write_report_csv(b, compute_metrics(reread));
  EXPECT_EQ(a.str(), b.str());
}
