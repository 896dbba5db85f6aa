#pragma once

#include <future>
#include <memory>
#include <string>
#include <vector>

#include "aic/corner/image.hpp"
#include "aic/energy/trace.hpp"
#include "aic/report/config.hpp"
#include "aic/report/metrics.hpp"
#include "aic/runtime/engine.hpp"
#include "aic/runtime/workload.hpp"
#include "aic/svm/model_io.hpp"
#include "aic/svm/train.hpp"

namespace aic::report {

struct TrainOutcome {
  svm::ModelFile file;
  double train_accuracy = 0.0;
  double holdout_accuracy = 0.0;
};

// Generate data, train, order features, attach costs and an accuracy table
// measured on `lut_samples` fresh draws from the same generator.
inline TrainOutcome train_model(const TrainSettings& s) {
  const auto data = svm::gen_dataset(s.generator);
  auto [train, hold] = svm::split_holdout(data, s.holdout_fraction, derive_seed(s.generator.seed, 0x73706c));
  auto cfg = s.train;
  cfg.seed = derive_seed(s.generator.seed, 0x747261);
  const auto ovr = svm::train_ovr(train, cfg);

  svm::CostModel cost;
  if (s.cost == "uniform") cost = svm::CostModel::uniform(s.cost_uj);
  else if (s.cost == "heavy-tail") cost = svm::CostModel::heavy_tail(derive_seed(s.generator.seed, 0x636f73), s.cost_uj);
  else throw Error("unknown cost model '" + s.cost + "' (expected uniform or heavy-tail)");

  auto model = svm::make_model(ovr, svm::order_features(ovr), svm::assign_costs(ovr.features, cost));

  if (s.lut_samples == 0) throw Error("accuracy table needs at least one sample");
  svm::DatasetGenerator gen(s.generator);
  svm::LutAccumulator acc(model);
  Rng rng(derive_seed(s.generator.seed, 0x6c7574));
  std::vector<double> x(model.features);
  for (std::size_t i = 0; i < s.lut_samples; ++i) {
    gen.draw(static_cast<std::size_t>(rng.below(model.classes)), x, rng);
    acc.add(x);
  }
  model.accuracy_lut = acc.lut();
  model.validate();

  TrainOutcome out;
  out.train_accuracy = svm::accuracy(model, train);
  out.holdout_accuracy = svm::accuracy(model, hold);
  out.file.model = std::move(model);
  out.file.generator = s.generator;
  return out;
}

inline std::unique_ptr<runtime::Workload> make_workload(const std::string& kind, const SimConfig& c,
                                                        const svm::ModelFile* model) {
  if (kind == "svm") {
    if (!model) throw Error("the svm workload needs a model (--model)");
    if (!model->generator) throw Error("model file has no generator line; retrain it with 'train'");
    return std::make_unique<runtime::SvmWorkload>(model->model, *model->generator, c.svm_overhead_uj,
                                                  c.svm_output_uj);
  }
  if (kind == "corner")
    return std::make_unique<runtime::CornerWorkload>(
        runtime::CornerWorkload::from_sources(c.scenes, c.harris, c.corner_cost));
  throw Error("unknown workload '" + kind + "' (expected svm or corner)");
}

// The continuous reference followed by each strategy, all on one schedule.
inline std::vector<runtime::RunLog> run_with_reference(const EnergyTrace& trace, const runtime::Workload& w,
                                                       const std::vector<runtime::StrategyConfig>& strategies,
                                                       const runtime::RuntimeConfig& rt, std::uint64_t seed) {
  std::vector<runtime::StrategyConfig> all;
  runtime::StrategyConfig ref;
  ref.kind = runtime::StrategyKind::continuous;
  all.push_back(ref);
  for (const auto& s : strategies)
    if (s.kind != runtime::StrategyKind::continuous) all.push_back(s);
  std::vector<std::future<runtime::RunLog>> jobs;
  for (const auto& s : all)
    jobs.push_back(std::async(std::launch::async, [&, s] { return runtime::run(trace, w, s, rt, seed); }));
  std::vector<runtime::RunLog> logs;
  for (auto& j : jobs) logs.push_back(j.get());
  return logs;
}

struct SweepCase {
  std::string trace;  // trace kind or file
  std::uint64_t seed = 0;
  SimReport report;
};

// Every (trace, seed) pair runs the reference plus all strategies; cases run
// concurrently and come back in input order.
inline std::vector<SweepCase> run_sweep(const SimConfig& c, const runtime::Workload& w,
                                        const std::vector<EnergyTrace>& traces,
                                        const std::vector<std::uint64_t>& seeds,
                                        const std::vector<runtime::StrategyConfig>& strategies) {
  std::vector<std::future<SweepCase>> jobs;
  for (const auto& t : traces)
    for (auto seed : seeds)
      jobs.push_back(std::async(std::launch::async, [&, seed] {
        SweepCase sc;
        sc.trace = t.name();
        sc.seed = seed;
        sc.report = compute_metrics(run_with_reference(t, w, strategies, c.runtime, seed));
        return sc;
      }));
  std::vector<SweepCase> out;
  for (auto& j : jobs) out.push_back(j.get());
  return out;
}

inline void write_sweep_csv(std::ostream& out, const std::vector<SweepCase>& cases,
                            const std::vector<std::pair<std::string, std::string>>& config) {
  out << "# " << report_schema << " sweep\n";
  if (!cases.empty()) out << "# workload=" << cases.front().report.workload << '\n';
  for (const auto& [k, v] : config) out << "# " << k << '=' << v << '\n';
  out << "trace,seed,strategy,key,value\n";
  for (const auto& c : cases)
    for (const auto& m : c.report.strategies)
      for (const auto& [k, v] : metric_rows(m))
        out << c.trace << ',' << c.seed << ',' << m.strategy << ',' << k << ',' << v << '\n';
}

}  // namespace aic::report
