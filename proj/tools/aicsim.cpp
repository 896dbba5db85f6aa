// aicsim: train models, generate traces, run and sweep intermittent-execution
// simulations, and re-derive reports from stored run logs.

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>
#include <fmt/format.h>

#include "aic/aic.hpp"

namespace fs = std::filesystem;
using namespace aic;

namespace {

struct Common {
  std::string config_path;
  std::vector<std::string> sets;
};

void add_common(CLI::App* app, Common& c) {
  app->add_option("--config", c.config_path, "INI file with overrides")->check(CLI::ExistingFile);
  app->add_option("--set", c.sets, "Override one setting, e.g. --set checkpoint.interval=5");
}

report::SimConfig load(const Common& c) {
  report::SimConfig cfg;
  if (!c.config_path.empty()) cfg = report::load_config(c.config_path, cfg);
  for (const auto& s : c.sets) {
    const auto eq = s.find('=');
    if (eq == std::string::npos) throw Error("--set expects key=value, got '" + s + "'");
    report::set_option(cfg, s.substr(0, eq), s.substr(eq + 1));
  }
  return cfg;
}

fs::path output_dir(const std::string& flag) {
  fs::path dir = flag;
  if (dir.empty()) {
    const char* env = std::getenv("AIC_OUTPUT_DIR");
    dir = env && *env ? env : ".";
  }
  fs::create_directories(dir);
  return dir;
}

// A trace file path, or a synthetic/named trace kind built from [trace].
EnergyTrace trace_from(const std::string& spec, const report::SimConfig& cfg, std::uint64_t seed,
                       double voltage_load) {
  if (fs::exists(spec))
    return voltage_load > 0.0 ? load_trace(spec, TraceFormat::voltage_csv, voltage_load)
                              : load_trace(spec);
  auto t = cfg.trace;
  t.kind = spec;
  try {
    return report::make_trace(t, seed);
  } catch (const Error&) {
    throw Error("trace '" + spec +
                "' is neither a file nor a trace kind (constant, square-wave, random-walk, RF, SOM, SIM, SOR, SIR)");
  }
}

std::vector<runtime::StrategyConfig> strategies_from(const std::vector<std::string>& names,
                                                     const report::SimConfig& cfg) {
  std::vector<runtime::StrategyConfig> out;
  for (const auto& n : names) out.push_back(runtime::parse_strategy(n, cfg.strategy));
  return out;
}

std::string file_label(std::string s) {
  for (auto& ch : s)
    if (ch == ':' || ch == '/') ch = '_';
  return s;
}

void write_file(const fs::path& p, const auto& writer) {
  std::ofstream out(p, std::ios::binary);
  if (!out) throw Error("cannot write " + p.string());
  writer(out);
  if (!out) throw Error("error writing " + p.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Approximate intermittent computing simulator"};
  app.require_subcommand(1);

  // train
  Common train_c;
  std::string train_out, train_dir, train_data;
  auto* train = app.add_subcommand("train", "Generate data, train an anytime classifier and save it");
  add_common(train, train_c);
  train->add_option("--out", train_out, "Model file (default <output dir>/model.txt)");
  train->add_option("--output-dir", train_dir, "Output directory (default $AIC_OUTPUT_DIR or .)");
  train->add_option("--dataset-csv", train_data, "Also write the generated dataset as CSV");

  // gen-trace
  Common gen_c;
  std::string gen_kind = "constant", gen_out;
  std::uint64_t gen_seed = 1;
  auto* gen = app.add_subcommand("gen-trace", "Write a synthetic energy trace as CSV");
  add_common(gen, gen_c);
  gen->add_option("--kind", gen_kind, "constant, square-wave, random-walk, RF, SOM, SIM, SOR or SIR");
  gen->add_option("--seed", gen_seed, "Random seed");
  gen->add_option("--out", gen_out, "Trace file")->required();

  // run
  Common run_c;
  std::string run_trace, run_workload = "svm", run_model, run_dir;
  std::vector<std::string> run_strategies;
  std::uint64_t run_seed = 1;
  double run_vload = 0.0;
  auto* run = app.add_subcommand("run", "Run strategies against the continuous reference on one trace");
  add_common(run, run_c);
  run->add_option("--trace", run_trace, "Trace CSV or trace kind")->required();
  run->add_option("--workload", run_workload, "svm or corner")->check(CLI::IsMember({"svm", "corner"}));
  run->add_option("--strategy", run_strategies, "greedy, smart[:A], checkpoint[:interval]")->required();
  run->add_option("--model", run_model, "Model file (svm workload)");
  run->add_option("--seed", run_seed, "Random seed");
  run->add_option("--voltage-load", run_vload, "Trace holds voltages across this load (ohms)");
  run->add_option("--output-dir", run_dir, "Output directory (default $AIC_OUTPUT_DIR or .)");

  // report
  std::vector<std::string> rep_logs;
  std::string rep_out, rep_reference = "continuous";
  auto* rep = app.add_subcommand("report", "Recompute a report from stored run logs");
  rep->add_option("logs", rep_logs, "Run log files")->required()->check(CLI::ExistingFile);
  rep->add_option("--out", rep_out, "Report CSV (default stdout)");
  rep->add_option("--reference", rep_reference, "Reference strategy for coherence and throughput");

  // sweep
  Common sw_c;
  std::vector<std::string> sw_traces, sw_strategies;
  std::vector<std::uint64_t> sw_seeds{1};
  std::string sw_workload = "svm", sw_model, sw_out;
  auto* sweep = app.add_subcommand("sweep", "Cross traces, seeds and strategies into one CSV");
  add_common(sweep, sw_c);
  sweep->add_option("--trace", sw_traces, "Trace CSVs or kinds")->required();
  sweep->add_option("--seeds", sw_seeds, "Seeds")->delimiter(',');
  sweep->add_option("--strategy", sw_strategies, "Strategies")->required();
  sweep->add_option("--workload", sw_workload, "svm or corner")->check(CLI::IsMember({"svm", "corner"}));
  sweep->add_option("--model", sw_model, "Model file (svm workload)");
  sweep->add_option("--out", sw_out, "Sweep CSV (default <output dir>/sweep.csv)");

  // selftest
  std::size_t st_n = 40;
  std::uint64_t st_draws = 1000000, st_seed = 1;
  double st_tol = 0.01;
  auto* self = app.add_subcommand("selftest", "Check the analytic coherence estimate against Monte Carlo");
  self->add_option("--features", st_n, "Feature count n");
  self->add_option("--draws", st_draws, "Monte Carlo draws");
  self->add_option("--seed", st_seed, "Random seed");
  self->add_option("--tolerance", st_tol, "Allowed absolute difference");

  CLI11_PARSE(app, argc, argv);

  try {
    if (*train) {
      const auto cfg = load(train_c);
      const auto out = report::train_model(cfg.train);
      const fs::path path = train_out.empty() ? output_dir(train_dir) / "model.txt" : fs::path(train_out);
      if (path.has_parent_path()) fs::create_directories(path.parent_path());
      svm::save_model(path, out.file);
      if (!train_data.empty())
        write_file(train_data, [&](std::ostream& o) { svm::write_dataset_csv(o, svm::gen_dataset(cfg.train.generator)); });
      const auto& lut = out.file.model.accuracy_lut;
      std::cout << fmt::format("model: {}\nclasses {} features {}\ntrain accuracy {:.4f}\nholdout accuracy {:.4f}\n",
                               path.string(), out.file.model.classes, out.file.model.features,
                               out.train_accuracy, out.holdout_accuracy);
      std::cout << fmt::format("accuracy table: p=0 {:.4f}, p={} {:.4f}, p={} {:.4f}\n", lut.front(),
                               lut.size() / 4, lut[lut.size() / 4], lut.size() - 1, lut.back());
    } else if (*gen) {
      const auto cfg = load(gen_c);
      const auto t = trace_from(gen_kind, cfg, gen_seed, 0.0);
      save_trace(gen_out, t);
      std::cout << fmt::format("{}: {} samples, {} s, {:.1f} uJ harvested\n", gen_out, t.size(),
                               t.duration(), t.energy_between(t.start(), t.end()));
    } else if (*run) {
      const auto cfg = load(run_c);
      const auto dir = output_dir(run_dir);
      std::optional<svm::ModelFile> model;
      if (!run_model.empty()) model = svm::load_model(run_model);
      const auto w = report::make_workload(run_workload, cfg, model ? &*model : nullptr);
      const auto trace = trace_from(run_trace, cfg, run_seed, run_vload);
      const auto logs =
          report::run_with_reference(trace, *w, strategies_from(run_strategies, cfg), cfg.runtime, run_seed);
      for (const auto& l : logs)
        runtime::save_log(dir / (file_label(l.header().strategy) + ".jsonl"), l);
      const auto rep_data = report::compute_metrics(logs);
      write_file(dir / "report.csv",
                 [&](std::ostream& o) { report::write_report_csv(o, rep_data, report::config_entries(cfg)); });
      for (const auto& m : rep_data.strategies)
        std::cout << fmt::format("{:<16} outputs {:>5}  coherence {:>7}  throughput {:.3f}\n", m.strategy,
                                 m.outputs, m.coherence ? fmt::format("{:.4f}", *m.coherence) : "-",
                                 m.throughput_norm);
      std::cout << "wrote " << (dir / "report.csv").string() << '\n';
    } else if (*rep) {
      std::vector<runtime::RunLog> logs;
      for (const auto& p : rep_logs) logs.push_back(runtime::load_log(p));
      const auto r = report::compute_metrics(logs, rep_reference);
      std::vector<std::pair<std::string, std::string>> cfg;
      for (const auto& [k, v] : logs.front().header().config.items())
        cfg.emplace_back("run." + k, v.dump());
      if (rep_out.empty())
        report::write_report_csv(std::cout, r, cfg);
      else
        write_file(rep_out, [&](std::ostream& o) { report::write_report_csv(o, r, cfg); });
    } else if (*sweep) {
      const auto cfg = load(sw_c);
      std::optional<svm::ModelFile> model;
      if (!sw_model.empty()) model = svm::load_model(sw_model);
      const auto w = report::make_workload(sw_workload, cfg, model ? &*model : nullptr);
      std::vector<EnergyTrace> traces;
      for (const auto& t : sw_traces) traces.push_back(trace_from(t, cfg, sw_seeds.front(), 0.0));
      const auto cases = report::run_sweep(cfg, *w, traces, sw_seeds, strategies_from(sw_strategies, cfg));
      const fs::path path = sw_out.empty() ? output_dir("") / "sweep.csv" : fs::path(sw_out);
      write_file(path, [&](std::ostream& o) { report::write_sweep_csv(o, cases, report::config_entries(cfg)); });
      std::cout << fmt::format("{:<10} {:>6} {:<16} {:>9} {:>10}\n", "trace", "seed", "strategy", "accuracy",
                               "throughput");
      for (const auto& c : cases)
        for (const auto& m : c.report.strategies)
          std::cout << fmt::format("{:<10} {:>6} {:<16} {:>9} {:>10.3f}\n", c.trace, c.seed, m.strategy,
                                   m.accuracy ? fmt::format("{:.4f}", *m.accuracy) : "-", m.throughput_norm);
      std::cout << "wrote " << path.string() << '\n';
    } else if (*self) {
      const auto stats = svm::CoefficientStats::iid(st_n);
      svm::McConfig mc;
      mc.draws = st_draws;
      mc.seed = st_seed;
      const auto curve = svm::coherence_curve_mc(stats, st_n, mc);
      bool ok = true;
      std::cout << fmt::format("{:>4} {:>10} {:>10} {:>9}\n", "p", "analytic", "mc", "diff");
      for (std::size_t p = 0; p <= st_n; p += std::max<std::size_t>(1, st_n / 8)) {
        const double a = svm::estimate_coherence_analytic(stats, p, st_n);
        const double d = std::abs(a - curve[p].probability);
        ok = ok && d <= st_tol;
        std::cout << fmt::format("{:>4} {:>10.5f} {:>10.5f} {:>9.5f}\n", p, a, curve[p].probability, d);
      }
      const double at_n = svm::estimate_coherence_analytic(stats, st_n, st_n);
      ok = ok && at_n == 1.0;
      std::cout << (ok ? "selftest passed\n" : "selftest FAILED\n");
      return ok ? 0 : 1;
    }
  } catch (const std::exception& e) {
    std::cerr << "aicsim: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
