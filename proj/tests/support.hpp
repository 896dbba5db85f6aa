#pragma once

// Shared fixtures for the runtime, report and acceptance tests.

#include <memory>
#include <numeric>
#include <string>
#include <vector>

#include "aic/aic.hpp"

namespace aic::testing {

// Units with declared costs; the result records how many ran.
class ToyWorkload final : public runtime::Workload {
 public:
  ToyWorkload(std::vector<double> unit_costs, double overhead, double output, double period = 60.0,
              std::vector<double> lut = {})
      : costs_(std::move(unit_costs)), overhead_(overhead), output_(output), period_(period),
        lut_(std::move(lut)) {}

  std::string name() const override { return "toy"; }
  std::size_t units() const override { return costs_.size(); }
  double overhead_cost() const override { return overhead_; }
  double unit_cost(std::size_t step) const override { return costs_.at(step); }
  double output_cost() const override { return output_; }
  double default_period() const override { return period_; }
  const std::vector<double>* accuracy_lut() const override { return lut_.empty() ? nullptr : &lut_; }

  std::unique_ptr<runtime::Job> start(std::size_t item, std::uint64_t) const override {
    return std::make_unique<ToyJob>(units(), item);
  }

 private:
  class ToyJob final : public runtime::Job {
   public:
    ToyJob(std::size_t n, std::size_t item) : n_(n), item_(item) {}
    std::size_t done() const override { return done_; }
    void advance() override {
      if (done_ >= n_) throw std::out_of_range("toy job complete");
      ++done_;
    }
    runtime::json result() const override { return {{"item", item_}, {"units", done_}}; }
    double knob() const override { return double(done_); }
    std::unique_ptr<runtime::Job> clone() const override { return std::make_unique<ToyJob>(*this); }

   private:
    std::size_t n_, item_, done_ = 0;
  };

  std::vector<double> costs_;
  double overhead_, output_, period_;
  std::vector<double> lut_;
};

inline EnergyTrace constant_trace(double power_uw, double duration_s, std::string name = "constant") {
  return EnergyTrace(std::move(name), {{0.0, power_uw}, {duration_s, power_uw}});
}

// Default settings except the ones a test pins.
inline runtime::RuntimeConfig runtime_config(double initial_uj = 0.0, double idle_uw = 1.0) {
  runtime::RuntimeConfig c;
  c.cap.energy_uj = initial_uj;
  c.idle_power_uw = idle_uw;
  return c;
}

// A small classifier with an accuracy table measured on fresh draws.
inline svm::ModelFile small_svm_model(std::size_t classes = 4, std::size_t features = 30,
                                      std::uint64_t seed = 1) {
  report::TrainSettings s;
  s.generator.classes = classes;
  s.generator.features = features;
  s.generator.per_class = 60;
  s.generator.seed = seed;
  s.lut_samples = 4000;
  return report::train_model(s).file;
}

// Consistency of one run log: time order, outputs only for started items,
// at most one output per item, header and end present.
inline std::string log_problems(const runtime::RunLog& log) {
  using namespace runtime;
  std::string out;
  double last_t = -1e300;
  std::vector<int> started(log.header().items, 0), emitted(log.header().items, 0);
  auto check_time = [&](double t) {
    if (t < last_t - 1e-9) out += "events out of time order; ";
    last_t = std::max(last_t, t);
  };
  for (const auto& e : log.events) {
    std::visit(
        [&](const auto& x) {
          using T = std::decay_t<decltype(x)>;
          if constexpr (requires { x.t; }) check_time(x.t);
          if constexpr (std::is_same_v<T, ev::ItemStarted>) ++started.at(x.item);
          if constexpr (std::is_same_v<T, ev::Output>) {
            if (!started.at(x.item)) out += "output for an item never started; ";
            if (emitted.at(x.item)++) out += "item emitted twice; ";
            if (x.cycle < x.cycle_started) out += "output before start; ";
          }
        },
        e);
  }
  log.end();
  return out;
}

}  // namespace aic::testing
