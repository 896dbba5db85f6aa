#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <numeric>
#include <optional>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "aic/corner/harris.hpp"
#include "aic/corner/image.hpp"
#include "aic/error.hpp"
#include "aic/rng.hpp"
#include "aic/svm/anytime.hpp"
#include "aic/svm/train.hpp"

namespace aic::runtime {

using json = nlohmann::json;

// In-progress state of one item. Volatile: lost on power failure unless a
// checkpoint copy was taken with clone().
class Job {
 public:
  virtual ~Job() = default;
  virtual std::size_t done() const = 0;  // work units executed so far
  virtual void advance() = 0;            // execute unit done()
  virtual json result() const = 0;       // output built from the current state
  virtual double knob() const = 0;       // p for the classifier, skip fraction for corners
  virtual std::unique_ptr<Job> clone() const = 0;
};

// An energy-metered anytime computation: a fixed overhead, `units()` work
// units with known costs, and an output packet.
class Workload {
 public:
  virtual ~Workload() = default;
  virtual std::string name() const = 0;
  virtual std::size_t units() const = 0;
  virtual double overhead_cost() const = 0;
  virtual double unit_cost(std::size_t step) const = 0;
  virtual double output_cost() const = 0;
  virtual double default_period() const = 0;
  virtual std::unique_ptr<Job> start(std::size_t item, std::uint64_t seed) const = 0;

  // Expected agreement with the full result after p units, p = 0..units().
  virtual const std::vector<double>* accuracy_lut() const { return nullptr; }
  virtual json truth(std::size_t /*item*/, std::uint64_t /*seed*/) const { return nullptr; }

  // Energy of overhead plus the first p units.
  double prefix_cost(std::size_t p) const {
    double c = overhead_cost();
    for (std::size_t i = 0; i < p; ++i) c += unit_cost(i);
    return c;
  }
  double full_cost() const { return prefix_cost(units()) + output_cost(); }
};

// ---------------------------------------------------------------------------
// Anytime classifier. Item i is a fresh sample from the model's generator with
// a class drawn uniformly; one unit adds one feature.

class SvmWorkload final : public Workload {
 public:
  SvmWorkload(svm::AnytimeModel model, svm::GeneratorParams generator, double overhead_uj = 200.0,
              double output_uj = 50.0)
      : model_(std::move(model)), gen_(generator), overhead_(overhead_uj), output_(output_uj) {
    model_.validate();
    if (generator.features != model_.features || generator.classes != model_.classes)
      throw Error("generator does not match the model's shape");
    if (overhead_ < 0.0 || output_ < 0.0) throw Error("workload costs must be non-negative");
  }

  const svm::AnytimeModel& model() const noexcept { return model_; }

  std::string name() const override { return "svm"; }
  std::size_t units() const override { return model_.features; }
  double overhead_cost() const override { return overhead_; }
  double unit_cost(std::size_t step) const override { return model_.step_cost(step); }
  double output_cost() const override { return output_; }
  double default_period() const override { return 60.0; }
  const std::vector<double>* accuracy_lut() const override { return &model_.accuracy_lut; }

  struct Item {
    std::size_t label = 0;
    std::vector<double> x;
  };

  Item item(std::size_t i, std::uint64_t seed) const {
    Rng rng(derive_seed(seed, i));
    Item it;
    it.label = static_cast<std::size_t>(rng.below(model_.classes));
    it.x.resize(model_.features);
    gen_.draw(it.label, it.x, rng);
    return it;
  }

  json truth(std::size_t i, std::uint64_t seed) const override { return {{"label", item(i, seed).label}}; }

  std::unique_ptr<Job> start(std::size_t i, std::uint64_t seed) const override {
    return std::make_unique<SvmJob>(this, item(i, seed).x);
  }

 private:
  class SvmJob final : public Job {
   public:
    SvmJob(const SvmWorkload* w, std::vector<double> x)
        : w_(w), x_(std::move(x)), ps_(svm::init_partial(w->model_)) {}
    std::size_t done() const override { return ps_.used; }
    void advance() override { svm::advance(ps_, w_->model_, x_); }
    json result() const override { return {{"label", svm::classify(ps_).label}}; }
    double knob() const override { return double(ps_.used); }
    std::unique_ptr<Job> clone() const override { return std::make_unique<SvmJob>(*this); }

   private:
    const SvmWorkload* w_;
    std::vector<double> x_;
    svm::PartialScore ps_;
  };

  svm::AnytimeModel model_;
  svm::DatasetGenerator gen_;
  double overhead_, output_;
};

// ---------------------------------------------------------------------------
// Perforated corner detection. Item i picks one of the images by a keyed
// draw; one unit is one pixel of the response loop, taken in the order that
// makes a k-unit prefix equal to the k-iteration perforation plan.

class CornerWorkload final : public Workload {
 public:
  CornerWorkload(std::vector<corner::GrayImage> images, corner::HarrisParams params = {},
                 corner::CornerCostModel cost = {})
      : images_(std::move(images)), params_(params), cost_(cost) {
    if (images_.empty()) throw Error("corner workload needs at least one image");
    cost_.validate();
    params_.validate();
    for (const auto& img : images_) {
      if (img.width != images_.front().width || img.height != images_.front().height)
        throw Error("corner workload images must share one size");
      responders_.emplace_back(img, params_);
    }
  }

  // Named scenes or .pgm paths.
  static CornerWorkload from_sources(const std::vector<std::string>& sources,
                                     corner::HarrisParams params = {}, corner::CornerCostModel cost = {}) {
    std::vector<corner::GrayImage> imgs;
    for (const auto& s : sources)
      imgs.push_back(std::filesystem::path(s).extension() == ".pgm" ? corner::load_pgm(s)
                                                                   : corner::make_scene(s));
    return CornerWorkload(std::move(imgs), params, cost);
  }

  const corner::HarrisParams& params() const noexcept { return params_; }
  const corner::CornerCostModel& cost_model() const noexcept { return cost_; }
  const std::vector<corner::GrayImage>& images() const noexcept { return images_; }

  std::string name() const override { return "corner"; }
  std::size_t units() const override { return images_.front().size(); }
  double overhead_cost() const override { return cost_.overhead_uj; }
  double unit_cost(std::size_t) const override { return corner::iteration_energy(cost_); }
  double output_cost() const override { return cost_.output_uj; }
  double default_period() const override { return 30.0; }

  std::size_t image_index(std::size_t i, std::uint64_t seed) const {
    return static_cast<std::size_t>(unit_hash(derive_seed(seed, 0x696d67), i) * double(images_.size()));
  }
  std::uint64_t perforation_seed(std::size_t i, std::uint64_t seed) const { return derive_seed(seed, i); }

  std::unique_ptr<Job> start(std::size_t i, std::uint64_t seed) const override {
    const auto img = image_index(i, seed);
    return std::make_unique<CornerJob>(this, img, perforation_seed(i, seed));
  }

  static corner::CornerSet corners_from(const json& result) {
    corner::CornerSet out;
    for (const auto& c : result.at("corners")) out.push_back({c.at(0), c.at(1), c.at(2)});
    return out;
  }

 private:
  class CornerJob final : public Job {
   public:
    CornerJob(const CornerWorkload* w, std::size_t img, std::uint64_t seed)
        : w_(w),
          img_(img),
          order_(std::make_shared<const std::vector<std::uint32_t>>(
              corner::execution_order(w->units(), seed))),
          response_(w->units(), 0.0),
          computed_(w->units(), 0) {}
    std::size_t done() const override { return done_; }
    void advance() override {
      if (done_ >= order_->size()) throw std::out_of_range("corner job already complete");
      const auto p = (*order_)[done_++];
      computed_[p] = 1;
      response_[p] = w_->responders_[img_].response(p);
    }
    json result() const override {
      const auto& img = w_->images_[img_];
      json corners = json::array();
      for (const auto& c : corner::select_corners(response_, computed_, img.width, img.height, w_->params_))
        corners.push_back({c.x, c.y, c.response});
      return {{"image", img_}, {"corners", std::move(corners)}};
    }
    double knob() const override { return 1.0 - double(done_) / double(order_->size()); }
    std::unique_ptr<Job> clone() const override { return std::make_unique<CornerJob>(*this); }

   private:
    const CornerWorkload* w_;
    std::size_t img_;
    std::shared_ptr<const std::vector<std::uint32_t>> order_;
    std::vector<double> response_;
    std::vector<std::uint8_t> computed_;
    std::size_t done_ = 0;
  };

  std::vector<corner::GrayImage> images_;
  corner::HarrisParams params_;
  corner::CornerCostModel cost_;
  std::vector<corner::HarrisResponder> responders_;
};

// Whether two output payloads of the same workload agree: equal labels for
// the classifier, corner equivalence against `reference` for the detector.
inline bool results_match(std::string_view workload, const json& reference, const json& result) {
  if (workload == "svm") return reference.at("label") == result.at("label");
  if (workload == "corner")
    return reference.at("image") == result.at("image") &&
           corner::equivalence_check(CornerWorkload::corners_from(reference),
                                     CornerWorkload::corners_from(result));
  throw Error("unknown workload '" + std::string(workload) + "'");
}

}  // namespace aic::runtime
