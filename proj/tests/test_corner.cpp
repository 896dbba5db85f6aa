#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include <gtest/gtest.h>

#include "aic/corner/harris.hpp"
#include "aic/corner/image.hpp"

using namespace aic;
using namespace aic::corner;

namespace {

double equivalence_rate(const GrayImage& img, double skip, int seeds) {
  const auto ref = detect_corners(img, PerforationPlan::none());
  int ok = 0;
  for (int s = 1; s <= seeds; ++s)
    ok += equivalence_check(ref, detect_corners(img, PerforationPlan::bernoulli(skip, std::uint64_t(s))));
  return double(ok) / seeds;
}

}  // namespace

TEST(Image, RejectsTinyImages) {
  EXPECT_THROW(GrayImage(2, 5), Error);
  EXPECT_THROW(GrayImage(5, 2), Error);
  EXPECT_NO_THROW(GrayImage(3, 3));
}

TEST(Image, PgmRoundTrip) {
  const auto img = make_scene("complex");
  std::stringstream ss;
  write_pgm(ss, img);
  EXPECT_EQ(read_pgm(ss), img);
}

TEST(Image, PgmHeaderWithCommentAndSmallMaxval) {
  std::string data = "P5\n# comment\n3 3\n1\n";
  data += std::string("\x00\x01\x00\x01\x01\x01\x00\x00\x01", 9);
  std::istringstream in(data);
  const auto img = read_pgm(in);
  EXPECT_EQ(img.at(1, 0), 255);
  EXPECT_EQ(img.at(0, 0), 0);
}

TEST(Image, PgmErrors) {
  std::istringstream p2("P2\n3 3\n255\n");
  EXPECT_THROW(read_pgm(p2), ParseError);
  std::istringstream big("P5\n3 3\n65535\n");
  EXPECT_THROW(read_pgm(big), ParseError);
  std::istringstream truncated("P5\n3 3\n255\nabc");
  EXPECT_THROW(read_pgm(truncated), ParseError);
}

TEST(Scene, PrimitivesPaintInclusiveRegions) {
  const auto img = render_scene("size 10 8\nbackground 5\nrect 2 3 4 5 99\n");
  EXPECT_EQ(img.width, 10);
  EXPECT_EQ(img.height, 8);
  int painted = 0;
  for (int y = 0; y < 8; ++y)
    for (int x = 0; x < 10; ++x) painted += img.at(x, y) == 99;
  EXPECT_EQ(painted, 9);
  EXPECT_EQ(img.at(2, 3), 99);
  EXPECT_EQ(img.at(4, 5), 99);
  EXPECT_EQ(img.at(5, 5), 5);
}

TEST(Scene, ParseErrorsNameTheLine) {
  try {
    render_scene("size 10 10\nbackground 0\nblob 1 2\n");
    FAIL();
  } catch (const ParseError& e) {
    EXPECT_EQ(e.line(), 3u);
  }
  EXPECT_THROW(render_scene("rect 1 1 2 2 10\n"), ParseError);
  EXPECT_THROW(render_scene("size 10 10\nbackground 300\n"), ParseError);
  EXPECT_THROW(render_scene(""), ParseError);
  EXPECT_THROW(make_scene("nope"), Error);
}

TEST(Detect, UniformImageHasNoCorners) {
  const GrayImage flat(40, 30, 128);
  EXPECT_TRUE(detect_corners(flat, PerforationPlan::none()).empty());
  EXPECT_TRUE(detect_corners(flat, PerforationPlan::bernoulli(0.5, 3)).empty());
}

TEST(Detect, RectangleCornersAtVertices) {
  const auto corners = detect_corners(make_scene("rectangle"), PerforationPlan::none());
  ASSERT_EQ(corners.size(), 4u);
  const std::vector<std::pair<int, int>> truth{{28, 20}, {67, 20}, {28, 51}, {67, 51}};
  for (auto [tx, ty] : truth) {
    const bool found = std::any_of(corners.begin(), corners.end(), [&](const Corner& c) {
      return std::abs(c.x - tx) <= 1 && std::abs(c.y - ty) <= 1;
    });
    EXPECT_TRUE(found) << tx << "," << ty;
  }
}

TEST(Detect, CornerSetsAreInBoundsWithoutDuplicates) {
  for (const auto& name : scene_names()) {
    const auto img = make_scene(name);
    for (double skip : {0.0, 0.3, 0.7}) {
      const auto cs = detect_corners(img, PerforationPlan::bernoulli(skip, 5));
      std::set<std::pair<int, int>> seen;
      for (const auto& c : cs) {
        EXPECT_GE(c.x, 0);
        EXPECT_LT(c.x, img.width);
        EXPECT_GE(c.y, 0);
        EXPECT_LT(c.y, img.height);
        EXPECT_TRUE(seen.insert({c.x, c.y}).second);
      }
    }
  }
}

TEST(Detect, UnperforatedRunIgnoresSeed) {
  const auto img = make_scene("complex");
  const auto a = detect_corners(img, PerforationPlan::bernoulli(0.0, 1));
  const auto b = detect_corners(img, PerforationPlan::bernoulli(0.0, 999));
  EXPECT_EQ(a, b);
  EXPECT_EQ(a, detect_corners(img, PerforationPlan::none()));
  EXPECT_EQ(detect_corners(img, PerforationPlan::bernoulli(0.4, 7)),
            detect_corners(img, PerforationPlan::bernoulli(0.4, 7)));
}

TEST(Detect, HalfSkipUsuallyEquivalentOnRectangle) {
  EXPECT_GE(equivalence_rate(make_scene("rectangle"), 0.5, 50), 0.8);
}

TEST(Detect, EquivalenceDegradesWithSkip) {
  for (const char* name : {"rectangle", "complex"}) {
    const auto img = make_scene(name);
    std::vector<double> rates;
    for (double skip : {0.0, 0.2, 0.42, 0.6, 0.8}) rates.push_back(equivalence_rate(img, skip, 60));
    EXPECT_EQ(rates.front(), 1.0);
    for (std::size_t i = 1; i < rates.size(); ++i) EXPECT_LE(rates[i], rates[i - 1] + 0.05) << name << " " << i;
    EXPECT_LT(rates.back(), rates.front());
  }
}

TEST(Detect, ImageSmallerThanWindowIsRejected) {
  HarrisParams p;
  p.window = 5;
  EXPECT_THROW(detect_corners(GrayImage(4, 8, 0), PerforationPlan::none(), p), Error);
  p.window = 4;
  EXPECT_THROW(detect_corners(GrayImage(8, 8, 0), PerforationPlan::none(), p), Error);
}

TEST(Perforation, RealizedSkipRateTracksFraction) {
  for (double skip : {0.1, 0.42, 0.75}) {
    const auto plan = PerforationPlan::bernoulli(skip, 11);
    const std::size_t n = 20000;
    const double realized = 1.0 - double(plan.executed_count(n)) / double(n);
    EXPECT_NEAR(realized, skip, 0.02);
  }
  EXPECT_THROW(PerforationPlan::bernoulli(1.0, 1), Error);
  EXPECT_THROW(PerforationPlan::bernoulli(-0.1, 1), Error);
}

TEST(Perforation, ExecutedCountIsMonotoneInSkip) {
  const std::size_t n = 6912;
  std::size_t prev = n + 1;
  for (double skip = 0.0; skip < 0.95; skip += 0.05) {
    const auto plan = PerforationPlan::bernoulli(skip, 4);
    const auto k = plan.executed_count(n);
    EXPECT_LT(k, prev);
    for (std::size_t i = 0; i < n; i += 97)
      if (plan.executes(i)) {
        EXPECT_TRUE(PerforationPlan::bernoulli(std::max(0.0, skip - 0.05), 4).executes(i));
      }
    prev = k;
  }
}

TEST(Perforation, ExecutionOrderPrefixMatchesExactPlan) {
  const std::size_t n = 500;
  const auto order = execution_order(n, 21);
  for (std::size_t k : {0u, 1u, 37u, 250u, 499u, 500u}) {
    const auto plan = PerforationPlan::with_executed(k, n, 21);
    EXPECT_EQ(plan.executed_count(n), k);
    std::vector<bool> in_prefix(n, false);
    for (std::size_t i = 0; i < k; ++i) in_prefix[order[i]] = true;
    for (std::size_t i = 0; i < n; ++i) EXPECT_EQ(plan.executes(i), in_prefix[i]) << k << " " << i;
  }
  EXPECT_THROW(PerforationPlan::with_executed(501, n, 21), Error);
}

TEST(Equivalence, HandGeometry) {
  const CornerSet ref{{0, 0, 1}, {10, 0, 1}};
  EXPECT_TRUE(equivalence_check(ref, ref));
  EXPECT_TRUE(equivalence_check(ref, CornerSet{{1, 0, 1}, {9, 0, 1}}));
  EXPECT_FALSE(equivalence_check(ref, CornerSet{{6, 0, 1}, {9, 0, 1}}));
  EXPECT_FALSE(equivalence_check(ref, CornerSet{{0, 0, 1}}));
  EXPECT_FALSE(equivalence_check(ref, CornerSet{{5, 0, 1}, {10, 0, 1}}));  // equidistant
  EXPECT_TRUE(equivalence_check(CornerSet{}, CornerSet{}));
}

TEST(Equivalence, Reflexive) {
  for (const auto& name : scene_names())
    for (std::uint64_t s = 1; s <= 10; ++s) {
      const auto cs = detect_corners(make_scene(name), PerforationPlan::bernoulli(0.5, s));
      EXPECT_TRUE(equivalence_check(cs, cs));
    }
}

TEST(Cost, IterationEnergyAndTotals) {
  const CornerCostModel m;
  const auto img = make_scene("rectangle");
  const std::size_t P = img.size();
  EXPECT_EQ(iteration_energy(m), 1.0);
  EXPECT_DOUBLE_EQ(detection_energy(m, P), double(P) * 1.0 + 300.0);
  const auto plan = PerforationPlan::bernoulli(0.42, 8);
  const double e = detection_energy(m, plan.executed_count(P));
  const double expect = 0.58 * double(P) + 300.0;
  EXPECT_NEAR(e, expect, 0.02 * expect);
}

TEST(Cost, EnergyStrictlyDecreasesWithSkip) {
  const CornerCostModel m;
  const std::size_t P = make_scene("cross").size();
  double prev = INFINITY;
  for (double skip : {0.0, 0.1, 0.3, 0.5, 0.7, 0.9}) {
    const double e = detection_energy(m, PerforationPlan::bernoulli(skip, 2).executed_count(P));
    EXPECT_LT(e, prev);
    prev = e;
  }
}

TEST(ChooseSkip, Examples) {
  const CornerCostModel m;
  const auto img = make_scene("rectangle");
  const double P = double(img.size());
  auto plan = choose_skip(1e9, img, m, 1);
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->skip_fraction, 0.0);
  EXPECT_EQ(plan->executed_count(img.size()), img.size());

  plan = choose_skip(m.overhead_uj + m.output_uj + 0.5 * P * m.per_iteration_uj, img, m, 1);
  ASSERT_TRUE(plan);
  EXPECT_NEAR(plan->skip_fraction, 0.5, 1.0 / P);
  const auto k = plan->executed_count(img.size());
  EXPECT_LE(detection_energy(m, k) + m.output_uj, m.overhead_uj + m.output_uj + 0.5 * P + 1e-9);

  EXPECT_FALSE(choose_skip(m.overhead_uj + m.output_uj - 1.0, img, m, 1).has_value());
  plan = choose_skip(m.overhead_uj + m.output_uj, img, m, 1);
  ASSERT_TRUE(plan);
  EXPECT_EQ(plan->executed_count(img.size()), 0u);
}

// Property: the chosen plan is the largest one that fits.
TEST(ChooseSkip, MaximalWithinBudget) {
  CornerCostModel m;
  m.per_iteration_uj = 0.7;
  const auto img = make_scene("cross");
  Rng rng(5);
  for (int i = 0; i < 40; ++i) {
    const double budget = 350.0 + 6000.0 * rng.uniform();
    const auto plan = choose_skip(budget, img, m, 3);
    ASSERT_TRUE(plan);
    const auto k = plan->executed_count(img.size());
    EXPECT_LE(detection_energy(m, k) + m.output_uj, budget + 1e-9);
    if (k < img.size()) {
      EXPECT_GT(detection_energy(m, k + 1) + m.output_uj, budget);
    }
  }
}

TEST(CornersCsv, Format) {
  std::ostringstream out;
  write_corners_csv(out, CornerSet{{1, 2, 0.5}, {3, 4, 1e-3}});
  EXPECT_EQ(out.str(), "x,y,response\n1,2,0.5\n3,4,0.001\n");
}
