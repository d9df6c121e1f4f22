#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "synthctl/fixtures.hpp"
#include "synthctl/robustness.hpp"
#include "test_support.hpp"

namespace synthctl {
namespace {

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidSpec;
}

// 21 periods, t0 = 17, four treated periods.
fixtures::GeneratedPanel yearly_panel(std::uint64_t seed, double noise, int donors = 6) {
  return fixtures::gen_factor_panel(seed, donors, 21, 2, noise, {2.0, 2.0, 2.0, 2.0});
}

TEST(InTimePlacebo, RejectsLateDates) {
  const auto g = yearly_panel(1, 0.1);
  const auto spec = g.study_spec();
  EXPECT_EQ(kind_of([&] { in_time_placebo_study(g.panel, spec, g.t0); }), ErrorKind::PlaceboTooLate);
  EXPECT_EQ(kind_of([&] { in_time_placebo_study(g.panel, spec, g.t0 + 2); }), ErrorKind::PlaceboTooLate);
  EXPECT_EQ(kind_of([&] { in_time_placebo_study(g.panel, spec, 1); }), ErrorKind::TooFewPrePeriods);
  EXPECT_EQ(kind_of([&] { in_time_placebo_study(g.panel, spec, 0); }), ErrorKind::TooFewPrePeriods);
  EXPECT_NO_THROW(in_time_placebo_study(g.panel, spec, 2));
}

TEST(InTimePlacebo, WindowStopsAtActualTreatment) {
  const auto g = yearly_panel(2, 0.1);
  const auto spec = g.study_spec();
  ASSERT_EQ(spec.t0, 17);
  const auto study = in_time_placebo_study(g.panel, spec, 12);
  EXPECT_EQ(study.pre_periods.size(), 12u);   // 1..12
  EXPECT_EQ(study.post_periods.size(), 5u);   // 13..17
  EXPECT_EQ(study.dataset.times()[study.post_periods.end - 1], 17);

  const auto f = in_time_placebo(g.panel, spec, 12);
  EXPECT_EQ(f.times.size(), 17u);
  EXPECT_EQ(f.times.back(), 17);
}

TEST(InTimePlacebo, NeverReadsTreatedPeriods) {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const auto g = yearly_panel(seed, 0.2);
    const testing::TrackingPanel tracked(g.panel);
    const auto f = in_time_placebo(tracked, g.study_spec(), 10);
    EXPECT_GT(tracked.reads(), 0u);
    EXPECT_EQ(tracked.max_time_read(), g.t0);
    EXPECT_EQ(f.times.back(), g.t0);
  }
}

TEST(InTimePlacebo, ValidatedStudyOverloadMatches) {
  const auto g = yearly_panel(3, 0.2);
  const auto study = validate(g.panel, g.study_spec());
  const auto a = in_time_placebo(study, 11);
  const auto b = in_time_placebo(g.panel, g.study_spec(), 11);
  EXPECT_EQ(a.gaps, b.gaps);
  EXPECT_EQ(a.ratio, b.ratio);
}

TEST(InTimePlacebo, NoiselessFactorModelHasNoPlaceboEffect) {
  const auto paths = testing::random_paths(4, 20, 5);
  Eigen::VectorXd w(5);
  w << 0.4, 0.35, 0.25, 0.0, 0.0;
  const auto g = fixtures::gen_convex_hull_panel(w, paths, {3, 3, 3, 3});
  const auto f = in_time_placebo(g.panel, g.study_spec(), 10);
  EXPECT_LE(f.pre_rmspe, 1e-9);
  EXPECT_LE(f.post_rmspe, 1e-9);
  EXPECT_EQ(f.ratio, 1.0);
}

TEST(InTimePlacebo, SmallNoiseRatioNearOne) {
  int inside = 0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    const auto g = fixtures::gen_factor_panel(1000 + seed, 8, 24, 2, 0.01, {1, 1, 1, 1});
    const auto f = in_time_placebo(g.panel, g.study_spec(), 14);
    inside += f.ratio >= 0.5 && f.ratio <= 2.0;
  }
  EXPECT_GE(inside, 80) << "of 100 seeds";
}

TEST(LeaveOneOut, SkipsZeroWeightDonors) {
  const auto paths = testing::random_paths(5, 14, 5);
  Eigen::VectorXd w(5);
  w << 0.5, 0.0, 0.3, 0.0, 0.2;
  const auto g = fixtures::gen_convex_hull_panel(w, paths, {1, 2});
  const auto study = validate(g.panel, g.study_spec());
  const auto base = estimate(study);
  const auto loo = leave_one_out(study, base);
  std::vector<std::string> excluded;
  for (const auto& r : loo) excluded.push_back(r.excluded);
  EXPECT_EQ(excluded, (std::vector<std::string>{"d01", "d03", "d05"}));
  for (const auto& r : loo) {
    EXPECT_EQ(r.fit.donors.size(), 4u);
    EXPECT_EQ(std::count(r.fit.donors.begin(), r.fit.donors.end(), r.excluded), 0);
    EXPECT_GE(r.fit.pre_mspe, base.pre_mspe - 1e-12);
  }
}

TEST(LeaveOneOut, PreFitNeverImproves) {
  for (std::uint64_t seed = 0; seed < 15; ++seed) {
    const auto g = yearly_panel(50 + seed, 0.3, 7);
    const auto study = validate(g.panel, g.study_spec());
    const auto base = estimate(study);
    for (const auto& r : leave_one_out(study, base, 3)) {
      EXPECT_GE(r.fit.pre_mspe, base.pre_mspe * (1 - 1e-9) - 1e-14) << "seed " << seed << " " << r.excluded;
    }
  }
}

TEST(LeaveOneOut, RemovingZeroWeightDonorKeepsWeights) {
  const auto paths = testing::random_paths(6, 14, 4);
  Eigen::VectorXd w(4);
  w << 0.6, 0.4, 0.0, 0.0;
  const auto g = fixtures::gen_convex_hull_panel(w, paths, {1});
  const auto study = validate(g.panel, g.study_spec());
  const auto base = estimate(study);
  ASSERT_LE(base.weights.w[3], kSupportWeight);
  const auto reduced = estimate(with_pool(study, "treated", {"d01", "d02", "d03"}));
  EXPECT_LE((reduced.weights.w - base.weights.w.head(3)).cwiseAbs().maxCoeff(), 1e-8);
}

TEST(LeaveOneOut, Errors) {
  const auto g = yearly_panel(7, 0.2, 3);
  const auto study = validate(g.panel, g.study_spec());
  const auto base = estimate(study);
  const auto other = with_pool(study, "treated", {"d01", "d02"});
  EXPECT_EQ(kind_of([&] { leave_one_out(other, base); }), ErrorKind::DimensionMismatch);

  const auto single = with_pool(study, "treated", {"d02"});
  EXPECT_EQ(kind_of([&] { leave_one_out(single, estimate(single)); }), ErrorKind::EmptyDonorPool);
}

TEST(LeaveOneOut, ParallelMatchesSerial) {
  const auto g = yearly_panel(8, 0.3, 9);
  const auto study = validate(g.panel, g.study_spec());
  const auto base = estimate(study);
  const auto a = leave_one_out(study, base, 1);
  const auto b = leave_one_out(study, base, 5);
  ASSERT_EQ(a.size(), b.size());
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].excluded, b[i].excluded);
    EXPECT_EQ(a[i].fit.weights.w, b[i].fit.weights.w);
  }
}

}  // namespace
}  // namespace synthctl
