#include <cmath>
#include <string>
#include <vector>

#include "gtest/gtest.h"
#include "synthctl/estimator.hpp"
#include "synthctl/fixtures.hpp"
#include "test_support.hpp"

namespace synthctl {
namespace {

using fixtures::gen_convex_hull_panel;
using fixtures::gen_factor_panel;

ErrorKind kind_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.kind();
  }
  ADD_FAILURE() << "no error raised";
  return ErrorKind::InvalidSpec;
}

TEST(Rng, KnownStream) {
  // mt19937_64 with the default seed: the 10000th output is fixed by the standard.
  std::mt19937_64 reference;
  reference.discard(9999);
  EXPECT_EQ(reference(), 9981545732273789042ull);

  fixtures::Rng a(11), b(11);
  for (int i = 0; i < 100; ++i) {
    const double u = a.uniform();
    EXPECT_EQ(u, b.uniform());
    EXPECT_GE(u, 0.0);
    EXPECT_LT(u, 1.0);
  }
  std::mt19937_64 raw(5);
  fixtures::Rng wrapped(5);
  EXPECT_EQ(wrapped.uniform(), static_cast<double>(raw() >> 11) / 9007199254740992.0);
}

TEST(Rng, SimplexPointIsFeasible) {
  fixtures::Rng rng(2);
  for (int i = 0; i < 100; ++i) {
    const auto w = rng.simplex_point(1 + i % 7);
    EXPECT_NEAR(w.sum(), 1.0, 1e-12);
    EXPECT_GE(w.minCoeff(), 0.0);
  }
}

TEST(FactorPanel, DeterministicInSeed) {
  const auto a = gen_factor_panel(99, 5, 10, 2, 0.5, {1, 2});
  const auto b = gen_factor_panel(99, 5, 10, 2, 0.5, {1, 2});
  const auto c = gen_factor_panel(100, 5, 10, 2, 0.5, {1, 2});
  EXPECT_EQ(to_long_csv(a.panel), to_long_csv(b.panel));
  EXPECT_NE(to_long_csv(a.panel), to_long_csv(c.panel));
  EXPECT_EQ(a.weights, b.weights);
}

TEST(FactorPanel, Shape) {
  const auto g = gen_factor_panel(1, 7, 15, 3, 0.1, {1, 1, 1});
  EXPECT_EQ(g.panel.units().size(), 8u);
  EXPECT_EQ(g.panel.units().front(), "treated");
  EXPECT_EQ(g.panel.units()[1], "d01");
  EXPECT_EQ(g.panel.units().back(), "d07");
  EXPECT_EQ(g.panel.times().front(), 1);
  EXPECT_EQ(g.panel.times().back(), 15);
  EXPECT_EQ(g.t0, 12);
  EXPECT_EQ(g.weights.size(), 7);
  EXPECT_NEAR(g.weights.sum(), 1.0, 1e-12);
  EXPECT_EQ(g.study_spec().donors.size(), 7u);
}

TEST(FactorPanel, NoiselessGapsEqualEffect) {
  const std::vector<double> effect{0.5, 1.0, 1.5};
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto g = gen_factor_panel(seed, 4, 12, 2, 0.0, effect);
    const auto study = validate(g.panel, g.study_spec());
    const auto treated = study.treated_path();
    const Eigen::VectorXd synthetic = study.donor_paths() * g.weights;
    for (Eigen::Index t = 0; t < 12; ++t) {
      const double expected = t < 9 ? 0.0 : effect[static_cast<std::size_t>(t - 9)];
      EXPECT_NEAR(treated[t] - synthetic[t], expected, 1e-6);
    }
  }
}

TEST(FactorPanel, Errors) {
  EXPECT_EQ(kind_of([] { gen_factor_panel(1, 1, 10, 2, 0.1, {1}); }), ErrorKind::BadDimensions);
  EXPECT_EQ(kind_of([] { gen_factor_panel(1, 3, 3, 2, 0.1, {1}); }), ErrorKind::BadDimensions);
  EXPECT_EQ(kind_of([] { gen_factor_panel(1, 3, 10, 0, 0.1, {1}); }), ErrorKind::BadDimensions);
  EXPECT_EQ(kind_of([] { gen_factor_panel(1, 3, 10, 2, -0.1, {1}); }), ErrorKind::BadDimensions);
  EXPECT_EQ(kind_of([] { gen_factor_panel(1, 3, 10, 2, 0.1, {}); }), ErrorKind::BadDimensions);
  EXPECT_EQ(kind_of([] { gen_factor_panel(1, 3, 5, 2, 0.1, {1, 1, 1, 1}); }), ErrorKind::BadDimensions);
}

TEST(ConvexHullPanel, RecoversWeightsAndEffect) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    fixtures::Rng rng(seed);
    const auto donors = 2 + static_cast<Eigen::Index>(seed % 4);
    const auto paths = testing::random_paths(seed + 500, 14, donors);
    const Eigen::VectorXd w = rng.simplex_point(donors);
    const std::vector<double> effect{1.0, -2.0, 0.5};
    const auto g = gen_convex_hull_panel(w, paths, effect);
    const auto f = estimate(validate(g.panel, g.study_spec()));
    EXPECT_LE((f.weights.w - w).cwiseAbs().maxCoeff(), 1e-4) << "seed " << seed;
    for (std::size_t k = 0; k < effect.size(); ++k) {
      EXPECT_NEAR(f.gaps[static_cast<Eigen::Index>(11 + k)], effect[k], 1e-4);
    }
  }
}

TEST(ConvexHullPanel, Errors) {
  const auto paths = testing::random_paths(1, 8, 3);
  EXPECT_EQ(kind_of([&] { gen_convex_hull_panel(Eigen::Vector2d(0.5, 0.5), paths, {1}); }),
            ErrorKind::BadDimensions);
  EXPECT_EQ(kind_of([&] { gen_convex_hull_panel(Eigen::Vector3d(0.5, 0.5, 0.5), paths, {1}); }),
            ErrorKind::InfeasibleWeights);
  EXPECT_EQ(kind_of([&] { gen_convex_hull_panel(Eigen::Vector3d(1.2, -0.2, 0), paths, {1}); }),
            ErrorKind::InfeasibleWeights);
  EXPECT_EQ(kind_of([&] { gen_convex_hull_panel(Eigen::Vector3d(1, 0, 0), paths, {}); }),
            ErrorKind::BadDimensions);
}

TEST(Fixtures, CsvRoundTripPreservesDesign) {
  const auto g = gen_factor_panel(12, 5, 11, 2, 0.4, {1, 2});
  const auto reloaded = parse_long_csv(to_long_csv(g.panel));
  EXPECT_EQ(reloaded, g.panel);
  const auto a = design_matrices(validate(g.panel, g.study_spec()));
  const auto b = design_matrices(validate(reloaded, g.study_spec()));
  EXPECT_EQ(a.treated, b.treated);
  EXPECT_EQ(a.donors, b.donors);
}

TEST(Fixtures, BundledFixtureMatchesCommittedCsv) {
  const auto committed = load_long_csv(SYNTHCTL_DATA_DIR "/convex_hull_panel.csv");
  const auto regenerated = testing::bundled_hull_fixture();
  EXPECT_EQ(to_long_csv(committed), to_long_csv(regenerated.panel));
  EXPECT_EQ(regenerated.t0, 8);
}

}  // namespace
}  // namespace synthctl
