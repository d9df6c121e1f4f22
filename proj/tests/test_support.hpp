#pragma once

// Test-only helpers: random instances, independent oracles and an
// access-tracking panel wrapper. Nothing here calls the solver under test.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synthctl/fixtures.hpp"
#include "synthctl/panel.hpp"
#include "synthctl/solver.hpp"

namespace synthctl::testing {

struct Instance {
  Eigen::VectorXd x1;
  Eigen::MatrixXd x0;
};

/// Standard-normal predictors; the treated row is a random simplex mix plus
/// noise so the optimum can sit on any face.
inline Instance random_instance(std::uint64_t seed, Eigen::Index donors, Eigen::Index periods,
                                double outside = 0.5) {
  fixtures::Rng rng(seed);
  Instance inst{Eigen::VectorXd(periods), Eigen::MatrixXd(periods, donors)};
  for (Eigen::Index j = 0; j < donors; ++j) {
    for (Eigen::Index t = 0; t < periods; ++t) inst.x0(t, j) = rng.normal();
  }
  const Eigen::VectorXd w = rng.simplex_point(donors);
  inst.x1 = inst.x0 * w;
  for (Eigen::Index t = 0; t < periods; ++t) inst.x1[t] += outside * rng.normal();
  return inst;
}

/// Plain-loop evaluation of sum_t v_t (x1_t - sum_j x0_tj w_j)^2.
inline double naive_objective(const Eigen::VectorXd& x1, const Eigen::MatrixXd& x0,
                              const Eigen::VectorXd& v, const std::vector<double>& w) {
  double total = 0.0;
  for (Eigen::Index t = 0; t < x1.size(); ++t) {
    double synth = 0.0;
    for (Eigen::Index j = 0; j < x0.cols(); ++j) synth += x0(t, j) * w[static_cast<std::size_t>(j)];
    const double r = x1[t] - synth;
    total += v[t] * r * r;
  }
  return total;
}

struct OracleResult {
  std::vector<double> w;
  double squared_objective = 0.0;
};

/// Pattern search on the simplex: repeatedly apply the best transfer of
/// `step` weight from one donor to another (or all of a donor's weight when
/// it holds less), halving the step when no transfer improves, until the
/// step falls below final_step.
inline OracleResult refine_on_lattice(const Eigen::VectorXd& x1, const Eigen::MatrixXd& x0,
                                      const Eigen::VectorXd& v, std::vector<double> w,
                                      double step, double final_step) {
  const auto donors = w.size();
  double best = naive_objective(x1, x0, v, w);
  while (step >= final_step * (1 - 1e-9)) {
    while (true) {
      double candidate_best = best;
      std::optional<std::pair<std::size_t, std::size_t>> move;
      double amount = 0.0;
      for (std::size_t a = 0; a < donors; ++a) {
        if (w[a] <= 0) continue;
        const double give = std::min(step, w[a]);
        for (std::size_t b = 0; b < donors; ++b) {
          if (a == b) continue;
          auto trial = w;
          trial[a] -= give;
          trial[b] += give;
          const double f = naive_objective(x1, x0, v, trial);
          if (f < candidate_best) {
            candidate_best = f;
            move = {a, b};
            amount = give;
          }
        }
      }
      if (!move) break;
      w[move->first] -= amount;
      w[move->second] += amount;
      best = candidate_best;
    }
    step /= 2;
  }
  return {w, best};
}

/// Lattice brute force at `coarse`, refined by pattern search down to `fine`.
inline OracleResult refined_lattice_optimum(const Eigen::VectorXd& x1, const Eigen::MatrixXd& x0,
                                            const VWeights& v, double coarse = 0.01,
                                            double fine = 1e-4) {
  const WeightSolution lattice = brute_force_weights(x1, x0, v, coarse);
  std::vector<double> start(lattice.w.begin(), lattice.w.end());
  return refine_on_lattice(x1, x0, v.diag(), start, coarse, fine);
}

/// Two-pass mean of squares: scale by the largest magnitude first.
inline double two_pass_mspe(const std::vector<double>& gaps, std::size_t begin, std::size_t end) {
  double scale = 0.0;
  for (std::size_t i = begin; i < end; ++i) scale = std::max(scale, std::abs(gaps[i]));
  if (scale == 0.0) return 0.0;
  double acc = 0.0;
  for (std::size_t i = begin; i < end; ++i) {
    const double z = gaps[i] / scale;
    acc += z * z;
  }
  return acc / static_cast<double>(end - begin) * scale * scale;
}

/// Wraps a panel and records which time indices were read.
class TrackingPanel {
 public:
  explicit TrackingPanel(const PanelDataset& inner) : inner_(inner) {}

  const std::vector<std::string>& units() const { return inner_.units(); }
  const std::vector<Period>& times() const { return inner_.times(); }
  const std::string& outcome_name() const { return inner_.outcome_name(); }

  std::optional<double> cell(std::size_t unit, std::size_t time) const {
    ++reads_;
    max_time_ = std::max(max_time_, inner_.times().at(time));
    return inner_.cell(unit, time);
  }

  std::size_t reads() const { return reads_; }
  Period max_time_read() const { return max_time_; }

 private:
  const PanelDataset& inner_;
  mutable std::size_t reads_ = 0;
  mutable Period max_time_ = std::numeric_limits<Period>::min();
};

static_assert(PanelSource<TrackingPanel>);

/// Affinely independent donor paths for exact-recovery fixtures.
inline Eigen::MatrixXd random_paths(std::uint64_t seed, Eigen::Index periods, Eigen::Index donors) {
  fixtures::Rng rng(seed);
  Eigen::MatrixXd paths(periods, donors);
  for (Eigen::Index j = 0; j < donors; ++j) {
    for (Eigen::Index t = 0; t < periods; ++t) paths(t, j) = 10.0 + 0.3 * static_cast<double>(t) + rng.normal();
  }
  return paths;
}

}  // namespace synthctl::testing

namespace synthctl::testing {

/// The bundled end-to-end fixture: four donors over 12 periods, treated =
/// 0.5 d01 + 0.3 d02 + 0.2 d03 through t0 = 8, then +1, +1.5, +2, +2.5.
inline fixtures::GeneratedPanel bundled_hull_fixture() {
  Eigen::MatrixXd paths(12, 4);
  paths.col(0) << 10, 11, 13, 12, 14, 15, 17, 16, 18, 19, 21, 20;
  paths.col(1) << 20, 19, 19, 21, 20, 22, 21, 23, 22, 24, 23, 25;
  paths.col(2) << 5, 7, 6, 8, 10, 9, 11, 13, 12, 14, 16, 15;
  paths.col(3) << 30, 28, 29, 27, 28, 26, 27, 25, 26, 24, 25, 23;
  Eigen::VectorXd w(4);
  w << 0.5, 0.3, 0.2, 0.0;
  return fixtures::gen_convex_hull_panel(w, paths, {1.0, 1.5, 2.0, 2.5});
}

}  // namespace synthctl::testing
