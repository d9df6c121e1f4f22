#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synthctl/error.hpp"
#include "synthctl/panel.hpp"

namespace synthctl::fixtures {

/// Portable random stream: std::mt19937_64 (sequence fixed by the standard).
/// uniform() = (x >> 11) * 2^-53 in [0, 1); normal() uses Box-Muller, one
/// variate per pair of uniforms; exponential() = -log(1 - u).
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : engine_(seed) {}

  double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

  double normal() {
    const double u1 = 1.0 - uniform();  // (0, 1]
    const double u2 = uniform();
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
  }

  double exponential() { return -std::log(1.0 - uniform()); }

  /// Flat Dirichlet draw: normalized exponentials.
  Eigen::VectorXd simplex_point(Eigen::Index size) {
    Eigen::VectorXd w(size);
    for (auto& x : w) x = exponential();
    return w / w.sum();
  }

 private:
  std::mt19937_64 engine_;
};

inline std::string donor_name(std::size_t j) {
  char buf[24];
  std::snprintf(buf, sizeof(buf), "d%02zu", j + 1);
  return buf;
}

inline constexpr const char* kTreatedName = "treated";

struct GeneratedPanel {
  PanelDataset panel;
  Period t0 = 0;
  Eigen::VectorXd weights;  // generating convex combination of donors

  /// Study over the whole panel with every donor in the pool.
  [[nodiscard]] StudySpec study_spec() const {
    StudySpec spec;
    spec.treated = kTreatedName;
    spec.t0 = t0;
    for (std::size_t j = 1; j < panel.units().size(); ++j) spec.donors.push_back(panel.units()[j]);
    return spec;
  }
};

namespace detail {

// Units: treated first, then d01..dJ. Times: 1..T.
inline PanelDataset make_panel(const Eigen::VectorXd& treated, const Eigen::MatrixXd& donors) {
  const auto periods = static_cast<std::size_t>(treated.size());
  std::vector<std::string> units{kTreatedName};
  std::vector<std::optional<double>> values(treated.begin(), treated.end());
  for (Eigen::Index j = 0; j < donors.cols(); ++j) {
    units.push_back(donor_name(static_cast<std::size_t>(j)));
    for (Eigen::Index t = 0; t < donors.rows(); ++t) values.emplace_back(donors(t, j));
  }
  std::vector<Period> times(periods);
  for (std::size_t t = 0; t < periods; ++t) times[t] = static_cast<Period>(t + 1);
  return PanelDataset(std::move(units), std::move(times), std::move(values), "outcome");
}

}  // namespace detail

/// Factor-model panel Y_jt = delta_t + lambda_t' mu_j + eps_jt.
///
/// The treated loadings are a flat-Dirichlet convex combination of donor
/// loadings; `effect` is added to the treated unit over the last
/// effect.size() periods. Draw order: weights (J), loadings mu (donor-major,
/// J x F), delta (T), lambda (time-major, T x F), noise (unit-major, treated
/// first). delta_t = 0.1 t + N(0,1); all other draws are standard normal.
inline GeneratedPanel gen_factor_panel(std::uint64_t seed, int donors, int periods, int factors,
                                       double noise_sd, const std::vector<double>& effect) {
  if (donors < 2 || periods < 4 || factors < 1 || !(noise_sd >= 0) || effect.empty() ||
      static_cast<int>(effect.size()) > periods - 2) {
    throw Error(ErrorKind::BadDimensions,
                "need J >= 2, T >= 4, F >= 1, noise_sd >= 0 and 1..T-2 effect periods");
  }
  Rng rng(seed);
  const Eigen::VectorXd w = rng.simplex_point(donors);
  Eigen::MatrixXd loadings(factors, donors);
  for (int j = 0; j < donors; ++j) {
    for (int f = 0; f < factors; ++f) loadings(f, j) = rng.normal();
  }
  Eigen::VectorXd delta(periods);
  for (int t = 0; t < periods; ++t) delta[t] = 0.1 * (t + 1) + rng.normal();
  Eigen::MatrixXd lambda(periods, factors);
  for (int t = 0; t < periods; ++t) {
    for (int f = 0; f < factors; ++f) lambda(t, f) = rng.normal();
  }

  const Eigen::VectorXd treated_loading = loadings * w;
  Eigen::VectorXd treated = delta + lambda * treated_loading;
  for (auto& y : treated) y += noise_sd * rng.normal();
  Eigen::MatrixXd paths = (lambda * loadings).colwise() + delta;
  for (int j = 0; j < donors; ++j) {
    for (int t = 0; t < periods; ++t) paths(t, j) += noise_sd * rng.normal();
  }

  const auto post = static_cast<Eigen::Index>(effect.size());
  for (Eigen::Index k = 0; k < post; ++k) treated[periods - post + k] += effect[static_cast<std::size_t>(k)];
  return {detail::make_panel(treated, paths), static_cast<Period>(periods - post), w};
}

/// Treated path = donor_paths * weights, plus `effect` over the last
/// effect.size() periods. donor_paths is periods x donors.
inline GeneratedPanel gen_convex_hull_panel(const Eigen::VectorXd& weights,
                                            const Eigen::MatrixXd& donor_paths,
                                            const std::vector<double>& effect) {
  if (weights.size() != donor_paths.cols() || weights.size() < 1) {
    throw Error(ErrorKind::BadDimensions, "weights and donor columns disagree");
  }
  if (effect.empty() || static_cast<Eigen::Index>(effect.size()) > donor_paths.rows() - 2) {
    throw Error(ErrorKind::BadDimensions, "need 1..T-2 effect periods");
  }
  if ((weights.array() < 0).any() || std::abs(weights.sum() - 1.0) > 1e-9) {
    throw Error(ErrorKind::InfeasibleWeights, "weights must be non-negative and sum to 1");
  }
  Eigen::VectorXd treated = donor_paths * weights;
  const auto periods = donor_paths.rows();
  const auto post = static_cast<Eigen::Index>(effect.size());
  for (Eigen::Index k = 0; k < post; ++k) treated[periods - post + k] += effect[static_cast<std::size_t>(k)];
  return {detail::make_panel(treated, donor_paths), static_cast<Period>(periods - post), weights};
}

}  // namespace synthctl::fixtures
