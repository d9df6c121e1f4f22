#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synthctl/error.hpp"
#include "synthctl/panel.hpp"

namespace synthctl {

/// Diagonal predictor weights (the V matrix). Non-negative, sums to one.
class VWeights {
 public:
  explicit VWeights(Eigen::VectorXd diag) : diag_(std::move(diag)) {
    if (diag_.size() == 0) throw Error(ErrorKind::DimensionMismatch, "V must be non-empty");
    if ((diag_.array() < 0).any() || !diag_.allFinite()) {
      throw Error(ErrorKind::InvalidSpec, "V entries must be finite and non-negative");
    }
    if (std::abs(diag_.sum() - 1.0) > 1e-12) {
      throw Error(ErrorKind::InvalidSpec, "V entries must sum to 1");
    }
  }

  static VWeights uniform(Eigen::Index size) {
    return VWeights(Eigen::VectorXd::Constant(size, 1.0 / static_cast<double>(size)));
  }

  [[nodiscard]] const Eigen::VectorXd& diag() const noexcept { return diag_; }
  [[nodiscard]] Eigen::Index size() const noexcept { return diag_.size(); }

 private:
  Eigen::VectorXd diag_;
};

struct WeightSolution {
  Eigen::VectorXd w;
  double objective = 0.0;  // sqrt((x1 - x0 w)' V (x1 - x0 w))
  std::int64_t iterations = 0;
  bool converged = false;

  [[nodiscard]] double squared_objective() const noexcept { return objective * objective; }
};

inline constexpr std::int64_t kDefaultMaxIter = 100000;
inline constexpr double kWeightClamp = 1e-12;

/// Squared V-weighted discrepancy (x1 - x0 w)' V (x1 - x0 w).
inline double weighted_discrepancy(const Eigen::VectorXd& x1, const Eigen::MatrixXd& x0,
                                   const VWeights& v, const Eigen::VectorXd& w) {
  const Eigen::VectorXd r = x1 - x0 * w;
  return (v.diag().array() * r.array().square()).sum();
}

namespace detail {

inline void check_dimensions(const Eigen::VectorXd& x1, const Eigen::MatrixXd& x0,
                             const VWeights& v) {
  if (x0.cols() < 1) throw Error(ErrorKind::DimensionMismatch, "donor matrix has no columns");
  if (x0.rows() != x1.size() || v.size() != x1.size()) {
    throw Error(ErrorKind::DimensionMismatch,
                "x1 has " + std::to_string(x1.size()) + " rows, x0 has " +
                    std::to_string(x0.rows()) + ", V has " + std::to_string(v.size()));
  }
}

inline WeightSolution finish(const Eigen::VectorXd& x1, const Eigen::MatrixXd& x0,
                             const VWeights& v, Eigen::VectorXd w, std::int64_t iterations,
                             bool converged) {
  for (auto& wj : w) {
    if (wj < kWeightClamp) wj = 0.0;
  }
  w /= w.sum();
  const double sq = weighted_discrepancy(x1, x0, v, w);
  return {std::move(w), std::sqrt(std::max(sq, 0.0)), iterations, converged};
}

/// Affine minimum-norm combination of the corral columns: argmin ||P a||
/// subject to sum(a) = 1. Solved as a least-squares problem in the
/// differences to the first column.
inline Eigen::VectorXd affine_min_norm(const Eigen::MatrixXd& points) {
  const Eigen::Index k = points.cols();
  Eigen::VectorXd alpha(k);
  if (k == 1) {
    alpha[0] = 1.0;
    return alpha;
  }
  const Eigen::MatrixXd diffs = points.rightCols(k - 1).colwise() - points.col(0);
  const Eigen::VectorXd beta = diffs.colPivHouseholderQr().solve(-points.col(0));
  alpha[0] = 1.0 - beta.sum();
  alpha.tail(k - 1) = beta;
  return alpha;
}

}  // namespace detail

/// Minimizes (x1 - x0 w)' V (x1 - x0 w) over the probability simplex.
///
/// Wolfe's minimum-norm-point method: the shifted points p_j = V^{1/2}(x0_j - x1)
/// span a polytope and the optimum is its point closest to the origin. Each
/// major cycle adds the Frank-Wolfe vertex (lowest index on ties); minor
/// cycles solve the affine sub-problem on the active corral exactly and drop
/// vertices whose weight would go negative. Stops when the Frank-Wolfe gap is
/// at most tol * max(1, max_j |p_j|^2), when no representable decrease is
/// left, or after max_iter cycles (converged = false).
inline WeightSolution solve_weights(const Eigen::VectorXd& x1, const Eigen::MatrixXd& x0,
                                    const VWeights& v, double tol = 1e-10,
                                    std::int64_t max_iter = kDefaultMaxIter) {
  detail::check_dimensions(x1, x0, v);
  if (!(tol > 0)) throw Error(ErrorKind::InvalidSpec, "solver tolerance must be positive");
  const Eigen::Index donors = x0.cols();
  if (donors == 1) return detail::finish(x1, x0, v, Eigen::VectorXd::Ones(1), 0, true);

  const Eigen::MatrixXd points =
      v.diag().cwiseSqrt().asDiagonal() * (x0.colwise() - x1);
  const Eigen::VectorXd norms = points.colwise().squaredNorm().transpose();
  const double threshold = tol * std::max(1.0, norms.maxCoeff());

  Eigen::Index first = 0;
  for (Eigen::Index j = 1; j < donors; ++j) {
    if (norms[j] < norms[first]) first = j;
  }
  std::vector<Eigen::Index> corral{first};
  Eigen::VectorXd lambda = Eigen::VectorXd::Ones(1);
  Eigen::VectorXd x = points.col(first);

  auto corral_points = [&] {
    Eigen::MatrixXd sub(points.rows(), static_cast<Eigen::Index>(corral.size()));
    for (std::size_t i = 0; i < corral.size(); ++i) {
      sub.col(static_cast<Eigen::Index>(i)) = points.col(corral[i]);
    }
    return sub;
  };

  std::int64_t iterations = 0;
  bool converged = false;
  while (iterations < max_iter) {
    ++iterations;
    const Eigen::VectorXd scores = points.transpose() * x;
    Eigen::Index vertex = 0;
    for (Eigen::Index j = 1; j < donors; ++j) {
      if (scores[j] < scores[vertex]) vertex = j;
    }
    const double norm_sq = x.squaredNorm();
    if (norm_sq - scores[vertex] <= threshold ||
        std::find(corral.begin(), corral.end(), vertex) != corral.end()) {
      converged = true;
      break;
    }
    corral.push_back(vertex);
    lambda.conservativeResize(lambda.size() + 1);
    lambda[lambda.size() - 1] = 0.0;

    bool settled = false;
    while (iterations < max_iter) {
      ++iterations;
      const Eigen::MatrixXd sub = corral_points();
      const Eigen::VectorXd alpha = detail::affine_min_norm(sub);
      if ((alpha.array() > 0).all()) {
        lambda = alpha;
        x = sub * lambda;
        settled = true;
        break;
      }
      // Step from lambda toward alpha until the first weight hits zero.
      double theta = 1.0;
      Eigen::Index blocking = -1;
      for (Eigen::Index i = 0; i < alpha.size(); ++i) {
        if (alpha[i] <= 0) {
          const double step = lambda[i] / (lambda[i] - alpha[i]);
          if (blocking < 0 || step < theta) {
            theta = step;
            blocking = i;
          }
        }
      }
      lambda = theta * alpha + (1.0 - theta) * lambda;
      lambda[blocking] = 0.0;
      std::vector<Eigen::Index> kept_corral;
      std::vector<double> kept_lambda;
      for (Eigen::Index i = 0; i < lambda.size(); ++i) {
        if (lambda[i] > 0) {
          kept_corral.push_back(corral[static_cast<std::size_t>(i)]);
          kept_lambda.push_back(lambda[i]);
        }
      }
      corral = std::move(kept_corral);
      lambda = Eigen::Map<Eigen::VectorXd>(kept_lambda.data(),
                                           static_cast<Eigen::Index>(kept_lambda.size()));
      lambda /= lambda.sum();
      x = corral_points() * lambda;
    }
    if (!settled) break;

    if (x.squaredNorm() >= norm_sq) {
      // Rounding floor: the corral update cannot lower the objective further.
      converged = true;
      break;
    }
  }

  Eigen::VectorXd w = Eigen::VectorXd::Zero(donors);
  for (std::size_t i = 0; i < corral.size(); ++i) w[corral[i]] = lambda[static_cast<Eigen::Index>(i)];
  return detail::finish(x1, x0, v, std::move(w), iterations, converged);
}

/// Visits every point of the simplex lattice {k / steps : k in N^J, sum k = steps}
/// in ascending lexicographic order of k.
template <typename Visitor>
void for_each_lattice_point(std::size_t dims, std::int64_t steps, Visitor&& visit) {
  std::vector<std::int64_t> counts(dims, 0);
  auto recurse = [&](auto&& self, std::size_t pos, std::int64_t remaining) -> void {
    if (pos + 1 == dims) {
      counts[pos] = remaining;
      visit(static_cast<const std::vector<std::int64_t>&>(counts));
      return;
    }
    for (std::int64_t k = 0; k <= remaining; ++k) {
      counts[pos] = k;
      self(self, pos + 1, remaining - k);
    }
  };
  if (dims > 0) recurse(recurse, 0, steps);
}

inline std::int64_t lattice_steps(double grid_step) {
  if (!(grid_step > 0) || grid_step > 1) {
    throw Error(ErrorKind::BadGridStep, "grid step must lie in (0, 1]");
  }
  const double steps = std::round(1.0 / grid_step);
  if (std::abs(steps * grid_step - 1.0) > 1e-9) {
    throw Error(ErrorKind::BadGridStep, "grid step " + std::to_string(grid_step) + " does not divide 1");
  }
  return static_cast<std::int64_t>(steps);
}

inline constexpr Eigen::Index kMaxBruteForceDonors = 6;

/// Exhaustive minimizer over the simplex lattice with spacing grid_step.
/// Ties keep the lexicographically smallest weight vector. `iterations`
/// reports the number of lattice points evaluated.
inline WeightSolution brute_force_weights(const Eigen::VectorXd& x1, const Eigen::MatrixXd& x0,
                                          const VWeights& v, double grid_step) {
  detail::check_dimensions(x1, x0, v);
  if (x0.cols() > kMaxBruteForceDonors) {
    throw Error(ErrorKind::PoolTooLarge, std::to_string(x0.cols()) + " donors exceed the lattice limit of 6");
  }
  const std::int64_t steps = lattice_steps(grid_step);
  const auto donors = static_cast<std::size_t>(x0.cols());

  Eigen::VectorXd w(x0.cols());
  Eigen::VectorXd best_w;
  double best = std::numeric_limits<double>::infinity();
  std::int64_t evaluated = 0;
  for_each_lattice_point(donors, steps, [&](const std::vector<std::int64_t>& counts) {
    for (std::size_t j = 0; j < donors; ++j) {
      w[static_cast<Eigen::Index>(j)] = static_cast<double>(counts[j]) / static_cast<double>(steps);
    }
    ++evaluated;
    const double value = weighted_discrepancy(x1, x0, v, w);
    if (value < best) {
      best = value;
      best_w = w;
    }
  });
  return {best_w, std::sqrt(best), evaluated, true};
}

/// Pre-period MSPE of the weights induced by V (uniform over periods).
inline double induced_pre_mspe(const DesignMatrices& design, const VWeights& v, double tol) {
  const WeightSolution sol = solve_weights(design.treated, design.donors, v, tol);
  return (design.treated - design.donors * sol.w).array().square().mean();
}

/// Data-driven V: coordinate search over diagonal V (normalized to sum 1),
/// starting from uniform V. Candidates are ranked by the pre-period MSPE of
/// their induced weights; exact MSPE ties go to the smaller V-weighted
/// predictor discrepancy. Each coordinate tries the shares k / (candidate_grid - 1)
/// with the other entries rescaled proportionally.
inline VWeights optimize_v_nested(const ValidatedStudy& study, int candidate_grid = 101,
                                  int max_sweeps = 20) {
  if (candidate_grid < 2) throw Error(ErrorKind::InvalidSpec, "candidate grid needs at least 2 points");
  const DesignMatrices design = design_matrices(study);
  const Eigen::Index periods = design.treated.size();
  if (periods == 1) return VWeights(Eigen::VectorXd::Ones(1));
  const double tol = study.spec.solver_tol;

  struct Score {
    double mspe;
    double discrepancy;
    bool operator<(const Score& o) const {
      return mspe < o.mspe || (mspe == o.mspe && discrepancy < o.discrepancy);
    }
  };
  auto score = [&](const VWeights& v) {
    const WeightSolution sol = solve_weights(design.treated, design.donors, v, tol);
    const Eigen::VectorXd r = design.treated - design.donors * sol.w;
    return Score{r.array().square().mean(), sol.squared_objective()};
  };

  VWeights best = VWeights::uniform(periods);
  Score best_score = score(best);
  for (int sweep = 0; sweep < max_sweeps; ++sweep) {
    bool improved = false;
    for (Eigen::Index t = 0; t < periods; ++t) {
      const Eigen::VectorXd current = best.diag();
      const double rest = 1.0 - current[t];
      for (int k = 0; k < candidate_grid; ++k) {
        const double share = static_cast<double>(k) / static_cast<double>(candidate_grid - 1);
        Eigen::VectorXd diag(periods);
        for (Eigen::Index i = 0; i < periods; ++i) {
          if (i == t) {
            diag[i] = share;
          } else if (rest > 0) {
            diag[i] = current[i] * (1.0 - share) / rest;
          } else {
            diag[i] = (1.0 - share) / static_cast<double>(periods - 1);
          }
        }
        diag /= diag.sum();
        VWeights candidate(diag);
        const Score s = score(candidate);
        if (s < best_score) {
          best = std::move(candidate);
          best_score = s;
          improved = true;
        }
      }
    }
    if (!improved) break;
  }
  return best;
}

/// Weights for a validated study under its configured V mode.
inline WeightSolution solve_study(const ValidatedStudy& study) {
  const DesignMatrices design = design_matrices(study);
  const VWeights v = study.spec.v_mode == VMode::Nested
                         ? optimize_v_nested(study)
                         : VWeights::uniform(design.treated.size());
  return solve_weights(design.treated, design.donors, v, study.spec.solver_tol);
}

}  // namespace synthctl
