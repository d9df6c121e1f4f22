#pragma once

#include <cmath>
#include <limits>
#include <span>
#include <string>
#include <vector>

#include <Eigen/Dense>

#include "synthctl/error.hpp"
#include "synthctl/panel.hpp"
#include "synthctl/solver.hpp"

namespace synthctl {

inline constexpr double kPerfectFit = 1e-12;

/// Synthetic path, gap path and fit statistics for one treated unit.
struct SCFit {
  std::string unit;
  std::vector<std::string> donors;  // order of weights.w
  WeightSolution weights;
  std::vector<Period> times;
  IndexRange pre_periods;
  IndexRange post_periods;
  Eigen::VectorXd actual;
  Eigen::VectorXd synthetic;
  Eigen::VectorXd gaps;  // actual - synthetic, every period
  double pre_mspe = 0.0;
  double post_mspe = 0.0;
  double pre_rmspe = 0.0;
  double post_rmspe = 0.0;
  double ratio = 1.0;  // +inf when the pre-fit is perfect and the post-fit is not
};

/// post/pre RMSPE ratio with the perfect-fit conventions.
inline double rmspe_ratio(double pre_rmspe, double post_rmspe) {
  if (pre_rmspe >= kPerfectFit) return post_rmspe / pre_rmspe;
  if (post_rmspe >= kPerfectFit) return std::numeric_limits<double>::infinity();
  return 1.0;
}

inline double mspe(std::span<const double> gaps, IndexRange range) {
  if (range.empty() || range.end > gaps.size()) {
    throw Error(ErrorKind::EmptyRange, "MSPE over an empty or out-of-bounds range");
  }
  double sum = 0.0;
  for (std::size_t t = range.begin; t < range.end; ++t) sum += gaps[t] * gaps[t];
  return sum / static_cast<double>(range.size());
}

inline double rmspe(std::span<const double> gaps, IndexRange range) {
  return std::sqrt(mspe(gaps, range));
}

inline SCFit fit(const ValidatedStudy& study, const WeightSolution& weights) {
  if (static_cast<std::size_t>(weights.w.size()) != study.donor_count()) {
    throw Error(ErrorKind::DimensionMismatch,
                std::to_string(weights.w.size()) + " weights for " +
                    std::to_string(study.donor_count()) + " donors");
  }
  SCFit out;
  out.unit = study.treated();
  out.donors = study.donors();
  out.weights = weights;
  out.times = study.dataset.times();
  out.pre_periods = study.pre_periods;
  out.post_periods = study.post_periods;
  out.actual = study.treated_path();
  out.synthetic = study.donor_paths() * weights.w;
  out.gaps = out.actual - out.synthetic;

  const std::span<const double> gaps(out.gaps.data(), static_cast<std::size_t>(out.gaps.size()));
  out.pre_mspe = mspe(gaps, out.pre_periods);
  out.post_mspe = mspe(gaps, out.post_periods);
  out.pre_rmspe = std::sqrt(out.pre_mspe);
  out.post_rmspe = std::sqrt(out.post_mspe);
  out.ratio = rmspe_ratio(out.pre_rmspe, out.post_rmspe);
  return out;
}

/// Solve the study's weights and fit.
inline SCFit estimate(const ValidatedStudy& study) { return fit(study, solve_study(study)); }

/// Fit against one donor alone (weight 1 on `donor`).
inline SCFit single_comparator_fit(const ValidatedStudy& study, const std::string& donor) {
  const auto donors = study.donors();
  const auto it = std::find(donors.begin(), donors.end(), donor);
  if (it == donors.end()) {
    throw Error(ErrorKind::UnknownDonor, "'" + donor + "' is not in the donor pool");
  }
  const auto design = design_matrices(study);
  WeightSolution indicator;
  indicator.w = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(donors.size()));
  indicator.w[it - donors.begin()] = 1.0;
  indicator.objective = std::sqrt(weighted_discrepancy(
      design.treated, design.donors, VWeights::uniform(design.treated.size()), indicator.w));
  indicator.converged = true;
  return fit(study, indicator);
}

}  // namespace synthctl
