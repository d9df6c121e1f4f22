#pragma once

#include <string>
#include <vector>

#include "synthctl/error.hpp"
#include "synthctl/estimator.hpp"
#include "synthctl/panel.hpp"
#include "synthctl/parallel.hpp"

namespace synthctl {

inline constexpr double kSupportWeight = 1e-6;

/// Study with the treatment date moved back to placebo_t0. The window ends at
/// the actual t0, so no treated period enters the placebo fit.
template <PanelSource P>
ValidatedStudy in_time_placebo_study(const P& source, const StudySpec& spec, Period placebo_t0) {
  if (placebo_t0 >= spec.t0) {
    throw Error(ErrorKind::PlaceboTooLate, "placebo t0 " + std::to_string(placebo_t0) +
                                               " is not before t0 " + std::to_string(spec.t0));
  }
  StudySpec shifted = spec;
  shifted.t0 = placebo_t0;
  shifted.placebo_t0.reset();
  shifted.window_end = spec.window_end ? std::min(*spec.window_end, spec.t0) : spec.t0;
  return validate(source, shifted);
}

inline ValidatedStudy in_time_placebo_study(const ValidatedStudy& study, Period placebo_t0) {
  StudySpec spec = study.spec;
  spec.donors = study.donors();
  return in_time_placebo_study(study.dataset, spec, placebo_t0);
}

template <PanelSource P>
SCFit in_time_placebo(const P& source, const StudySpec& spec, Period placebo_t0) {
  return estimate(in_time_placebo_study(source, spec, placebo_t0));
}

inline SCFit in_time_placebo(const ValidatedStudy& study, Period placebo_t0) {
  return estimate(in_time_placebo_study(study, placebo_t0));
}

struct LeaveOneOutFit {
  std::string excluded;
  SCFit fit;
};

/// Refits without each donor that carries weight above 1e-6 in `base`,
/// in donor order.
inline std::vector<LeaveOneOutFit> leave_one_out(const ValidatedStudy& study, const SCFit& base,
                                                 unsigned jobs = 1) {
  const auto donors = study.donors();
  if (base.donors != donors) {
    throw Error(ErrorKind::DimensionMismatch, "base fit was not computed on this study's donor pool");
  }
  std::vector<std::size_t> support;
  for (std::size_t j = 0; j < donors.size(); ++j) {
    if (base.weights.w[static_cast<Eigen::Index>(j)] > kSupportWeight) support.push_back(j);
  }
  return parallel_map(support.size(), jobs, [&](std::size_t k) {
    const std::size_t skip = support[k];
    std::vector<std::string> pool;
    for (std::size_t j = 0; j < donors.size(); ++j) {
      if (j != skip) pool.push_back(donors[j]);
    }
    if (pool.empty()) {
      throw Error(ErrorKind::EmptyDonorPool, "excluding '" + donors[skip] + "' leaves no donors");
    }
    return LeaveOneOutFit{donors[skip], estimate(with_pool(study, study.treated(), std::move(pool)))};
  });
}

}  // namespace synthctl
