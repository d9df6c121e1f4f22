#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <numeric>
#include <string>
#include <vector>

#include "synthctl/error.hpp"
#include "synthctl/estimator.hpp"
#include "synthctl/panel.hpp"
#include "synthctl/parallel.hpp"

namespace synthctl {

struct InferenceOptions {
  // Keep the actually-treated unit in each placebo donor pool.
  bool placebo_pool_includes_treated = false;
  unsigned jobs = 1;
};

/// Exact permutation p-value count / total.
struct PValue {
  std::size_t count = 0;
  std::size_t total = 0;

  [[nodiscard]] double value() const { return static_cast<double>(count) / static_cast<double>(total); }

  [[nodiscard]] PValue reduced() const {
    const auto g = std::gcd(count, total);
    return g == 0 ? *this : PValue{count / g, total / g};
  }

  /// Same rational number (5/15 == 1/3).
  friend bool operator==(const PValue& a, const PValue& b) {
    return a.count * b.total == b.count * a.total;
  }
};

struct RatioEntry {
  std::string unit;
  double ratio = 0.0;
};

using RatioTable = std::vector<RatioEntry>;

struct MspeFilter {
  std::vector<SCFit> kept;
  std::vector<SCFit> excluded;
};

struct InferenceReport {
  SCFit treated_fit;
  std::vector<SCFit> placebo_fits;  // donor order
  std::vector<std::string> filtered_out;
  RatioTable ratio_table;
  PValue p_value;
  bool placebo_pool_includes_treated = false;
};

/// Refits with each donor relabeled as treated, in donor order.
inline std::vector<SCFit> in_space_placebos(const ValidatedStudy& study,
                                            const InferenceOptions& options = {}) {
  const auto donors = study.donors();
  return parallel_map(donors.size(), options.jobs, [&](std::size_t i) {
    std::vector<std::string> pool;
    for (std::size_t j = 0; j < donors.size(); ++j) {
      if (j != i) pool.push_back(donors[j]);
    }
    if (options.placebo_pool_includes_treated) pool.push_back(study.treated());
    try {
      return estimate(with_pool(study, donors[i], std::move(pool)));
    } catch (const Error& e) {
      throw Error(e.kind(), "placebo unit '" + donors[i] + "': " + e.detail());
    }
  });
}

/// Splits placebo fits by the pre-period MSPE cutoff: a fit is excluded when
/// its pre-MSPE is at least cutoff times the treated unit's.
inline MspeFilter filter_by_mspe(const std::vector<SCFit>& fits, const SCFit& treated_fit,
                                 double cutoff) {
  if (!(cutoff > 0)) throw Error(ErrorKind::InvalidSpec, "MSPE cutoff must be positive");
  const double limit = cutoff * treated_fit.pre_mspe;
  MspeFilter out;
  for (const auto& f : fits) {
    if (f.pre_mspe >= limit) {
      out.excluded.push_back(f);
    } else {
      out.kept.push_back(f);
    }
  }
  return out;
}

/// All units' RMSPE ratios, descending (infinite first), ties by unit id.
inline RatioTable rmspe_ratio_table(const SCFit& treated_fit, const std::vector<SCFit>& placebo_fits) {
  RatioTable table;
  table.push_back({treated_fit.unit, treated_fit.ratio});
  for (const auto& f : placebo_fits) table.push_back({f.unit, f.ratio});
  std::sort(table.begin(), table.end(), [](const RatioEntry& a, const RatioEntry& b) {
    if (a.ratio != b.ratio) return a.ratio > b.ratio;
    return a.unit < b.unit;
  });
  return table;
}

/// Share of units whose ratio is at least the treated unit's.
inline PValue permutation_p_value(const RatioTable& table, const std::string& treated) {
  const auto it = std::find_if(table.begin(), table.end(),
                               [&](const RatioEntry& e) { return e.unit == treated; });
  if (it == table.end()) throw Error(ErrorKind::UnknownUnit, "'" + treated + "' not in ratio table");
  const double r1 = it->ratio;
  const auto count = static_cast<std::size_t>(
      std::count_if(table.begin(), table.end(), [&](const RatioEntry& e) { return e.ratio >= r1; }));
  return {count, table.size()};
}

inline InferenceReport run_inference(const ValidatedStudy& study, const InferenceOptions& options = {}) {
  InferenceReport report;
  report.placebo_pool_includes_treated = options.placebo_pool_includes_treated;
  report.treated_fit = estimate(study);
  report.placebo_fits = in_space_placebos(study, options);
  const auto filtered = filter_by_mspe(report.placebo_fits, report.treated_fit, study.spec.mspe_cutoff);
  for (const auto& f : filtered.excluded) report.filtered_out.push_back(f.unit);
  // The p-value ranks every unit; the MSPE filter only affects gap plots.
  report.ratio_table = rmspe_ratio_table(report.treated_fit, report.placebo_fits);
  report.p_value = permutation_p_value(report.ratio_table, study.treated());
  return report;
}

}  // namespace synthctl
