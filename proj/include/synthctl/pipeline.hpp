#pragma once

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "synthctl/error.hpp"
#include "synthctl/estimator.hpp"
#include "synthctl/inference.hpp"
#include "synthctl/panel.hpp"
#include "synthctl/robustness.hpp"
#include "synthctl/svg.hpp"

namespace synthctl {

struct RunOptions {
  std::filesystem::path data;
  std::string treated;
  Period t0 = 0;
  std::vector<std::string> donors;   // empty: every unit except treated
  std::vector<std::string> exclude;
  double mspe_cutoff = 10.0;
  VMode v_mode = VMode::Uniform;
  std::optional<Period> placebo_t0;
  bool leave_one_out = false;
  std::filesystem::path out_dir = ".";
  std::uint64_t seed = 0;
  unsigned jobs = 1;
};

/// File name -> contents, written as a unit by write_artifacts().
using Artifacts = std::map<std::string, std::string>;

namespace detail {

inline std::string full(double v) {
  if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.17g", v);
  return buf;
}

inline std::string fixed3(double v) {
  char buf[40];
  std::snprintf(buf, sizeof(buf), "%.3f", v);
  std::string s(buf);
  return s == "-0.000" ? "0.000" : s;
}

inline std::string join(const std::vector<std::string>& items, const char* sep = ",") {
  std::string out;
  for (std::size_t i = 0; i < items.size(); ++i) {
    if (i) out += sep;
    out += items[i];
  }
  return out;
}

inline std::string path_csv(const SCFit& f) {
  std::string out = "time,actual,synthetic,gap\n";
  for (std::size_t t = 0; t < f.times.size(); ++t) {
    const auto i = static_cast<Eigen::Index>(t);
    out += std::to_string(f.times[t]) + "," + full(f.actual[i]) + "," + full(f.synthetic[i]) + "," +
           full(f.gaps[i]) + "\n";
  }
  return out;
}

inline std::vector<double> as_doubles(const std::vector<Period>& times) {
  return {times.begin(), times.end()};
}

inline std::vector<double> as_doubles(const Eigen::VectorXd& v) { return {v.begin(), v.end()}; }

inline std::string fit_line(const SCFit& f) {
  return "pre_rmspe=" + full(f.pre_rmspe) + " post_rmspe=" + full(f.post_rmspe) +
         " ratio=" + full(f.ratio);
}

inline std::string weights_line(const SCFit& f) {
  std::vector<std::string> parts;
  for (std::size_t j = 0; j < f.donors.size(); ++j) {
    const double w = f.weights.w[static_cast<Eigen::Index>(j)];
    if (w > 0) parts.push_back(f.donors[j] + "=" + fixed3(w));
  }
  return join(parts, " ");
}

}  // namespace detail

/// Resolves the donor pool from the flags: explicit --donors, otherwise every
/// unit except the treated one and the --exclude list.
inline StudySpec study_spec_from(const RunOptions& options, const PanelDataset& panel) {
  StudySpec spec;
  spec.treated = options.treated;
  spec.t0 = options.t0;
  spec.mspe_cutoff = options.mspe_cutoff;
  spec.v_mode = options.v_mode;
  spec.placebo_t0 = options.placebo_t0;
  if (!options.donors.empty()) {
    spec.donors = options.donors;
  } else {
    const std::set<std::string> excluded(options.exclude.begin(), options.exclude.end());
    for (const auto& u : panel.units()) {
      if (u != options.treated && !excluded.contains(u)) spec.donors.push_back(u);
    }
  }
  return spec;
}

/// Runs estimation, inference and the requested robustness checks and renders
/// every artifact in memory. Nothing is written here.
inline Artifacts run_study(const RunOptions& options) {
  using namespace detail;
  const PanelDataset panel = load_long_csv(options.data);
  const ValidatedStudy study = validate(panel, study_spec_from(options, panel));

  InferenceOptions inference_options;
  inference_options.jobs = options.jobs;
  const InferenceReport report = run_inference(study, inference_options);
  const SCFit& fit = report.treated_fit;
  const std::set<std::string> filtered(report.filtered_out.begin(), report.filtered_out.end());
  const Period t0 = study.spec.t0;

  Artifacts out;

  std::string weights = "unit,weight,weight_display\n";
  for (std::size_t j = 0; j < fit.donors.size(); ++j) {
    const double w = fit.weights.w[static_cast<Eigen::Index>(j)];
    weights += fit.donors[j] + "," + full(w) + "," + fixed3(w) + "\n";
  }
  out["weights.csv"] = weights;

  std::string path = "time,actual,synthetic\n";
  std::string gaps = "time,gap\n";
  for (std::size_t t = 0; t < fit.times.size(); ++t) {
    const auto i = static_cast<Eigen::Index>(t);
    path += std::to_string(fit.times[t]) + "," + full(fit.actual[i]) + "," + full(fit.synthetic[i]) + "\n";
    gaps += std::to_string(fit.times[t]) + "," + full(fit.gaps[i]) + "\n";
  }
  out["path.csv"] = path;
  out["gaps.csv"] = gaps;

  std::string placebo = "unit,time,gap,filtered\n";
  for (const auto& p : report.placebo_fits) {
    const char* flag = filtered.contains(p.unit) ? "1" : "0";
    for (std::size_t t = 0; t < p.times.size(); ++t) {
      placebo += p.unit + "," + std::to_string(p.times[t]) + "," +
                 full(p.gaps[static_cast<Eigen::Index>(t)]) + "," + flag + "\n";
    }
  }
  out["placebo_gaps.csv"] = placebo;

  std::map<std::string, const SCFit*> by_unit{{fit.unit, &fit}};
  for (const auto& p : report.placebo_fits) by_unit[p.unit] = &p;
  std::string ratios = "unit,pre_rmspe,post_rmspe,ratio,rank\n";
  for (std::size_t r = 0; r < report.ratio_table.size(); ++r) {
    const SCFit& f = *by_unit.at(report.ratio_table[r].unit);
    ratios += f.unit + "," + full(f.pre_rmspe) + "," + full(f.post_rmspe) + "," + full(f.ratio) + "," +
              std::to_string(r + 1) + "\n";
  }
  out["ratios.csv"] = ratios;

  // Figures.
  const auto x = as_doubles(fit.times);
  svg::LineChart path_chart{"Actual vs. synthetic " + fit.unit, "time", panel.outcome_name(),
                            {{fit.unit, x, as_doubles(fit.actual), svg::SeriesRole::Treated},
                             {"synthetic " + fit.unit, x, as_doubles(fit.synthetic), svg::SeriesRole::Synthetic}},
                            static_cast<double>(t0), false};
  out["path.svg"] = svg::emit_svg(path_chart);

  svg::LineChart gap_chart{"Gaps: " + fit.unit + " and in-space placebos", "time", "gap", {},
                           static_cast<double>(t0), true};
  for (const auto& p : report.placebo_fits) {
    if (filtered.contains(p.unit)) continue;
    gap_chart.series.push_back({p.unit, as_doubles(p.times), as_doubles(p.gaps), svg::SeriesRole::Placebo});
  }
  gap_chart.series.push_back({fit.unit, x, as_doubles(fit.gaps), svg::SeriesRole::Treated});
  out["gaps_placebo.svg"] = svg::emit_svg(gap_chart);

  std::vector<svg::Bar> bars;
  for (const auto& e : report.ratio_table) bars.push_back({e.unit, e.ratio, e.unit == fit.unit});
  out["ratios.svg"] = svg::emit_bar_svg("Post/pre-treatment RMSPE ratios", bars);

  // Summary.
  const auto& times = study.dataset.times();
  std::string s;
  s += "outcome: " + panel.outcome_name() + "\n";
  s += "treated: " + fit.unit + "\n";
  s += "t0: " + std::to_string(t0) + "\n";
  s += "pre_periods: " + std::to_string(times[study.pre_periods.begin]) + "-" +
       std::to_string(times[study.pre_periods.end - 1]) + " (" + std::to_string(study.pre_periods.size()) + ")\n";
  s += "post_periods: " + std::to_string(times[study.post_periods.begin]) + "-" +
       std::to_string(times[study.post_periods.end - 1]) + " (" + std::to_string(study.post_periods.size()) + ")\n";
  s += "donors: " + std::to_string(study.donor_count()) + " (" + join(study.donors()) + ")\n";
  if (study.dropped_units.empty()) {
    s += "dropped: none\n";
  } else {
    for (const auto& d : study.dropped_units) s += "dropped: " + d.unit + " (" + d.reason + ")\n";
  }
  s += "v_mode: " + std::string(to_string(study.spec.v_mode)) + "\n";
  s += "solver: objective=" + full(fit.weights.objective) + " iterations=" +
       std::to_string(fit.weights.iterations) + " converged=" + (fit.weights.converged ? "yes" : "no") + "\n";
  s += "weights: " + weights_line(fit) + "\n";
  s += "fit: " + fit_line(fit) + "\n";
  s += "placebo_pool: " + std::string(report.placebo_pool_includes_treated ? "includes" : "excludes") +
       " treated unit\n";
  s += "mspe_cutoff: " + full(study.spec.mspe_cutoff) + "\n";
  s += "filtered_out: " + (report.filtered_out.empty() ? std::string("none") : join(report.filtered_out)) + "\n";
  s += "p_value: " + std::to_string(report.p_value.count) + "/" + std::to_string(report.p_value.total) +
       " = " + full(report.p_value.value()) + "\n";

  if (options.placebo_t0) {
    const ValidatedStudy shifted = in_time_placebo_study(study, *options.placebo_t0);
    const InferenceReport placebo_report = run_inference(shifted, inference_options);
    const SCFit& pf = placebo_report.treated_fit;
    out["intime_path.csv"] = path_csv(pf);
    s += "in_time_placebo: t0=" + std::to_string(*options.placebo_t0) + " window_end=" +
         std::to_string(t0) + " " + fit_line(pf) + " p_value=" +
         std::to_string(placebo_report.p_value.count) + "/" + std::to_string(placebo_report.p_value.total) + "\n";
    s += "in_time_placebo_weights: " + weights_line(pf) + "\n";
  }

  if (options.leave_one_out) {
    const auto loo = leave_one_out(study, fit, options.jobs);
    std::string csv = "excluded,time,actual,synthetic,gap\n";
    for (const auto& l : loo) {
      for (std::size_t t = 0; t < l.fit.times.size(); ++t) {
        const auto i = static_cast<Eigen::Index>(t);
        csv += l.excluded + "," + std::to_string(l.fit.times[t]) + "," + full(l.fit.actual[i]) + "," +
               full(l.fit.synthetic[i]) + "," + full(l.fit.gaps[i]) + "\n";
      }
      s += "leave_one_out: without " + l.excluded + " " + fit_line(l.fit) + " weights: " +
           weights_line(l.fit) + "\n";
    }
    out["loo.csv"] = csv;
  }

  s += "seed: " + std::to_string(options.seed) + "\n";
  out["summary.txt"] = s;
  return out;
}

/// Writes every artifact to a temporary name first, then renames them into
/// place, so a failure never leaves a partial file behind.
inline void write_artifacts(const std::filesystem::path& dir, const Artifacts& artifacts) {
  namespace fs = std::filesystem;
  fs::create_directories(dir);
  std::vector<std::pair<fs::path, fs::path>> staged;
  try {
    for (const auto& [name, contents] : artifacts) {
      const fs::path target = dir / name;
      const fs::path temp = dir / ("." + name + ".tmp");
      std::ofstream f(temp, std::ios::binary | std::ios::trunc);
      if (!f) throw Error(ErrorKind::FileNotFound, "cannot write '" + temp.string() + "'");
      staged.emplace_back(temp, target);
      f << contents;
      f.close();
      if (!f) throw Error(ErrorKind::FileNotFound, "failed writing '" + temp.string() + "'");
    }
  } catch (...) {
    std::error_code ec;
    for (const auto& [temp, target] : staged) fs::remove(temp, ec);
    throw;
  }
  for (const auto& [temp, target] : staged) fs::rename(temp, target);
}

}  // namespace synthctl
