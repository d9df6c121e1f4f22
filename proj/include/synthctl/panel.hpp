#pragma once

#include <algorithm>
#include <charconv>
#include <cmath>
#include <concepts>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <string_view>
#include <system_error>
#include <unordered_map>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "synthctl/error.hpp"

namespace synthctl {

using Period = std::int64_t;

/// Units x times grid of optional outcome values. Immutable once built.
class PanelDataset {
 public:
  PanelDataset() = default;

  PanelDataset(std::vector<std::string> units, std::vector<Period> times,
               std::vector<std::optional<double>> values,
               std::string outcome_name = "outcome")
      : units_(std::move(units)),
        times_(std::move(times)),
        values_(std::move(values)),
        outcome_name_(std::move(outcome_name)) {
    if (values_.size() != units_.size() * times_.size()) {
      throw Error(ErrorKind::BadDimensions,
                  "grid has " + std::to_string(values_.size()) + " cells, expected " +
                      std::to_string(units_.size() * times_.size()));
    }
    for (std::size_t t = 1; t < times_.size(); ++t) {
      if (times_[t] <= times_[t - 1]) {
        throw Error(ErrorKind::BadDimensions, "times must be strictly increasing");
      }
    }
    for (std::size_t u = 0; u < units_.size(); ++u) {
      if (!index_.emplace(units_[u], u).second) {
        throw Error(ErrorKind::BadDimensions, "duplicate unit '" + units_[u] + "'");
      }
    }
  }

  [[nodiscard]] const std::vector<std::string>& units() const noexcept { return units_; }
  [[nodiscard]] const std::vector<Period>& times() const noexcept { return times_; }
  [[nodiscard]] const std::string& outcome_name() const noexcept { return outcome_name_; }

  [[nodiscard]] std::optional<double> cell(std::size_t unit, std::size_t time) const {
    return values_.at(unit * times_.size() + time);
  }

  [[nodiscard]] std::optional<std::size_t> unit_index(std::string_view id) const {
    auto it = index_.find(std::string(id));
    if (it == index_.end()) return std::nullopt;
    return it->second;
  }

  [[nodiscard]] std::optional<std::size_t> time_index(Period period) const {
    auto it = std::lower_bound(times_.begin(), times_.end(), period);
    if (it == times_.end() || *it != period) return std::nullopt;
    return static_cast<std::size_t>(it - times_.begin());
  }

  friend bool operator==(const PanelDataset& a, const PanelDataset& b) {
    return a.units_ == b.units_ && a.times_ == b.times_ && a.values_ == b.values_ &&
           a.outcome_name_ == b.outcome_name_;
  }

 private:
  std::vector<std::string> units_;
  std::vector<Period> times_;
  std::vector<std::optional<double>> values_;  // unit-major
  std::string outcome_name_ = "outcome";
  std::unordered_map<std::string, std::size_t> index_;
};

/// Read-only view over a panel. Validation reads through this interface only,
/// so wrappers (e.g. access tracking in tests) can stand in for PanelDataset.
template <typename P>
concept PanelSource = requires(const P& p, std::size_t i) {
  { p.units() } -> std::convertible_to<const std::vector<std::string>&>;
  { p.times() } -> std::convertible_to<const std::vector<Period>&>;
  { p.outcome_name() } -> std::convertible_to<const std::string&>;
  { p.cell(i, i) } -> std::same_as<std::optional<double>>;
};

static_assert(PanelSource<PanelDataset>);

enum class VMode { Uniform, Nested };

inline std::string_view to_string(VMode mode) noexcept {
  return mode == VMode::Uniform ? "uniform" : "nested";
}

struct StudySpec {
  std::string treated;
  Period t0 = 0;  // last untreated period
  std::vector<std::string> donors;
  double mspe_cutoff = 10.0;
  double grid_step = 0.01;
  double solver_tol = 1e-10;
  VMode v_mode = VMode::Uniform;
  std::optional<Period> placebo_t0;
  // Last period of the study window; the dataset's last period when unset.
  std::optional<Period> window_end;
};

/// Half-open index range into a time axis.
struct IndexRange {
  std::size_t begin = 0;
  std::size_t end = 0;

  [[nodiscard]] std::size_t size() const noexcept { return end - begin; }
  [[nodiscard]] bool empty() const noexcept { return end <= begin; }
  friend bool operator==(const IndexRange&, const IndexRange&) = default;
};

struct DroppedUnit {
  std::string unit;
  std::string reason;
  friend bool operator==(const DroppedUnit&, const DroppedUnit&) = default;
};

/// A study that passed validation: complete data for the treated unit and the
/// resolved donors over the study window. Produced by validate().
struct ValidatedStudy {
  PanelDataset dataset;  // treated + resolved donors, study window only
  StudySpec spec;
  std::vector<DroppedUnit> dropped_units;
  IndexRange pre_periods;
  IndexRange post_periods;
  std::size_t treated_index = 0;            // into dataset.units()
  std::vector<std::size_t> donor_indices;   // into dataset.units(), dataset order

  [[nodiscard]] const std::string& treated() const { return dataset.units()[treated_index]; }
  [[nodiscard]] std::size_t donor_count() const noexcept { return donor_indices.size(); }
  [[nodiscard]] std::size_t period_count() const noexcept { return dataset.times().size(); }

  [[nodiscard]] std::vector<std::string> donors() const {
    std::vector<std::string> out;
    out.reserve(donor_indices.size());
    for (auto i : donor_indices) out.push_back(dataset.units()[i]);
    return out;
  }

  [[nodiscard]] Eigen::VectorXd unit_path(std::size_t unit) const {
    Eigen::VectorXd path(static_cast<Eigen::Index>(period_count()));
    for (std::size_t t = 0; t < period_count(); ++t) {
      path[static_cast<Eigen::Index>(t)] = *dataset.cell(unit, t);
    }
    return path;
  }

  [[nodiscard]] Eigen::VectorXd treated_path() const { return unit_path(treated_index); }

  /// periods x donors
  [[nodiscard]] Eigen::MatrixXd donor_paths() const {
    Eigen::MatrixXd paths(static_cast<Eigen::Index>(period_count()),
                          static_cast<Eigen::Index>(donor_count()));
    for (std::size_t j = 0; j < donor_count(); ++j) {
      paths.col(static_cast<Eigen::Index>(j)) = unit_path(donor_indices[j]);
    }
    return paths;
  }
};

namespace detail {

inline std::string_view trim_cr(std::string_view line) {
  if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
  return line;
}

inline std::vector<std::string_view> split_commas(std::string_view line) {
  std::vector<std::string_view> fields;
  std::size_t start = 0;
  while (true) {
    auto pos = line.find(',', start);
    if (pos == std::string_view::npos) {
      fields.push_back(line.substr(start));
      break;
    }
    fields.push_back(line.substr(start, pos - start));
    start = pos + 1;
  }
  return fields;
}

template <typename T>
std::optional<T> parse_number(std::string_view text) {
  T value{};
  const char* first = text.data();
  const char* last = text.data() + text.size();
  auto [ptr, ec] = std::from_chars(first, last, value);
  if (ec != std::errc{} || ptr != last) return std::nullopt;
  return value;
}

/// Shortest representation that parses back to the same double.
inline std::string shortest_repr(double value) {
  char buf[64];
  auto [ptr, ec] = std::to_chars(buf, buf + sizeof(buf), value);
  return std::string(buf, ptr);
}

}  // namespace detail

/// Parses long-format `unit,time,value` text. `source` names the input in
/// error messages.
inline PanelDataset parse_long_csv(std::string_view text, std::string outcome_name = "outcome",
                                   std::string_view source = "<memory>") {
  if (text.starts_with("\xEF\xBB\xBF")) text.remove_prefix(3);

  std::vector<std::string_view> lines;
  std::size_t start = 0;
  while (start < text.size()) {
    auto pos = text.find('\n', start);
    if (pos == std::string_view::npos) pos = text.size();
    lines.push_back(detail::trim_cr(text.substr(start, pos - start)));
    start = pos + 1;
  }
  if (lines.empty() || lines.front() != "unit,time,value") {
    throw Error(ErrorKind::MalformedHeader,
                std::string(source) + ": expected header 'unit,time,value'");
  }

  struct Row {
    std::size_t unit;
    Period time;
    std::optional<double> value;
  };
  std::vector<std::string> units;
  std::unordered_map<std::string, std::size_t> unit_ids;
  std::vector<Row> rows;
  std::set<std::pair<std::size_t, Period>> seen;

  for (std::size_t i = 1; i < lines.size(); ++i) {
    const auto line = lines[i];
    if (line.empty()) continue;
    const std::string where = std::string(source) + ": row " + std::to_string(i);
    auto fields = detail::split_commas(line);
    if (fields.size() != 3 || fields[0].empty()) {
      throw Error(ErrorKind::UnparsableValue, where + ": expected 'unit,time,value'");
    }
    auto time = detail::parse_number<Period>(fields[1]);
    if (!time) throw Error(ErrorKind::UnparsableValue, where + ": bad time '" + std::string(fields[1]) + "'");
    std::optional<double> value;
    if (!fields[2].empty()) {
      value = detail::parse_number<double>(fields[2]);
      if (!value || !std::isfinite(*value)) {
        throw Error(ErrorKind::UnparsableValue, where + ": bad value '" + std::string(fields[2]) + "'");
      }
    }
    std::string unit(fields[0]);
    auto [it, inserted] = unit_ids.emplace(unit, units.size());
    if (inserted) units.push_back(unit);
    if (!seen.emplace(it->second, *time).second) {
      throw Error(ErrorKind::DuplicateCell,
                  where + ": duplicate cell (" + unit + "," + std::to_string(*time) + ")");
    }
    rows.push_back({it->second, *time, value});
  }

  std::vector<Period> times;
  for (const auto& row : rows) times.push_back(row.time);
  std::sort(times.begin(), times.end());
  times.erase(std::unique(times.begin(), times.end()), times.end());

  std::vector<std::optional<double>> values(units.size() * times.size());
  for (const auto& row : rows) {
    auto t = static_cast<std::size_t>(std::lower_bound(times.begin(), times.end(), row.time) -
                                      times.begin());
    values[row.unit * times.size() + t] = row.value;
  }
  return PanelDataset(std::move(units), std::move(times), std::move(values),
                      std::move(outcome_name));
}

/// Loads a long-format panel file; the outcome name is the file stem.
inline PanelDataset load_long_csv(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorKind::FileNotFound, "cannot open '" + path.string() + "'");
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return parse_long_csv(buffer.str(), path.stem().string(), path.string());
}

/// Canonical serialization: unit-major in unit order, times ascending, every
/// grid cell emitted (missing cells have an empty value).
template <PanelSource P>
std::string to_long_csv(const P& panel) {
  std::string out = "unit,time,value\n";
  const auto& units = panel.units();
  const auto& times = panel.times();
  for (std::size_t u = 0; u < units.size(); ++u) {
    for (std::size_t t = 0; t < times.size(); ++t) {
      out += units[u];
      out += ',';
      out += std::to_string(times[t]);
      out += ',';
      if (auto v = panel.cell(u, t)) out += detail::shortest_repr(*v);
      out += '\n';
    }
  }
  return out;
}

template <PanelSource P>
void save_long_csv(const std::filesystem::path& path, const P& panel) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error(ErrorKind::FileNotFound, "cannot write '" + path.string() + "'");
  out << to_long_csv(panel);
}

/// Checks a study spec against a panel, drops incomplete donors and returns
/// the complete sub-panel over the study window. Only cells inside the study
/// window are read.
template <PanelSource P>
ValidatedStudy validate(const P& source, const StudySpec& spec) {
  if (!(spec.mspe_cutoff > 0) || !(spec.grid_step > 0) || !(spec.solver_tol > 0)) {
    throw Error(ErrorKind::InvalidSpec, "mspe_cutoff, grid_step and solver_tol must be positive");
  }
  const auto& units = source.units();
  const auto& times = source.times();

  auto find_unit = [&](const std::string& id) -> std::optional<std::size_t> {
    auto it = std::find(units.begin(), units.end(), id);
    if (it == units.end()) return std::nullopt;
    return static_cast<std::size_t>(it - units.begin());
  };

  const auto treated = find_unit(spec.treated);
  if (!treated) throw Error(ErrorKind::TreatedMissing, "treated unit '" + spec.treated + "' not in dataset");

  std::set<std::string> donor_set;
  for (const auto& d : spec.donors) {
    if (d == spec.treated) throw Error(ErrorKind::InvalidSpec, "treated unit '" + d + "' listed as donor");
    if (!donor_set.insert(d).second) throw Error(ErrorKind::InvalidSpec, "donor '" + d + "' listed twice");
  }
  if (donor_set.empty()) throw Error(ErrorKind::EmptyDonorPool, "no donors for '" + spec.treated + "'");

  // Study window: [first period, window_end].
  std::size_t window = times.size();
  if (spec.window_end) {
    window = static_cast<std::size_t>(
        std::upper_bound(times.begin(), times.end(), *spec.window_end) - times.begin());
  }
  const auto pre = static_cast<std::size_t>(
      std::upper_bound(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(window), spec.t0) -
      times.begin());
  if (pre >= window) {
    throw Error(ErrorKind::NoPostPeriods,
                "t0 = " + std::to_string(spec.t0) + " leaves no post-treatment period");
  }
  if (pre < 2) {
    throw Error(ErrorKind::TooFewPrePeriods,
                "t0 = " + std::to_string(spec.t0) + " leaves " + std::to_string(pre) +
                    " pre-treatment period(s), need at least 2");
  }

  auto first_missing = [&](std::size_t unit) -> std::optional<Period> {
    for (std::size_t t = 0; t < window; ++t) {
      if (!source.cell(unit, t)) return times[t];
    }
    return std::nullopt;
  };

  if (auto gap = first_missing(*treated)) {
    throw Error(ErrorKind::TreatedIncomplete,
                "treated unit '" + spec.treated + "' missing value at " + std::to_string(*gap));
  }

  std::vector<DroppedUnit> dropped;
  std::vector<std::size_t> keep;  // source unit indices, dataset order
  for (std::size_t u = 0; u < units.size(); ++u) {
    if (u == *treated) {
      keep.push_back(u);
      continue;
    }
    if (!donor_set.contains(units[u])) continue;
    if (auto gap = first_missing(u)) {
      dropped.push_back({units[u], "missing value at " + std::to_string(*gap)});
    } else {
      keep.push_back(u);
    }
  }
  for (const auto& d : spec.donors) {
    if (!find_unit(d)) dropped.push_back({d, "not present in dataset"});
  }
  if (keep.size() < 2) {
    throw Error(ErrorKind::EmptyDonorPool,
                "no complete donors left for '" + spec.treated + "' after dropping incomplete units");
  }

  std::vector<std::string> kept_units;
  std::vector<std::optional<double>> values;
  values.reserve(keep.size() * window);
  ValidatedStudy study;
  for (std::size_t k = 0; k < keep.size(); ++k) {
    kept_units.push_back(units[keep[k]]);
    if (keep[k] == *treated) {
      study.treated_index = k;
    } else {
      study.donor_indices.push_back(k);
    }
    for (std::size_t t = 0; t < window; ++t) values.push_back(source.cell(keep[k], t));
  }
  study.dataset = PanelDataset(std::move(kept_units),
                               std::vector<Period>(times.begin(), times.begin() + static_cast<std::ptrdiff_t>(window)),
                               std::move(values), source.outcome_name());
  study.spec = spec;
  study.dropped_units = std::move(dropped);
  study.pre_periods = {0, pre};
  study.post_periods = {pre, window};
  return study;
}

/// Pre-period predictors: the treated unit's outcomes and donors' outcomes
/// (one column per donor, dataset order).
struct DesignMatrices {
  Eigen::VectorXd treated;
  Eigen::MatrixXd donors;
};

inline DesignMatrices design_matrices(const ValidatedStudy& study) {
  const auto rows = static_cast<Eigen::Index>(study.pre_periods.size());
  const auto begin = static_cast<Eigen::Index>(study.pre_periods.begin);
  return {study.treated_path().segment(begin, rows),
          study.donor_paths().middleRows(begin, rows)};
}

/// Re-validates the study's retained data under a different treated unit and
/// donor list; used for placebo and leave-one-out refits.
inline ValidatedStudy with_pool(const ValidatedStudy& study, std::string treated,
                                std::vector<std::string> donors) {
  StudySpec spec = study.spec;
  spec.treated = std::move(treated);
  spec.donors = std::move(donors);
  return validate(study.dataset, spec);
}

}  // namespace synthctl
