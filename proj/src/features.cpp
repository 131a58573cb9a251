#include "leakbench/features.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>
#include <unordered_map>

#include "leakbench/errors.hpp"
#include "leakbench/text.hpp"

namespace leakbench {

namespace {

bool is_raw_field(const std::string& s) {
  return s == "open" || s == "high" || s == "low" || s == "close" ||
         s == "volume";
}

}  // namespace

std::string to_string(FeatureTransform t) {
  switch (t) {
    case FeatureTransform::kReturn: return "ret";
    case FeatureTransform::kGap: return "gap";
    case FeatureTransform::kHlRange: return "hl_range";
    case FeatureTransform::kRollMean: return "roll_mean";
    case FeatureTransform::kRollStd: return "roll_std";
    case FeatureTransform::kVolumeRatio: return "volume_ratio";
    case FeatureTransform::kNeighbor: return "neighbor";
  }
  return "?";
}

FeatureTransform transform_from_string(const std::string& s) {
  if (s == "ret") return FeatureTransform::kReturn;
  if (s == "gap") return FeatureTransform::kGap;
  if (s == "hl_range") return FeatureTransform::kHlRange;
  if (s == "roll_mean") return FeatureTransform::kRollMean;
  if (s == "roll_std") return FeatureTransform::kRollStd;
  if (s == "volume_ratio") return FeatureTransform::kVolumeRatio;
  if (s == "neighbor") return FeatureTransform::kNeighbor;
  fail("BadSchema", "unknown transform '" + s + "'");
}

void FeatureSchema::validate() const {
  std::set<std::string> names;
  std::map<std::string, FeatureTransform> defined;
  bool has_flagged_return_stat = false;
  for (const auto& def : defs) {
    if (def.name.empty()) fail("BadSchema", "feature with empty name");
    if (!names.insert(def.name).second) {
      fail("BadSchema", "duplicate feature name '" + def.name + "'");
    }
    if (def.window < 1) {
      fail("BadSchema", "feature '" + def.name + "' has window < 1");
    }
    switch (def.transform) {
      case FeatureTransform::kReturn:
      case FeatureTransform::kGap:
      case FeatureTransform::kHlRange:
      case FeatureTransform::kVolumeRatio:
        break;
      case FeatureTransform::kRollMean:
      case FeatureTransform::kRollStd: {
        const auto src = defined.find(def.source);
        if (!is_raw_field(def.source) && src == defined.end()) {
          fail("UnknownSourceField", "feature '" + def.name +
                                         "' references undefined source '" +
                                         def.source + "'");
        }
        if (def.rolling_flag && src != defined.end() &&
            src->second == FeatureTransform::kReturn) {
          has_flagged_return_stat = true;
        }
        break;
      }
      case FeatureTransform::kNeighbor:
        if (defined.find(def.source) == defined.end()) {
          fail("UnknownSourceField", "neighbor feature '" + def.name +
                                         "' references undefined source '" +
                                         def.source + "'");
        }
        break;
    }
    defined.emplace(def.name, def.transform);
  }
  if (!has_flagged_return_stat) {
    fail("BadSchema",
         "schema needs at least one rolling-flagged rolling statistic of "
         "daily returns");
  }
}

FeatureSchema FeatureSchema::default_schema() {
  FeatureSchema s;
  s.defs = {
      {"ret_1", FeatureTransform::kReturn, "close", 1, false},
      {"ret_5", FeatureTransform::kReturn, "close", 5, false},
      {"ret_20", FeatureTransform::kReturn, "close", 20, false},
      {"gap", FeatureTransform::kGap, "", 1, false},
      {"hl_range", FeatureTransform::kHlRange, "", 1, false},
      {"hl_range_5_mean", FeatureTransform::kRollMean, "hl_range", 5, true},
      {"ret_1_5_mean", FeatureTransform::kRollMean, "ret_1", 5, true},
      {"ret_1_20_mean", FeatureTransform::kRollMean, "ret_1", 20, true},
      {"vol_5", FeatureTransform::kRollStd, "ret_1", 5, true},
      {"vol_20", FeatureTransform::kRollStd, "ret_1", 20, true},
      {"vol_ratio_20", FeatureTransform::kVolumeRatio, "volume", 20, true},
      {"nbr_ret_5", FeatureTransform::kNeighbor, "ret_5", 1, false},
      {"nbr_ret_20", FeatureTransform::kNeighbor, "ret_20", 1, false},
      {"nbr_vol_ratio_20", FeatureTransform::kNeighbor, "vol_ratio_20", 1, false},
      {"nbr_hl_range_5_mean", FeatureTransform::kNeighbor, "hl_range_5_mean", 1, false},
  };
  return s;
}

FeatureSchema FeatureSchema::parse(const std::string& text) {
  FeatureSchema schema;
  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::string body = t;
    const auto eq = t.find('=');
    if (eq != std::string::npos) {
      const std::string key = trim(t.substr(0, eq));
      if (key != "feature") {
        fail("BadSchema", "line " + std::to_string(line_no) +
                              ": expected 'feature = ...', got '" + key + "'");
      }
      body = trim(t.substr(eq + 1));
    }
    const auto fields = split(body, ',');
    if (fields.size() != 5) {
      fail("BadSchema", "line " + std::to_string(line_no) +
                            ": expected name,transform,source,window,flag");
    }
    FeatureDef def;
    def.name = trim(fields[0]);
    def.transform = transform_from_string(trim(fields[1]));
    def.source = trim(fields[2]);
    def.window = static_cast<int>(parse_long(trim(fields[3]), "schema window"));
    const std::string flag = trim(fields[4]);
    def.rolling_flag = (flag == "1" || flag == "true");
    schema.defs.push_back(std::move(def));
  }
  schema.validate();
  return schema;
}

std::vector<FeatureDef> FeatureSchema::own_defs() const {
  std::vector<FeatureDef> out;
  for (const auto& d : defs) {
    if (d.transform != FeatureTransform::kNeighbor) out.push_back(d);
  }
  return out;
}

std::vector<FeatureDef> FeatureSchema::neighbor_defs() const {
  std::vector<FeatureDef> out;
  for (const auto& d : defs) {
    if (d.transform == FeatureTransform::kNeighbor) out.push_back(d);
  }
  return out;
}

bool FeatureSchema::has_feature(const std::string& name) const {
  for (const auto& d : defs) {
    if (d.name == name) return true;
  }
  return false;
}

FeatureMatrix::FeatureMatrix(std::vector<std::string> calendar,
                             std::vector<std::string> assets)
    : calendar_(std::move(calendar)), assets_(std::move(assets)) {}

std::ptrdiff_t FeatureMatrix::feature_index(std::string_view name) const {
  for (std::size_t f = 0; f < names_.size(); ++f) {
    if (names_[f] == name) return static_cast<std::ptrdiff_t>(f);
  }
  return -1;
}

void FeatureMatrix::add_column(
    std::string name, std::shared_ptr<const std::vector<double>> col) {
  if (col->size() != n_dates() * n_assets()) {
    fail("BadColumn", "column '" + name + "' has wrong size");
  }
  names_.push_back(std::move(name));
  cols_.push_back(std::move(col));
}

std::vector<double> rolling_trailing(std::span<const double> series, int window,
                                     RollStat stat) {
  const std::size_t n = series.size();
  std::vector<double> out(n, missing_value());
  if (window < 1) fail("BadWindow", "window must be >= 1");
  const std::size_t w = static_cast<std::size_t>(window);
  for (std::size_t t = w - 1; t < n; ++t) {
    const std::size_t lo = t + 1 - w;
    double sum = 0.0;
    bool complete = true;
    for (std::size_t s = lo; s <= t; ++s) {
      if (is_missing(series[s])) {
        complete = false;
        break;
      }
      sum += series[s];
    }
    if (!complete) continue;
    if (stat == RollStat::kMean) {
      out[t] = sum / static_cast<double>(w);
    } else {
      if (w < 2) continue;  // sample std undefined for one observation
      const double mean = sum / static_cast<double>(w);
      double ss = 0.0;
      for (std::size_t s = lo; s <= t; ++s) {
        const double d = series[s] - mean;
        ss += d * d;
      }
      out[t] = std::sqrt(ss / static_cast<double>(w - 1));
    }
  }
  return out;
}

std::vector<double> rolling_shifted(std::span<const double> series, int window,
                                    RollStat stat, int future_days) {
  if (future_days < 0) fail("BadWindow", "future_days must be >= 0");
  const std::vector<double> trailing = rolling_trailing(series, window, stat);
  const std::size_t n = series.size();
  std::vector<double> out(n, missing_value());
  const std::size_t shift = static_cast<std::size_t>(future_days);
  for (std::size_t t = 0; t + shift < n; ++t) {
    out[t] = trailing[t + shift];
  }
  return out;
}

namespace {

// Per-asset series view over a T*N grid.
std::vector<double> asset_series(std::span<const double> grid, std::size_t t_count,
                                 std::size_t n_assets, std::size_t i) {
  std::vector<double> s(t_count);
  for (std::size_t t = 0; t < t_count; ++t) s[t] = grid[t * n_assets + i];
  return s;
}

}  // namespace

FeatureMatrix build_features(const OhlcvPanel& panel, const FeatureSchema& schema,
                             bool temp_center, int future_days) {
  schema.validate();
  const std::size_t T = panel.n_dates();
  const std::size_t N = panel.n_assets();
  FeatureMatrix out(panel.calendar(), panel.assets());

  // Raw fields addressable as rolling sources.
  std::unordered_map<std::string, std::vector<double>> built;
  auto raw_grid = [&](const std::string& field) {
    std::vector<double> g(T * N, missing_value());
    for (std::size_t t = 0; t < T; ++t) {
      for (std::size_t i = 0; i < N; ++i) {
        if (!panel.has_bar(t, i)) continue;
        const std::size_t k = t * N + i;
        if (field == "open") g[k] = panel.open(t, i);
        else if (field == "high") g[k] = panel.high(t, i);
        else if (field == "low") g[k] = panel.low(t, i);
        else if (field == "close") g[k] = panel.close(t, i);
        else g[k] = panel.volume(t, i);
      }
    }
    return g;
  };

  auto source_grid = [&](const std::string& name) -> const std::vector<double>& {
    auto it = built.find(name);
    if (it != built.end()) return it->second;
    if (is_raw_field(name)) {
      return built.emplace(name, raw_grid(name)).first->second;
    }
    fail("UnknownSourceField", "source '" + name + "' not available");
  };

  for (const auto& def : schema.defs) {
    if (def.transform == FeatureTransform::kNeighbor) continue;
    std::vector<double> col(T * N, missing_value());
    switch (def.transform) {
      case FeatureTransform::kReturn: {
        const std::size_t w = static_cast<std::size_t>(def.window);
        for (std::size_t i = 0; i < N; ++i) {
          for (std::size_t t = w; t < T; ++t) {
            if (!panel.has_bar(t, i) || !panel.has_bar(t - w, i)) continue;
            col[t * N + i] = std::log(panel.close(t, i) / panel.close(t - w, i));
          }
        }
        break;
      }
      case FeatureTransform::kGap: {
        for (std::size_t i = 0; i < N; ++i) {
          for (std::size_t t = 1; t < T; ++t) {
            if (!panel.has_bar(t, i) || !panel.has_bar(t - 1, i)) continue;
            col[t * N + i] = std::log(panel.open(t, i) / panel.close(t - 1, i));
          }
        }
        break;
      }
      case FeatureTransform::kHlRange: {
        for (std::size_t i = 0; i < N; ++i) {
          for (std::size_t t = 0; t < T; ++t) {
            if (!panel.has_bar(t, i)) continue;
            col[t * N + i] =
                (panel.high(t, i) - panel.low(t, i)) / panel.close(t, i);
          }
        }
        break;
      }
      case FeatureTransform::kRollMean:
      case FeatureTransform::kRollStd: {
        const auto& src = source_grid(def.source);
        const RollStat stat = def.transform == FeatureTransform::kRollMean
                                  ? RollStat::kMean
                                  : RollStat::kStd;
        const bool shifted = temp_center && def.rolling_flag;
        for (std::size_t i = 0; i < N; ++i) {
          const auto series = asset_series(src, T, N, i);
          const auto rolled = shifted
                                  ? rolling_shifted(series, def.window, stat,
                                                    future_days)
                                  : rolling_trailing(series, def.window, stat);
          for (std::size_t t = 0; t < T; ++t) col[t * N + i] = rolled[t];
        }
        break;
      }
      case FeatureTransform::kVolumeRatio: {
        const auto& src = source_grid(def.source.empty() ? "volume" : def.source);
        const bool shifted = temp_center && def.rolling_flag;
        for (std::size_t i = 0; i < N; ++i) {
          const auto series = asset_series(src, T, N, i);
          const auto denom = shifted
                                 ? rolling_shifted(series, def.window,
                                                   RollStat::kMean, future_days)
                                 : rolling_trailing(series, def.window,
                                                    RollStat::kMean);
          for (std::size_t t = 0; t < T; ++t) {
            if (is_missing(series[t]) || is_missing(denom[t]) || denom[t] == 0.0)
              continue;
            col[t * N + i] = series[t] / denom[t];
          }
        }
        break;
      }
      case FeatureTransform::kNeighbor:
        break;  // handled by the graph module
    }
    built.emplace(def.name, col);
    out.add_column(def.name,
                   std::make_shared<const std::vector<double>>(std::move(col)));
  }
  return out;
}

NormStats fit_norm(const FeatureMatrix& features, std::span<const RowRef> scope_rows,
                   const std::string& scope_label) {
  if (scope_rows.empty()) fail("EmptyScope", "normalization scope is empty");
  const std::size_t F = features.n_features();
  const std::size_t N = features.n_assets();
  NormStats stats;
  stats.feature_names = features.names();
  stats.mean.assign(F, missing_value());
  stats.stddev.assign(F, missing_value());
  stats.retained.assign(F, false);
  stats.scope_label = scope_label;

  for (std::size_t f = 0; f < F; ++f) {
    const auto col = features.column(f);
    double sum = 0.0;
    std::size_t n = 0;
    for (const RowRef& r : scope_rows) {
      const double v = col[static_cast<std::size_t>(r.t) * N + r.i];
      if (is_missing(v)) continue;
      sum += v;
      ++n;
    }
    if (n < 2) {
      stats.dropped.push_back(features.names()[f]);
      continue;
    }
    const double mean = sum / static_cast<double>(n);
    double ss = 0.0;
    for (const RowRef& r : scope_rows) {
      const double v = col[static_cast<std::size_t>(r.t) * N + r.i];
      if (is_missing(v)) continue;
      const double d = v - mean;
      ss += d * d;
    }
    const double sd = std::sqrt(ss / static_cast<double>(n - 1));
    if (sd == 0.0) {
      stats.dropped.push_back(features.names()[f]);
      continue;
    }
    stats.mean[f] = mean;
    stats.stddev[f] = sd;
    stats.retained[f] = true;
  }
  return stats;
}

FeatureMatrix apply_norm(const FeatureMatrix& features, const NormStats& stats) {
  if (stats.feature_names != features.names()) {
    fail("BadNormStats", "stats do not cover this feature matrix");
  }
  FeatureMatrix out(features.calendar(), features.assets());
  for (std::size_t f = 0; f < features.n_features(); ++f) {
    if (!stats.retained[f]) continue;
    const auto col = features.column(f);
    auto z = std::make_shared<std::vector<double>>(col.size(), missing_value());
    const double mu = stats.mean[f];
    const double sd = stats.stddev[f];
    for (std::size_t k = 0; k < col.size(); ++k) {
      if (!is_missing(col[k])) (*z)[k] = (col[k] - mu) / sd;
    }
    out.add_column(features.names()[f], std::move(z));
  }
  return out;
}

std::vector<RowRef> rows_for_dates(std::span<const std::size_t> date_indices,
                                   std::size_t n_assets) {
  std::vector<RowRef> rows;
  rows.reserve(date_indices.size() * n_assets);
  for (std::size_t t : date_indices) {
    for (std::size_t i = 0; i < n_assets; ++i) {
      rows.push_back(RowRef{static_cast<std::uint32_t>(t),
                            static_cast<std::uint32_t>(i)});
    }
  }
  return rows;
}

std::vector<RowRef> all_rows(std::size_t n_dates, std::size_t n_assets) {
  std::vector<RowRef> rows;
  rows.reserve(n_dates * n_assets);
  for (std::size_t t = 0; t < n_dates; ++t) {
    for (std::size_t i = 0; i < n_assets; ++i) {
      rows.push_back(RowRef{static_cast<std::uint32_t>(t),
                            static_cast<std::uint32_t>(i)});
    }
  }
  return rows;
}

}  // namespace leakbench
