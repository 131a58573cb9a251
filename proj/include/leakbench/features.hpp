#pragma once

#include <cstddef>
#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "leakbench/panel.hpp"

namespace leakbench {

enum class RollStat { kMean, kStd };

enum class FeatureTransform {
  kReturn,       // log(close_t / close_{t-window})
  kGap,          // log(open_t / close_{t-1})
  kHlRange,      // (high_t - low_t) / close_t
  kRollMean,     // trailing mean of `source` over `window`
  kRollStd,      // trailing sample std of `source` over `window`
  kVolumeRatio,  // volume_t / trailing `window`-mean of volume
  kNeighbor,     // graph aggregate of `source` (filled by the graph module)
};

struct FeatureDef {
  std::string name;
  FeatureTransform transform = FeatureTransform::kReturn;
  // Raw field (open/high/low/close/volume) or a previously defined feature.
  std::string source;
  int window = 1;
  // Rolling-flagged features are the ones the temporal-centering switch moves.
  bool rolling_flag = false;
};

struct FeatureSchema {
  std::vector<FeatureDef> defs;

  void validate() const;

  // Features the engine ships with. Non-neighbor columns precede the four
  // neighbor aggregates.
  static FeatureSchema default_schema();

  // One `feature = name,transform,source,window,flag` line per definition.
  static FeatureSchema parse(const std::string& text);

  std::vector<FeatureDef> own_defs() const;       // non-neighbor
  std::vector<FeatureDef> neighbor_defs() const;  // kNeighbor only
  bool has_feature(const std::string& name) const;
};

std::string to_string(FeatureTransform t);
FeatureTransform transform_from_string(const std::string& s);

// Date x asset grid per feature; NaN marks insufficient history. Columns are
// shared (copy-on-write style) so protocol variants that agree on a column
// reference the identical buffer.
class FeatureMatrix {
 public:
  FeatureMatrix() = default;
  FeatureMatrix(std::vector<std::string> calendar, std::vector<std::string> assets);

  std::size_t n_dates() const { return calendar_.size(); }
  std::size_t n_assets() const { return assets_.size(); }
  std::size_t n_features() const { return names_.size(); }

  const std::vector<std::string>& calendar() const { return calendar_; }
  const std::vector<std::string>& assets() const { return assets_; }
  const std::vector<std::string>& names() const { return names_; }

  double value(std::size_t f, std::size_t t, std::size_t i) const {
    return (*cols_[f])[t * n_assets() + i];
  }
  std::span<const double> column(std::size_t f) const { return *cols_[f]; }
  std::shared_ptr<const std::vector<double>> column_ptr(std::size_t f) const {
    return cols_[f];
  }

  std::ptrdiff_t feature_index(std::string_view name) const;

  void add_column(std::string name, std::shared_ptr<const std::vector<double>> col);

 private:
  std::vector<std::string> calendar_;
  std::vector<std::string> assets_;
  std::vector<std::string> names_;
  std::vector<std::shared_ptr<const std::vector<double>>> cols_;
};

// Trailing rolling statistic: output[t] = stat over [t-window+1, t], missing
// unless every input in the window is present.
std::vector<double> rolling_trailing(std::span<const double> series, int window,
                                     RollStat stat);

// Future-shifted rolling statistic: output[t] = rolling_trailing(...)[t + future_days].
std::vector<double> rolling_shifted(std::span<const double> series, int window,
                                    RollStat stat, int future_days);

// Builds every non-neighbor column of the schema. When temp_center is set the
// rolling-flagged columns use the future-shifted operator with `future_days`;
// everything else is bit-identical across the two modes.
FeatureMatrix build_features(const OhlcvPanel& panel, const FeatureSchema& schema,
                             bool temp_center, int future_days);

struct RowRef {
  std::uint32_t t = 0;
  std::uint32_t i = 0;
};

struct NormStats {
  std::vector<std::string> feature_names;
  std::vector<double> mean;
  std::vector<double> stddev;
  std::vector<bool> retained;  // false => constant within scope, dropped
  std::vector<std::string> dropped;
  std::string scope_label;  // "train" or "full"
};

// Per-feature mean/std (ddof = 1) over non-missing values within scope_rows.
NormStats fit_norm(const FeatureMatrix& features, std::span<const RowRef> scope_rows,
                   const std::string& scope_label);

// z = (x - mean) / std for retained features; dropped columns are omitted
// from the output. Missing stays missing.
FeatureMatrix apply_norm(const FeatureMatrix& features, const NormStats& stats);

std::vector<RowRef> rows_for_dates(std::span<const std::size_t> date_indices,
                                   std::size_t n_assets);
std::vector<RowRef> all_rows(std::size_t n_dates, std::size_t n_assets);

}  // namespace leakbench
