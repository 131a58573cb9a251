#pragma once

#include <cmath>
#include <cstddef>
#include <string>
#include <string_view>
#include <vector>

namespace leakbench {

inline bool is_missing(double v) { return std::isnan(v); }
double missing_value();

struct OhlcvBar {
  double open = 0.0;
  double high = 0.0;
  double low = 0.0;
  double close = 0.0;
  double volume = 0.0;
};

// Dense date x asset grid of daily bars. Missing cells (asset not traded that
// day) are NaN in every field. Immutable once built; safe to share across
// worker threads.
class OhlcvPanel {
 public:
  OhlcvPanel() = default;

  // Calendar must be strictly increasing ISO dates; asset ids unique.
  OhlcvPanel(std::vector<std::string> calendar, std::vector<std::string> assets);

  std::size_t n_dates() const { return calendar_.size(); }
  std::size_t n_assets() const { return assets_.size(); }

  const std::vector<std::string>& calendar() const { return calendar_; }
  const std::vector<std::string>& assets() const { return assets_; }

  bool has_bar(std::size_t t, std::size_t i) const {
    return !is_missing(close_[t * n_assets() + i]);
  }

  double open(std::size_t t, std::size_t i) const { return open_[t * n_assets() + i]; }
  double high(std::size_t t, std::size_t i) const { return high_[t * n_assets() + i]; }
  double low(std::size_t t, std::size_t i) const { return low_[t * n_assets() + i]; }
  double close(std::size_t t, std::size_t i) const { return close_[t * n_assets() + i]; }
  double volume(std::size_t t, std::size_t i) const { return volume_[t * n_assets() + i]; }

  OhlcvBar bar(std::size_t t, std::size_t i) const {
    const std::size_t k = t * n_assets() + i;
    return OhlcvBar{open_[k], high_[k], low_[k], close_[k], volume_[k]};
  }

  // Throws Error("InvalidBar") when the bar violates the shape invariant
  // (low <= min(open, close), high >= max(open, close), prices > 0, vol >= 0).
  void set_bar(std::size_t t, std::size_t i, const OhlcvBar& bar);

  // Index lookups; -1 when absent.
  std::ptrdiff_t date_index(std::string_view date) const;
  std::ptrdiff_t asset_index(std::string_view asset) const;

  // Assets with a non-missing bar on the date. Throws DateNotInCalendar.
  std::vector<std::string> cross_section(const std::string& date) const;
  std::vector<std::size_t> cross_section_indices(std::size_t t) const;

  std::size_t bar_count() const;

  // Every asset must end up with at least one bar.
  void validate() const;

 private:
  std::vector<std::string> calendar_;
  std::vector<std::string> assets_;
  std::vector<double> open_, high_, low_, close_, volume_;
};

// CSV with header exactly `date,ticker,open,high,low,close,volume`.
// Rows for one ticker must appear in increasing date order (a disordered file
// signals a malformed export and is rejected, never re-sorted). The calendar
// is the union of all per-asset dates.
OhlcvPanel load_panel(const std::string& path);

// Canonical form: rows sorted date-major then by asset id, shortest
// round-trip float formatting, `\n` line endings.
void save_panel(const OhlcvPanel& panel, const std::string& path);

}  // namespace leakbench
