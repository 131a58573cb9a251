#include "leakbench/panel.hpp"

#include <algorithm>
#include <fstream>
#include <limits>
#include <map>
#include <set>
#include <sstream>
#include <unordered_map>

#include "leakbench/dates.hpp"
#include "leakbench/errors.hpp"
#include "leakbench/text.hpp"

namespace leakbench {

double missing_value() { return std::numeric_limits<double>::quiet_NaN(); }

OhlcvPanel::OhlcvPanel(std::vector<std::string> calendar,
                       std::vector<std::string> assets)
    : calendar_(std::move(calendar)), assets_(std::move(assets)) {
  for (std::size_t t = 1; t < calendar_.size(); ++t) {
    if (calendar_[t - 1] >= calendar_[t]) {
      fail("BadCalendar", "calendar not strictly increasing at '" +
                              calendar_[t] + "'");
    }
  }
  std::set<std::string> seen(assets_.begin(), assets_.end());
  if (seen.size() != assets_.size()) {
    fail("BadAssets", "duplicate asset identifiers");
  }
  const std::size_t n = calendar_.size() * assets_.size();
  open_.assign(n, missing_value());
  high_.assign(n, missing_value());
  low_.assign(n, missing_value());
  close_.assign(n, missing_value());
  volume_.assign(n, missing_value());
}

void OhlcvPanel::set_bar(std::size_t t, std::size_t i, const OhlcvBar& bar) {
  if (!(bar.open > 0.0) || !(bar.high > 0.0) || !(bar.low > 0.0) ||
      !(bar.close > 0.0)) {
    fail("InvalidBar", "non-positive price");
  }
  if (!(bar.volume >= 0.0)) {
    fail("InvalidBar", "negative volume");
  }
  if (bar.low > std::min(bar.open, bar.close) ||
      bar.high < std::max(bar.open, bar.close)) {
    fail("InvalidBar", "low/high do not bracket open/close");
  }
  const std::size_t k = t * n_assets() + i;
  open_[k] = bar.open;
  high_[k] = bar.high;
  low_[k] = bar.low;
  close_[k] = bar.close;
  volume_[k] = bar.volume;
}

std::ptrdiff_t OhlcvPanel::date_index(std::string_view date) const {
  const auto it = std::lower_bound(calendar_.begin(), calendar_.end(), date);
  if (it == calendar_.end() || *it != date) return -1;
  return it - calendar_.begin();
}

std::ptrdiff_t OhlcvPanel::asset_index(std::string_view asset) const {
  for (std::size_t i = 0; i < assets_.size(); ++i) {
    if (assets_[i] == asset) return static_cast<std::ptrdiff_t>(i);
  }
  return -1;
}

std::vector<std::string> OhlcvPanel::cross_section(
    const std::string& date) const {
  const std::ptrdiff_t t = date_index(date);
  if (t < 0) {
    fail("DateNotInCalendar", "'" + date + "' is not a panel trading date");
  }
  std::vector<std::string> out;
  for (std::size_t i = 0; i < n_assets(); ++i) {
    if (has_bar(static_cast<std::size_t>(t), i)) out.push_back(assets_[i]);
  }
  return out;
}

std::vector<std::size_t> OhlcvPanel::cross_section_indices(
    std::size_t t) const {
  std::vector<std::size_t> out;
  for (std::size_t i = 0; i < n_assets(); ++i) {
    if (has_bar(t, i)) out.push_back(i);
  }
  return out;
}

std::size_t OhlcvPanel::bar_count() const {
  std::size_t n = 0;
  for (double c : close_) {
    if (!is_missing(c)) ++n;
  }
  return n;
}

void OhlcvPanel::validate() const {
  for (std::size_t i = 0; i < n_assets(); ++i) {
    bool any = false;
    for (std::size_t t = 0; t < n_dates(); ++t) {
      if (has_bar(t, i)) {
        any = true;
        break;
      }
    }
    if (!any) {
      fail("EmptyAsset", "asset '" + assets_[i] + "' has no bars");
    }
  }
}

namespace {

constexpr const char* kHeader = "date,ticker,open,high,low,close,volume";

struct RawRow {
  std::string date;
  std::string ticker;
  OhlcvBar bar;
  std::size_t line_no;
};

}  // namespace

OhlcvPanel load_panel(const std::string& path) {
  std::ifstream in(path);
  if (!in) {
    fail("IoError", "cannot open '" + path + "'");
  }
  std::string line;
  if (!std::getline(in, line)) {
    fail("MissingColumn", "empty file '" + path + "'");
  }
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kHeader) {
    fail("MissingColumn", "header must be exactly '" + std::string(kHeader) +
                              "', got '" + line + "'");
  }

  std::vector<RawRow> rows;
  std::size_t line_no = 1;
  while (std::getline(in, line)) {
    ++line_no;
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    const auto fields = split(line, ',');
    if (fields.size() != 7) {
      fail("MissingColumn", "row " + std::to_string(line_no) + ": expected 7 fields, got " +
                                std::to_string(fields.size()));
    }
    RawRow row;
    row.date = fields[0];
    parse_iso_date(row.date);  // validates format
    row.ticker = fields[1];
    if (row.ticker.empty()) {
      fail("MissingColumn", "row " + std::to_string(line_no) + ": empty ticker");
    }
    const std::string ctx = "row " + std::to_string(line_no);
    row.bar.open = parse_double(fields[2], ctx);
    row.bar.high = parse_double(fields[3], ctx);
    row.bar.low = parse_double(fields[4], ctx);
    row.bar.close = parse_double(fields[5], ctx);
    row.bar.volume = parse_double(fields[6], ctx);
    row.line_no = line_no;
    rows.push_back(std::move(row));
  }

  // Per-asset date order check plus duplicate detection.
  std::unordered_map<std::string, std::string> last_date_for;
  std::set<std::pair<std::string, std::string>> seen;
  std::set<std::string> date_set;
  std::vector<std::string> asset_order;
  for (const auto& row : rows) {
    date_set.insert(row.date);
    const auto [it, inserted] = seen.emplace(row.date, row.ticker);
    if (!inserted) {
      fail("DuplicateRow", "row " + std::to_string(row.line_no) + ": duplicate (" +
                               row.date + ", " + row.ticker + ")");
    }
    auto last = last_date_for.find(row.ticker);
    if (last == last_date_for.end()) {
      last_date_for.emplace(row.ticker, row.date);
      asset_order.push_back(row.ticker);
    } else {
      if (row.date < last->second) {
        fail("UnsortedWithinAsset",
             "row " + std::to_string(row.line_no) + ": dates for '" + row.ticker +
                 "' are not in increasing order");
      }
      last->second = row.date;
    }
  }

  std::sort(asset_order.begin(), asset_order.end());
  std::vector<std::string> calendar(date_set.begin(), date_set.end());
  OhlcvPanel panel(std::move(calendar), std::move(asset_order));

  std::unordered_map<std::string, std::size_t> asset_idx;
  for (std::size_t i = 0; i < panel.assets().size(); ++i) {
    asset_idx[panel.assets()[i]] = i;
  }
  for (const auto& row : rows) {
    const std::size_t t =
        static_cast<std::size_t>(panel.date_index(row.date));
    const std::size_t i = asset_idx.at(row.ticker);
    try {
      panel.set_bar(t, i, row.bar);
    } catch (const Error& e) {
      fail("NonPositivePrice",
           "row " + std::to_string(row.line_no) + ": " + e.what());
    }
  }
  panel.validate();
  return panel;
}

void save_panel(const OhlcvPanel& panel, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) {
    fail("IoError", "cannot write '" + path + "'");
  }
  out << kHeader << "\n";
  for (std::size_t t = 0; t < panel.n_dates(); ++t) {
    for (std::size_t i = 0; i < panel.n_assets(); ++i) {
      if (!panel.has_bar(t, i)) continue;
      const OhlcvBar b = panel.bar(t, i);
      out << panel.calendar()[t] << ',' << panel.assets()[i] << ','
          << fmt_double(b.open) << ',' << fmt_double(b.high) << ','
          << fmt_double(b.low) << ',' << fmt_double(b.close) << ','
          << fmt_double(b.volume) << "\n";
    }
  }
  if (!out) {
    fail("IoError", "write failed for '" + path + "'");
  }
}

}  // namespace leakbench
