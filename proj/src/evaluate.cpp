#include "leakbench/evaluate.hpp"

#include <algorithm>
#include <cmath>
#include <unordered_map>

#include "leakbench/dates.hpp"
#include "leakbench/errors.hpp"

namespace leakbench {

std::vector<WalkForwardSplit> make_splits(
    const std::vector<std::string>& calendar, const std::vector<int>& test_years,
    int embargo_days) {
  if (embargo_days < 0) fail("InvalidConfig", "embargo must be >= 0");
  std::vector<int> years = test_years;
  std::sort(years.begin(), years.end());
  years.erase(std::unique(years.begin(), years.end()), years.end());

  std::vector<WalkForwardSplit> splits;
  for (int year : years) {
    WalkForwardSplit s;
    s.test_year = year;
    s.embargo_days = embargo_days;
    for (std::size_t t = 0; t < calendar.size(); ++t) {
      if (year_of(calendar[t]) == year) s.test_dates.push_back(t);
    }
    if (s.test_dates.empty()) {
      fail("YearNotInCalendar",
           "test year " + std::to_string(year) + " has no trading days");
    }
    const std::size_t first_test = s.test_dates.front();
    const std::ptrdiff_t train_end = static_cast<std::ptrdiff_t>(first_test) -
                                     embargo_days - 1;
    for (std::ptrdiff_t t = 0; t <= train_end; ++t) {
      s.train_dates.push_back(static_cast<std::size_t>(t));
    }
    splits.push_back(std::move(s));
  }
  return splits;
}

BacktestSeries run_backtest(const ScorePanel& scores,
                            const TradeReturnPanel& trade_returns,
                            const std::vector<int>& costs_bps) {
  if (scores.assets != trade_returns.assets) {
    fail("PairingMismatch", "scores and trade returns disagree on assets");
  }
  const std::size_t n_assets = scores.assets.size();

  BacktestSeries series;
  for (int c : costs_bps) series.net[c] = {};

  std::vector<std::pair<std::uint32_t, double>> prev_holdings;

  for (std::size_t d = 0; d < scores.dates.size(); ++d) {
    const std::size_t t = scores.date_index[d];

    // Evaluable cross-section: assets with a score today.
    std::vector<std::uint32_t> scored;
    for (std::size_t i = 0; i < n_assets; ++i) {
      if (!is_missing(scores.value(d, i))) {
        scored.push_back(static_cast<std::uint32_t>(i));
      }
    }
    if (scored.empty()) {
      series.warnings.push_back("empty cross-section on " + scores.dates[d]);
      continue;
    }

    // Descending by score, ties by ascending asset id (= index order, since
    // assets are stored sorted).
    std::sort(scored.begin(), scored.end(),
              [&](std::uint32_t a, std::uint32_t b) {
                const double sa = scores.value(d, a);
                const double sb = scores.value(d, b);
                if (sa != sb) return sa > sb;
                return a < b;
              });
    const std::size_t decile =
        (scored.size() + 9) / 10;  // ceil(N/10), N = evaluable count

    std::vector<std::uint32_t> selected(scored.begin(),
                                        scored.begin() +
                                            static_cast<std::ptrdiff_t>(decile));
    // Drop members without a trade return, renormalize over the rest.
    std::vector<std::uint32_t> held;
    for (std::uint32_t i : selected) {
      if (!is_missing(trade_returns.value(t, i))) held.push_back(i);
    }
    if (held.size() < selected.size()) {
      series.warnings.push_back("dropped " +
                                std::to_string(selected.size() - held.size()) +
                                " missing-return holdings on " + scores.dates[d]);
    }
    if (held.empty()) {
      series.warnings.push_back("no tradable holdings on " + scores.dates[d]);
      continue;
    }
    std::sort(held.begin(), held.end());
    const double w = 1.0 / static_cast<double>(held.size());

    double gross = 0.0;
    std::vector<std::pair<std::uint32_t, double>> holdings;
    holdings.reserve(held.size());
    for (std::uint32_t i : held) {
      gross += w * trade_returns.value(t, i);
      holdings.emplace_back(i, w);
    }

    // Two-sided L1 turnover over the union of old and new holdings; the first
    // traded day is a full entry from cash.
    double turnover;
    if (series.date_index.empty()) {
      turnover = 1.0;
    } else {
      turnover = 0.0;
      std::size_t a = 0, b = 0;
      while (a < prev_holdings.size() || b < holdings.size()) {
        if (b >= holdings.size() ||
            (a < prev_holdings.size() &&
             prev_holdings[a].first < holdings[b].first)) {
          turnover += prev_holdings[a].second;
          ++a;
        } else if (a >= prev_holdings.size() ||
                   holdings[b].first < prev_holdings[a].first) {
          turnover += holdings[b].second;
          ++b;
        } else {
          turnover += std::fabs(holdings[b].second - prev_holdings[a].second);
          ++a;
          ++b;
        }
      }
    }

    series.date_index.push_back(t);
    series.gross.push_back(gross);
    series.turnover.push_back(turnover);
    for (int c : costs_bps) {
      series.net[c].push_back(gross - turnover * static_cast<double>(c) / 1e4);
    }
    series.holdings.push_back(holdings);
    prev_holdings = std::move(holdings);
  }
  return series;
}

double max_drawdown(std::span<const double> net) {
  if (net.empty()) fail("InvalidConfig", "max_drawdown needs a non-empty series");
  double wealth = 1.0;
  double peak = -1.0;
  double dd = 0.0;
  for (double r : net) {
    wealth *= 1.0 + r;
    peak = std::max(peak, wealth);
    dd = std::max(dd, (peak - wealth) / peak);
  }
  return dd;
}

}  // namespace leakbench
