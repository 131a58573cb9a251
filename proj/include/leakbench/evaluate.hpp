#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "leakbench/models.hpp"
#include "leakbench/protocol.hpp"

namespace leakbench {

struct WalkForwardSplit {
  int test_year = 0;
  std::vector<std::size_t> train_dates;  // calendar indices, expanding window
  std::vector<std::size_t> test_dates;   // all trading days of the year
  int embargo_days = 0;
};

// Expanding-window yearly splits: train = panel start through
// (first test day - embargo - 1). Throws YearNotInCalendar.
std::vector<WalkForwardSplit> make_splits(const std::vector<std::string>& calendar,
                                          const std::vector<int>& test_years,
                                          int embargo_days);

// Daily series of the fixed top-decile long-only backtest. net[c][k] =
// gross[k] - turnover[k] * c / 1e4, exactly.
struct BacktestSeries {
  std::vector<std::size_t> date_index;  // panel calendar indices actually traded
  std::vector<double> gross;
  std::vector<double> turnover;
  std::map<int, std::vector<double>> net;  // cost (bps) -> daily series
  std::vector<std::vector<std::pair<std::uint32_t, double>>> holdings;
  std::vector<std::string> warnings;
};

// Per date: rank the scored cross-section descending (ties by ascending asset
// id), hold the top ceil(N/10) equally weighted. Assets whose trade return is
// missing are dropped that day with the weights renormalized; a date with no
// holdings is skipped with a warning. First traded day is charged full entry
// turnover (1.0).
BacktestSeries run_backtest(const ScorePanel& scores,
                            const TradeReturnPanel& trade_returns,
                            const std::vector<int>& costs_bps);

// Peak-to-trough on compounded wealth W_k = prod(1 + net), scanning only the
// observed wealth points.
double max_drawdown(std::span<const double> net);

}  // namespace leakbench
