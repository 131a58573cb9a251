#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "leakbench/panel.hpp"

namespace leakbench {

// Null-market generator: independent geometric random walks per asset, no
// exploitable cross-sectional signal. Draws come from the counter-based RNG
// keyed by (seed, asset, day, field), so generation is order-independent.
struct SynthConfig {
  int n_assets = 100;
  int n_days = 2500;
  double daily_vol = 0.02;
  double intraday_vol = 0.01;
  double start_price = 100.0;
  double base_volume = 1e6;
  double volume_vol = 0.5;
  // Common-factor loading on daily close returns; 0 keeps assets independent.
  double factor_vol = 0.0;
  std::uint64_t seed = 0;
  std::string start_date = "2010-01-04";

  void validate() const;  // throws InvalidConfig
};

OhlcvPanel generate_panel(const SynthConfig& cfg);

// Weekday calendar: n_days trading dates starting at `start`, skipping
// Saturdays and Sundays.
std::vector<std::string> weekday_calendar(const std::string& start, int n_days);

}  // namespace leakbench
