#include "leakbench/synth.hpp"

#include <cmath>

#include "leakbench/dates.hpp"
#include "leakbench/errors.hpp"
#include "leakbench/rng.hpp"

namespace leakbench {

namespace {

enum Field : std::uint64_t {
  kClose = 0,
  kOpen = 1,
  kHigh = 2,
  kLow = 3,
  kVolume = 4,
  kFactor = 5,
};

constexpr std::uint64_t kFactorKey = 0xffffffffULL;

}  // namespace

void SynthConfig::validate() const {
  if (n_assets < 2) fail("InvalidConfig", "n_assets must be >= 2");
  if (n_days < 300) fail("InvalidConfig", "n_days must be >= 300");
  if (!(daily_vol > 0.0) || !(intraday_vol > 0.0)) {
    fail("InvalidConfig", "volatilities must be positive");
  }
  if (!(start_price > 0.0)) fail("InvalidConfig", "start_price must be positive");
  if (!(base_volume > 0.0)) fail("InvalidConfig", "base_volume must be positive");
  if (factor_vol < 0.0) fail("InvalidConfig", "factor_vol must be >= 0");
  parse_iso_date(start_date);
}

std::vector<std::string> weekday_calendar(const std::string& start,
                                          int n_days) {
  std::vector<std::string> out;
  out.reserve(static_cast<std::size_t>(n_days));
  long d = days_from_civil(parse_iso_date(start));
  while (is_weekend(d)) ++d;
  while (static_cast<int>(out.size()) < n_days) {
    if (!is_weekend(d)) {
      out.push_back(format_iso_date(civil_from_days(d)));
    }
    ++d;
  }
  return out;
}

OhlcvPanel generate_panel(const SynthConfig& cfg) {
  cfg.validate();
  const CounterRng rng(cfg.seed);

  std::vector<std::string> assets;
  assets.reserve(static_cast<std::size_t>(cfg.n_assets));
  for (int i = 0; i < cfg.n_assets; ++i) {
    char buf[16];
    std::snprintf(buf, sizeof(buf), "A%04d", i);
    assets.emplace_back(buf);
  }

  OhlcvPanel panel(weekday_calendar(cfg.start_date, cfg.n_days), std::move(assets));

  for (std::size_t i = 0; i < panel.n_assets(); ++i) {
    double prev_close = cfg.start_price;
    for (std::size_t t = 0; t < panel.n_dates(); ++t) {
      double shock = cfg.daily_vol * rng.normal(i, t, kClose);
      if (cfg.factor_vol > 0.0) {
        shock += cfg.factor_vol * rng.normal(kFactorKey, t, kFactor);
      }
      const double close = prev_close * std::exp(shock);
      const double open =
          prev_close * std::exp(cfg.intraday_vol * rng.normal(i, t, kOpen));
      const double high = std::max(open, close) *
                          std::exp(cfg.intraday_vol *
                                   std::fabs(rng.normal(i, t, kHigh)));
      const double low = std::min(open, close) *
                         std::exp(-cfg.intraday_vol *
                                  std::fabs(rng.normal(i, t, kLow)));
      const double volume =
          cfg.base_volume * std::exp(cfg.volume_vol * rng.normal(i, t, kVolume));
      panel.set_bar(t, i, OhlcvBar{open, high, low, close, volume});
      prev_close = close;
    }
  }
  return panel;
}

}  // namespace leakbench
