#include "leakbench/protocol.hpp"

#include <algorithm>
#include <cmath>

#include "leakbench/errors.hpp"
#include "leakbench/rng.hpp"

namespace leakbench {

std::string to_string(Variant v) {
  switch (v) {
    case Variant::kClean: return "CLEAN";
    case Variant::kTempCenter: return "TEMP_CENTER";
    case Variant::kNormGlobal: return "NORM_GLOBAL";
    case Variant::kStructGraph: return "STRUCT_GRAPH";
    case Variant::kExecClose: return "EXEC_CLOSE";
    case Variant::kExecOpen: return "EXEC_OPEN";
  }
  return "?";
}

Variant variant_from_string(const std::string& s) {
  if (s == "CLEAN") return Variant::kClean;
  if (s == "TEMP_CENTER") return Variant::kTempCenter;
  if (s == "NORM_GLOBAL") return Variant::kNormGlobal;
  if (s == "STRUCT_GRAPH") return Variant::kStructGraph;
  if (s == "EXEC_CLOSE") return Variant::kExecClose;
  if (s == "EXEC_OPEN") return Variant::kExecOpen;
  fail("BadVariant", "unknown protocol variant '" + s + "'");
}

std::string to_string(Execution e) {
  switch (e) {
    case Execution::kNextOpen: return "next_open";
    case Execution::kSameClose: return "same_close";
    case Execution::kSameOpen: return "same_open";
  }
  return "?";
}

ProtocolSpec ProtocolSpec::for_variant(Variant v, int future_days) {
  ProtocolSpec s;
  s.variant = v;
  s.future_days = future_days;
  switch (v) {
    case Variant::kClean: break;
    case Variant::kTempCenter: s.temp_center = true; break;
    case Variant::kNormGlobal: s.norm_scope = NormScope::kFull; break;
    case Variant::kStructGraph: s.graph_mode = GraphMode::kSymmetric; break;
    case Variant::kExecClose: s.execution = Execution::kSameClose; break;
    case Variant::kExecOpen: s.execution = Execution::kSameOpen; break;
  }
  return s;
}

int ProtocolSpec::knob_diff(const ProtocolSpec& other) const {
  int d = 0;
  if (temp_center != other.temp_center) ++d;
  if (graph_mode != other.graph_mode) ++d;
  if (norm_scope != other.norm_scope) ++d;
  if (execution != other.execution) ++d;
  return d;
}

void ProtocolSpec::audit_one_switch() const {
  const ProtocolSpec clean = for_variant(Variant::kClean, future_days);
  const ProtocolSpec expected = for_variant(variant, future_days);
  const int diff = knob_diff(clean);
  const int want = variant == Variant::kClean ? 0 : 1;
  if (diff != want || knob_diff(expected) != 0) {
    fail("OneSwitchViolation",
         "protocol spec for " + to_string(variant) + " flips " +
             std::to_string(diff) + " knob(s); expected " +
             std::to_string(want) + " matching the variant");
  }
}

LabelPanel make_labels(const OhlcvPanel& panel, int h, Execution execution) {
  if (h < 1) fail("InvalidConfig", "label horizon must be >= 1");
  const std::size_t T = panel.n_dates();
  const std::size_t N = panel.n_assets();
  LabelPanel out;
  out.calendar = panel.calendar();
  out.assets = panel.assets();
  out.horizon = h;
  out.execution = execution;
  out.values.assign(T * N, missing_value());
  const std::size_t hh = static_cast<std::size_t>(h);

  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      double y = missing_value();
      switch (execution) {
        case Execution::kNextOpen: {
          if (t + hh + 1 >= T) break;
          if (panel.has_bar(t + 1, i) && panel.has_bar(t + hh + 1, i)) {
            y = std::log(panel.open(t + hh + 1, i) / panel.open(t + 1, i));
          }
          break;
        }
        case Execution::kSameClose: {
          if (t + hh >= T) break;
          if (panel.has_bar(t, i) && panel.has_bar(t + hh, i)) {
            y = std::log(panel.close(t + hh, i) / panel.close(t, i));
          }
          break;
        }
        case Execution::kSameOpen: {
          if (t + hh >= T) break;
          if (panel.has_bar(t, i) && panel.has_bar(t + hh, i)) {
            y = std::log(panel.open(t + hh, i) / panel.open(t, i));
          }
          break;
        }
      }
      out.values[t * N + i] = y;
    }
  }
  return out;
}

TradeReturnPanel make_trade_returns(const OhlcvPanel& panel,
                                    Execution execution) {
  const std::size_t T = panel.n_dates();
  const std::size_t N = panel.n_assets();
  TradeReturnPanel out;
  out.calendar = panel.calendar();
  out.assets = panel.assets();
  out.execution = execution;
  out.values.assign(T * N, missing_value());

  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      double r = missing_value();
      switch (execution) {
        case Execution::kNextOpen:
          if (t + 2 < T && panel.has_bar(t + 1, i) && panel.has_bar(t + 2, i)) {
            r = panel.open(t + 2, i) / panel.open(t + 1, i) - 1.0;
          }
          break;
        case Execution::kSameClose:
          if (t + 1 < T && panel.has_bar(t, i) && panel.has_bar(t + 1, i)) {
            r = panel.close(t + 1, i) / panel.close(t, i) - 1.0;
          }
          break;
        case Execution::kSameOpen:
          if (t + 1 < T && panel.has_bar(t, i) && panel.has_bar(t + 1, i)) {
            r = panel.open(t + 1, i) / panel.open(t, i) - 1.0;
          }
          break;
      }
      out.values[t * N + i] = r;
    }
  }
  return out;
}

std::size_t label_end_index(std::size_t t, int h, Execution execution) {
  const std::size_t hh = static_cast<std::size_t>(h);
  return execution == Execution::kNextOpen ? t + hh + 1 : t + hh;
}

OhlcvPanel perturb_future_suffix(const OhlcvPanel& panel,
                                 const std::string& cutoff, std::uint64_t seed,
                                 double intraday_vol) {
  const std::ptrdiff_t cut = panel.date_index(cutoff);
  if (cut < 0) {
    fail("CutoffOutOfRange", "cutoff '" + cutoff + "' not in calendar");
  }
  const std::size_t cut_t = static_cast<std::size_t>(cut);
  const std::size_t T = panel.n_dates();
  const std::size_t N = panel.n_assets();
  const CounterRng rng(seed);

  OhlcvPanel out = panel;

  for (std::size_t i = 0; i < N; ++i) {
    // Positions after the cutoff where a close return can be rebuilt from the
    // previous available close.
    std::vector<std::size_t> pos;
    std::vector<double> rets;
    std::vector<double> vols;
    double prev_close = missing_value();
    std::ptrdiff_t prev_t = -1;
    for (std::size_t t = 0; t <= cut_t; ++t) {
      if (panel.has_bar(t, i)) {
        prev_close = panel.close(t, i);
        prev_t = static_cast<std::ptrdiff_t>(t);
      }
    }
    if (prev_t < 0) continue;  // asset starts after the cutoff: leave as-is
    double run_close = prev_close;
    for (std::size_t t = cut_t + 1; t < T; ++t) {
      if (!panel.has_bar(t, i)) continue;
      pos.push_back(t);
      rets.push_back(std::log(panel.close(t, i) / run_close));
      vols.push_back(panel.volume(t, i));
      run_close = panel.close(t, i);
    }
    if (pos.empty()) continue;

    // Seeded Fisher-Yates over the suffix returns; volumes share the draw.
    std::vector<std::size_t> perm(pos.size());
    for (std::size_t k = 0; k < perm.size(); ++k) perm[k] = k;
    for (std::size_t k = perm.size(); k > 1; --k) {
      const std::size_t j = static_cast<std::size_t>(
          rng.uniform(i, k, 0x9e37) * static_cast<double>(k));
      std::swap(perm[k - 1], perm[std::min(j, k - 1)]);
    }

    double close = prev_close;
    double prev_close_for_open = prev_close;
    for (std::size_t k = 0; k < pos.size(); ++k) {
      const std::size_t t = pos[k];
      close *= std::exp(rets[perm[k]]);
      const double open =
          prev_close_for_open *
          std::exp(intraday_vol * rng.normal(i, t, 0x0e11));
      const double high =
          std::max(open, close) *
          std::exp(intraday_vol * std::fabs(rng.normal(i, t, 0x0e12)));
      const double low =
          std::min(open, close) *
          std::exp(-intraday_vol * std::fabs(rng.normal(i, t, 0x0e13)));
      out.set_bar(t, i, OhlcvBar{open, high, low, close, vols[perm[k]]});
      prev_close_for_open = close;
    }
  }
  return out;
}

OhlcvPanel mask_post_open(const OhlcvPanel& panel) {
  const std::size_t T = panel.n_dates();
  const std::size_t N = panel.n_assets();
  OhlcvPanel out = panel;
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t t = 0; t < T; ++t) {
      if (!panel.has_bar(t, i)) continue;
      const double open = panel.open(t, i);
      // Previous day's volume as the open-time surrogate; a day without a
      // predecessor keeps its own volume.
      const double volume = (t > 0 && panel.has_bar(t - 1, i))
                                ? panel.volume(t - 1, i)
                                : panel.volume(t, i);
      out.set_bar(t, i, OhlcvBar{open, open, open, open, volume});
    }
  }
  return out;
}

}  // namespace leakbench
