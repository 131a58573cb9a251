#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "leakbench/graph.hpp"
#include "leakbench/panel.hpp"

namespace leakbench {

enum class Variant {
  kClean,
  kTempCenter,
  kNormGlobal,
  kStructGraph,
  kExecClose,
  kExecOpen,
};

enum class Execution { kNextOpen, kSameClose, kSameOpen };
enum class NormScope { kTrain, kFull };

std::string to_string(Variant v);
Variant variant_from_string(const std::string& s);
std::string to_string(Execution e);

// The full protocol knob set. Each non-clean variant flips exactly one knob;
// audit_one_switch enforces that before any pair is run.
struct ProtocolSpec {
  Variant variant = Variant::kClean;
  bool temp_center = false;
  int future_days = 3;  // consumed only when temp_center is set
  GraphMode graph_mode = GraphMode::kTrailing;
  NormScope norm_scope = NormScope::kTrain;
  Execution execution = Execution::kNextOpen;

  static ProtocolSpec for_variant(Variant v, int future_days = 3);

  // Number of knobs differing from `other` (temp_center, graph_mode,
  // norm_scope, execution).
  int knob_diff(const ProtocolSpec& other) const;

  // Throws OneSwitchViolation unless the knobs match the declared variant
  // and differ from CLEAN in exactly one place (zero for CLEAN).
  void audit_one_switch() const;
};

struct LabelPanel {
  std::vector<std::string> calendar;
  std::vector<std::string> assets;
  int horizon = 0;
  Execution execution = Execution::kNextOpen;
  std::vector<double> values;  // T*N log returns, NaN when unavailable

  double value(std::size_t t, std::size_t i) const {
    return values[t * assets.size() + i];
  }
};

struct TradeReturnPanel {
  std::vector<std::string> calendar;
  std::vector<std::string> assets;
  Execution execution = Execution::kNextOpen;
  std::vector<double> values;  // T*N simple one-day returns

  double value(std::size_t t, std::size_t i) const {
    return values[t * assets.size() + i];
  }
};

// Horizon-h log-return targets:
//   next_open:  log(O[t+h+1] / O[t+1])
//   same_close: log(C[t+h]   / C[t])
//   same_open:  log(O[t+h]   / O[t])
LabelPanel make_labels(const OhlcvPanel& panel, int h, Execution execution);

// One-day realized simple returns of the assumed fill:
//   next_open:  O[t+2]/O[t+1] - 1
//   same_close: C[t+1]/C[t]   - 1
//   same_open:  O[t+1]/O[t]   - 1
TradeReturnPanel make_trade_returns(const OhlcvPanel& panel, Execution execution);

// For each asset, applies a seeded permutation to the post-cutoff daily close
// log returns, rebuilds closes from the last pre-cutoff close and re-derives
// O/H/L/V with the synthetic bar rules. Bars at or before the cutoff are
// bit-identical to the input.
OhlcvPanel perturb_future_suffix(const OhlcvPanel& panel,
                                 const std::string& cutoff, std::uint64_t seed,
                                 double intraday_vol = 0.01);

// Replaces same-day post-open fields with open-time admissible surrogates:
// high = low = close = open, volume = previous day's volume (first day keeps
// its own). Opens are untouched.
OhlcvPanel mask_post_open(const OhlcvPanel& panel);

// Last calendar index a label computed at t depends on; used by the
// walk-forward assembly to keep training label windows out of the test span.
std::size_t label_end_index(std::size_t t, int h, Execution execution);

}  // namespace leakbench
