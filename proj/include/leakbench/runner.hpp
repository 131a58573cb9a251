#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "leakbench/evaluate.hpp"
#include "leakbench/features.hpp"
#include "leakbench/graph.hpp"
#include "leakbench/metrics.hpp"
#include "leakbench/models.hpp"
#include "leakbench/panel.hpp"
#include "leakbench/protocol.hpp"
#include "leakbench/synth.hpp"

namespace leakbench {

struct MarketSource {
  std::string label;
  std::string csv_path;  // empty when synthetic
  std::optional<SynthConfig> synth;
};

struct RunConfig {
  std::vector<MarketSource> markets;
  std::vector<ModelFamily> models = {ModelFamily::kMomentum, ModelFamily::kRidge,
                                     ModelFamily::kGbt, ModelFamily::kGraphRidge};
  std::vector<int> horizons = {5, 20};
  std::vector<Variant> variants = {Variant::kClean,      Variant::kTempCenter,
                                   Variant::kNormGlobal, Variant::kStructGraph,
                                   Variant::kExecClose,  Variant::kExecOpen};
  std::vector<int> costs = {0, 5, 10};
  // Empty = 2016..2024 intersected with panel coverage.
  std::vector<int> years;
  int embargo = -1;  // -1 = horizon + 1
  std::uint64_t seed = 42;
  std::string out_dir = "out";
  int jobs = 1;
  int future_days = 3;
  int graph_k = 5;
  int bootstrap_resamples = 10000;
  double ridge_alpha = 1.0;
  GbtParams gbt;
  FeatureSchema schema = FeatureSchema::default_schema();

  // CLEAN is always run; variants are deduplicated with CLEAN first.
  void normalize();
};

// INI-style config: `[run]`, `[market.<label>]`, `[schema]` sections with
// `key = value` lines; grammar documented in the README.
RunConfig parse_run_config(const std::string& text);
RunConfig load_run_config(const std::string& path);

// Everything derived from one panel that protocol variants share. Feature
// matrices exist per (temp_center, graph_mode) combination actually used;
// columns untouched by a switch are the identical buffers.
struct PanelContext {
  std::string label;
  OhlcvPanel panel;
  std::uint64_t panel_fingerprint = 0;

  // own columns first, then neighbor aggregates of every own column
  std::map<std::pair<bool, GraphMode>, FeatureMatrix> features;
  std::size_t n_standard_cols = 0;  // own + schema-declared neighbor columns

  std::map<Execution, TradeReturnPanel> trade_returns;
  std::map<std::pair<int, int>, LabelPanel> labels;  // (execution, h)

  std::vector<std::string> notes;
};

PanelContext build_panel_context(const std::string& label, OhlcvPanel panel,
                                 const RunConfig& cfg);
OhlcvPanel load_market_panel(const MarketSource& src);

struct CellKey {
  std::string market;
  ModelFamily model = ModelFamily::kMomentum;
  int h = 5;
  Variant variant = Variant::kClean;

  std::string to_string() const;
};

struct CellResult {
  CellKey key;
  std::string config_hash;  // shared across the variants of one pair
  ScorePanel scores;
  BacktestSeries series;
  RunMetrics metrics;
  std::vector<std::string> warnings;
};

// One grid cell end to end: audit the switch, pick the shared artifacts,
// walk-forward fit/score, backtest, summarize.
CellResult run_cell(const PanelContext& ctx, const RunConfig& cfg,
                    const CellKey& key);

// Year-level stability block for one (cell, cost).
struct StabilityStats {
  std::vector<std::pair<int, double>> yearly;  // (year, LG-SR)
  double mean = 0.0;
  double ci_lo = 0.0;
  double ci_hi = 0.0;
  int positive_years = 0;
  double wilcoxon_p = 0.0;  // NaN = NA
};

struct PairedReport {
  CellKey key;
  LeakageGainValues lg;
  std::map<int, StabilityStats> stability;  // cost -> stats
};

struct GridResult {
  RunConfig cfg;
  std::vector<CellResult> cells;
  std::vector<PairedReport> reports;
  std::map<std::string, std::vector<std::string>> market_notes;
};

GridResult run_grid(const RunConfig& cfg);

// metrics.csv, leakage_gain.csv, yearly_lg.csv, summary.json; rows sorted by
// (market, model, h, variant, cost, metric), floats at 6 significant digits,
// '\n' endings.
void emit_reports(const GridResult& result, const std::string& out_dir);

// Intervention wrapers: re-run a designated (CLEAN, variant) pair on the
// original and the modified panel.
struct InterventionRun {
  std::string panel_tag;  // "original" / "perturbed" / "masked"
  Variant variant = Variant::kClean;
  double sr5 = 0.0;
  double lg_sr5 = 0.0;
  ScorePanel scores;
};

struct InterventionReport {
  std::string kind;  // "suffix" or "mask"
  CellKey pair_key;  // variant field = the non-clean side
  std::string cutoff;
  std::vector<InterventionRun> runs;
  // Score-change diagnostics between original and modified panels.
  std::map<std::string, double> stats;
};

InterventionReport run_intervene_suffix(const RunConfig& cfg,
                                        const std::string& market,
                                        ModelFamily model, int h,
                                        Variant variant,
                                        const std::string& cutoff,
                                        std::uint64_t perturb_seed);

InterventionReport run_intervene_mask(const RunConfig& cfg,
                                      const std::string& market,
                                      ModelFamily model, int h, Variant variant);

void write_intervention_report(const InterventionReport& report,
                               const std::string& out_dir);

// Trading-day lookback of the deepest feature in the schema.
int schema_max_lookback(const FeatureSchema& schema);

// Derived seeds and the shared-grid hash (excludes only the variant field).
std::uint64_t derive_fit_seed(const RunConfig& cfg, const CellKey& key, int year);
std::string shared_grid_hash(const RunConfig& cfg, const PanelContext& ctx,
                             const CellKey& key);

}  // namespace leakbench
