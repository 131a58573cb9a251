#include "leakbench/runner.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstring>
#include <exception>
#include <set>
#include <sstream>
#include <thread>

#include "leakbench/dates.hpp"
#include "leakbench/errors.hpp"
#include "leakbench/rng.hpp"
#include "leakbench/text.hpp"

namespace leakbench {

namespace {

int model_ordinal(ModelFamily m) {
  switch (m) {
    case ModelFamily::kMomentum: return 0;
    case ModelFamily::kRidge: return 1;
    case ModelFamily::kGbt: return 2;
    case ModelFamily::kGraphRidge: return 3;
  }
  return 9;
}

int variant_ordinal(Variant v) { return static_cast<int>(v); }


}  // namespace

std::string CellKey::to_string() const {
  std::ostringstream os;
  os << market << '/' << leakbench::to_string(model) << "/h" << h << '/'
     << leakbench::to_string(variant);
  return os.str();
}

void RunConfig::normalize() {
  if (markets.empty()) fail("InvalidConfig", "no markets configured");
  std::sort(markets.begin(), markets.end(),
            [](const MarketSource& a, const MarketSource& b) {
              return a.label < b.label;
            });
  for (std::size_t k = 1; k < markets.size(); ++k) {
    if (markets[k].label == markets[k - 1].label) {
      fail("InvalidConfig", "duplicate market label '" + markets[k].label + "'");
    }
  }

  if (models.empty()) fail("InvalidConfig", "no model families configured");
  std::sort(models.begin(), models.end(), [](ModelFamily a, ModelFamily b) {
    return model_ordinal(a) < model_ordinal(b);
  });
  models.erase(std::unique(models.begin(), models.end()), models.end());

  if (horizons.empty()) fail("InvalidConfig", "no horizons configured");
  std::sort(horizons.begin(), horizons.end());
  horizons.erase(std::unique(horizons.begin(), horizons.end()), horizons.end());
  for (int h : horizons) {
    if (h < 1) fail("InvalidConfig", "horizon must be >= 1");
  }

  // CLEAN is the reference of every pair and is always run.
  std::vector<Variant> vs = {Variant::kClean};
  for (Variant v :
       {Variant::kTempCenter, Variant::kNormGlobal, Variant::kStructGraph,
        Variant::kExecClose, Variant::kExecOpen}) {
    if (std::find(variants.begin(), variants.end(), v) != variants.end()) {
      vs.push_back(v);
    }
  }
  variants = vs;

  if (costs.empty()) fail("InvalidConfig", "no cost levels configured");
  std::sort(costs.begin(), costs.end());
  costs.erase(std::unique(costs.begin(), costs.end()), costs.end());
  for (int c : costs) {
    if (c < 0) fail("InvalidConfig", "cost bps must be >= 0");
  }

  if (jobs < 1) jobs = 1;
  if (future_days < 0) fail("InvalidConfig", "future_days must be >= 0");
  if (graph_k < 1) fail("InvalidConfig", "graph_k must be >= 1");
  schema.validate();
}

int schema_max_lookback(const FeatureSchema& schema) {
  std::map<std::string, int> lookback;
  int deepest = 0;
  for (const auto& def : schema.defs) {
    int lb = 0;
    switch (def.transform) {
      case FeatureTransform::kReturn: lb = def.window; break;
      case FeatureTransform::kGap: lb = 1; break;
      case FeatureTransform::kHlRange: lb = 0; break;
      case FeatureTransform::kRollMean:
      case FeatureTransform::kRollStd: {
        const auto it = lookback.find(def.source);
        lb = def.window - 1 + (it == lookback.end() ? 0 : it->second);
        break;
      }
      case FeatureTransform::kVolumeRatio: lb = def.window - 1; break;
      case FeatureTransform::kNeighbor: {
        const auto it = lookback.find(def.source);
        lb = it == lookback.end() ? 0 : it->second;
        break;
      }
    }
    lookback[def.name] = lb;
    deepest = std::max(deepest, lb);
  }
  return deepest;
}

OhlcvPanel load_market_panel(const MarketSource& src) {
  if (!src.csv_path.empty()) return load_panel(src.csv_path);
  if (!src.synth.has_value()) {
    fail("InvalidConfig", "market '" + src.label + "' has no csv and no synth config");
  }
  return generate_panel(*src.synth);
}

PanelContext build_panel_context(const std::string& label, OhlcvPanel panel,
                                 const RunConfig& cfg) {
  panel.validate();
  PanelContext ctx;
  ctx.label = label;
  ctx.panel = std::move(panel);

  {  // Content fingerprint feeding the shared-grid hash.
    std::uint64_t h = fnv1a64(label);
    h = fnv1a64(ctx.panel.calendar().front(), h);
    h = fnv1a64(ctx.panel.calendar().back(), h);
    std::ostringstream os;
    os << ctx.panel.n_dates() << 'x' << ctx.panel.n_assets();
    h = fnv1a64(os.str(), h);
    for (std::size_t t = 0; t < ctx.panel.n_dates(); ++t) {
      for (std::size_t i = 0; i < ctx.panel.n_assets(); ++i) {
        const double c = ctx.panel.has_bar(t, i) ? ctx.panel.close(t, i) : -1.0;
        std::uint64_t bits;
        std::memcpy(&bits, &c, sizeof(bits));
        char buf[8];
        std::memcpy(buf, &bits, sizeof(buf));
        h = fnv1a64(std::string_view(buf, 8), h);
      }
    }
    ctx.panel_fingerprint = h;
  }

  // Which (temp_center, graph_mode) combinations and executions the variant
  // set needs.
  std::set<std::pair<bool, GraphMode>> combos;
  std::set<Execution> execs;
  for (Variant v : cfg.variants) {
    const ProtocolSpec spec = ProtocolSpec::for_variant(v, cfg.future_days);
    combos.insert({spec.temp_center, spec.graph_mode});
    execs.insert(spec.execution);
  }

  std::map<bool, FeatureMatrix> base;
  for (const auto& [tc, mode] : combos) {
    if (base.find(tc) == base.end()) {
      base.emplace(tc,
                   build_features(ctx.panel, cfg.schema, tc, cfg.future_days));
    }
  }

  std::set<GraphMode> modes;
  for (const auto& [tc, mode] : combos) modes.insert(mode);
  std::map<GraphMode, std::map<int, PeerGraph>> graphs;
  const auto anchors = month_anchors(ctx.panel.calendar());
  for (GraphMode mode : modes) {
    auto& by_month = graphs[mode];
    for (const auto& [key, t] : anchors) {
      const std::string& anchor = ctx.panel.calendar()[t];
      try {
        by_month.emplace(key,
                         build_graph(ctx.panel, anchor, mode, cfg.graph_k));
      } catch (const Error& e) {
        if (e.code() != "WindowTooShort") throw;
        // Panel-start months: no usable window yet, neighbor columns stay
        // missing there and the rows drop out of training.
        by_month.emplace(key, PeerGraph::empty(anchor, ctx.panel.n_assets()));
        ctx.notes.push_back("empty graph for month of " + anchor + " (" +
                            to_string(mode) + ")");
      }
    }
  }

  const auto own = cfg.schema.own_defs();
  const auto declared = cfg.schema.neighbor_defs();
  std::vector<std::string> own_names;
  for (const auto& d : own) own_names.push_back(d.name);

  for (const auto& [tc, mode] : combos) {
    const FeatureMatrix& b = base.at(tc);
    const FeatureMatrix nbr_all =
        neighbor_features(b, graphs.at(mode), own_names);

    FeatureMatrix full(b.calendar(), b.assets());
    for (std::size_t f = 0; f < b.n_features(); ++f) {
      full.add_column(b.names()[f], b.column_ptr(f));
    }
    std::set<std::string> aggregated;
    for (const auto& def : declared) {
      const std::ptrdiff_t f = nbr_all.feature_index("nbr_" + def.source);
      if (f < 0) {
        fail("UnknownSourceField",
             "neighbor source '" + def.source + "' missing");
      }
      full.add_column(def.name, nbr_all.column_ptr(static_cast<std::size_t>(f)));
      aggregated.insert(def.source);
    }
    const std::size_t n_standard = full.n_features();
    // Remaining aggregates feed the graph-augmented model only.
    for (const auto& name : own_names) {
      if (aggregated.count(name)) continue;
      const std::ptrdiff_t f = nbr_all.feature_index("nbr_" + name);
      full.add_column("nbr_" + name,
                      nbr_all.column_ptr(static_cast<std::size_t>(f)));
    }
    ctx.n_standard_cols = n_standard;
    ctx.features.emplace(std::make_pair(tc, mode), std::move(full));
  }

  for (Execution e : execs) {
    ctx.trade_returns.emplace(e, make_trade_returns(ctx.panel, e));
    for (int h : cfg.horizons) {
      ctx.labels.emplace(std::make_pair(static_cast<int>(e), h),
                         make_labels(ctx.panel, h, e));
    }
  }
  return ctx;
}

std::uint64_t derive_fit_seed(const RunConfig& cfg, const CellKey& key,
                              int year) {
  std::ostringstream os;
  // Variant excluded: paired runs must consume identical RNG streams.
  os << "seed=" << cfg.seed << "|market=" << key.market
     << "|model=" << to_string(key.model) << "|h=" << key.h << "|year=" << year
     << "|fit";
  return fnv1a64(os.str());
}

std::string shared_grid_hash(const RunConfig& cfg, const PanelContext& ctx,
                             const CellKey& key) {
  std::ostringstream os;
  os << "panel=" << std::hex << ctx.panel_fingerprint << std::dec
     << "|market=" << key.market << "|model=" << to_string(key.model)
     << "|h=" << key.h << "|seed=" << cfg.seed << "|embargo="
     << (cfg.embargo < 0 ? key.h + 1 : cfg.embargo) << "|future_days="
     << cfg.future_days << "|graph_k=" << cfg.graph_k << "|years=";
  for (int y : cfg.years) os << y << ',';
  os << "|costs=";
  for (int c : cfg.costs) os << c << ',';
  os << "|alpha=" << fmt_double(cfg.ridge_alpha);
  ModelSpec ms;
  ms.family = key.model;
  ms.ridge_alpha = cfg.ridge_alpha;
  ms.gbt = cfg.gbt;
  os << '|' << ms.config_digest() << "|schema=";
  for (const auto& d : cfg.schema.defs) {
    os << d.name << ':' << to_string(d.transform) << ':' << d.source << ':'
       << d.window << ':' << d.rolling_flag << ';';
  }
  os << "|turnover=L1-full-entry";
  char buf[24];
  std::snprintf(buf, sizeof(buf), "%016llx",
                static_cast<unsigned long long>(fnv1a64(os.str())));
  return buf;
}

namespace {

struct ColumnSet {
  std::vector<std::size_t> cols;  // indices into the combo feature matrix
  std::vector<std::string> names;
  bool normalized = true;
};

ColumnSet columns_for_model(const FeatureMatrix& m, std::size_t n_standard,
                            ModelFamily family) {
  ColumnSet cs;
  if (family == ModelFamily::kMomentum) {
    const std::ptrdiff_t f = m.feature_index("ret_20");
    if (f < 0) {
      fail("FeatureMissingFromSchema", "momentum needs a ret_20 feature");
    }
    cs.cols = {static_cast<std::size_t>(f)};
    cs.names = {"ret_20"};
    cs.normalized = false;
    return cs;
  }
  const std::size_t upto =
      family == ModelFamily::kGraphRidge ? m.n_features() : n_standard;
  for (std::size_t f = 0; f < upto; ++f) {
    cs.cols.push_back(f);
    cs.names.push_back(m.names()[f]);
  }
  return cs;
}

}  // namespace

CellResult run_cell(const PanelContext& ctx, const RunConfig& cfg,
                    const CellKey& key) {
  if (cfg.years.empty()) {
    fail("InvalidConfig", "run_cell requires resolved test years");
  }
  const ProtocolSpec spec = ProtocolSpec::for_variant(key.variant, cfg.future_days);
  spec.audit_one_switch();

  const auto combo = std::make_pair(spec.temp_center, spec.graph_mode);
  const auto fit = ctx.features.find(combo);
  if (fit == ctx.features.end()) {
    fail("InvalidConfig", "feature matrix for " + key.to_string() +
                              " was not precomputed");
  }
  const FeatureMatrix& m = fit->second;
  const LabelPanel& labels =
      ctx.labels.at({static_cast<int>(spec.execution), key.h});
  const TradeReturnPanel& returns = ctx.trade_returns.at(spec.execution);

  const int embargo = cfg.embargo < 0 ? key.h + 1 : cfg.embargo;
  const auto splits = make_splits(ctx.panel.calendar(), cfg.years, embargo);

  const ColumnSet cs = columns_for_model(m, ctx.n_standard_cols, key.model);
  const std::size_t N = ctx.panel.n_assets();

  CellResult result;
  result.key = key;
  result.config_hash = shared_grid_hash(cfg, ctx, key);

  ScorePanel scores;
  scores.assets = ctx.panel.assets();
  for (const auto& split : splits) {
    for (std::size_t t : split.test_dates) {
      scores.dates.push_back(ctx.panel.calendar()[t]);
      scores.date_index.push_back(t);
    }
  }
  scores.values.assign(scores.dates.size() * N, missing_value());
  std::size_t date_offset = 0;

  const bool trainable = key.model != ModelFamily::kMomentum;

  for (const auto& split : splits) {
    // Normalization scope: this split's training dates, or the full panel
    // under the global-scope switch.
    NormStats stats;
    std::vector<std::size_t> active;  // consumed columns retained by the stats
    if (trainable) {
      std::vector<RowRef> scope;
      if (spec.norm_scope == NormScope::kTrain) {
        scope = rows_for_dates(split.train_dates, N);
      } else {
        scope = all_rows(ctx.panel.n_dates(), N);
      }
      if (scope.empty()) {
        fail("EmptyScope", "no normalization scope for " + key.to_string() +
                               " year " + std::to_string(split.test_year));
      }
      stats = fit_norm(m, scope, spec.norm_scope == NormScope::kTrain
                                     ? "train"
                                     : "full");
      for (const auto& name : stats.dropped) {
        result.warnings.push_back("dropped constant feature '" + name +
                                  "' in year " +
                                  std::to_string(split.test_year));
      }
      for (std::size_t f : cs.cols) {
        if (stats.retained[f]) active.push_back(f);
      }
      if (active.empty()) {
        fail("NoTrainingRows", "all features degenerate for " + key.to_string());
      }
    } else {
      active = cs.cols;
    }

    auto row_complete = [&](std::size_t t, std::size_t i) {
      for (std::size_t f : active) {
        if (is_missing(m.value(f, t, i))) return false;
      }
      return true;
    };
    auto fill_row = [&](std::size_t t, std::size_t i, double* out) {
      std::size_t c = 0;
      for (std::size_t f : active) {
        const double v = m.value(f, t, i);
        out[c++] = trainable ? (v - stats.mean[f]) / stats.stddev[f] : v;
      }
    };

    ModelInput input;
    input.n_features = active.size();
    for (std::size_t f : active) input.feature_names.push_back(m.names()[f]);

    if (trainable) {
      const std::size_t first_test = split.test_dates.front();
      for (std::size_t t : split.train_dates) {
        // Keep the label window strictly out of the test span.
        if (label_end_index(t, key.h, spec.execution) >= first_test) continue;
        for (std::size_t i = 0; i < N; ++i) {
          if (is_missing(labels.value(t, i))) continue;
          if (!row_complete(t, i)) continue;
          const std::size_t base = input.x_train.size();
          input.x_train.resize(base + input.n_features);
          fill_row(t, i, input.x_train.data() + base);
          input.y_train.push_back(labels.value(t, i));
        }
      }
      input.n_train = input.y_train.size();
      if (input.n_train == 0) {
        fail("NoTrainingRows", key.to_string() + " year " +
                                   std::to_string(split.test_year) +
                                   " has no usable training rows");
      }
    }

    for (std::size_t t : split.test_dates) {
      for (std::size_t i = 0; i < N; ++i) {
        if (!row_complete(t, i)) continue;
        const std::size_t base = input.x_test.size();
        input.x_test.resize(base + input.n_features);
        fill_row(t, i, input.x_test.data() + base);
        input.test_keys.push_back(RowRef{static_cast<std::uint32_t>(t),
                                         static_cast<std::uint32_t>(i)});
      }
    }
    input.n_test = input.test_keys.size();

    ModelSpec mspec;
    mspec.family = key.model;
    mspec.ridge_alpha = cfg.ridge_alpha;
    mspec.gbt = cfg.gbt;
    mspec.seed = derive_fit_seed(cfg, key, split.test_year);

    const std::vector<double> s = score_model(mspec, input);

    // Scatter into the score panel (test dates of this split are contiguous).
    std::map<std::size_t, std::size_t> t_to_d;
    for (std::size_t d = 0; d < split.test_dates.size(); ++d) {
      t_to_d[split.test_dates[d]] = date_offset + d;
    }
    for (std::size_t r = 0; r < input.n_test; ++r) {
      const std::size_t d = t_to_d.at(input.test_keys[r].t);
      scores.values[d * N + input.test_keys[r].i] = s[r];
    }
    date_offset += split.test_dates.size();
  }

  result.series = run_backtest(scores, returns, cfg.costs);
  result.metrics =
      summarize_run(result.series, scores, labels, ctx.panel.calendar());
  for (const auto& w : result.series.warnings) result.warnings.push_back(w);
  result.scores = std::move(scores);
  return result;
}

namespace {

std::vector<int> resolve_years(const RunConfig& cfg,
                               const std::vector<std::string>& calendar) {
  if (!cfg.years.empty()) return cfg.years;
  std::set<int> coverage;
  for (const auto& d : calendar) coverage.insert(year_of(d));
  std::vector<int> years;
  for (int y = 2016; y <= 2024; ++y) {
    if (coverage.count(y)) years.push_back(y);
  }
  if (years.empty()) {
    fail("InvalidConfig",
         "panel does not cover the default 2016-2024 test window; pass "
         "explicit test years");
  }
  return years;
}

}  // namespace

GridResult run_grid(const RunConfig& input_cfg) {
  RunConfig cfg = input_cfg;
  cfg.normalize();

  GridResult result;
  result.cfg = cfg;

  // Contexts and resolved years per market.
  std::vector<PanelContext> contexts;
  std::vector<RunConfig> market_cfgs;
  for (const auto& src : cfg.markets) {
    OhlcvPanel panel = load_market_panel(src);
    RunConfig mcfg = cfg;
    mcfg.years = resolve_years(cfg, panel.calendar());
    contexts.push_back(build_panel_context(src.label, std::move(panel), mcfg));
    result.market_notes[src.label] = contexts.back().notes;
    market_cfgs.push_back(std::move(mcfg));
  }

  struct Task {
    std::size_t market_idx;
    CellKey key;
  };
  std::vector<Task> tasks;
  for (std::size_t mi = 0; mi < contexts.size(); ++mi) {
    for (ModelFamily model : cfg.models) {
      for (int h : cfg.horizons) {
        for (Variant v : cfg.variants) {
          tasks.push_back(Task{mi, CellKey{contexts[mi].label, model, h, v}});
        }
      }
    }
  }

  result.cells.resize(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
  std::atomic<std::size_t> next{0};
  const int n_workers = std::max(1, std::min<int>(cfg.jobs, static_cast<int>(tasks.size())));

  auto worker = [&]() {
    while (true) {
      const std::size_t k = next.fetch_add(1);
      if (k >= tasks.size()) break;
      try {
        result.cells[k] = run_cell(contexts[tasks[k].market_idx],
                                   market_cfgs[tasks[k].market_idx], tasks[k].key);
      } catch (...) {
        errors[k] = std::current_exception();
      }
    }
  };
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::thread> threads;
    threads.reserve(static_cast<std::size_t>(n_workers));
    for (int w = 0; w < n_workers; ++w) threads.emplace_back(worker);
    for (auto& t : threads) t.join();
  }
  for (std::size_t k = 0; k < tasks.size(); ++k) {
    if (errors[k]) {
      try {
        std::rethrow_exception(errors[k]);
      } catch (const Error& e) {
        fail(e.code(), "grid cell " + tasks[k].key.to_string() + ": " + e.what());
      } catch (const std::exception& e) {
        fail("CellFailed",
             "grid cell " + tasks[k].key.to_string() + ": " + e.what());
      }
    }
  }

  // Pair every variant with its CLEAN reference.
  auto find_cell = [&](const CellKey& key) -> const CellResult& {
    for (const auto& c : result.cells) {
      if (c.key.market == key.market && c.key.model == key.model &&
          c.key.h == key.h && c.key.variant == key.variant) {
        return c;
      }
    }
    fail("PairingMismatch", "missing cell " + key.to_string());
  };

  for (const auto& cell : result.cells) {
    CellKey clean_key = cell.key;
    clean_key.variant = Variant::kClean;
    const CellResult& clean = find_cell(clean_key);
    if (clean.config_hash != cell.config_hash) {
      fail("PairingMismatch", "shared-grid hash differs for " +
                                  cell.key.to_string() + " vs its CLEAN run");
    }
    PairedReport report;
    report.key = cell.key;
    report.lg = leakage_gain(cell.metrics, clean.metrics);
    for (const auto& [cost, yearly] : report.lg.yearly_lg_sr) {
      StabilityStats st;
      st.yearly = yearly;
      std::vector<double> values;
      for (const auto& [year, v] : yearly) {
        if (!is_missing(v)) values.push_back(v);
      }
      if (!values.empty()) {
        double sum = 0.0;
        for (double v : values) sum += v;
        st.mean = sum / static_cast<double>(values.size());
        for (double v : values) {
          if (v > 0.0) ++st.positive_years;
        }
        st.wilcoxon_p = wilcoxon_one_sided(values);
        if (values.size() >= 2) {
          const std::uint64_t bseed = fnv1a64(
              cell.key.to_string() + "|cost=" + std::to_string(cost) +
              "|bootstrap|seed=" + std::to_string(cfg.seed));
          std::tie(st.ci_lo, st.ci_hi) =
              bootstrap_ci(values, cfg.bootstrap_resamples, bseed);
        } else {
          st.ci_lo = st.ci_hi = st.mean;
        }
      } else {
        st.mean = missing_value();
        st.ci_lo = st.ci_hi = missing_value();
        st.wilcoxon_p = missing_value();
      }
      report.stability[cost] = std::move(st);
    }
    result.reports.push_back(std::move(report));
  }

  // Deterministic report order independent of task scheduling.
  auto key_less = [](const CellKey& a, const CellKey& b) {
    if (a.market != b.market) return a.market < b.market;
    if (a.model != b.model) return model_ordinal(a.model) < model_ordinal(b.model);
    if (a.h != b.h) return a.h < b.h;
    return variant_ordinal(a.variant) < variant_ordinal(b.variant);
  };
  std::sort(result.cells.begin(), result.cells.end(),
            [&](const CellResult& a, const CellResult& b) {
              return key_less(a.key, b.key);
            });
  std::sort(result.reports.begin(), result.reports.end(),
            [&](const PairedReport& a, const PairedReport& b) {
              return key_less(a.key, b.key);
            });
  return result;
}

}  // namespace leakbench
