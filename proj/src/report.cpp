#include <filesystem>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "leakbench/errors.hpp"
#include "leakbench/runner.hpp"
#include "leakbench/text.hpp"

namespace leakbench {

namespace {

using nlohmann::json;

std::ofstream open_out(const std::string& dir, const std::string& name) {
  std::filesystem::create_directories(dir);
  const std::string path = dir + "/" + name;
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("IoError", "cannot write '" + path + "'");
  return out;
}

struct Row {
  const CellKey* key;
  std::string cost;  // "NA" for cost-independent metrics
  std::string metric;
  std::string value;
};

void write_rows(std::ofstream& out, const std::vector<Row>& rows) {
  out << "market,model,h,variant,cost_bps,metric,value\n";
  for (const Row& r : rows) {
    out << r.key->market << ',' << to_string(r.key->model) << ',' << r.key->h
        << ',' << to_string(r.key->variant) << ',' << r.cost << ',' << r.metric
        << ',' << r.value << "\n";
  }
}

}  // namespace

void emit_reports(const GridResult& result, const std::string& out_dir) {
  if (result.cells.empty()) fail("InvalidConfig", "no results to emit");

  {  // metrics.csv
    std::vector<Row> rows;
    for (const auto& cell : result.cells) {
      const RunMetrics& m = cell.metrics;
      rows.push_back({&cell.key, "NA", "rank_ic", fmt_g6(m.rank_ic)});
      rows.push_back({&cell.key, "NA", "auc", fmt_g6(m.auc)});
      rows.push_back({&cell.key, "NA", "mean_turnover", fmt_g6(m.mean_turnover)});
      rows.push_back(
          {&cell.key, "NA", "mean_gross_return", fmt_g6(m.mean_gross)});
      rows.push_back(
          {&cell.key, "NA", "n_dates_rankic", std::to_string(m.n_dates_rankic)});
      rows.push_back(
          {&cell.key, "NA", "n_dates_auc", std::to_string(m.n_dates_auc)});
      rows.push_back({&cell.key, "NA", "n_days", std::to_string(m.n_days)});
      for (const auto& [cost, sr] : m.sharpe_at) {
        const std::string c = std::to_string(cost);
        rows.push_back({&cell.key, c, "sharpe", fmt_g6(sr)});
        rows.push_back(
            {&cell.key, c, "mean_net_return", fmt_g6(m.mean_net.at(cost))});
        rows.push_back(
            {&cell.key, c, "max_drawdown", fmt_g6(m.max_dd.at(cost))});
      }
    }
    auto out = open_out(out_dir, "metrics.csv");
    write_rows(out, rows);
  }

  {  // leakage_gain.csv
    std::vector<Row> rows;
    for (const auto& rep : result.reports) {
      rows.push_back({&rep.key, "NA", "lg_rank_ic", fmt_g6(rep.lg.lg_rank_ic)});
      rows.push_back({&rep.key, "NA", "lg_auc", fmt_g6(rep.lg.lg_auc)});
      for (const auto& [cost, lg] : rep.lg.lg_sr) {
        rows.push_back({&rep.key, std::to_string(cost), "lg_sr", fmt_g6(lg)});
      }
    }
    auto out = open_out(out_dir, "leakage_gain.csv");
    write_rows(out, rows);
  }

  {  // yearly_lg.csv
    auto out = open_out(out_dir, "yearly_lg.csv");
    out << "market,model,h,variant,cost_bps,stat,value\n";
    for (const auto& rep : result.reports) {
      for (const auto& [cost, st] : rep.stability) {
        auto emit = [&](const std::string& stat, const std::string& value) {
          out << rep.key.market << ',' << to_string(rep.key.model) << ','
              << rep.key.h << ',' << to_string(rep.key.variant) << ',' << cost
              << ',' << stat << ',' << value << "\n";
        };
        for (const auto& [year, v] : st.yearly) {
          emit(std::to_string(year), fmt_g6(v));
        }
        emit("mean", fmt_g6(st.mean));
        emit("ci_lo", fmt_g6(st.ci_lo));
        emit("ci_hi", fmt_g6(st.ci_hi));
        emit("positive_years", std::to_string(st.positive_years));
        emit("wilcoxon_p", fmt_g6(st.wilcoxon_p));
      }
    }
  }

  {  // summary.json
    json j;
    j["provenance"] = {
        {"master_seed", result.cfg.seed},
        {"rng", "ctr-splitmix64-v1"},
        {"embargo", result.cfg.embargo < 0 ? json("h+1") : json(result.cfg.embargo)},
        {"turnover_convention",
         "two-sided L1 of target-weight changes, first day charged full entry"},
        {"label_metric_convention",
         "each variant is evaluated against its own execution's labels"},
        {"future_days", result.cfg.future_days},
        {"graph_k", result.cfg.graph_k},
        {"bootstrap_resamples", result.cfg.bootstrap_resamples},
    };
    json schema = json::array();
    for (const auto& d : result.cfg.schema.defs) {
      schema.push_back({{"name", d.name},
                        {"transform", to_string(d.transform)},
                        {"source", d.source},
                        {"window", d.window},
                        {"rolling_flag", d.rolling_flag}});
    }
    j["schema"] = schema;
    json grid;
    grid["costs"] = result.cfg.costs;
    grid["horizons"] = result.cfg.horizons;
    json models = json::array();
    for (auto m : result.cfg.models) models.push_back(to_string(m));
    grid["models"] = models;
    json variants = json::array();
    for (auto v : result.cfg.variants) variants.push_back(to_string(v));
    grid["variants"] = variants;
    json markets = json::array();
    for (const auto& src : result.cfg.markets) {
      json ms;
      ms["label"] = src.label;
      if (!src.csv_path.empty()) {
        ms["csv"] = src.csv_path;
      } else if (src.synth.has_value()) {
        ms["synthetic"] = {{"n_assets", src.synth->n_assets},
                           {"n_days", src.synth->n_days},
                           {"daily_vol", src.synth->daily_vol},
                           {"intraday_vol", src.synth->intraday_vol},
                           {"seed", src.synth->seed},
                           {"start_date", src.synth->start_date},
                           {"factor_vol", src.synth->factor_vol}};
      }
      markets.push_back(ms);
    }
    grid["markets"] = markets;
    j["grid"] = grid;

    json cells = json::array();
    for (const auto& cell : result.cells) {
      json c;
      c["market"] = cell.key.market;
      c["model"] = to_string(cell.key.model);
      c["h"] = cell.key.h;
      c["variant"] = to_string(cell.key.variant);
      c["config_hash"] = cell.config_hash;
      c["n_days"] = cell.metrics.n_days;
      c["mean_turnover"] = cell.metrics.mean_turnover;
      json sr;
      for (const auto& [cost, v] : cell.metrics.sharpe_at) {
        sr[std::to_string(cost)] = is_missing(v) ? json() : json(v);
      }
      c["sharpe"] = sr;
      c["n_warnings"] = cell.warnings.size();
      cells.push_back(c);
    }
    j["cells"] = cells;
    json notes;
    for (const auto& [label, ns] : result.market_notes) {
      notes[label] = ns.size();
    }
    j["market_note_counts"] = notes;

    auto out = open_out(out_dir, "summary.json");
    out << j.dump(2) << "\n";
  }
}

void write_intervention_report(const InterventionReport& report,
                               const std::string& out_dir) {
  json j;
  j["kind"] = report.kind;
  j["market"] = report.pair_key.market;
  j["model"] = to_string(report.pair_key.model);
  j["h"] = report.pair_key.h;
  j["variant"] = to_string(report.pair_key.variant);
  if (!report.cutoff.empty()) j["cutoff"] = report.cutoff;
  json runs = json::array();
  for (const auto& run : report.runs) {
    runs.push_back({{"panel", run.panel_tag},
                    {"variant", to_string(run.variant)},
                    {"sr5", is_missing(run.sr5) ? json() : json(run.sr5)},
                    {"lg_sr5", is_missing(run.lg_sr5) ? json() : json(run.lg_sr5)}});
  }
  j["runs"] = runs;
  json stats;
  for (const auto& [k, v] : report.stats) {
    stats[k] = is_missing(v) ? json() : json(v);
  }
  j["stats"] = stats;

  auto out = open_out(out_dir, "intervention_" + report.kind + ".json");
  out << j.dump(2) << "\n";
}

}  // namespace leakbench
