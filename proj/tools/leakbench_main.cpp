#include <cstdio>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "leakbench/errors.hpp"
#include "leakbench/runner.hpp"
#include "leakbench/text.hpp"

namespace {

using namespace leakbench;

SynthConfig parse_synth_spec(const std::string& spec) {
  SynthConfig synth;
  for (const auto& kv : split(spec, ',')) {
    const std::string t = trim(kv);
    if (t.empty()) continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail("InvalidConfig", "--synthetic expects k=v pairs, got '" + t + "'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));
    RunConfig probe;  // reuse the config-file key handling
    std::string text = "[market.X]\n" + key + " = " + value + "\n";
    probe = parse_run_config(text);
    if (!probe.markets.front().synth.has_value()) {
      fail("InvalidConfig", "unknown synthetic parameter '" + key + "'");
    }
    // Transfer the single parsed field.
    const SynthConfig& p = *probe.markets.front().synth;
    if (key == "n_assets") synth.n_assets = p.n_assets;
    else if (key == "n_days") synth.n_days = p.n_days;
    else if (key == "daily_vol") synth.daily_vol = p.daily_vol;
    else if (key == "intraday_vol") synth.intraday_vol = p.intraday_vol;
    else if (key == "start_price") synth.start_price = p.start_price;
    else if (key == "base_volume") synth.base_volume = p.base_volume;
    else if (key == "volume_vol") synth.volume_vol = p.volume_vol;
    else if (key == "factor_vol") synth.factor_vol = p.factor_vol;
    else if (key == "seed") synth.seed = p.seed;
    else if (key == "start_date") synth.start_date = p.start_date;
  }
  return synth;
}

struct CommonOpts {
  std::string config_path;
  std::string synth_spec;
  std::vector<std::string> data_specs;
  std::string models, horizons, variants, costs, years;
  std::string embargo;
  bool cost_sensitivity = false;
  long seed = -1;
  int jobs = 0;
  std::string out;
};

void add_common(CLI::App* app, CommonOpts& o) {
  app->add_option("--config", o.config_path, "Run config file");
  app->add_option("--synthetic", o.synth_spec,
                  "Synthetic market shorthand: n_assets=...,n_days=...,seed=...");
  app->add_option("--data", o.data_specs,
                  "CSV market as <label>=<path>; repeatable");
  app->add_option("--models", o.models, "Comma list of model families");
  app->add_option("--horizons", o.horizons, "Comma list of horizons");
  app->add_option("--variants", o.variants, "Comma list of protocol variants");
  app->add_option("--costs", o.costs, "Comma list of cost levels (bps)");
  app->add_flag("--cost-sensitivity", o.cost_sensitivity,
                "Use the 0/5/10/25/50 bps sensitivity grid");
  app->add_option("--years", o.years, "Test years, e.g. 2016-2024 or 2016,2018");
  app->add_option("--embargo", o.embargo, "Embargo trading days or 'auto'");
  app->add_option("--seed", o.seed, "Master seed");
  app->add_option("--jobs", o.jobs, "Worker threads");
  app->add_option("--out", o.out, "Output directory");
}

RunConfig build_config(const CommonOpts& o) {
  RunConfig cfg;
  if (!o.config_path.empty()) cfg = load_run_config(o.config_path);

  auto override_list = [&](const std::string& text, const char* key) {
    return parse_run_config("[run]\n" + std::string(key) + " = " + text + "\n");
  };
  if (!o.models.empty()) cfg.models = override_list(o.models, "models").models;
  if (!o.horizons.empty()) cfg.horizons = override_list(o.horizons, "horizons").horizons;
  if (!o.variants.empty()) cfg.variants = override_list(o.variants, "variants").variants;
  if (o.cost_sensitivity) cfg.costs = {0, 5, 10, 25, 50};
  if (!o.costs.empty()) cfg.costs = override_list(o.costs, "costs").costs;
  if (!o.years.empty()) cfg.years = override_list(o.years, "years").years;
  if (!o.embargo.empty()) {
    cfg.embargo = o.embargo == "auto"
                      ? -1
                      : static_cast<int>(parse_long(o.embargo, "embargo"));
  }
  if (o.seed >= 0) cfg.seed = static_cast<std::uint64_t>(o.seed);
  if (o.jobs > 0) cfg.jobs = o.jobs;
  if (!o.out.empty()) cfg.out_dir = o.out;

  for (const auto& spec : o.data_specs) {
    const auto eq = spec.find('=');
    if (eq == std::string::npos) {
      fail("InvalidConfig", "--data expects <label>=<path>, got '" + spec + "'");
    }
    cfg.markets.push_back(
        MarketSource{trim(spec.substr(0, eq)), trim(spec.substr(eq + 1)), {}});
  }
  if (!o.synth_spec.empty()) {
    cfg.markets.push_back(
        MarketSource{"SYNTH", "", parse_synth_spec(o.synth_spec)});
  }
  return cfg;
}

int run_command(const CommonOpts& opts) {
  RunConfig cfg = build_config(opts);
  GridResult result = run_grid(cfg);
  emit_reports(result, result.cfg.out_dir);
  std::size_t n_warnings = 0;
  for (const auto& cell : result.cells) n_warnings += cell.warnings.size();
  std::cout << "ran " << result.cells.size() << " grid cells over "
            << result.cfg.markets.size() << " market(s); reports in "
            << result.cfg.out_dir << " (" << n_warnings << " warnings)\n";
  for (const auto& rep : result.reports) {
    if (rep.key.variant == Variant::kClean) continue;
    const auto it = rep.lg.lg_sr.find(5);
    if (it == rep.lg.lg_sr.end()) continue;
    std::cout << "  " << rep.key.to_string() << "  LG-SR@5bps = "
              << fmt_g6(it->second) << "\n";
  }
  return 0;
}

int gen_command(const CommonOpts& opts, const std::string& out_csv) {
  if (opts.synth_spec.empty()) {
    fail("InvalidConfig", "gen requires --synthetic");
  }
  const SynthConfig synth = parse_synth_spec(opts.synth_spec);
  const OhlcvPanel panel = generate_panel(synth);
  save_panel(panel, out_csv);
  std::cout << "wrote " << panel.bar_count() << " bars (" << panel.n_assets()
            << " assets x " << panel.n_dates() << " days) to " << out_csv
            << "\n";
  return 0;
}

void print_intervention(const InterventionReport& report) {
  std::cout << report.kind << " intervention on " << report.pair_key.to_string()
            << "\n";
  for (const auto& run : report.runs) {
    std::cout << "  " << run.panel_tag << " / " << to_string(run.variant)
              << ": SR@5bps = " << fmt_g6(run.sr5);
    if (run.variant != Variant::kClean) {
      std::cout << "  LG-SR@5bps = " << fmt_g6(run.lg_sr5);
    }
    std::cout << "\n";
  }
  for (const auto& [k, v] : report.stats) {
    std::cout << "  " << k << " = " << fmt_g6(v) << "\n";
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Paired-protocol backtesting engine"};
  app.require_subcommand(1);

  CommonOpts run_opts;
  CLI::App* run = app.add_subcommand("run", "Run the paired grid and emit reports");
  add_common(run, run_opts);

  CommonOpts gen_opts;
  std::string gen_out = "panel.csv";
  CLI::App* gen = app.add_subcommand("gen", "Generate a synthetic panel CSV");
  gen->add_option("--synthetic", gen_opts.synth_spec,
                  "n_assets=...,n_days=...,seed=...")
      ->required();
  gen->add_option("--out", gen_out, "Output CSV path");

  CLI::App* intervene =
      app.add_subcommand("intervene", "Re-run a designated pair under an intervention");
  intervene->require_subcommand(1);

  CommonOpts sfx_opts;
  std::string sfx_cutoff, sfx_market = "SYNTH", sfx_model = "RIDGE",
              sfx_variant = "TEMP_CENTER";
  int sfx_h = 5;
  long sfx_seed = 1;
  CLI::App* suffix = intervene->add_subcommand(
      "suffix", "Permute the post-cutoff suffix and re-run the pair");
  add_common(suffix, sfx_opts);
  suffix->add_option("--cutoff", sfx_cutoff, "Cutoff trading date (ISO)")->required();
  suffix->add_option("--market", sfx_market, "Market label");
  suffix->add_option("--model", sfx_model, "Model family");
  suffix->add_option("--horizon", sfx_h, "Horizon");
  suffix->add_option("--variant", sfx_variant, "Non-clean variant of the pair");
  suffix->add_option("--perturb-seed", sfx_seed, "Seed for the suffix permutation");

  CommonOpts mask_opts;
  std::string mask_market = "SYNTH", mask_model = "RIDGE",
              mask_variant = "EXEC_OPEN";
  int mask_h = 5;
  CLI::App* mask = intervene->add_subcommand(
      "mask", "Mask post-open bar fields and re-run the pair");
  add_common(mask, mask_opts);
  mask->add_option("--market", mask_market, "Market label");
  mask->add_option("--model", mask_model, "Model family");
  mask->add_option("--horizon", mask_h, "Horizon");
  mask->add_option("--variant", mask_variant, "Non-clean variant of the pair");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return run_command(run_opts);
    if (gen->parsed()) return gen_command(gen_opts, gen_out);
    if (suffix->parsed()) {
      RunConfig cfg = build_config(sfx_opts);
      const InterventionReport report = run_intervene_suffix(
          cfg, sfx_market, model_from_string(sfx_model), sfx_h,
          variant_from_string(sfx_variant), sfx_cutoff,
          static_cast<std::uint64_t>(sfx_seed));
      write_intervention_report(report, cfg.out_dir);
      print_intervention(report);
      return 0;
    }
    if (mask->parsed()) {
      RunConfig cfg = build_config(mask_opts);
      const InterventionReport report =
          run_intervene_mask(cfg, mask_market, model_from_string(mask_model),
                             mask_h, variant_from_string(mask_variant));
      write_intervention_report(report, cfg.out_dir);
      print_intervention(report);
      return 0;
    }
  } catch (const leakbench::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
