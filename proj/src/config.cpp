#include <fstream>
#include <sstream>

#include "leakbench/errors.hpp"
#include "leakbench/runner.hpp"
#include "leakbench/text.hpp"

namespace leakbench {

namespace {

std::vector<std::string> parse_list(const std::string& value) {
  std::vector<std::string> out;
  for (const auto& item : split(value, ',')) {
    const std::string t = trim(item);
    if (!t.empty()) out.push_back(t);
  }
  return out;
}

std::vector<int> parse_int_list(const std::string& value, const std::string& ctx) {
  std::vector<int> out;
  for (const auto& item : parse_list(value)) {
    // "A-B" and "A..B" expand to the inclusive range.
    std::size_t dash = item.find("..");
    std::size_t skip = 2;
    if (dash == std::string::npos && item.size() > 1) {
      dash = item.find('-', 1);
      skip = 1;
    }
    if (dash != std::string::npos) {
      const int lo = static_cast<int>(parse_long(item.substr(0, dash), ctx));
      const int hi = static_cast<int>(parse_long(item.substr(dash + skip), ctx));
      if (hi < lo) fail("InvalidConfig", ctx + ": bad range '" + item + "'");
      for (int v = lo; v <= hi; ++v) out.push_back(v);
    } else {
      out.push_back(static_cast<int>(parse_long(item, ctx)));
    }
  }
  return out;
}

void apply_synth_kv(SynthConfig& synth, const std::string& key,
                    const std::string& value) {
  if (key == "n_assets") synth.n_assets = static_cast<int>(parse_long(value, key));
  else if (key == "n_days") synth.n_days = static_cast<int>(parse_long(value, key));
  else if (key == "daily_vol") synth.daily_vol = parse_double(value, key);
  else if (key == "intraday_vol") synth.intraday_vol = parse_double(value, key);
  else if (key == "start_price") synth.start_price = parse_double(value, key);
  else if (key == "base_volume") synth.base_volume = parse_double(value, key);
  else if (key == "volume_vol") synth.volume_vol = parse_double(value, key);
  else if (key == "factor_vol") synth.factor_vol = parse_double(value, key);
  else if (key == "seed") synth.seed = static_cast<std::uint64_t>(parse_long(value, key));
  else if (key == "start_date") synth.start_date = value;
  else fail("InvalidConfig", "unknown synthetic parameter '" + key + "'");
}

}  // namespace

RunConfig parse_run_config(const std::string& text) {
  RunConfig cfg;
  cfg.models.clear();
  cfg.variants.clear();

  std::string section = "run";
  std::string market_label;
  MarketSource* market = nullptr;
  std::string schema_text;
  bool models_set = false, variants_set = false;

  std::istringstream in(text);
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const std::string t = trim(line);
    if (t.empty() || t[0] == '#') continue;
    if (t.front() == '[' && t.back() == ']') {
      section = trim(t.substr(1, t.size() - 2));
      market = nullptr;
      if (section.rfind("market.", 0) == 0) {
        market_label = section.substr(7);
        if (market_label.empty()) {
          fail("InvalidConfig", "line " + std::to_string(line_no) +
                                    ": market section needs a label");
        }
        cfg.markets.push_back(MarketSource{market_label, "", std::nullopt});
        market = &cfg.markets.back();
      }
      continue;
    }
    const auto eq = t.find('=');
    if (eq == std::string::npos) {
      fail("InvalidConfig",
           "line " + std::to_string(line_no) + ": expected 'key = value'");
    }
    const std::string key = trim(t.substr(0, eq));
    const std::string value = trim(t.substr(eq + 1));

    if (section == "run") {
      if (key == "models") {
        for (const auto& m : parse_list(value)) cfg.models.push_back(model_from_string(m));
        models_set = true;
      } else if (key == "horizons") {
        cfg.horizons = parse_int_list(value, "horizons");
      } else if (key == "variants") {
        for (const auto& v : parse_list(value)) cfg.variants.push_back(variant_from_string(v));
        variants_set = true;
      } else if (key == "costs") {
        cfg.costs = parse_int_list(value, "costs");
      } else if (key == "years") {
        cfg.years = parse_int_list(value, "years");
      } else if (key == "embargo") {
        cfg.embargo = value == "auto" ? -1 : static_cast<int>(parse_long(value, key));
      } else if (key == "seed") {
        cfg.seed = static_cast<std::uint64_t>(parse_long(value, key));
      } else if (key == "jobs") {
        cfg.jobs = static_cast<int>(parse_long(value, key));
      } else if (key == "out") {
        cfg.out_dir = value;
      } else if (key == "future_days") {
        cfg.future_days = static_cast<int>(parse_long(value, key));
      } else if (key == "graph_k") {
        cfg.graph_k = static_cast<int>(parse_long(value, key));
      } else if (key == "bootstrap_resamples") {
        cfg.bootstrap_resamples = static_cast<int>(parse_long(value, key));
      } else if (key == "ridge_alpha") {
        cfg.ridge_alpha = parse_double(value, key);
      } else if (key == "gbt_n_estimators") {
        cfg.gbt.n_estimators = static_cast<int>(parse_long(value, key));
      } else if (key == "gbt_num_leaves") {
        cfg.gbt.num_leaves = static_cast<int>(parse_long(value, key));
      } else if (key == "gbt_max_depth") {
        cfg.gbt.max_depth = static_cast<int>(parse_long(value, key));
      } else if (key == "gbt_learning_rate") {
        cfg.gbt.learning_rate = parse_double(value, key);
      } else if (key == "gbt_subsample") {
        cfg.gbt.subsample = parse_double(value, key);
      } else if (key == "gbt_colsample_bytree") {
        cfg.gbt.colsample_bytree = parse_double(value, key);
      } else if (key == "gbt_reg_alpha") {
        cfg.gbt.reg_alpha = parse_double(value, key);
      } else if (key == "gbt_reg_lambda") {
        cfg.gbt.reg_lambda = parse_double(value, key);
      } else if (key == "gbt_min_samples_leaf") {
        cfg.gbt.min_samples_leaf = static_cast<int>(parse_long(value, key));
      } else {
        fail("InvalidConfig", "line " + std::to_string(line_no) +
                                  ": unknown [run] key '" + key + "'");
      }
    } else if (market != nullptr) {
      if (key == "csv") {
        market->csv_path = value;
      } else {
        if (!market->synth.has_value()) market->synth = SynthConfig{};
        apply_synth_kv(*market->synth, key, value);
      }
    } else if (section == "schema") {
      if (key != "feature") {
        fail("InvalidConfig", "line " + std::to_string(line_no) +
                                  ": only 'feature = ...' allowed in [schema]");
      }
      schema_text += "feature = " + value + "\n";
    } else {
      fail("InvalidConfig",
           "line " + std::to_string(line_no) + ": unknown section '" + section + "'");
    }
  }

  if (!models_set) {
    cfg.models = {ModelFamily::kMomentum, ModelFamily::kRidge, ModelFamily::kGbt,
                  ModelFamily::kGraphRidge};
  }
  if (!variants_set) {
    cfg.variants = {Variant::kClean,      Variant::kTempCenter,
                    Variant::kNormGlobal, Variant::kStructGraph,
                    Variant::kExecClose,  Variant::kExecOpen};
  }
  if (!schema_text.empty()) cfg.schema = FeatureSchema::parse(schema_text);
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) fail("IoError", "cannot open config '" + path + "'");
  std::ostringstream buf;
  buf << in.rdbuf();
  return parse_run_config(buf.str());
}

}  // namespace leakbench
