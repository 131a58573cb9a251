#include <doctest.h>

#include <cmath>

#include "leakbench/errors.hpp"
#include "leakbench/features.hpp"
#include "leakbench/protocol.hpp"
#include "leakbench/synth.hpp"

using namespace leakbench;

namespace {

// Panel with scripted opens/closes for one asset; highs/lows bracket loosely.
OhlcvPanel scripted(const std::vector<double>& opens,
                    const std::vector<double>& closes) {
  std::vector<std::string> cal = weekday_calendar("2020-01-06",
                                                  static_cast<int>(opens.size()));
  OhlcvPanel p(cal, {"A"});
  for (std::size_t t = 0; t < opens.size(); ++t) {
    const double hi = std::max(opens[t], closes[t]) * 1.01;
    const double lo = std::min(opens[t], closes[t]) * 0.99;
    p.set_bar(t, 0, OhlcvBar{opens[t], hi, lo, closes[t], 1000.0});
  }
  return p;
}

bool same_cell(double a, double b) {
  if (is_missing(a) && is_missing(b)) return true;
  return a == b;
}

}  // namespace

TEST_CASE("one-switch guarantee holds for every variant and rejects hybrids") {
  for (Variant v : {Variant::kClean, Variant::kTempCenter, Variant::kNormGlobal,
                    Variant::kStructGraph, Variant::kExecClose,
                    Variant::kExecOpen}) {
    const ProtocolSpec spec = ProtocolSpec::for_variant(v);
    CHECK_NOTHROW(spec.audit_one_switch());
    const int want = v == Variant::kClean ? 0 : 1;
    CHECK(spec.knob_diff(ProtocolSpec::for_variant(Variant::kClean)) == want);
  }

  ProtocolSpec two_knobs = ProtocolSpec::for_variant(Variant::kTempCenter);
  two_knobs.execution = Execution::kSameOpen;
  CHECK_THROWS_WITH_AS(two_knobs.audit_one_switch(),
                       doctest::Contains("OneSwitchViolation"), Error);

  ProtocolSpec mislabeled = ProtocolSpec::for_variant(Variant::kClean);
  mislabeled.variant = Variant::kExecOpen;
  CHECK_THROWS_WITH_AS(mislabeled.audit_one_switch(),
                       doctest::Contains("OneSwitchViolation"), Error);
}

TEST_CASE("labels follow the three execution conventions exactly") {
  const std::vector<double> opens = {100, 102, 104, 106};
  const std::vector<double> closes = {100, 110, 104, 106};
  const OhlcvPanel p = scripted(opens, closes);

  const LabelPanel next_open = make_labels(p, 1, Execution::kNextOpen);
  CHECK(next_open.value(0, 0) == doctest::Approx(std::log(104.0 / 102.0)));
  CHECK(is_missing(next_open.value(2, 0)));  // needs O[t+2]

  const LabelPanel same_open = make_labels(p, 1, Execution::kSameOpen);
  CHECK(same_open.value(0, 0) == doctest::Approx(std::log(102.0 / 100.0)));

  const LabelPanel same_close = make_labels(p, 1, Execution::kSameClose);
  CHECK(same_close.value(0, 0) == doctest::Approx(std::log(110.0 / 100.0)));
}

TEST_CASE("trade returns are simple returns per convention") {
  const std::vector<double> opens = {100, 102, 104};
  const std::vector<double> closes = {100, 99, 104};
  const OhlcvPanel p = scripted(opens, closes);

  const TradeReturnPanel next_open = make_trade_returns(p, Execution::kNextOpen);
  CHECK(next_open.value(0, 0) == doctest::Approx(104.0 / 102.0 - 1.0));
  CHECK(is_missing(next_open.value(1, 0)));

  const TradeReturnPanel same_open = make_trade_returns(p, Execution::kSameOpen);
  CHECK(same_open.value(0, 0) == doctest::Approx(0.02));

  const TradeReturnPanel same_close = make_trade_returns(p, Execution::kSameClose);
  CHECK(same_close.value(0, 0) == doctest::Approx(-0.01));
}

TEST_CASE("label and trade return agree for next_open at h = 1") {
  SynthConfig cfg;
  cfg.n_assets = 3;
  cfg.n_days = 320;
  cfg.seed = 8;
  const OhlcvPanel p = generate_panel(cfg);
  const LabelPanel y = make_labels(p, 1, Execution::kNextOpen);
  const TradeReturnPanel r = make_trade_returns(p, Execution::kNextOpen);
  for (std::size_t t = 0; t + 2 < p.n_dates(); ++t) {
    for (std::size_t i = 0; i < p.n_assets(); ++i) {
      CHECK(std::exp(y.value(t, i)) - 1.0 ==
            doctest::Approx(r.value(t, i)).epsilon(1e-12));
    }
  }
}

TEST_CASE("future-suffix perturbation changes only the post-cutoff region") {
  SynthConfig cfg;
  cfg.n_assets = 5;
  cfg.n_days = 400;
  cfg.seed = 21;
  const OhlcvPanel p = generate_panel(cfg);
  const std::string cutoff = p.calendar()[250];
  const OhlcvPanel q = perturb_future_suffix(p, cutoff, 77, cfg.intraday_vol);

  for (std::size_t t = 0; t <= 250; ++t) {
    for (std::size_t i = 0; i < p.n_assets(); ++i) {
      CHECK(p.open(t, i) == q.open(t, i));
      CHECK(p.high(t, i) == q.high(t, i));
      CHECK(p.low(t, i) == q.low(t, i));
      CHECK(p.close(t, i) == q.close(t, i));
      CHECK(p.volume(t, i) == q.volume(t, i));
    }
  }
  bool suffix_changed = false;
  for (std::size_t t = 251; t < p.n_dates() && !suffix_changed; ++t) {
    for (std::size_t i = 0; i < p.n_assets(); ++i) {
      if (p.close(t, i) != q.close(t, i)) suffix_changed = true;
    }
  }
  CHECK(suffix_changed);

  const OhlcvPanel q2 = perturb_future_suffix(p, cutoff, 78, cfg.intraday_vol);
  bool seeds_differ = false;
  for (std::size_t t = 251; t < p.n_dates() && !seeds_differ; ++t) {
    for (std::size_t i = 0; i < p.n_assets(); ++i) {
      if (q.close(t, i) != q2.close(t, i)) seeds_differ = true;
    }
  }
  CHECK(seeds_differ);

  // Permutation preserves the multiset of post-cutoff log returns per asset.
  for (std::size_t i = 0; i < p.n_assets(); ++i) {
    std::vector<double> orig, perm;
    double prev_o = p.close(250, i), prev_q = q.close(250, i);
    for (std::size_t t = 251; t < p.n_dates(); ++t) {
      orig.push_back(std::log(p.close(t, i) / prev_o));
      perm.push_back(std::log(q.close(t, i) / prev_q));
      prev_o = p.close(t, i);
      prev_q = q.close(t, i);
    }
    std::sort(orig.begin(), orig.end());
    std::sort(perm.begin(), perm.end());
    for (std::size_t k = 0; k < orig.size(); ++k) {
      CHECK(orig[k] == doctest::Approx(perm[k]).epsilon(1e-9));
    }
  }

  CHECK_THROWS_WITH_AS(perturb_future_suffix(p, "1999-01-01", 1, 0.01),
                       doctest::Contains("CutoffOutOfRange"), Error);
}

TEST_CASE("clean features before the cutoff ignore the suffix perturbation") {
  SynthConfig cfg;
  cfg.n_assets = 5;
  cfg.n_days = 400;
  cfg.seed = 22;
  const OhlcvPanel p = generate_panel(cfg);
  const std::size_t cut_idx = 300;
  const OhlcvPanel q =
      perturb_future_suffix(p, p.calendar()[cut_idx], 5, cfg.intraday_vol);

  const FeatureSchema schema = FeatureSchema::default_schema();
  const FeatureMatrix a = build_features(p, schema, false, 3);
  const FeatureMatrix b = build_features(q, schema, false, 3);
  const std::size_t max_window = 20;
  for (std::size_t f = 0; f < a.n_features(); ++f) {
    for (std::size_t t = 0; t + max_window <= cut_idx; ++t) {
      for (std::size_t i = 0; i < p.n_assets(); ++i) {
        CHECK(same_cell(a.value(f, t, i), b.value(f, t, i)));
      }
    }
  }
}

TEST_CASE("post-open masking applies the rule bar by bar") {
  SynthConfig cfg;
  cfg.n_assets = 4;
  cfg.n_days = 310;
  cfg.seed = 12;
  const OhlcvPanel p = generate_panel(cfg);
  const OhlcvPanel m = mask_post_open(p);

  for (std::size_t i = 0; i < p.n_assets(); ++i) {
    for (std::size_t t = 0; t < p.n_dates(); ++t) {
      CHECK(m.open(t, i) == p.open(t, i));  // opens untouched
      CHECK(m.high(t, i) == p.open(t, i));
      CHECK(m.low(t, i) == p.open(t, i));
      CHECK(m.close(t, i) == p.open(t, i));
      if (t == 0) {
        CHECK(m.volume(t, i) == p.volume(t, i));
      } else {
        CHECK(m.volume(t, i) == p.volume(t - 1, i));
      }
    }
  }
}

TEST_CASE("masking preserves open-only features") {
  SynthConfig cfg;
  cfg.n_assets = 4;
  cfg.n_days = 330;
  cfg.seed = 13;
  const OhlcvPanel p = generate_panel(cfg);
  const OhlcvPanel m = mask_post_open(p);

  // An open-to-open return feature plus a flagged rolling mean of it; both
  // depend only on opens (and lagged opens), so masking must not move them.
  FeatureSchema schema;
  schema.defs = {
      {"oret_1", FeatureTransform::kReturn, "close", 1, false},
      {"oret_mean", FeatureTransform::kRollMean, "oret_1", 5, true},
  };
  // kReturn reads closes; rebuild both panels with close := open so the
  // feature is literally open-based on each side.
  auto open_only = [](const OhlcvPanel& src) {
    OhlcvPanel out(src.calendar(), src.assets());
    for (std::size_t t = 0; t < src.n_dates(); ++t) {
      for (std::size_t i = 0; i < src.n_assets(); ++i) {
        const double o = src.open(t, i);
        out.set_bar(t, i, OhlcvBar{o, o, o, o, src.volume(t, i)});
      }
    }
    return out;
  };
  const FeatureMatrix a = build_features(open_only(p), schema, false, 3);
  const FeatureMatrix b = build_features(open_only(m), schema, false, 3);
  for (std::size_t f = 0; f < a.n_features(); ++f) {
    for (std::size_t t = 0; t < p.n_dates(); ++t) {
      for (std::size_t i = 0; i < p.n_assets(); ++i) {
        CHECK(same_cell(a.value(f, t, i), b.value(f, t, i)));
      }
    }
  }
}
