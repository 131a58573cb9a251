#include <doctest.h>

#include <cmath>
#include <vector>

#include "leakbench/errors.hpp"
#include "leakbench/features.hpp"
#include "leakbench/synth.hpp"

using namespace leakbench;

namespace {
const double NA = missing_value();

bool same_cell(double a, double b) {
  if (is_missing(a) && is_missing(b)) return true;
  return a == b;
}
}  // namespace

TEST_CASE("rolling_trailing mean over [1..5] window 3") {
  const std::vector<double> s = {1, 2, 3, 4, 5};
  const auto out = rolling_trailing(s, 3, RollStat::kMean);
  CHECK(is_missing(out[0]));
  CHECK(is_missing(out[1]));
  CHECK(out[2] == doctest::Approx(2.0));
  CHECK(out[3] == doctest::Approx(3.0));
  CHECK(out[4] == doctest::Approx(4.0));
}

TEST_CASE("window longer than the series leaves everything missing") {
  const std::vector<double> s = {1, 2, 3};
  for (double v : rolling_trailing(s, 5, RollStat::kMean)) CHECK(is_missing(v));
}

TEST_CASE("rolling std at the end of [1..8] equals the sample std of {6,7,8}") {
  const std::vector<double> s = {1, 2, 3, 4, 5, 6, 7, 8};
  const auto out = rolling_trailing(s, 3, RollStat::kStd);
  // sample std of {6,7,8}: mean 7, ss = 2, ddof 1 -> 1
  CHECK(out[7] == doctest::Approx(1.0));
}

TEST_CASE("missing input propagates through the covering windows only") {
  std::vector<double> s = {1, 2, NA, 4, 5, 6};
  const auto out = rolling_trailing(s, 2, RollStat::kMean);
  CHECK(out[1] == doctest::Approx(1.5));
  CHECK(is_missing(out[2]));
  CHECK(is_missing(out[3]));
  CHECK(out[4] == doctest::Approx(4.5));
}

TEST_CASE("rolling_shifted is the trailing operator indexed at t + future_days") {
  const std::vector<double> s = {1, 2, 3, 4, 5, 6, 7, 8};
  const auto shifted = rolling_shifted(s, 3, RollStat::kMean, 3);
  // value at t=2 = trailing mean at t=5 = mean{4,5,6} = 5
  CHECK(shifted[2] == doctest::Approx(5.0));
  // last future_days entries have nothing to borrow from
  CHECK(is_missing(shifted[5]));
  CHECK(is_missing(shifted[6]));
  CHECK(is_missing(shifted[7]));

  const auto zero = rolling_shifted(s, 3, RollStat::kMean, 0);
  const auto trail = rolling_trailing(s, 3, RollStat::kMean);
  for (std::size_t t = 0; t < s.size(); ++t) CHECK(same_cell(zero[t], trail[t]));
}

namespace {

OhlcvPanel test_panel(std::uint64_t seed, int n_assets = 6, int n_days = 400) {
  SynthConfig cfg;
  cfg.n_assets = n_assets;
  cfg.n_days = n_days;
  cfg.seed = seed;
  return generate_panel(cfg);
}

}  // namespace

TEST_CASE("admissibility: with temp_center off, day-t features ignore later bars") {
  OhlcvPanel p = test_panel(3);
  const FeatureSchema schema = FeatureSchema::default_schema();
  const FeatureMatrix before = build_features(p, schema, false, 3);

  // Perturb a late bar and rebuild.
  const std::size_t s = p.n_dates() - 5;
  OhlcvBar b = p.bar(s, 2);
  b.close *= 1.3;
  b.high = std::max(b.high * 1.4, b.close);
  p.set_bar(s, 2, b);
  const FeatureMatrix after = build_features(p, schema, false, 3);

  for (std::size_t f = 0; f < before.n_features(); ++f) {
    for (std::size_t t = 0; t + 5 < p.n_dates(); ++t) {
      for (std::size_t i = 0; i < p.n_assets(); ++i) {
        CHECK(same_cell(before.value(f, t, i), after.value(f, t, i)));
      }
    }
  }
}

TEST_CASE("switch scoping: temp_center moves only rolling-flagged columns") {
  const OhlcvPanel p = test_panel(4);
  const FeatureSchema schema = FeatureSchema::default_schema();
  const FeatureMatrix off = build_features(p, schema, false, 3);
  const FeatureMatrix on = build_features(p, schema, true, 3);

  const auto own = schema.own_defs();
  for (std::size_t f = 0; f < own.size(); ++f) {
    bool any_diff = false;
    for (std::size_t t = 0; t < p.n_dates(); ++t) {
      for (std::size_t i = 0; i < p.n_assets(); ++i) {
        if (!same_cell(off.value(f, t, i), on.value(f, t, i))) any_diff = true;
      }
    }
    if (own[f].rolling_flag) {
      CHECK(any_diff);
    } else {
      CHECK_FALSE(any_diff);
    }
  }
}

TEST_CASE("temp_center rolling mean equals the trailing oracle shifted by 3") {
  const OhlcvPanel p = test_panel(5);
  const FeatureSchema schema = FeatureSchema::default_schema();
  const FeatureMatrix on = build_features(p, schema, true, 3);
  const FeatureMatrix off = build_features(p, schema, false, 3);

  const auto f_on = static_cast<std::size_t>(on.feature_index("ret_1_5_mean"));
  const std::size_t i = 1;
  for (std::size_t t = 0; t + 3 < p.n_dates(); ++t) {
    CHECK(same_cell(on.value(f_on, t, i), off.value(f_on, t + 3, i)));
  }
}

TEST_CASE("fit_norm matches the hand formula and flags constants") {
  FeatureMatrix m({"2020-01-01", "2020-01-02", "2020-01-03"}, {"A"});
  m.add_column("x", std::make_shared<const std::vector<double>>(
                        std::vector<double>{1, 2, 3}));
  m.add_column("c", std::make_shared<const std::vector<double>>(
                        std::vector<double>{7, 7, 7}));
  const auto rows = all_rows(3, 1);
  const NormStats stats = fit_norm(m, rows, "train");
  CHECK(stats.mean[0] == doctest::Approx(2.0));
  CHECK(stats.stddev[0] == doctest::Approx(1.0));
  CHECK(stats.retained[0]);
  CHECK_FALSE(stats.retained[1]);
  REQUIRE(stats.dropped.size() == 1);
  CHECK(stats.dropped[0] == "c");

  const FeatureMatrix z = apply_norm(m, stats);
  CHECK(z.n_features() == 1);  // constant column excluded
  CHECK(z.value(0, 0, 0) == doctest::Approx(-1.0));
  CHECK(z.value(0, 1, 0) == doctest::Approx(0.0));
  CHECK(z.value(0, 2, 0) == doctest::Approx(1.0));
}

TEST_CASE("empty scope is rejected") {
  FeatureMatrix m({"2020-01-01"}, {"A"});
  m.add_column("x", std::make_shared<const std::vector<double>>(
                        std::vector<double>{1.0}));
  CHECK_THROWS_WITH_AS(fit_norm(m, {}, "train"), doctest::Contains("EmptyScope"),
                       Error);
}

TEST_CASE("train-scope and full-scope stats differ on a shifting panel") {
  // Close levels trend upward, so a level-sensitive feature has different
  // stats over the first half vs the full sample.
  FeatureMatrix m({"2020-01-01", "2020-01-02", "2020-01-03", "2020-01-04"},
                  {"A"});
  m.add_column("x", std::make_shared<const std::vector<double>>(
                        std::vector<double>{1, 2, 10, 20}));
  std::vector<std::size_t> train_dates = {0, 1};
  const auto train_rows = rows_for_dates(train_dates, 1);
  const NormStats train = fit_norm(m, train_rows, "train");
  const NormStats full = fit_norm(m, all_rows(4, 1), "full");
  CHECK(train.mean[0] != full.mean[0]);
  CHECK(train.stddev[0] != full.stddev[0]);
}

TEST_CASE("normalizing a scope by its own stats re-standardizes it") {
  const OhlcvPanel p = test_panel(6);
  const FeatureMatrix m = build_features(p, FeatureSchema::default_schema(),
                                         false, 3);
  const auto rows = all_rows(p.n_dates(), p.n_assets());
  const NormStats stats = fit_norm(m, rows, "full");
  const FeatureMatrix z = apply_norm(m, stats);
  const NormStats again = fit_norm(z, rows, "full");
  for (std::size_t f = 0; f < z.n_features(); ++f) {
    CHECK(again.mean[f] == doctest::Approx(0.0).epsilon(1e-10));
    CHECK(again.stddev[f] == doctest::Approx(1.0).epsilon(1e-10));
  }
}

TEST_CASE("schema parse round-trips a custom feature line") {
  const FeatureSchema s = FeatureSchema::parse(
      "feature = my_ret,ret,close,3,0\n"
      "feature = my_mean,roll_mean,my_ret,4,1\n");
  REQUIRE(s.defs.size() == 2);
  CHECK(s.defs[1].transform == FeatureTransform::kRollMean);
  CHECK(s.defs[1].window == 4);
  CHECK(s.defs[1].rolling_flag);
}

TEST_CASE("unknown sources are rejected") {
  CHECK_THROWS_WITH_AS(
      FeatureSchema::parse("feature = bad,roll_mean,nope,4,1\n"),
      doctest::Contains("UnknownSourceField"), Error);
}
