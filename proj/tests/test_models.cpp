#include <doctest.h>

#include <cmath>

#include "leakbench/errors.hpp"
#include "leakbench/models.hpp"

#include "oracles.hpp"

using namespace leakbench;

TEST_CASE("ridge closed form on the tiny hand-solved problem") {
  // X = [1, 2], y = [1, 2], alpha = 1: beta = 0.5 / 6, intercept = 1.5.
  const std::vector<double> x = {1.0, 2.0};
  const std::vector<double> y = {1.0, 2.0};
  const RidgeFit fit = fit_ridge(x, 2, 1, y, 1.0);
  CHECK(fit.intercept == doctest::Approx(1.5));
  CHECK(fit.weights[0] == doctest::Approx(0.5 / 6.0));
  CHECK(fit.normal_eq_residual < 1e-8);
}

TEST_CASE("huge alpha shrinks the weights toward zero") {
  const std::vector<double> x = {1.0, 2.0, 3.0, 4.0};
  const std::vector<double> y = {2.0, 4.0, 6.0, 8.0};
  const RidgeFit fit = fit_ridge(x, 4, 1, y, 1e12);
  CHECK(std::fabs(fit.weights[0]) < 1e-9);
  const double row = 2.5;
  CHECK(fit.predict(&row, 1) == doctest::Approx(5.0));  // = mean(y)
}

TEST_CASE("constant target gives exactly zero weights") {
  oracles::TestRng rng(3);
  std::vector<double> x(50 * 3);
  for (auto& v : x) v = rng.uniform() - 0.5;
  const std::vector<double> y(50, 4.2);
  const RidgeFit fit = fit_ridge(x, 50, 3, y, 1.0);
  for (double w : fit.weights) CHECK(w == 0.0);
  CHECK(fit.intercept == doctest::Approx(4.2));
}

TEST_CASE("normal-equation residual stays tiny on random problems") {
  oracles::TestRng rng(17);
  for (int rep = 0; rep < 20; ++rep) {
    const std::size_t n = 30 + rng.below(200);
    const std::size_t f = 1 + rng.below(8);
    std::vector<double> x(n * f), y(n);
    for (auto& v : x) v = 2.0 * rng.uniform() - 1.0;
    for (auto& v : y) v = 2.0 * rng.uniform() - 1.0;
    const RidgeFit fit = fit_ridge(x, n, f, y, 1.0);
    CHECK(fit.normal_eq_residual < 1e-8);
  }
}

TEST_CASE("no training rows is an error") {
  CHECK_THROWS_WITH_AS(fit_ridge({}, 0, 1, {}, 1.0),
                       doctest::Contains("NoTrainingRows"), Error);
}

namespace {

// Step target in one feature plus distractor noise columns.
struct StepProblem {
  std::vector<double> x;
  std::vector<double> y;
  std::size_t n = 400;
  std::size_t f = 4;
};

StepProblem make_step(std::uint64_t seed) {
  StepProblem p;
  oracles::TestRng rng(seed);
  p.x.resize(p.n * p.f);
  p.y.resize(p.n);
  for (std::size_t r = 0; r < p.n; ++r) {
    for (std::size_t c = 0; c < p.f; ++c) {
      p.x[r * p.f + c] = 2.0 * rng.uniform() - 1.0;
    }
    p.y[r] = p.x[r * p.f + 1] > 0.1 ? 1.0 : -0.5;
  }
  return p;
}

}  // namespace

TEST_CASE("gbt is bit-deterministic given the seed") {
  const StepProblem p = make_step(5);
  GbtParams params;
  params.n_estimators = 40;
  const GbtModel a = fit_gbt(p.x, p.n, p.f, p.y, params, 99);
  const GbtModel b = fit_gbt(p.x, p.n, p.f, p.y, params, 99);
  REQUIRE(a.trees.size() == b.trees.size());
  for (std::size_t r = 0; r < p.n; ++r) {
    CHECK(a.predict(p.x.data() + r * p.f) == b.predict(p.x.data() + r * p.f));
  }
  const GbtModel c = fit_gbt(p.x, p.n, p.f, p.y, params, 100);
  bool any_diff = false;
  for (std::size_t r = 0; r < p.n && !any_diff; ++r) {
    if (a.predict(p.x.data() + r * p.f) != c.predict(p.x.data() + r * p.f)) {
      any_diff = true;
    }
  }
  CHECK(any_diff);
}

TEST_CASE("gbt recovers a noiseless step with subsampling disabled") {
  const StepProblem p = make_step(6);
  GbtParams params;  // 150 rounds, lr 0.05
  params.subsample = 1.0;
  params.colsample_bytree = 1.0;
  const GbtModel m = fit_gbt(p.x, p.n, p.f, p.y, params, 1);
  double worst = 0.0;
  for (std::size_t r = 0; r < p.n; ++r) {
    worst = std::max(worst,
                     std::fabs(m.predict(p.x.data() + r * p.f) - p.y[r]));
  }
  CHECK(worst < 1e-3);
}

TEST_CASE("zero estimators predict the training mean") {
  const StepProblem p = make_step(7);
  GbtParams params;
  params.n_estimators = 0;
  const GbtModel m = fit_gbt(p.x, p.n, p.f, p.y, params, 1);
  double ybar = 0.0;
  for (double v : p.y) ybar += v;
  ybar /= static_cast<double>(p.n);
  const double row[4] = {0.3, -0.9, 0.2, 0.0};
  CHECK(m.predict(row) == doctest::Approx(ybar));
}

TEST_CASE("gbt training predictions survive a power-of-two column rescale") {
  const StepProblem p = make_step(8);
  GbtParams params;
  params.n_estimators = 30;
  const GbtModel a = fit_gbt(p.x, p.n, p.f, p.y, params, 7);

  StepProblem q = p;
  for (std::size_t r = 0; r < q.n; ++r) q.x[r * q.f + 2] *= 4.0;
  const GbtModel b = fit_gbt(q.x, q.n, q.f, q.y, params, 7);
  for (std::size_t r = 0; r < p.n; ++r) {
    CHECK(std::fabs(a.predict(p.x.data() + r * p.f) -
                    b.predict(q.x.data() + r * q.f)) < 1e-9);
  }
}

TEST_CASE("score_model: momentum reads ret_20 and ignores training data") {
  ModelInput input;
  input.n_features = 2;
  input.feature_names = {"ret_20", "vol_5"};
  input.x_test = {0.1, 9.0, -0.2, 8.0};
  input.test_keys = {{0, 0}, {0, 1}};
  input.n_test = 2;

  ModelSpec spec;
  spec.family = ModelFamily::kMomentum;
  const auto s1 = score_model(spec, input);
  CHECK(s1[0] == doctest::Approx(0.1));
  CHECK(s1[1] == doctest::Approx(-0.2));

  // Attach arbitrary training data; momentum must not care.
  input.x_train = {1.0, 2.0, 3.0, 4.0};
  input.y_train = {1.0, -1.0};
  input.n_train = 2;
  const auto s2 = score_model(spec, input);
  CHECK(s1 == s2);

  input.feature_names = {"ret_5", "vol_5"};
  CHECK_THROWS_WITH_AS(score_model(spec, input),
                       doctest::Contains("FeatureMissingFromSchema"), Error);
}

TEST_CASE("momentum is invariant to scaling one asset's prices") {
  // ret_20 is a log price ratio; scaling all prices of an asset cancels.
  const double c_now = 110.0, c_then = 100.0;
  const double s = std::log(c_now / c_then);
  CHECK(s == doctest::Approx(0.09531).epsilon(1e-4));
  const double k = 3.7;
  CHECK(std::log((k * c_now) / (k * c_then)) == s);
}
