#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "leakbench/features.hpp"

namespace leakbench {

enum class ModelFamily { kMomentum, kRidge, kGbt, kGraphRidge };

std::string to_string(ModelFamily m);
ModelFamily model_from_string(const std::string& s);

struct GbtParams {
  int n_estimators = 150;
  int num_leaves = 31;
  int max_depth = 6;
  double learning_rate = 0.05;
  double subsample = 0.8;
  double colsample_bytree = 0.8;
  double reg_alpha = 0.1;
  double reg_lambda = 0.1;
  int min_samples_leaf = 20;
};

// Hyperparameters are fixed per run and shared across protocol variants;
// config_digest() feeds the pairing hash that enforces this.
struct ModelSpec {
  ModelFamily family = ModelFamily::kMomentum;
  double ridge_alpha = 1.0;
  GbtParams gbt;
  std::uint64_t seed = 0;

  std::string config_digest() const;
};

struct RidgeFit {
  std::vector<double> weights;
  double intercept = 0.0;
  // ||(X'X + aI) b - X'(y - mean(y))||_inf, recorded on every fit.
  double normal_eq_residual = 0.0;

  double predict(const double* row, std::size_t n_features) const;
};

// beta = (X'X + alpha I)^-1 X'(y - mean(y)); intercept = mean(y).
// X is row-major n x f. Throws NoTrainingRows when n == 0.
RidgeFit fit_ridge(const std::vector<double>& x, std::size_t n, std::size_t f,
                   const std::vector<double>& y, double alpha);

struct GbtNode {
  int feature = -1;  // -1 marks a leaf
  double threshold = 0.0;  // go left when x[feature] <= threshold
  int left = -1;
  int right = -1;
  double value = 0.0;
};

struct GbtTree {
  std::vector<GbtNode> nodes;
  double predict(const double* row) const;
};

struct GbtModel {
  double base = 0.0;
  double learning_rate = 0.05;
  std::vector<GbtTree> trees;

  double predict(const double* row) const;
};

// Squared-error gradient boosting, leaf-wise growth with exact sorted-value
// split finding. Row and feature subsampling draw from the counter RNG keyed
// by (round, row) / (round), never by feature value, so column rescaling
// cannot change the sampled sets. Fully deterministic given the seed.
GbtModel fit_gbt(const std::vector<double>& x, std::size_t n, std::size_t f,
                 const std::vector<double>& y, const GbtParams& params,
                 std::uint64_t seed);

// Cross-sectional scores over the evaluation dates of one run.
struct ScorePanel {
  std::vector<std::string> dates;       // test dates
  std::vector<std::size_t> date_index;  // positions in the panel calendar
  std::vector<std::string> assets;
  std::vector<double> values;  // dates x assets, NaN when not evaluable

  double value(std::size_t d, std::size_t i) const {
    return values[d * assets.size() + i];
  }
};

// One walk-forward fold's assembled rows. Feature blocks are row-major.
struct ModelInput {
  std::size_t n_features = 0;
  std::vector<std::string> feature_names;
  std::vector<double> x_train;
  std::vector<double> y_train;
  std::size_t n_train = 0;
  std::vector<double> x_test;
  std::vector<RowRef> test_keys;  // (panel date index, asset index)
  std::size_t n_test = 0;
};

// Fits the family (when trainable) on the train rows only and scores the test
// rows. MOMENTUM ignores training entirely and reads the raw ret_20 column.
std::vector<double> score_model(const ModelSpec& spec, const ModelInput& input);

}  // namespace leakbench
