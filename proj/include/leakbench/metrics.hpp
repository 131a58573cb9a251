#pragma once

#include <cstdint>
#include <map>
#include <span>
#include <string>
#include <vector>

#include "leakbench/evaluate.hpp"
#include "leakbench/models.hpp"
#include "leakbench/protocol.hpp"

namespace leakbench {

// Average ranks (1-based); ties share the mean of their positions.
std::vector<double> average_ranks(std::span<const double> values);

// Spearman correlation via Pearson on average ranks; NaN when fewer than
// 3 pairs or either side has zero rank variance.
double spearman(std::span<const double> a, std::span<const double> b);

// Rank-sum ROC AUC of scores against b = 1{y > 0}; ties get half credit;
// NaN when a single class is present.
double roc_auc(std::span<const double> scores, std::span<const double> labels);

struct PooledMetric {
  double value = 0.0;
  int n_dates = 0;
};

// Daily cross-sectional metric averaged over the dates where it is finite.
// Throws NoValidDates when no date qualifies.
PooledMetric pooled_rank_ic(const ScorePanel& scores, const LabelPanel& labels);
PooledMetric pooled_auc(const ScorePanel& scores, const LabelPanel& labels);

// sqrt(252) * mean / sample std; NaN for fewer than 2 observations or zero
// variance.
double sharpe(std::span<const double> net);

// Pooled and per-year summary of one run at every cost level.
struct RunMetrics {
  double rank_ic = 0.0;
  double auc = 0.0;
  int n_dates_rankic = 0;
  int n_dates_auc = 0;
  std::map<int, double> sharpe_at;    // cost -> pooled SR
  std::map<int, double> mean_net;     // cost -> mean daily net return
  std::map<int, double> max_dd;       // cost -> max drawdown of net series
  double mean_turnover = 0.0;
  double mean_gross = 0.0;
  int n_days = 0;
  // year -> (cost -> within-year SR)
  std::map<int, std::map<int, double>> yearly_sharpe;
};

RunMetrics summarize_run(const BacktestSeries& series, const ScorePanel& scores,
                         const LabelPanel& labels,
                         const std::vector<std::string>& calendar);

struct LeakageGainValues {
  std::map<int, double> lg_sr;  // cost -> pooled LG-SR
  double lg_rank_ic = 0.0;
  double lg_auc = 0.0;
  // cost -> per-year LG-SR in test-year order
  std::map<int, std::vector<std::pair<int, double>>> yearly_lg_sr;
};

// Elementwise variant-minus-clean differences; metrics that are NA on either
// side stay NA.
LeakageGainValues leakage_gain(const RunMetrics& variant, const RunMetrics& clean);

// Percentile bootstrap over yearly values (resample n years with replacement,
// take the 2.5/97.5 empirical percentiles of the resampled means). Throws
// TooFewYears for fewer than 2 values.
std::pair<double, double> bootstrap_ci(std::span<const double> yearly_values,
                                       int n_resamples, std::uint64_t seed);

// One-sided (greater) exact paired Wilcoxon signed-rank p-value. Zeros are
// dropped first; all-zero input returns NaN (reported as NA). Exact tail
// probability of W+ over all 2^n sign assignments, average ranks for ties.
double wilcoxon_one_sided(std::span<const double> diffs);

}  // namespace leakbench
