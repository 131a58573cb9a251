#include "leakbench/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

#include "leakbench/dates.hpp"
#include "leakbench/errors.hpp"
#include "leakbench/rng.hpp"

namespace leakbench {

std::vector<double> average_ranks(std::span<const double> values) {
  const std::size_t n = values.size();
  std::vector<std::size_t> idx(n);
  std::iota(idx.begin(), idx.end(), 0u);
  std::sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) {
    return values[a] < values[b];
  });
  std::vector<double> ranks(n, 0.0);
  std::size_t p = 0;
  while (p < n) {
    std::size_t q = p;
    while (q + 1 < n && values[idx[q + 1]] == values[idx[p]]) ++q;
    // positions p..q share rank (p+1 + q+1)/2
    const double r = (static_cast<double>(p + 1) + static_cast<double>(q + 1)) / 2.0;
    for (std::size_t k = p; k <= q; ++k) ranks[idx[k]] = r;
    p = q + 1;
  }
  return ranks;
}

double spearman(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  if (n != b.size() || n < 3) return missing_value();
  const auto ra = average_ranks(a);
  const auto rb = average_ranks(b);
  double sa = 0, sb = 0;
  for (std::size_t i = 0; i < n; ++i) {
    sa += ra[i];
    sb += rb[i];
  }
  const double ma = sa / static_cast<double>(n);
  const double mb = sb / static_cast<double>(n);
  double vaa = 0, vbb = 0, vab = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const double da = ra[i] - ma;
    const double db = rb[i] - mb;
    vaa += da * da;
    vbb += db * db;
    vab += da * db;
  }
  if (vaa <= 0.0 || vbb <= 0.0) return missing_value();
  return vab / std::sqrt(vaa * vbb);
}

double roc_auc(std::span<const double> scores, std::span<const double> labels) {
  const std::size_t n = scores.size();
  std::size_t n_pos = 0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] > 0.0) ++n_pos;
  }
  const std::size_t n_neg = n - n_pos;
  if (n_pos == 0 || n_neg == 0) return missing_value();
  const auto ranks = average_ranks(scores);
  double rank_sum_pos = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (labels[i] > 0.0) rank_sum_pos += ranks[i];
  }
  const double np = static_cast<double>(n_pos);
  const double nn = static_cast<double>(n_neg);
  return (rank_sum_pos - np * (np + 1.0) / 2.0) / (np * nn);
}

namespace {

template <typename DailyFn>
PooledMetric pool_over_dates(const ScorePanel& scores, const LabelPanel& labels,
                             DailyFn daily, const char* what) {
  const std::size_t n_assets = scores.assets.size();
  if (labels.assets != scores.assets) {
    fail("PairingMismatch", "scores and labels disagree on assets");
  }
  double sum = 0.0;
  int n_dates = 0;
  std::vector<double> s, y;
  for (std::size_t d = 0; d < scores.dates.size(); ++d) {
    const std::size_t t = scores.date_index[d];
    s.clear();
    y.clear();
    for (std::size_t i = 0; i < n_assets; ++i) {
      const double sv = scores.value(d, i);
      const double yv = labels.value(t, i);
      if (is_missing(sv) || is_missing(yv)) continue;
      s.push_back(sv);
      y.push_back(yv);
    }
    const double v = daily(s, y);
    if (is_missing(v)) continue;
    sum += v;
    ++n_dates;
  }
  if (n_dates == 0) {
    fail("NoValidDates", std::string(what) + " has no valid evaluation dates");
  }
  return PooledMetric{sum / static_cast<double>(n_dates), n_dates};
}

}  // namespace

PooledMetric pooled_rank_ic(const ScorePanel& scores, const LabelPanel& labels) {
  return pool_over_dates(
      scores, labels,
      [](const std::vector<double>& s, const std::vector<double>& y) {
        return spearman(s, y);
      },
      "rank_ic");
}

PooledMetric pooled_auc(const ScorePanel& scores, const LabelPanel& labels) {
  return pool_over_dates(
      scores, labels,
      [](const std::vector<double>& s, const std::vector<double>& y) {
        return roc_auc(s, y);
      },
      "auc");
}

double sharpe(std::span<const double> net) {
  const std::size_t n = net.size();
  if (n < 2) return missing_value();
  double mean = 0.0;
  for (double r : net) mean += r;
  mean /= static_cast<double>(n);
  double ss = 0.0;
  for (double r : net) {
    const double d = r - mean;
    ss += d * d;
  }
  const double sd = std::sqrt(ss / static_cast<double>(n - 1));
  if (sd == 0.0) return missing_value();
  return std::sqrt(252.0) * mean / sd;
}

RunMetrics summarize_run(const BacktestSeries& series, const ScorePanel& scores,
                         const LabelPanel& labels,
                         const std::vector<std::string>& calendar) {
  RunMetrics m;
  const PooledMetric ic = pooled_rank_ic(scores, labels);
  const PooledMetric au = pooled_auc(scores, labels);
  m.rank_ic = ic.value;
  m.n_dates_rankic = ic.n_dates;
  m.auc = au.value;
  m.n_dates_auc = au.n_dates;
  m.n_days = static_cast<int>(series.date_index.size());

  double tsum = 0.0, gsum = 0.0;
  for (std::size_t k = 0; k < series.turnover.size(); ++k) {
    tsum += series.turnover[k];
    gsum += series.gross[k];
  }
  const double days = std::max<double>(1.0, static_cast<double>(m.n_days));
  m.mean_turnover = tsum / days;
  m.mean_gross = gsum / days;

  std::vector<int> years;
  years.reserve(series.date_index.size());
  for (std::size_t t : series.date_index) years.push_back(year_of(calendar[t]));

  for (const auto& [cost, net] : series.net) {
    m.sharpe_at[cost] = sharpe(net);
    double nsum = 0.0;
    for (double r : net) nsum += r;
    m.mean_net[cost] = net.empty() ? missing_value() : nsum / days;
    m.max_dd[cost] = net.empty() ? missing_value() : max_drawdown(net);

    std::size_t k = 0;
    while (k < net.size()) {
      std::size_t e = k;
      while (e + 1 < net.size() && years[e + 1] == years[k]) ++e;
      m.yearly_sharpe[years[k]][cost] =
          sharpe(std::span<const double>(net.data() + k, e - k + 1));
      k = e + 1;
    }
  }
  return m;
}

LeakageGainValues leakage_gain(const RunMetrics& variant,
                               const RunMetrics& clean) {
  LeakageGainValues lg;
  lg.lg_rank_ic = variant.rank_ic - clean.rank_ic;
  lg.lg_auc = variant.auc - clean.auc;
  for (const auto& [cost, sr] : variant.sharpe_at) {
    const auto it = clean.sharpe_at.find(cost);
    if (it == clean.sharpe_at.end()) {
      fail("PairingMismatch",
           "clean run lacks cost level " + std::to_string(cost));
    }
    lg.lg_sr[cost] = sr - it->second;
  }
  for (const auto& [year, by_cost] : variant.yearly_sharpe) {
    const auto ity = clean.yearly_sharpe.find(year);
    for (const auto& [cost, sr] : by_cost) {
      double delta = missing_value();
      if (ity != clean.yearly_sharpe.end()) {
        const auto itc = ity->second.find(cost);
        if (itc != ity->second.end()) delta = sr - itc->second;
      }
      lg.yearly_lg_sr[cost].emplace_back(year, delta);
    }
  }
  return lg;
}

std::pair<double, double> bootstrap_ci(std::span<const double> yearly_values,
                                       int n_resamples, std::uint64_t seed) {
  const std::size_t n = yearly_values.size();
  if (n < 2) fail("TooFewYears", "bootstrap needs at least 2 yearly values");
  if (n_resamples < 1) fail("InvalidConfig", "n_resamples must be >= 1");
  const CounterRng rng(seed);
  std::vector<double> means(static_cast<std::size_t>(n_resamples));
  for (std::size_t b = 0; b < means.size(); ++b) {
    double sum = 0.0;
    for (std::size_t k = 0; k < n; ++k) {
      const std::size_t j = std::min<std::size_t>(
          n - 1, static_cast<std::size_t>(rng.uniform(b, k) *
                                          static_cast<double>(n)));
      sum += yearly_values[j];
    }
    means[b] = sum / static_cast<double>(n);
  }
  std::sort(means.begin(), means.end());
  // Linear interpolation between order statistics.
  auto quantile = [&](double q) {
    const double pos = q * static_cast<double>(means.size() - 1);
    const std::size_t lo = static_cast<std::size_t>(pos);
    const std::size_t hi = std::min(means.size() - 1, lo + 1);
    const double frac = pos - static_cast<double>(lo);
    return means[lo] * (1.0 - frac) + means[hi] * frac;
  };
  return {quantile(0.025), quantile(0.975)};
}

double wilcoxon_one_sided(std::span<const double> diffs) {
  std::vector<double> nonzero;
  for (double d : diffs) {
    if (d != 0.0) nonzero.push_back(d);
  }
  const std::size_t n = nonzero.size();
  if (n == 0) return missing_value();  // reported as NA
  if (n > 25) {
    fail("InvalidConfig", "exact wilcoxon limited to n <= 25 after zeros");
  }

  std::vector<double> abs_d(n);
  for (std::size_t i = 0; i < n; ++i) abs_d[i] = std::fabs(nonzero[i]);
  const auto ranks = average_ranks(abs_d);

  // Doubled ranks are integers even with ties (a tie block of size k starting
  // at position p has average rank p + (k+1)/2, doubled: 2p + k + 1).
  std::vector<long> ranks2(n);
  long total2 = 0;
  long observed2 = 0;
  for (std::size_t i = 0; i < n; ++i) {
    ranks2[i] = std::lround(2.0 * ranks[i]);
    total2 += ranks2[i];
    if (nonzero[i] > 0.0) observed2 += ranks2[i];
  }

  // Count sign assignments by achievable positive-rank sum.
  std::vector<std::uint64_t> count(static_cast<std::size_t>(total2) + 1, 0);
  count[0] = 1;
  long reach = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const long r = ranks2[i];
    for (long s = reach; s >= 0; --s) {
      if (count[static_cast<std::size_t>(s)] > 0) {
        count[static_cast<std::size_t>(s + r)] +=
            count[static_cast<std::size_t>(s)];
      }
    }
    reach += r;
  }
  std::uint64_t tail = 0;
  for (long s = observed2; s <= total2; ++s) {
    tail += count[static_cast<std::size_t>(s)];
  }
  return static_cast<double>(tail) /
         std::pow(2.0, static_cast<double>(n));
}

}  // namespace leakbench
