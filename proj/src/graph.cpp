#include "leakbench/graph.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>

#include "leakbench/dates.hpp"
#include "leakbench/errors.hpp"
#include "leakbench/text.hpp"

namespace leakbench {

namespace {
constexpr int kGraphWindowDays = 252;
constexpr int kHalfWindow = 126;
constexpr std::size_t kMinPairObs = 30;
}  // namespace

std::string to_string(GraphMode m) {
  return m == GraphMode::kTrailing ? "trailing" : "symmetric";
}

PeerGraph PeerGraph::empty(std::string anchor, std::size_t n_assets) {
  PeerGraph g;
  g.anchor = std::move(anchor);
  g.n_assets = n_assets;
  g.rows.assign(n_assets, {});
  return g;
}

void PeerGraph::check_invariants() const {
  for (std::size_t i = 0; i < rows.size(); ++i) {
    double sum = 0.0;
    for (const auto& [j, w] : rows[i]) {
      if (j == i) fail("BadGraph", "nonzero diagonal");
      if (w < 0.0) fail("BadGraph", "negative weight");
      sum += w;
    }
    if (!rows[i].empty() && std::fabs(sum - 1.0) > 1e-9) {
      fail("BadGraph", "row does not sum to one");
    }
  }
}

DateRange graph_window(const std::vector<std::string>& calendar,
                       const std::string& anchor, GraphMode mode) {
  const auto it = std::lower_bound(calendar.begin(), calendar.end(), anchor);
  if (it == calendar.end() || *it != anchor) {
    fail("DateNotInCalendar", "graph anchor '" + anchor + "' not in calendar");
  }
  const std::size_t a = static_cast<std::size_t>(it - calendar.begin());
  DateRange r;
  if (mode == GraphMode::kTrailing) {
    if (a == 0) return r;  // no history strictly before the anchor
    r.first = a > static_cast<std::size_t>(kGraphWindowDays)
                  ? a - static_cast<std::size_t>(kGraphWindowDays)
                  : 0;
    r.last = a - 1;
    r.valid = true;
  } else {
    r.first = a > static_cast<std::size_t>(kHalfWindow)
                  ? a - static_cast<std::size_t>(kHalfWindow)
                  : 0;
    r.last = std::min(calendar.size() - 1,
                      a + static_cast<std::size_t>(kHalfWindow));
    r.valid = true;
  }
  return r;
}

PeerGraph build_graph(const OhlcvPanel& panel, const std::string& anchor,
                      GraphMode mode, int k) {
  if (k < 1) fail("BadGraph", "k must be >= 1");
  const DateRange win = graph_window(panel.calendar(), anchor, mode);
  if (win.length() < kMinPairObs) {
    fail("WindowTooShort", "graph window at '" + anchor + "' has " +
                               std::to_string(win.length()) + " days");
  }

  const std::size_t N = panel.n_assets();
  const std::size_t W = win.length();

  // Close-to-close log returns for each day of the window; the return at the
  // first window day reaches one day further back, which is still admissible
  // for both window modes.
  std::vector<double> rets(N * W, missing_value());
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t s = 0; s < W; ++s) {
      const std::size_t t = win.first + s;
      if (t == 0) continue;
      if (!panel.has_bar(t, i) || !panel.has_bar(t - 1, i)) continue;
      rets[i * W + s] = std::log(panel.close(t, i) / panel.close(t - 1, i));
    }
  }

  PeerGraph g = PeerGraph::empty(anchor, N);

  std::vector<double> abs_corr(N);
  for (std::size_t i = 0; i < N; ++i) {
    for (std::size_t j = 0; j < N; ++j) abs_corr[j] = 0.0;
    const double* ri = rets.data() + i * W;
    for (std::size_t j = 0; j < N; ++j) {
      if (j == i) continue;
      const double* rj = rets.data() + j * W;
      double sx = 0, sy = 0, sxx = 0, syy = 0, sxy = 0;
      std::size_t n = 0;
      for (std::size_t s = 0; s < W; ++s) {
        const double x = ri[s];
        const double y = rj[s];
        if (is_missing(x) || is_missing(y)) continue;
        sx += x;
        sy += y;
        sxx += x * x;
        syy += y * y;
        sxy += x * y;
        ++n;
      }
      if (n < kMinPairObs) continue;
      const double nn = static_cast<double>(n);
      const double cov = sxy - sx * sy / nn;
      const double vx = sxx - sx * sx / nn;
      const double vy = syy - sy * sy / nn;
      if (vx <= 0.0 || vy <= 0.0) continue;
      abs_corr[j] = std::fabs(cov / std::sqrt(vx * vy));
    }

    // Top-k by |corr|, ties broken by ascending asset index.
    std::vector<std::uint32_t> cand;
    cand.reserve(N);
    for (std::size_t j = 0; j < N; ++j) {
      if (j != i && abs_corr[j] > 0.0) cand.push_back(static_cast<std::uint32_t>(j));
    }
    const std::size_t keep = std::min<std::size_t>(cand.size(),
                                                   static_cast<std::size_t>(k));
    std::partial_sort(cand.begin(), cand.begin() + static_cast<std::ptrdiff_t>(keep),
                      cand.end(), [&](std::uint32_t a, std::uint32_t b) {
                        if (abs_corr[a] != abs_corr[b])
                          return abs_corr[a] > abs_corr[b];
                        return a < b;
                      });
    cand.resize(keep);
    std::sort(cand.begin(), cand.end());
    double total = 0.0;
    for (std::uint32_t j : cand) total += abs_corr[j];
    if (total <= 0.0) continue;
    auto& row = g.rows[i];
    row.reserve(keep);
    for (std::uint32_t j : cand) {
      row.emplace_back(j, abs_corr[j] / total);
    }
  }
  return g;
}

std::map<int, std::size_t> month_anchors(
    const std::vector<std::string>& calendar) {
  std::map<int, std::size_t> anchors;
  for (std::size_t t = 0; t < calendar.size(); ++t) {
    const int key = month_key(calendar[t]);
    anchors.emplace(key, t);  // keeps the first trading day only
  }
  return anchors;
}

FeatureMatrix neighbor_features(const FeatureMatrix& base,
                                const std::map<int, PeerGraph>& graph_by_month,
                                const std::vector<std::string>& feature_names,
                                const std::string& prefix) {
  const std::size_t T = base.n_dates();
  const std::size_t N = base.n_assets();

  // Month lookup per date, validated up front.
  std::vector<const PeerGraph*> graph_of_date(T, nullptr);
  for (std::size_t t = 0; t < T; ++t) {
    const int key = month_key(base.calendar()[t]);
    const auto it = graph_by_month.find(key);
    if (it == graph_by_month.end()) {
      fail("MissingGraph",
           "no peer graph for month of '" + base.calendar()[t] + "'");
    }
    graph_of_date[t] = &it->second;
  }

  FeatureMatrix out(base.calendar(), base.assets());
  for (const auto& name : feature_names) {
    const std::ptrdiff_t f = base.feature_index(name);
    if (f < 0) {
      fail("UnknownSourceField", "neighbor source '" + name + "' not built");
    }
    const auto col = base.column(static_cast<std::size_t>(f));
    auto nbr = std::make_shared<std::vector<double>>(T * N, missing_value());
    for (std::size_t t = 0; t < T; ++t) {
      const PeerGraph& g = *graph_of_date[t];
      for (std::size_t i = 0; i < N; ++i) {
        const auto& row = g.rows[i];
        if (row.empty()) continue;
        double acc = 0.0;
        double wsum = 0.0;
        for (const auto& [j, w] : row) {
          const double v = col[t * N + j];
          if (is_missing(v)) continue;
          acc += w * v;
          wsum += w;
        }
        if (wsum > 0.0) (*nbr)[t * N + i] = acc / wsum;
      }
    }
    out.add_column(prefix + name, std::move(nbr));
  }
  return out;
}

void dump_graphs_csv(const std::map<int, PeerGraph>& graphs,
                     const std::vector<std::string>& assets,
                     const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) fail("IoError", "cannot write '" + path + "'");
  out << "anchor,src,dst,weight\n";
  for (const auto& [key, g] : graphs) {
    for (std::size_t i = 0; i < g.rows.size(); ++i) {
      for (const auto& [j, w] : g.rows[i]) {
        out << g.anchor << ',' << assets[i] << ',' << assets[j] << ','
            << fmt_g6(w) << "\n";
      }
    }
  }
}

}  // namespace leakbench
