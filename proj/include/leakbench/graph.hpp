#pragma once

#include <cstdint>
#include <map>
#include <string>
#include <vector>

#include "leakbench/features.hpp"
#include "leakbench/panel.hpp"

namespace leakbench {

enum class GraphMode { kTrailing, kSymmetric };

std::string to_string(GraphMode m);

// Inclusive index range into the panel calendar; empty() when no dates fall
// inside the window.
struct DateRange {
  std::size_t first = 0;
  std::size_t last = 0;
  bool valid = false;

  std::size_t length() const { return valid ? last - first + 1 : 0; }
};

// Monthly peer graph: per-asset top-k absolute-correlation neighbours with
// row weights normalized to sum to one. Rows with no informative peer stay
// empty.
struct PeerGraph {
  std::string anchor;  // first trading day of the month
  std::size_t n_assets = 0;
  std::vector<std::vector<std::pair<std::uint32_t, double>>> rows;

  static PeerGraph empty(std::string anchor, std::size_t n_assets);

  void check_invariants() const;  // zero diagonal, row sums, non-negative
};

// Trailing: the last 252 trading days strictly before the anchor (fewer when
// history is short). Symmetric: anchor +/- 126 trading days, clipped at the
// ends of the calendar.
DateRange graph_window(const std::vector<std::string>& calendar,
                       const std::string& anchor, GraphMode mode);

// Pairwise-complete Pearson correlation of close-to-close log returns over
// the window, absolute value, zero diagonal, per-row top-k, row-normalize.
// Pairs with fewer than 30 overlapping observations score 0. Throws
// WindowTooShort when the window itself has fewer than 30 days.
PeerGraph build_graph(const OhlcvPanel& panel, const std::string& anchor,
                      GraphMode mode, int k);

// month_key -> index of the first trading day of that month.
std::map<int, std::size_t> month_anchors(const std::vector<std::string>& calendar);

// Neighbor aggregate per feature name: nbr(i,t) = sum_j w_ij * feat(j,t) with
// the weights renormalized over peers whose value is present; missing when
// every peer is missing or the row is empty. Throws MissingGraph when a
// date's month has no graph.
FeatureMatrix neighbor_features(const FeatureMatrix& base,
                                const std::map<int, PeerGraph>& graph_by_month,
                                const std::vector<std::string>& feature_names,
                                const std::string& prefix = "nbr_");

// Debug dump: `anchor,src,dst,weight` rows.
void dump_graphs_csv(const std::map<int, PeerGraph>& graphs,
                     const std::vector<std::string>& assets,
                     const std::string& path);

}  // namespace leakbench
