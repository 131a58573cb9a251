#pragma once

// Brute-force reference implementations used only by tests. Each one follows
// the pairwise / enumeration definition directly and stays independent of the
// library's computation path.

#include <cmath>
#include <cstddef>
#include <span>
#include <vector>

namespace oracles {

// Rank via pairwise counting: 1 + #(smaller) + #(equal other than self)/2.
inline std::vector<double> pairwise_ranks(std::span<const double> v) {
  const std::size_t n = v.size();
  std::vector<double> r(n);
  for (std::size_t i = 0; i < n; ++i) {
    double smaller = 0.0, equal = 0.0;
    for (std::size_t j = 0; j < n; ++j) {
      if (v[j] < v[i]) smaller += 1.0;
      if (v[j] == v[i] && j != i) equal += 1.0;
    }
    r[i] = 1.0 + smaller + equal / 2.0;
  }
  return r;
}

inline double pearson(std::span<const double> a, std::span<const double> b) {
  const std::size_t n = a.size();
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(n);
  mb /= static_cast<double>(n);
  double cab = 0.0, caa = 0.0, cbb = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    cab += (a[i] - ma) * (b[i] - mb);
    caa += (a[i] - ma) * (a[i] - ma);
    cbb += (b[i] - mb) * (b[i] - mb);
  }
  if (caa <= 0.0 || cbb <= 0.0) return std::nan("");
  return cab / std::sqrt(caa * cbb);
}

inline double spearman(std::span<const double> a, std::span<const double> b) {
  if (a.size() < 3) return std::nan("");
  const auto ra = pairwise_ranks(a);
  const auto rb = pairwise_ranks(b);
  return pearson(ra, rb);
}

// AUC by looping over every (positive, negative) pair; ties get half credit.
inline double auc(std::span<const double> scores, std::span<const double> labels) {
  double wins = 0.0;
  std::size_t n_pos = 0, n_neg = 0;
  for (std::size_t p = 0; p < scores.size(); ++p) {
    if (!(labels[p] > 0.0)) continue;
    ++n_pos;
    n_neg = 0;
    for (std::size_t q = 0; q < scores.size(); ++q) {
      if (labels[q] > 0.0) continue;
      ++n_neg;
      if (scores[p] > scores[q]) wins += 1.0;
      else if (scores[p] == scores[q]) wins += 0.5;
    }
  }
  if (n_pos == 0 || n_neg == 0) return std::nan("");
  return wins / (static_cast<double>(n_pos) * static_cast<double>(n_neg));
}

// Exact one-sided Wilcoxon signed-rank p by enumerating all 2^n sign vectors.
inline double wilcoxon_enumeration(std::span<const double> diffs) {
  std::vector<double> nz;
  for (double d : diffs) {
    if (d != 0.0) nz.push_back(d);
  }
  const std::size_t n = nz.size();
  if (n == 0) return std::nan("");
  std::vector<double> mag(n);
  for (std::size_t i = 0; i < n; ++i) mag[i] = std::fabs(nz[i]);
  const auto ranks = pairwise_ranks(mag);
  double observed = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    if (nz[i] > 0.0) observed += ranks[i];
  }
  std::size_t count = 0;
  const std::size_t total = std::size_t{1} << n;
  for (std::size_t bits = 0; bits < total; ++bits) {
    double w = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
      if (bits & (std::size_t{1} << i)) w += ranks[i];
    }
    if (w >= observed) ++count;
  }
  return static_cast<double>(count) / static_cast<double>(total);
}

// Simple xorshift for reproducible test inputs (independent of the library's
// counter RNG).
struct TestRng {
  std::uint64_t state;
  explicit TestRng(std::uint64_t seed) : state(seed ? seed : 1) {}
  std::uint64_t next() {
    state ^= state << 13;
    state ^= state >> 7;
    state ^= state << 17;
    return state;
  }
  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  // integer in [0, m)
  std::size_t below(std::size_t m) {
    return static_cast<std::size_t>(uniform() * static_cast<double>(m)) % m;
  }
};

}  // namespace oracles
