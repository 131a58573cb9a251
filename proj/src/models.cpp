#include "leakbench/models.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>
#include <sstream>

#include "leakbench/errors.hpp"
#include "leakbench/rng.hpp"
#include "leakbench/text.hpp"

namespace leakbench {

std::string to_string(ModelFamily m) {
  switch (m) {
    case ModelFamily::kMomentum: return "MOMENTUM";
    case ModelFamily::kRidge: return "RIDGE";
    case ModelFamily::kGbt: return "GBT";
    case ModelFamily::kGraphRidge: return "GRAPH_RIDGE";
  }
  return "?";
}

ModelFamily model_from_string(const std::string& s) {
  if (s == "MOMENTUM") return ModelFamily::kMomentum;
  if (s == "RIDGE") return ModelFamily::kRidge;
  if (s == "GBT") return ModelFamily::kGbt;
  if (s == "GRAPH_RIDGE") return ModelFamily::kGraphRidge;
  fail("BadModel", "unknown model family '" + s + "'");
}

std::string ModelSpec::config_digest() const {
  std::ostringstream os;
  os << to_string(family) << "|alpha=" << fmt_double(ridge_alpha)
     << "|gbt=" << gbt.n_estimators << ',' << gbt.num_leaves << ','
     << gbt.max_depth << ',' << fmt_double(gbt.learning_rate) << ','
     << fmt_double(gbt.subsample) << ',' << fmt_double(gbt.colsample_bytree)
     << ',' << fmt_double(gbt.reg_alpha) << ',' << fmt_double(gbt.reg_lambda)
     << ',' << gbt.min_samples_leaf;
  return os.str();
}

double RidgeFit::predict(const double* row, std::size_t n_features) const {
  double s = intercept;
  for (std::size_t f = 0; f < n_features; ++f) s += weights[f] * row[f];
  return s;
}

namespace {

// Cholesky solve of the (symmetric positive definite) system g * beta = b.
std::vector<double> cholesky_solve(std::vector<double> g, std::vector<double> b,
                                   std::size_t f) {
  for (std::size_t j = 0; j < f; ++j) {
    double d = g[j * f + j];
    for (std::size_t k = 0; k < j; ++k) d -= g[j * f + k] * g[j * f + k];
    if (d <= 0.0) fail("SingularMatrix", "Gram matrix not positive definite");
    const double lj = std::sqrt(d);
    g[j * f + j] = lj;
    for (std::size_t i = j + 1; i < f; ++i) {
      double v = g[i * f + j];
      for (std::size_t k = 0; k < j; ++k) v -= g[i * f + k] * g[j * f + k];
      g[i * f + j] = v / lj;
    }
  }
  // Forward then backward substitution.
  for (std::size_t i = 0; i < f; ++i) {
    double v = b[i];
    for (std::size_t k = 0; k < i; ++k) v -= g[i * f + k] * b[k];
    b[i] = v / g[i * f + i];
  }
  for (std::size_t ii = f; ii > 0; --ii) {
    const std::size_t i = ii - 1;
    double v = b[i];
    for (std::size_t k = i + 1; k < f; ++k) v -= g[k * f + i] * b[k];
    b[i] = v / g[i * f + i];
  }
  return b;
}

}  // namespace

RidgeFit fit_ridge(const std::vector<double>& x, std::size_t n, std::size_t f,
                   const std::vector<double>& y, double alpha) {
  if (n == 0) fail("NoTrainingRows", "ridge fit received no rows");
  if (!(alpha > 0.0)) fail("InvalidConfig", "ridge alpha must be positive");

  double ybar = 0.0;
  for (std::size_t r = 0; r < n; ++r) ybar += y[r];
  ybar /= static_cast<double>(n);

  std::vector<double> gram(f * f, 0.0);
  std::vector<double> rhs(f, 0.0);
  for (std::size_t r = 0; r < n; ++r) {
    const double* row = x.data() + r * f;
    const double yc = y[r] - ybar;
    for (std::size_t a = 0; a < f; ++a) {
      rhs[a] += row[a] * yc;
      for (std::size_t b = a; b < f; ++b) gram[a * f + b] += row[a] * row[b];
    }
  }
  for (std::size_t a = 0; a < f; ++a) {
    gram[a * f + a] += alpha;
    for (std::size_t b = 0; b < a; ++b) gram[a * f + b] = gram[b * f + a];
  }

  RidgeFit fit;
  fit.intercept = ybar;
  fit.weights = cholesky_solve(gram, rhs, f);

  double resid = 0.0;
  for (std::size_t a = 0; a < f; ++a) {
    double v = 0.0;
    for (std::size_t b = 0; b < f; ++b) v += gram[a * f + b] * fit.weights[b];
    resid = std::max(resid, std::fabs(v - rhs[a]));
  }
  fit.normal_eq_residual = resid;
  return fit;
}

double GbtTree::predict(const double* row) const {
  int node = 0;
  while (nodes[static_cast<std::size_t>(node)].feature >= 0) {
    const GbtNode& nd = nodes[static_cast<std::size_t>(node)];
    node = row[nd.feature] <= nd.threshold ? nd.left : nd.right;
  }
  return nodes[static_cast<std::size_t>(node)].value;
}

double GbtModel::predict(const double* row) const {
  double s = base;
  for (const auto& t : trees) s += learning_rate * t.predict(row);
  return s;
}

namespace {

inline double soft_threshold(double g, double alpha) {
  if (g > alpha) return g - alpha;
  if (g < -alpha) return g + alpha;
  return 0.0;
}

inline double leaf_score(double g, double h, double alpha, double lambda) {
  const double t = soft_threshold(g, alpha);
  return t * t / (h + lambda);
}

inline double leaf_value(double g, double h, double alpha, double lambda) {
  return -soft_threshold(g, alpha) / (h + lambda);
}

struct LeafState {
  int node_id = 0;
  std::size_t begin = 0;  // shared range into every per-feature order
  std::size_t end = 0;
  int depth = 0;
  double grad_sum = 0.0;
  double hess_sum = 0.0;
  // Best candidate split.
  double gain = 0.0;
  int split_pos = -1;  // position within the selected-feature list
  double threshold = 0.0;
  std::size_t n_left = 0;
  double grad_left = 0.0;
  double hess_left = 0.0;
};

constexpr std::uint64_t kRowSalt = 0x1001;
constexpr std::uint64_t kColSalt = 0x1002;

}  // namespace

GbtModel fit_gbt(const std::vector<double>& x, std::size_t n, std::size_t f,
                 const std::vector<double>& y, const GbtParams& params,
                 std::uint64_t seed) {
  if (n == 0) fail("NoTrainingRows", "gbt fit received no rows");
  const CounterRng rng(seed);

  GbtModel model;
  model.learning_rate = params.learning_rate;
  model.base = std::accumulate(y.begin(), y.end(), 0.0) / static_cast<double>(n);
  if (params.n_estimators <= 0) return model;

  // Global presort per feature, reused by every round.
  std::vector<std::vector<std::uint32_t>> global_order(f);
  {
    std::vector<std::uint32_t> base_idx(n);
    std::iota(base_idx.begin(), base_idx.end(), 0u);
    for (std::size_t c = 0; c < f; ++c) {
      global_order[c] = base_idx;
      std::stable_sort(global_order[c].begin(), global_order[c].end(),
                       [&](std::uint32_t a, std::uint32_t b) {
                         return x[a * f + c] < x[b * f + c];
                       });
    }
  }

  std::vector<double> pred(n, model.base);
  std::vector<double> grad(n);
  std::vector<char> in_sample(n);
  std::vector<std::uint32_t> scratch_left, scratch_right;
  scratch_left.reserve(n);
  scratch_right.reserve(n);

  const std::size_t n_selected = std::max<std::size_t>(
      1, static_cast<std::size_t>(
             std::ceil(params.colsample_bytree * static_cast<double>(f))));

  for (int round = 0; round < params.n_estimators; ++round) {
    const std::uint64_t r = static_cast<std::uint64_t>(round);

    for (std::size_t i = 0; i < n; ++i) grad[i] = pred[i] - y[i];

    // Bernoulli row subsample keyed by (round, row).
    std::size_t n_sub = 0;
    for (std::size_t i = 0; i < n; ++i) {
      in_sample[i] =
          params.subsample >= 1.0 || rng.uniform(r, i, kRowSalt) < params.subsample;
      if (in_sample[i]) ++n_sub;
    }
    if (n_sub == 0) {
      model.trees.push_back(GbtTree{{GbtNode{}}});
      continue;
    }

    // Feature subsample keyed by round only.
    std::vector<std::uint32_t> selected(f);
    std::iota(selected.begin(), selected.end(), 0u);
    if (n_selected < f) {
      for (std::size_t k = 0; k < n_selected; ++k) {
        const std::size_t j =
            k + static_cast<std::size_t>(rng.uniform(r, k, kColSalt) *
                                         static_cast<double>(f - k));
        std::swap(selected[k], selected[std::min(j, f - 1)]);
      }
      selected.resize(n_selected);
      std::sort(selected.begin(), selected.end());
    }

    // Per-feature sorted orders restricted to the subsample.
    std::vector<std::vector<std::uint32_t>> order(selected.size());
    for (std::size_t c = 0; c < selected.size(); ++c) {
      order[c].reserve(n_sub);
      for (std::uint32_t row : global_order[selected[c]]) {
        if (in_sample[row]) order[c].push_back(row);
      }
    }

    GbtTree tree;
    tree.nodes.push_back(GbtNode{});
    std::vector<LeafState> leaves;

    auto find_best_split = [&](LeafState& leaf) {
      leaf.gain = 0.0;
      leaf.split_pos = -1;
      const std::size_t count = leaf.end - leaf.begin;
      if (count < 2 * static_cast<std::size_t>(params.min_samples_leaf)) return;
      if (leaf.depth >= params.max_depth) return;
      const double parent =
          leaf_score(leaf.grad_sum, leaf.hess_sum, params.reg_alpha,
                     params.reg_lambda);
      for (std::size_t c = 0; c < selected.size(); ++c) {
        const std::uint32_t feat = selected[c];
        const auto& ord = order[c];
        double gl = 0.0, hl = 0.0;
        for (std::size_t p = leaf.begin; p + 1 < leaf.end; ++p) {
          const std::uint32_t row = ord[p];
          gl += grad[row];
          hl += 1.0;
          const std::size_t nl = p - leaf.begin + 1;
          if (nl < static_cast<std::size_t>(params.min_samples_leaf)) continue;
          if (count - nl < static_cast<std::size_t>(params.min_samples_leaf))
            break;
          const double xv = x[row * f + feat];
          const double xnext = x[ord[p + 1] * f + feat];
          if (!(xnext > xv)) continue;  // no boundary between equal values
          const double gain =
              leaf_score(gl, hl, params.reg_alpha, params.reg_lambda) +
              leaf_score(leaf.grad_sum - gl, leaf.hess_sum - hl,
                         params.reg_alpha, params.reg_lambda) -
              parent;
          if (gain > leaf.gain + 1e-12) {
            leaf.gain = gain;
            leaf.split_pos = static_cast<int>(c);
            leaf.threshold = xv;  // left = rows with value <= left-block max
            leaf.n_left = nl;
            leaf.grad_left = gl;
            leaf.hess_left = hl;
          }
        }
      }
    };

    LeafState root;
    root.node_id = 0;
    root.begin = 0;
    root.end = n_sub;
    root.depth = 0;
    for (std::size_t p = 0; p < n_sub; ++p) root.grad_sum += grad[order[0][p]];
    root.hess_sum = static_cast<double>(n_sub);
    find_best_split(root);
    leaves.push_back(root);

    auto cmp = [&](std::size_t a, std::size_t b) {
      if (leaves[a].gain != leaves[b].gain) return leaves[a].gain < leaves[b].gain;
      return leaves[a].node_id > leaves[b].node_id;
    };
    std::priority_queue<std::size_t, std::vector<std::size_t>, decltype(cmp)>
        heap(cmp);
    heap.push(0);
    std::size_t n_leaves = 1;

    while (n_leaves < static_cast<std::size_t>(params.num_leaves) &&
           !heap.empty()) {
      const std::size_t li = heap.top();
      heap.pop();
      LeafState leaf = leaves[li];
      if (leaf.split_pos < 0 || leaf.gain <= 0.0) continue;

      const std::uint32_t feat = selected[static_cast<std::size_t>(leaf.split_pos)];
      const double thr = leaf.threshold;

      // Stable partition of every per-feature order over this leaf's range.
      for (std::size_t c = 0; c < selected.size(); ++c) {
        auto& ord = order[c];
        scratch_left.clear();
        scratch_right.clear();
        for (std::size_t p = leaf.begin; p < leaf.end; ++p) {
          const std::uint32_t row = ord[p];
          if (x[row * f + feat] <= thr) {
            scratch_left.push_back(row);
          } else {
            scratch_right.push_back(row);
          }
        }
        std::copy(scratch_left.begin(), scratch_left.end(),
                  ord.begin() + static_cast<std::ptrdiff_t>(leaf.begin));
        std::copy(scratch_right.begin(), scratch_right.end(),
                  ord.begin() + static_cast<std::ptrdiff_t>(leaf.begin) +
                      static_cast<std::ptrdiff_t>(scratch_left.size()));
      }

      const int left_id = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(GbtNode{});
      const int right_id = static_cast<int>(tree.nodes.size());
      tree.nodes.push_back(GbtNode{});
      auto& parent_node = tree.nodes[static_cast<std::size_t>(leaf.node_id)];
      parent_node.feature = static_cast<int>(feat);
      parent_node.threshold = thr;
      parent_node.left = left_id;
      parent_node.right = right_id;

      LeafState left;
      left.node_id = left_id;
      left.begin = leaf.begin;
      left.end = leaf.begin + leaf.n_left;
      left.depth = leaf.depth + 1;
      left.grad_sum = leaf.grad_left;
      left.hess_sum = leaf.hess_left;

      LeafState right;
      right.node_id = right_id;
      right.begin = left.end;
      right.end = leaf.end;
      right.depth = leaf.depth + 1;
      right.grad_sum = leaf.grad_sum - leaf.grad_left;
      right.hess_sum = leaf.hess_sum - leaf.hess_left;

      find_best_split(left);
      find_best_split(right);
      leaves[li] = left;
      heap.push(li);
      leaves.push_back(right);
      heap.push(leaves.size() - 1);
      ++n_leaves;
    }

    // Finalize leaf values and update predictions: subsampled rows via their
    // ranges, the rest by traversal.
    for (const LeafState& leaf : leaves) {
      if (tree.nodes[static_cast<std::size_t>(leaf.node_id)].feature >= 0)
        continue;
      const double w = leaf_value(leaf.grad_sum, leaf.hess_sum,
                                  params.reg_alpha, params.reg_lambda);
      tree.nodes[static_cast<std::size_t>(leaf.node_id)].value = w;
      for (std::size_t p = leaf.begin; p < leaf.end; ++p) {
        pred[order[0][p]] += params.learning_rate * w;
      }
    }
    for (std::size_t i = 0; i < n; ++i) {
      if (!in_sample[i]) {
        pred[i] += params.learning_rate * tree.predict(x.data() + i * f);
      }
    }
    model.trees.push_back(std::move(tree));
  }
  return model;
}

std::vector<double> score_model(const ModelSpec& spec, const ModelInput& input) {
  std::vector<double> scores(input.n_test, missing_value());
  const std::size_t F = input.n_features;

  if (spec.family == ModelFamily::kMomentum) {
    std::ptrdiff_t idx = -1;
    for (std::size_t c = 0; c < input.feature_names.size(); ++c) {
      if (input.feature_names[c] == "ret_20") idx = static_cast<std::ptrdiff_t>(c);
    }
    if (idx < 0) {
      fail("FeatureMissingFromSchema", "momentum needs a ret_20 feature");
    }
    for (std::size_t r = 0; r < input.n_test; ++r) {
      scores[r] = input.x_test[r * F + static_cast<std::size_t>(idx)];
    }
    return scores;
  }

  if (input.n_train == 0) {
    fail("NoTrainingRows", to_string(spec.family) + " has no training rows");
  }

  if (spec.family == ModelFamily::kRidge ||
      spec.family == ModelFamily::kGraphRidge) {
    const RidgeFit fit = fit_ridge(input.x_train, input.n_train, F,
                                   input.y_train, spec.ridge_alpha);
    for (std::size_t r = 0; r < input.n_test; ++r) {
      scores[r] = fit.predict(input.x_test.data() + r * F, F);
    }
    return scores;
  }

  const GbtModel model =
      fit_gbt(input.x_train, input.n_train, F, input.y_train, spec.gbt, spec.seed);
  for (std::size_t r = 0; r < input.n_test; ++r) {
    scores[r] = model.predict(input.x_test.data() + r * F);
  }
  return scores;
}

}  // namespace leakbench
