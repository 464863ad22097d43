/*
 * Copyright 2026 The surveyshap Authors.
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     https://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License.
 */

#include "surveyshap/gbdt.h"

#include <algorithm>
#include <array>
#include <bit>
#include <cmath>
#include <cstring>
#include <fstream>
#include <limits>
#include <map>
#include <numeric>
#include <unordered_map>

namespace surveyshap {

void Hyperparams::validate() const {
  auto fail = [](const std::string& what) {
    throw TrainingError("invalid hyperparameters: " + what);
  };
  if (num_trees < 0) fail("num_trees must be non-negative");
  if (!(learning_rate > 0) || !std::isfinite(learning_rate)) {
    fail("learning_rate must be positive");
  }
  if (max_leaves < 2) fail("max_leaves must be at least 2");
  if (min_samples_leaf < 1) fail("min_samples_leaf must be positive");
  if (!(l2_lambda > 0) || !std::isfinite(l2_lambda)) {
    fail("l2_lambda must be positive");
  }
  if (max_bins < 2 || max_bins > 256) fail("max_bins must lie in [2, 256]");
}

nlohmann::json Hyperparams::to_json() const {
  return {{"num_trees", num_trees},         {"learning_rate", learning_rate},
          {"max_leaves", max_leaves},       {"min_samples_leaf", min_samples_leaf},
          {"l2_lambda", l2_lambda},         {"max_bins", max_bins}};
}

Hyperparams Hyperparams::from_json(const nlohmann::json& doc) {
  Hyperparams hp;
  try {
    hp.num_trees = doc.value("num_trees", hp.num_trees);
    hp.learning_rate = doc.value("learning_rate", hp.learning_rate);
    hp.max_leaves = doc.value("max_leaves", hp.max_leaves);
    hp.min_samples_leaf = doc.value("min_samples_leaf", hp.min_samples_leaf);
    hp.l2_lambda = doc.value("l2_lambda", hp.l2_lambda);
    hp.max_bins = doc.value("max_bins", hp.max_bins);
  } catch (const nlohmann::json::exception& e) {
    throw TrainingError(std::string("malformed hyperparameters: ") + e.what());
  }
  hp.validate();
  return hp;
}

std::vector<Hyperparams> default_grid() {
  std::vector<Hyperparams> grid;
  for (const double lr : {0.05, 0.1}) {
    for (const int leaves : {15, 31, 63}) {
      for (const int trees : {100, 200}) {
        for (const int min_leaf : {20, 50}) {
          Hyperparams hp;
          hp.learning_rate = lr;
          hp.max_leaves = leaves;
          hp.num_trees = trees;
          hp.min_samples_leaf = min_leaf;
          grid.push_back(hp);
        }
      }
    }
  }
  return grid;
}

bool TreeNode::goes_left(double x) const {
  if (is_categorical()) {
    return std::binary_search(left_categories.begin(), left_categories.end(),
                              static_cast<int>(x));
  }
  return x <= threshold;
}

double Tree::predict(std::span<const double> x) const {
  std::size_t i = 0;
  while (!nodes[i].is_leaf()) {
    const auto& n = nodes[i];
    i = static_cast<std::size_t>(n.goes_left(x[static_cast<std::size_t>(n.feature)])
                                     ? n.left
                                     : n.right);
  }
  return nodes[i].value;
}

int Tree::num_leaves() const {
  return static_cast<int>(std::count_if(
      nodes.begin(), nodes.end(), [](const TreeNode& n) { return n.is_leaf(); }));
}

int Tree::max_depth() const {
  std::vector<int> depth(nodes.size(), 0);
  int best = 0;
  for (std::size_t i = 0; i < nodes.size(); ++i) {
    if (nodes[i].is_leaf()) continue;
    for (const int c : {nodes[i].left, nodes[i].right}) {
      depth[static_cast<std::size_t>(c)] = depth[i] + 1;
      best = std::max(best, depth[i] + 1);
    }
  }
  return best;
}

TreeEnsemble::TreeEnsemble(FeatureSchema schema, double base_score,
                           std::vector<Tree> trees, Hyperparams hyperparams)
    : schema_(std::move(schema)),
      base_score_(base_score),
      trees_(std::move(trees)),
      hyperparams_(hyperparams) {
  if (!std::isfinite(base_score_)) {
    throw TrainingError("ensemble base score is not finite");
  }
  for (std::size_t t = 0; t < trees_.size(); ++t) {
    const auto& nodes = trees_[t].nodes;
    const std::string where = "tree " + std::to_string(t);
    if (nodes.empty()) throw TrainingError(where + " has no nodes");
    for (std::size_t i = 0; i < nodes.size(); ++i) {
      const auto& n = nodes[i];
      if (!(n.cover > 0) || !std::isfinite(n.cover)) {
        throw TrainingError(where + " node " + std::to_string(i) +
                            " has non-positive cover");
      }
      if (n.is_leaf()) {
        if (!std::isfinite(n.value)) {
          throw TrainingError(where + " leaf " + std::to_string(i) +
                              " has a non-finite value");
        }
        continue;
      }
      if (static_cast<std::size_t>(n.feature) >= schema_.size()) {
        throw TrainingError(where + " splits on unknown feature " +
                            std::to_string(n.feature));
      }
      const auto in_range = [&](int c) {
        return c > static_cast<int>(i) && static_cast<std::size_t>(c) < nodes.size();
      };
      if (!in_range(n.left) || !in_range(n.right) || n.left == n.right) {
        throw TrainingError(where + " node " + std::to_string(i) +
                            " has invalid children");
      }
      const double sum = nodes[static_cast<std::size_t>(n.left)].cover +
                         nodes[static_cast<std::size_t>(n.right)].cover;
      if (std::abs(sum - n.cover) > 1e-9 * std::max(1.0, std::abs(n.cover))) {
        throw TrainingError(where + " node " + std::to_string(i) +
                            " violates cover conservation");
      }
    }
  }
}

double TreeEnsemble::margin(std::span<const double> x) const {
  double m = base_score_;
  for (const auto& t : trees_) m += t.predict(x);
  return m;
}

double split_gain(double grad_left, double hess_left, double grad_right,
                  double hess_right, double lambda) {
  const double g = grad_left + grad_right;
  const double h = hess_left + hess_right;
  return 0.5 * (grad_left * grad_left / (hess_left + lambda) +
                grad_right * grad_right / (hess_right + lambda) -
                g * g / (h + lambda));
}

double leaf_output(double grad, double hess, double lambda,
                   double learning_rate) {
  return -learning_rate * grad / (hess + lambda);
}

namespace {

constexpr double kMinGain = 1e-12;

double softplus(double x) {
  return x > 0 ? x + std::log1p(std::exp(-x)) : std::log1p(std::exp(x));
}

double point_log_loss(double margin, bool label) {
  return label ? softplus(-margin) : softplus(margin);
}

// Training rows after merging duplicates, stored column-major.
struct TrainingRows {
  std::size_t n = 0;
  std::size_t num_features = 0;
  std::vector<double> values;  // values[f * n + i]
  std::vector<double> weight;
  std::vector<std::uint8_t> label;

  double value(std::size_t f, std::size_t i) const { return values[f * n + i]; }
};

struct RowKeyHash {
  std::size_t operator()(const std::vector<double>& key) const {
    std::uint64_t h = 0x84222325cbf29ce4ULL;
    for (const double v : key) {
      h = mix64(h ^ std::bit_cast<std::uint64_t>(v));
    }
    return static_cast<std::size_t>(h);
  }
};

TrainingRows merge_rows(const Dataset& ds, Experiment e) {
  const std::size_t m = ds.schema().size();
  std::unordered_map<std::vector<double>, std::size_t, RowKeyHash> index;
  index.reserve(ds.size());
  std::vector<std::size_t> first;  // dataset index of each unique row
  std::vector<double> weight;
  for (std::size_t i = 0; i < ds.size(); ++i) {
    const auto& s = ds[i];
    std::vector<double> key(s.features);
    key.push_back(s.label(e) ? 1.0 : 0.0);
    auto [it, inserted] = index.try_emplace(std::move(key), first.size());
    if (inserted) {
      first.push_back(i);
      weight.push_back(s.weight);
    } else {
      weight[it->second] += s.weight;
    }
  }
  TrainingRows rows;
  rows.n = first.size();
  rows.num_features = m;
  rows.values.resize(m * rows.n);
  rows.label.resize(rows.n);
  rows.weight = std::move(weight);
  for (std::size_t r = 0; r < rows.n; ++r) {
    const auto& s = ds[first[r]];
    for (std::size_t f = 0; f < m; ++f) rows.values[f * rows.n + r] = s.features[f];
    rows.label[r] = s.label(e) ? 1 : 0;
  }
  return rows;
}

struct FeatureBins {
  bool categorical = false;
  // Numeric: bin(x) = number of cuts strictly below x.
  std::vector<double> cuts;
  int num_bins = 1;
};

FeatureBins make_bins(const TrainingRows& rows, std::size_t f,
                      const FeatureSpec& spec, int max_bins) {
  FeatureBins bins;
  if (spec.kind == FeatureKind::kCategorical) {
    bins.categorical = true;
    bins.num_bins = spec.categories;
    return bins;
  }
  // Weighted counts of each distinct value.
  std::map<double, double> counts;
  double total = 0;
  for (std::size_t i = 0; i < rows.n; ++i) {
    counts[rows.value(f, i)] += rows.weight[i];
    total += rows.weight[i];
  }
  std::vector<std::pair<double, double>> distinct(counts.begin(), counts.end());
  auto mid = [&](std::size_t i) {
    return distinct[i].first + (distinct[i + 1].first - distinct[i].first) / 2;
  };
  if (distinct.size() <= static_cast<std::size_t>(max_bins)) {
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) bins.cuts.push_back(mid(i));
  } else {
    // Greedy weighted quantiles: cut whenever the cumulative weight crosses the
    // next multiple of total / max_bins.
    const double step = total / max_bins;
    double cumulative = 0;
    double next = step;
    for (std::size_t i = 0; i + 1 < distinct.size(); ++i) {
      cumulative += distinct[i].second;
      if (cumulative >= next) {
        bins.cuts.push_back(mid(i));
        if (bins.cuts.size() + 1 >= static_cast<std::size_t>(max_bins)) break;
        next = (std::floor(cumulative / step) + 1) * step;
      }
    }
  }
  bins.num_bins = static_cast<int>(bins.cuts.size()) + 1;
  return bins;
}

struct HistBin {
  double grad = 0;
  double hess = 0;
  double cover = 0;
};

struct SplitCandidate {
  double gain = -std::numeric_limits<double>::infinity();
  int feature = -1;
  int bin = -1;                      // numeric: left = bins <= bin
  std::vector<int> left_categories;  // categorical, sorted
  bool valid() const { return feature >= 0 && gain > kMinGain; }
};

struct LeafState {
  int node = 0;
  std::size_t begin = 0;
  std::size_t end = 0;
  std::vector<HistBin> hist;
  SplitCandidate best;
};

class TreeGrower {
 public:
  TreeGrower(const TrainingRows& rows, const FeatureSchema& schema,
             const Hyperparams& hp)
      : rows_(rows), hp_(hp) {
    const std::size_t m = rows.num_features;
    bins_.reserve(m);
    offsets_.reserve(m + 1);
    offsets_.push_back(0);
    for (std::size_t f = 0; f < m; ++f) {
      bins_.push_back(make_bins(rows, f, schema[f], hp.max_bins));
      offsets_.push_back(offsets_.back() +
                         static_cast<std::size_t>(bins_.back().num_bins));
    }
    codes_.resize(m * rows.n);
    parallel_for(m, [&](std::size_t fb, std::size_t fe) {
      for (std::size_t f = fb; f < fe; ++f) {
        const auto& b = bins_[f];
        for (std::size_t i = 0; i < rows.n; ++i) {
          const double v = rows.value(f, i);
          std::size_t code;
          if (b.categorical) {
            code = static_cast<std::size_t>(v);
          } else {
            code = static_cast<std::size_t>(
                std::lower_bound(b.cuts.begin(), b.cuts.end(), v) - b.cuts.begin());
          }
          codes_[f * rows.n + i] = static_cast<std::uint8_t>(code);
        }
      }
    });
  }

  // Grows one tree on the given gradients; returns it with leaf values set and
  // adds each leaf value into `margin` for its rows.
  Tree grow(const std::vector<double>& grad, const std::vector<double>& hess,
            std::vector<double>& margin) {
    grad_ = &grad;
    hess_ = &hess;
    order_.resize(rows_.n);
    std::iota(order_.begin(), order_.end(), 0u);

    Tree tree;
    tree.nodes.emplace_back();
    std::vector<LeafState> leaves;
    leaves.push_back({0, 0, rows_.n, {}, {}});
    build_histogram(leaves[0]);
    find_best_split(leaves[0]);

    while (static_cast<int>(leaves.size()) < hp_.max_leaves) {
      std::size_t pick = leaves.size();
      for (std::size_t l = 0; l < leaves.size(); ++l) {
        if (!leaves[l].best.valid()) continue;
        if (pick == leaves.size() || leaves[l].best.gain > leaves[pick].best.gain) {
          pick = l;
        }
      }
      if (pick == leaves.size()) break;
      split_leaf(tree, leaves, pick);
    }

    // Leaf outputs and covers from the rows themselves.
    for (const auto& leaf : leaves) {
      double g = 0, h = 0, c = 0;
      for (std::size_t p = leaf.begin; p < leaf.end; ++p) {
        const std::uint32_t i = order_[p];
        g += grad[i];
        h += hess[i];
        c += rows_.weight[i];
      }
      auto& node = tree.nodes[static_cast<std::size_t>(leaf.node)];
      node.value = leaf_output(g, h, hp_.l2_lambda, hp_.learning_rate);
      node.cover = c;
      for (std::size_t p = leaf.begin; p < leaf.end; ++p) {
        margin[order_[p]] += node.value;
      }
    }
    // Internal covers are the exact sum of their children.
    for (std::size_t i = tree.nodes.size(); i-- > 0;) {
      auto& n = tree.nodes[i];
      if (!n.is_leaf()) {
        n.cover = tree.nodes[static_cast<std::size_t>(n.left)].cover +
                  tree.nodes[static_cast<std::size_t>(n.right)].cover;
      }
    }
    return tree;
  }

 private:
  void build_histogram(LeafState& leaf) const {
    leaf.hist.assign(offsets_.back(), HistBin{});
    const auto& grad = *grad_;
    const auto& hess = *hess_;
    parallel_for(bins_.size(), [&](std::size_t fb, std::size_t fe) {
      for (std::size_t f = fb; f < fe; ++f) {
        HistBin* h = leaf.hist.data() + offsets_[f];
        const std::uint8_t* code = codes_.data() + f * rows_.n;
        for (std::size_t p = leaf.begin; p < leaf.end; ++p) {
          const std::uint32_t i = order_[p];
          HistBin& b = h[code[i]];
          b.grad += grad[i];
          b.hess += hess[i];
          b.cover += rows_.weight[i];
        }
      }
    });
  }

  void find_best_split(LeafState& leaf) const {
    const std::size_t m = bins_.size();
    std::vector<SplitCandidate> per_feature(m);
    parallel_for(m, [&](std::size_t fb, std::size_t fe) {
      for (std::size_t f = fb; f < fe; ++f) {
        per_feature[f] = bins_[f].categorical ? best_categorical(leaf, f)
                                              : best_numeric(leaf, f);
      }
    });
    leaf.best = SplitCandidate{};
    for (auto& c : per_feature) {
      if (c.feature >= 0 && c.gain > leaf.best.gain) leaf.best = std::move(c);
    }
  }

  SplitCandidate best_numeric(const LeafState& leaf, std::size_t f) const {
    SplitCandidate best;
    const HistBin* h = leaf.hist.data() + offsets_[f];
    const int nb = bins_[f].num_bins;
    HistBin total;
    for (int b = 0; b < nb; ++b) {
      total.grad += h[b].grad;
      total.hess += h[b].hess;
      total.cover += h[b].cover;
    }
    const double min_cover = hp_.min_samples_leaf;
    HistBin left;
    for (int b = 0; b + 1 < nb; ++b) {
      left.grad += h[b].grad;
      left.hess += h[b].hess;
      left.cover += h[b].cover;
      if (left.cover < min_cover) continue;
      const double right_cover = total.cover - left.cover;
      if (right_cover < min_cover) break;
      const double gain =
          split_gain(left.grad, left.hess, total.grad - left.grad,
                     total.hess - left.hess, hp_.l2_lambda);
      if (gain > best.gain) {
        best.gain = gain;
        best.feature = static_cast<int>(f);
        best.bin = b;
      }
    }
    return best;
  }

  SplitCandidate best_categorical(const LeafState& leaf, std::size_t f) const {
    SplitCandidate best;
    const HistBin* h = leaf.hist.data() + offsets_[f];
    const int nb = bins_[f].num_bins;
    std::vector<int> present;
    HistBin total;
    for (int b = 0; b < nb; ++b) {
      if (h[b].cover > 0) {
        present.push_back(b);
        total.grad += h[b].grad;
        total.hess += h[b].hess;
        total.cover += h[b].cover;
      }
    }
    if (present.size() < 2) return best;
    auto ratio = [h](int b) {
      return h[b].hess > 0 ? h[b].grad / h[b].hess : 0.0;
    };
    std::sort(present.begin(), present.end(), [&](int a, int b) {
      const double ra = ratio(a), rb = ratio(b);
      if (ra != rb) return ra < rb;
      return a < b;
    });
    const double min_cover = hp_.min_samples_leaf;
    HistBin left;
    std::size_t best_prefix = 0;
    for (std::size_t k = 0; k + 1 < present.size(); ++k) {
      const HistBin& cur = h[present[k]];
      left.grad += cur.grad;
      left.hess += cur.hess;
      left.cover += cur.cover;
      if (left.cover < min_cover) continue;
      if (total.cover - left.cover < min_cover) break;
      const double gain =
          split_gain(left.grad, left.hess, total.grad - left.grad,
                     total.hess - left.hess, hp_.l2_lambda);
      if (gain > best.gain) {
        best.gain = gain;
        best.feature = static_cast<int>(f);
        best_prefix = k + 1;
      }
    }
    if (best.feature >= 0) {
      best.left_categories.assign(present.begin(),
                                  present.begin() + static_cast<long>(best_prefix));
      std::sort(best.left_categories.begin(), best.left_categories.end());
    }
    return best;
  }

  void split_leaf(Tree& tree, std::vector<LeafState>& leaves, std::size_t pick) {
    LeafState parent = std::move(leaves[pick]);
    const SplitCandidate& split = parent.best;
    const auto f = static_cast<std::size_t>(split.feature);

    std::array<bool, 256> left_code{};
    if (bins_[f].categorical) {
      for (const int c : split.left_categories) left_code[static_cast<std::size_t>(c)] = true;
    } else {
      for (int b = 0; b <= split.bin; ++b) left_code[static_cast<std::size_t>(b)] = true;
    }

    // Stable partition of the parent's row range.
    const std::uint8_t* code = codes_.data() + f * rows_.n;
    scratch_.clear();
    std::size_t write = parent.begin;
    for (std::size_t p = parent.begin; p < parent.end; ++p) {
      const std::uint32_t i = order_[p];
      if (left_code[code[i]]) {
        order_[write++] = i;
      } else {
        scratch_.push_back(i);
      }
    }
    std::copy(scratch_.begin(), scratch_.end(), order_.begin() + static_cast<long>(write));
    const std::size_t mid = write;

    const int left_node = static_cast<int>(tree.nodes.size());
    const int right_node = left_node + 1;
    {
      auto& node = tree.nodes[static_cast<std::size_t>(parent.node)];
      node.feature = split.feature;
      if (bins_[f].categorical) {
        node.left_categories = split.left_categories;
      } else {
        node.threshold = bins_[f].cuts[static_cast<std::size_t>(split.bin)];
      }
      node.left = left_node;
      node.right = right_node;
    }
    tree.nodes.emplace_back();
    tree.nodes.emplace_back();

    LeafState left{left_node, parent.begin, mid, {}, {}};
    LeafState right{right_node, mid, parent.end, {}, {}};
    // Build the smaller child directly, derive the larger by subtraction.
    LeafState& small = (left.end - left.begin) <= (right.end - right.begin) ? left : right;
    LeafState& large = &small == &left ? right : left;
    build_histogram(small);
    large.hist = std::move(parent.hist);
    for (std::size_t b = 0; b < large.hist.size(); ++b) {
      large.hist[b].grad -= small.hist[b].grad;
      large.hist[b].hess -= small.hist[b].hess;
      large.hist[b].cover -= small.hist[b].cover;
    }
    find_best_split(left);
    find_best_split(right);
    leaves[pick] = std::move(left);
    leaves.push_back(std::move(right));
  }

  const TrainingRows& rows_;
  const Hyperparams& hp_;
  std::vector<FeatureBins> bins_;
  std::vector<std::size_t> offsets_;
  std::vector<std::uint8_t> codes_;  // codes_[f * n + i]
  std::vector<std::uint32_t> order_;
  std::vector<std::uint32_t> scratch_;
  const std::vector<double>* grad_ = nullptr;
  const std::vector<double>* hess_ = nullptr;
};

double mean_log_loss(const TrainingRows& rows, const std::vector<double>& margin) {
  double loss = 0, total = 0;
  for (std::size_t i = 0; i < rows.n; ++i) {
    loss += rows.weight[i] * point_log_loss(margin[i], rows.label[i] != 0);
    total += rows.weight[i];
  }
  return loss / total;
}

}  // namespace

TreeEnsemble train(const Dataset& ds, Experiment e, const Hyperparams& hp,
                   std::uint64_t /*seed*/, TrainingTrace* trace) {
  hp.validate();
  const TrainingRows rows = merge_rows(ds, e);
  double positive = 0, total = 0;
  for (std::size_t i = 0; i < rows.n; ++i) {
    total += rows.weight[i];
    if (rows.label[i]) positive += rows.weight[i];
  }
  if (positive <= 0 || positive >= total) {
    throw TrainingError("training data for experiment '" +
                        std::string(experiment_name(e)) +
                        "' contains a single class");
  }
  const double base_score = logit(positive / total);

  std::vector<double> margin(rows.n, base_score);
  std::vector<double> grad(rows.n), hess(rows.n);
  if (trace) {
    trace->log_loss.clear();
    trace->log_loss.push_back(mean_log_loss(rows, margin));
  }

  TreeGrower grower(rows, ds.schema(), hp);
  std::vector<Tree> trees;
  trees.reserve(static_cast<std::size_t>(hp.num_trees));
  for (int round = 0; round < hp.num_trees; ++round) {
    parallel_for(rows.n, [&](std::size_t b, std::size_t end) {
      for (std::size_t i = b; i < end; ++i) {
        const double p = sigmoid(margin[i]);
        const double w = rows.weight[i];
        grad[i] = w * (p - rows.label[i]);
        hess[i] = w * p * (1 - p);
      }
    });
    trees.push_back(grower.grow(grad, hess, margin));
    if (trace) trace->log_loss.push_back(mean_log_loss(rows, margin));
  }
  return TreeEnsemble(ds.schema(), base_score, std::move(trees), hp);
}

double predict_margin(const TreeEnsemble& model, std::span<const double> x) {
  const auto& schema = model.schema();
  if (x.size() != schema.size()) {
    throw PredictionError("expected " + std::to_string(schema.size()) +
                          " features, got " + std::to_string(x.size()));
  }
  for (std::size_t j = 0; j < schema.size(); ++j) {
    if (schema[j].kind != FeatureKind::kCategorical) continue;
    const double v = x[j];
    if (v != std::floor(v) || v < 0 || v >= schema[j].categories) {
      throw PredictionError("categorical feature '" + schema[j].name +
                            "' has out-of-range code " + format_double(v));
    }
  }
  return model.margin(x);
}

double probability_from_margin(double margin) {
  constexpr double kEps = 1e-15;
  return std::clamp(sigmoid(margin), kEps, 1.0 - kEps);
}

double predict_proba(const TreeEnsemble& model, std::span<const double> x) {
  return probability_from_margin(predict_margin(model, x));
}

double weighted_log_loss(const TreeEnsemble& model, const Dataset& ds,
                         Experiment e) {
  double loss = 0, total = 0;
  for (const auto& s : ds.samples()) {
    loss += s.weight * point_log_loss(model.margin(s.features), s.label(e));
    total += s.weight;
  }
  return loss / total;
}

Metrics metrics_from_confusion(std::size_t tp, std::size_t fp, std::size_t fn,
                               std::size_t tn) {
  Metrics m;
  m.true_positive = tp;
  m.false_positive = fp;
  m.false_negative = fn;
  m.true_negative = tn;
  const double n = static_cast<double>(tp + fp + fn + tn);
  m.accuracy = n > 0 ? static_cast<double>(tp + tn) / n : 0.0;
  m.class_balance = n > 0 ? static_cast<double>(tp + fn) / n : 0.0;
  const double precision = tp + fp > 0 ? static_cast<double>(tp) / (tp + fp) : 0.0;
  const double recall = tp + fn > 0 ? static_cast<double>(tp) / (tp + fn) : 0.0;
  m.f1 = precision + recall > 0
             ? 2 * precision * recall / (precision + recall)
             : 0.0;
  return m;
}

Metrics evaluate(const TreeEnsemble& model, const Dataset& ds, Experiment e,
                 double threshold) {
  std::size_t tp = 0, fp = 0, fn = 0, tn = 0;
  for (const auto& s : ds.samples()) {
    const bool predicted = predict_proba(model, s.features) > threshold;
    const bool actual = s.label(e);
    if (predicted && actual) ++tp;
    else if (predicted) ++fp;
    else if (actual) ++fn;
    else ++tn;
  }
  return metrics_from_confusion(tp, fp, fn, tn);
}

GridSearchResult grid_search(const Dataset& train_set, Experiment e,
                             const std::vector<Hyperparams>& grid,
                             const SplitSpec& spec) {
  if (grid.empty()) throw TrainingError("hyperparameter grid is empty");
  const auto folds = kfold(train_set, e, spec);
  GridSearchResult result;
  bool found = false;
  for (std::size_t g = 0; g < grid.size(); ++g) {
    CvRow row;
    row.hyperparams = grid[g];
    try {
      double sum = 0;
      for (std::size_t f = 0; f < folds.size(); ++f) {
        const auto model = train(folds[f].train, e, grid[g],
                                 derive_seed(spec.seed, f));
        const double f1 = evaluate(model, folds[f].valid, e).f1;
        row.fold_f1.push_back(f1);
        sum += f1;
      }
      row.mean_f1 = sum / static_cast<double>(folds.size());
    } catch (const Error& err) {
      row.error = err.what();
      row.fold_f1.clear();
      row.mean_f1 = 0.0;
    }
    if (row.ok() && (!found || row.mean_f1 > result.cv_table[result.best_index].mean_f1)) {
      result.best_index = g;
      found = true;
    }
    result.cv_table.push_back(std::move(row));
  }
  if (!found) {
    throw TrainingError("every grid point failed; first error: " +
                        result.cv_table.front().error);
  }
  result.best = grid[result.best_index];
  return result;
}

namespace {

nlohmann::json node_to_json(const Tree& tree, std::size_t i,
                            const FeatureSchema& schema) {
  const auto& n = tree.nodes[i];
  if (n.is_leaf()) return {{"value", n.value}, {"cover", n.cover}};
  nlohmann::json out = {
      {"feature_index", n.feature},
      {"feature", schema[static_cast<std::size_t>(n.feature)].name},
      {"cover", n.cover}};
  if (n.is_categorical()) {
    out["split"] = {{"categories", n.left_categories}};
  } else {
    out["split"] = {{"threshold", n.threshold}};
  }
  out["left"] = node_to_json(tree, static_cast<std::size_t>(n.left), schema);
  out["right"] = node_to_json(tree, static_cast<std::size_t>(n.right), schema);
  return out;
}

int node_from_json(const nlohmann::json& doc, Tree& tree) {
  const int index = static_cast<int>(tree.nodes.size());
  tree.nodes.emplace_back();
  TreeNode node;
  node.cover = doc.at("cover").get<double>();
  if (!doc.contains("feature_index")) {
    node.value = doc.at("value").get<double>();
    tree.nodes[static_cast<std::size_t>(index)] = node;
    return index;
  }
  node.feature = doc.at("feature_index").get<int>();
  const auto& split = doc.at("split");
  if (split.contains("categories")) {
    node.left_categories = split.at("categories").get<std::vector<int>>();
    std::sort(node.left_categories.begin(), node.left_categories.end());
    if (node.left_categories.empty()) {
      throw TrainingError("categorical split with no categories");
    }
  } else {
    node.threshold = split.at("threshold").get<double>();
  }
  node.left = node_from_json(doc.at("left"), tree);
  node.right = node_from_json(doc.at("right"), tree);
  tree.nodes[static_cast<std::size_t>(index)] = node;
  return index;
}

constexpr int kModelVersion = 1;

}  // namespace

nlohmann::json model_to_json(const TreeEnsemble& model) {
  nlohmann::json trees = nlohmann::json::array();
  for (const auto& t : model.trees()) trees.push_back(node_to_json(t, 0, model.schema()));
  return {{"format", "surveyshap-model"},
          {"version", kModelVersion},
          {"base_score", model.base_score()},
          {"hyperparams", model.hyperparams().to_json()},
          {"schema", model.schema().to_json()},
          {"trees", trees}};
}

TreeEnsemble model_from_json(const nlohmann::json& doc) {
  try {
    if (doc.value("format", std::string()) != "surveyshap-model") {
      throw TrainingError("not a surveyshap model document");
    }
    const int version = doc.at("version").get<int>();
    if (version != kModelVersion) {
      throw TrainingError("unsupported model version " + std::to_string(version));
    }
    std::vector<Tree> trees;
    for (const auto& t : doc.at("trees")) {
      Tree tree;
      node_from_json(t, tree);
      trees.push_back(std::move(tree));
    }
    return TreeEnsemble(FeatureSchema::from_json(doc.at("schema")),
                        doc.at("base_score").get<double>(), std::move(trees),
                        Hyperparams::from_json(doc.at("hyperparams")));
  } catch (const nlohmann::json::exception& e) {
    throw TrainingError(std::string("malformed model document: ") + e.what());
  }
}

void save_model(const TreeEnsemble& model, const std::string& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot write model file '" + path + "'");
  out << model_to_json(model).dump(1) << '\n';
}

TreeEnsemble load_model(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw Error("cannot open model file '" + path + "'");
  try {
    return model_from_json(nlohmann::json::parse(in));
  } catch (const nlohmann::json::parse_error& e) {
    throw TrainingError("cannot parse model file '" + path + "': " + e.what());
  }
}

}  // namespace surveyshap
