#include "ps/predictors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>

namespace ps {

double WeightVector::total() const {
  double s = 0.0;
  for (const auto& e : entries) s += e.second;
  return s;
}

double WeightVector::at(std::size_t index) const {
  auto it = std::lower_bound(entries.begin(), entries.end(), index,
                             [](const auto& e, std::size_t i) { return e.first < i; });
  return it != entries.end() && it->first == index ? it->second : 0.0;
}

Matrix covariate_matrix(const Dataset& data) {
  Matrix m(data.size(), data.covariate_dim());
  for (std::size_t i = 0; i < data.size(); ++i) std::ranges::copy(data.x(i), m.row(i).begin());
  return m;
}

Matrix outcome_matrix(const Dataset& data) {
  Matrix m(data.size(), data.outcome_dim());
  for (std::size_t i = 0; i < data.size(); ++i) std::ranges::copy(data.y(i), m.row(i).begin());
  return m;
}

Matrix outcome_column(const Dataset& data, std::size_t j) {
  Matrix m(data.size(), 1);
  for (std::size_t i = 0; i < data.size(); ++i) m(i, 0) = data.y(i)[j];
  return m;
}

// ---------------------------------------------------------------------------
// kNN

KnnModel KnnModel::fit(const Matrix& x, const Matrix& y, std::size_t k) {
  const std::size_t n = x.rows();
  if (k == 0 || k > n) throw std::invalid_argument("knn_fit: require 1 <= k <= number of rows");
  if (y.rows() != n) throw std::invalid_argument("knn_fit: covariate/outcome row mismatch");
  KnnModel m;
  m.k_ = k;
  m.raw_x_ = x;
  m.y_ = y;
  const std::size_t d = x.cols();
  m.mean_.assign(d, 0.0);
  m.scale_.assign(d, 1.0);
  for (std::size_t f = 0; f < d; ++f) {
    double s = 0.0;
    for (std::size_t i = 0; i < n; ++i) s += x(i, f);
    const double mu = s / static_cast<double>(n);
    double ss = 0.0;
    for (std::size_t i = 0; i < n; ++i) ss += (x(i, f) - mu) * (x(i, f) - mu);
    const double sd = std::sqrt(ss / static_cast<double>(n));
    m.mean_[f] = mu;
    m.scale_[f] = sd > 1e-12 ? sd : 1.0;
  }
  m.x_ = Matrix(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < d; ++f) m.x_(i, f) = (x(i, f) - m.mean_[f]) / m.scale_[f];
  }
  return m;
}

std::vector<std::size_t> KnnModel::neighbors(std::span<const double> x) const {
  const std::size_t n = x_.rows();
  const std::size_t d = x_.cols();
  if (x.size() != d) throw std::invalid_argument("knn: query dimension mismatch");
  std::vector<double> z(d);
  for (std::size_t f = 0; f < d; ++f) z[f] = (x[f] - mean_[f]) / scale_[f];
  std::vector<std::pair<double, std::size_t>> dist(n);
  for (std::size_t i = 0; i < n; ++i) {
    double s = 0.0;
    auto row = x_.row(i);
    for (std::size_t f = 0; f < d; ++f) s += (row[f] - z[f]) * (row[f] - z[f]);
    dist[i] = {s, i};
  }
  // Pair ordering breaks distance ties by lower index.
  std::nth_element(dist.begin(), dist.begin() + static_cast<std::ptrdiff_t>(k_ - 1), dist.end());
  std::vector<std::size_t> out;
  out.reserve(k_);
  for (std::size_t i = 0; i < k_; ++i) out.push_back(dist[i].second);
  std::sort(out.begin(), out.end());
  return out;
}

WeightVector KnnModel::weights(std::span<const double> x) const {
  WeightVector w;
  const double share = 1.0 / static_cast<double>(k_);
  for (std::size_t i : neighbors(x)) w.entries.emplace_back(i, share);
  return w;
}

Vector KnnModel::predict(std::span<const double> x) const {
  Vector out(y_.cols(), 0.0);
  auto nb = neighbors(x);
  for (std::size_t i : nb) {
    for (std::size_t j = 0; j < out.size(); ++j) out[j] += y_(i, j);
  }
  for (double& v : out) v /= static_cast<double>(nb.size());
  return out;
}

// ---------------------------------------------------------------------------
// Forest

std::size_t RegressionTree::leaf_of(std::span<const double> x) const {
  std::size_t node = 0;
  while (nodes[node].feature >= 0) {
    const auto& nd = nodes[node];
    node = x[static_cast<std::size_t>(nd.feature)] < nd.threshold ? nd.left : nd.right;
  }
  return nodes[node].leaf;
}

std::size_t RegressionTree::depth() const {
  std::vector<std::pair<std::size_t, std::size_t>> stack{{0, 0}};
  std::size_t best = 0;
  while (!stack.empty()) {
    auto [node, d] = stack.back();
    stack.pop_back();
    best = std::max(best, d);
    if (nodes[node].feature >= 0) {
      stack.emplace_back(nodes[node].left, d + 1);
      stack.emplace_back(nodes[node].right, d + 1);
    }
  }
  return best;
}

namespace {

struct Sample {
  std::size_t index;
  double weight;  // bootstrap multiplicity
};

class TreeBuilder {
 public:
  TreeBuilder(const Matrix& x, const Matrix& y, const ForestParams& params, std::size_t mtry,
              std::mt19937_64& rng)
      : x_(x), y_(y), params_(params), mtry_(mtry), rng_(rng) {}

  RegressionTree build(std::vector<Sample> root) {
    RegressionTree tree;
    tree.nodes.push_back({});
    struct Work {
      std::size_t node;
      std::vector<Sample> samples;
      std::size_t depth;
    };
    std::vector<Work> stack;
    stack.push_back({0, std::move(root), 0});
    while (!stack.empty()) {
      Work w = std::move(stack.back());
      stack.pop_back();
      auto split = find_split(w.samples, w.depth);
      if (!split) {
        RegressionTree::Node& leaf = tree.nodes[w.node];
        leaf.feature = -1;
        leaf.leaf = tree.leaves.size();
        std::vector<std::size_t> members;
        members.reserve(w.samples.size());
        for (const auto& s : w.samples) members.push_back(s.index);
        std::sort(members.begin(), members.end());
        tree.leaves.push_back(std::move(members));
        continue;
      }
      std::vector<Sample> left, right;
      for (const auto& s : w.samples) {
        (x_(s.index, split->feature) < split->threshold ? left : right).push_back(s);
      }
      const std::size_t l = tree.nodes.size();
      tree.nodes.push_back({});
      tree.nodes.push_back({});
      auto& nd = tree.nodes[w.node];
      nd.feature = static_cast<int>(split->feature);
      nd.threshold = split->threshold;
      nd.left = l;
      nd.right = l + 1;
      // Push right first so the left subtree is numbered first.
      stack.push_back({l + 1, std::move(right), w.depth + 1});
      stack.push_back({l, std::move(left), w.depth + 1});
    }
    return tree;
  }

 private:
  struct Split {
    std::size_t feature;
    double threshold;
  };

  double sse(const std::vector<double>& sum, const std::vector<double>& sumsq, double w) const {
    if (w <= 0.0) return 0.0;
    double s = 0.0;
    for (std::size_t o = 0; o < sum.size(); ++o) s += sumsq[o] - sum[o] * sum[o] / w;
    return std::max(s, 0.0);
  }

  std::optional<Split> find_split(std::vector<Sample>& samples, std::size_t depth) {
    const std::size_t unique = samples.size();
    if (params_.max_depth && depth >= *params_.max_depth) return std::nullopt;
    if (unique < 2 * params_.min_leaf) return std::nullopt;
    const std::size_t q = y_.cols();
    std::vector<double> total_sum(q, 0.0), total_sq(q, 0.0);
    double total_w = 0.0;
    for (const auto& s : samples) {
      total_w += s.weight;
      for (std::size_t o = 0; o < q; ++o) {
        total_sum[o] += s.weight * y_(s.index, o);
        total_sq[o] += s.weight * y_(s.index, o) * y_(s.index, o);
      }
    }
    const double parent = sse(total_sum, total_sq, total_w);
    if (parent <= 1e-12 * (1.0 + total_w)) return std::nullopt;

    // Sample mtry distinct features.
    std::vector<std::size_t> features(x_.cols());
    std::iota(features.begin(), features.end(), std::size_t{0});
    for (std::size_t i = 0; i < mtry_; ++i) {
      std::uniform_int_distribution<std::size_t> pick(i, features.size() - 1);
      std::swap(features[i], features[pick(rng_)]);
    }
    features.resize(mtry_);

    std::optional<Split> best;
    double best_sse = parent;
    std::vector<double> ls(q), lq(q), rs(q), rq(q);
    for (std::size_t f : features) {
      std::sort(samples.begin(), samples.end(), [&](const Sample& a, const Sample& b) {
        double xa = x_(a.index, f), xb = x_(b.index, f);
        return xa < xb || (xa == xb && a.index < b.index);
      });
      std::fill(ls.begin(), ls.end(), 0.0);
      std::fill(lq.begin(), lq.end(), 0.0);
      double lw = 0.0;
      for (std::size_t i = 0; i + 1 < unique; ++i) {
        const auto& s = samples[i];
        lw += s.weight;
        for (std::size_t o = 0; o < q; ++o) {
          const double v = y_(s.index, o);
          ls[o] += s.weight * v;
          lq[o] += s.weight * v * v;
        }
        const double xi = x_(s.index, f);
        const double xn = x_(samples[i + 1].index, f);
        if (!(xi < xn)) continue;
        const std::size_t left_count = i + 1;
        if (left_count < params_.min_leaf || unique - left_count < params_.min_leaf) continue;
        for (std::size_t o = 0; o < q; ++o) {
          rs[o] = total_sum[o] - ls[o];
          rq[o] = total_sq[o] - lq[o];
        }
        const double cost = sse(ls, lq, lw) + sse(rs, rq, total_w - lw);
        if (cost < best_sse - 1e-12 * (1.0 + parent)) {
          best_sse = cost;
          best = Split{f, 0.5 * (xi + xn)};
        }
      }
    }
    return best;
  }

  const Matrix& x_;
  const Matrix& y_;
  const ForestParams& params_;
  std::size_t mtry_;
  std::mt19937_64& rng_;
};

std::size_t resolve_mtry(const ForestParams& params, std::size_t d) {
  std::size_t m = params.features_per_split ? params.features_per_split : (d + 2) / 3;
  return std::clamp<std::size_t>(m, 1, std::max<std::size_t>(d, 1));
}

}  // namespace

ForestModel ForestModel::fit(const Matrix& x, const Matrix& y, const ForestParams& params, std::uint64_t seed) {
  const std::size_t n = x.rows();
  if (n == 0) throw std::invalid_argument("rf_fit: empty training data");
  std::vector<std::vector<std::size_t>> boots(params.num_trees);
  for (std::size_t b = 0; b < params.num_trees; ++b) {
    std::mt19937_64 rng(SeedSpec(seed).derive("bootstrap", {b}));
    std::uniform_int_distribution<std::size_t> draw(0, n - 1);
    boots[b].resize(n);
    for (auto& i : boots[b]) i = draw(rng);
  }
  return fit_with_bootstraps(x, y, params, boots, seed);
}

ForestModel ForestModel::fit_with_bootstraps(const Matrix& x, const Matrix& y, const ForestParams& params,
                                             const std::vector<std::vector<std::size_t>>& bootstraps,
                                             std::uint64_t seed) {
  const std::size_t n = x.rows();
  if (n == 0) throw std::invalid_argument("rf_fit: empty training data");
  if (y.rows() != n) throw std::invalid_argument("rf_fit: covariate/outcome row mismatch");
  if (params.num_trees == 0 || params.min_leaf == 0) throw std::invalid_argument("rf_fit: invalid parameters");
  if (bootstraps.size() != params.num_trees) throw std::invalid_argument("rf_fit: one bootstrap per tree");
  ForestModel model;
  model.y_ = y;
  model.d_ = x.cols();
  const std::size_t mtry = resolve_mtry(params, x.cols());
  for (std::size_t b = 0; b < params.num_trees; ++b) {
    std::vector<double> mult(n, 0.0);
    for (std::size_t i : bootstraps[b]) mult.at(i) += 1.0;
    std::vector<Sample> root;
    for (std::size_t i = 0; i < n; ++i) {
      if (mult[i] > 0.0) root.push_back({i, mult[i]});
    }
    std::mt19937_64 rng(SeedSpec(seed).derive("split-features", {b}));
    TreeBuilder builder(x, y, params, mtry, rng);
    model.trees_.push_back(builder.build(std::move(root)));
  }
  return model;
}

ForestModel ForestModel::from_parts(std::vector<RegressionTree> trees, Matrix y, std::size_t d) {
  ForestModel m;
  m.trees_ = std::move(trees);
  m.y_ = std::move(y);
  m.d_ = d;
  return m;
}

WeightVector ForestModel::weights(std::span<const double> x) const {
  if (x.size() != d_) throw std::invalid_argument("rf: query dimension mismatch");
  std::vector<std::pair<std::size_t, double>> acc;
  const double per_tree = 1.0 / static_cast<double>(trees_.size());
  for (const auto& t : trees_) {
    const auto& leaf = t.leaves[t.leaf_of(x)];
    const double share = per_tree / static_cast<double>(leaf.size());
    for (std::size_t i : leaf) acc.emplace_back(i, share);
  }
  std::sort(acc.begin(), acc.end());
  WeightVector w;
  for (const auto& [i, v] : acc) {
    if (!w.entries.empty() && w.entries.back().first == i) {
      w.entries.back().second += v;
    } else {
      w.entries.emplace_back(i, v);
    }
  }
  return w;
}

Vector ForestModel::predict(std::span<const double> x) const {
  Vector out(y_.cols(), 0.0);
  for (const auto& t : trees_) {
    const auto& leaf = t.leaves[t.leaf_of(x)];
    for (std::size_t j = 0; j < out.size(); ++j) {
      double s = 0.0;
      for (std::size_t i : leaf) s += y_(i, j);
      out[j] += s / static_cast<double>(leaf.size());
    }
  }
  for (double& v : out) v /= static_cast<double>(trees_.size());
  return out;
}

}  // namespace ps
