#include "ps/policytree.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <istream>
#include <limits>
#include <memory>
#include <numeric>
#include <ostream>
#include <random>
#include <sstream>
#include <stdexcept>

namespace ps {

std::size_t PolicyTree::leaf_of(std::span<const double> x) const {
  if (x.size() != num_features) throw std::invalid_argument("policy tree: covariate dimension mismatch");
  std::size_t v = 0;
  while (!nodes[v].is_leaf()) {
    const auto& n = nodes[v];
    v = static_cast<std::size_t>(x[static_cast<std::size_t>(n.feature)] < n.threshold ? n.left : n.right);
  }
  return v;
}

std::size_t PolicyTree::select(std::span<const double> x) const { return nodes[leaf_of(x)].policy; }

std::size_t PolicyTree::depth() const {
  std::vector<std::size_t> d(nodes.size(), 0);
  std::size_t best = 0;
  // Children always come after their parent.
  for (std::size_t v = 0; v < nodes.size(); ++v) {
    best = std::max(best, d[v]);
    if (!nodes[v].is_leaf()) {
      d[static_cast<std::size_t>(nodes[v].left)] = d[v] + 1;
      d[static_cast<std::size_t>(nodes[v].right)] = d[v] + 1;
    }
  }
  return best;
}

std::size_t PolicyTree::num_splits() const {
  return static_cast<std::size_t>(std::count_if(nodes.begin(), nodes.end(), [](const Node& n) { return !n.is_leaf(); }));
}

PolicyTree PolicyTree::leaf(std::size_t policy, std::size_t num_features, std::size_t num_policies) {
  PolicyTree t;
  t.nodes.push_back(Node{-1, 0.0, -1, -1, policy});
  t.num_features = num_features;
  t.num_policies = num_policies;
  return t;
}

double tree_objective(const PolicyTree& tree, const Matrix& x, const Matrix& costs, double lambda) {
  double total = 0.0;
  for (std::size_t i = 0; i < x.rows(); ++i) total += costs(i, tree.select(x.row(i)));
  return total + lambda * static_cast<double>(tree.num_splits());
}

double mean_cost_spread(const Matrix& costs) {
  if (costs.rows() == 0) return 0.0;
  double s = 0.0;
  for (std::size_t i = 0; i < costs.rows(); ++i) {
    auto r = costs.row(i);
    auto [lo, hi] = std::minmax_element(r.begin(), r.end());
    s += *hi - *lo;
  }
  return s / static_cast<double>(costs.rows());
}

namespace {

struct WNode {
  int feature = -1;
  double threshold = 0.0;
  std::size_t policy = 0;
  std::unique_ptr<WNode> left, right;

  bool is_leaf() const { return feature < 0; }
};

using Rows = std::vector<std::size_t>;

struct Eval {
  double cost = 0.0;
  bool valid = true;
};

struct Split {
  int feature;
  double threshold;
  double cost;
};

class Fitter {
 public:
  Fitter(const Matrix& x, const Matrix& c, const TreeHyperparams& hp, std::uint64_t seed)
      : x_(x), c_(c), hp_(hp), rng_(seed) {
    // Row-wise normalization keeps every comparison invariant to constant
    // shifts of the table.
    double spread = 0.0;
    for (std::size_t i = 0; i < c_.rows(); ++i) {
      auto r = c_.row(i);
      const double lo = *std::min_element(r.begin(), r.end());
      double hi = lo;
      for (double& v : r) {
        v -= lo;
        hi = std::max(hi, v + lo);
      }
      spread += hi - lo;
    }
    eps_ = 1e-9 * (1.0 + spread);
  }

  std::unique_ptr<WNode> run() {
    Rows all(x_.rows());
    std::iota(all.begin(), all.end(), std::size_t{0});
    auto best = grow(all, hp_.max_depth);
    local_search(best, all);
    double best_obj = evaluate(*best, all).cost;
    for (std::size_t r = 0; r < hp_.restarts; ++r) {
      auto cand = random_start(all);
      if (!cand) break;
      local_search(cand, all);
      const double obj = evaluate(*cand, all).cost;
      if (obj < best_obj - eps_) {
        best = std::move(cand);
        best_obj = obj;
      }
    }
    return best;
  }

 private:
  std::pair<double, std::size_t> leaf_best(const Rows& rows) const {
    std::vector<double> sums(c_.cols(), 0.0);
    for (std::size_t i : rows) {
      for (std::size_t m = 0; m < c_.cols(); ++m) sums[m] += c_(i, m);
    }
    const double lo = *std::min_element(sums.begin(), sums.end());
    for (std::size_t m = 0; m < sums.size(); ++m) {
      if (sums[m] <= lo + eps_) return {sums[m], m};
    }
    return {lo, 0};
  }

  std::unique_ptr<WNode> make_leaf(const Rows& rows) const {
    auto n = std::make_unique<WNode>();
    n->policy = leaf_best(rows).second;
    return n;
  }

  void partition(const WNode& n, const Rows& rows, Rows& left, Rows& right) const {
    left.clear();
    right.clear();
    for (std::size_t i : rows) {
      (x_(i, static_cast<std::size_t>(n.feature)) < n.threshold ? left : right).push_back(i);
    }
  }

  Eval evaluate(const WNode& n, const Rows& rows) const {
    if (n.is_leaf()) {
      double s = 0.0;
      for (std::size_t i : rows) s += c_(i, n.policy);
      return {s, rows.size() >= hp_.min_leaf};
    }
    Rows l, r;
    partition(n, rows, l, r);
    auto a = evaluate(*n.left, l);
    auto b = evaluate(*n.right, r);
    return {a.cost + b.cost + hp_.lambda, a.valid && b.valid};
  }

  void reoptimize(WNode& n, const Rows& rows) const {
    if (n.is_leaf()) {
      if (!rows.empty()) n.policy = leaf_best(rows).second;
      return;
    }
    Rows l, r;
    partition(n, rows, l, r);
    reoptimize(*n.left, l);
    reoptimize(*n.right, r);
  }

  std::size_t route_policy(const WNode& n, std::size_t i) const {
    const WNode* v = &n;
    while (!v->is_leaf()) v = x_(i, static_cast<std::size_t>(v->feature)) < v->threshold ? v->left.get() : v->right.get();
    return v->policy;
  }

  static std::size_t splits(const WNode& n) { return n.is_leaf() ? 0 : 1 + splits(*n.left) + splits(*n.right); }

  // All (feature, midpoint) splits with both sides >= min_leaf. With `left`
  // and `right` given, rows keep those subtrees; otherwise each side is a leaf.
  std::vector<Split> enumerate(const Rows& rows, const WNode* left, const WNode* right) const {
    std::vector<Split> out;
    const std::size_t n = rows.size(), m_count = c_.cols();
    if (n < 2 * hp_.min_leaf) return out;
    std::vector<std::pair<double, std::size_t>> order(n);
    std::vector<double> cl, cr;
    if (left) {
      cl.resize(x_.rows());
      cr.resize(x_.rows());
      for (std::size_t i : rows) {
        cl[i] = c_(i, route_policy(*left, i));
        cr[i] = c_(i, route_policy(*right, i));
      }
    }
    std::vector<double> total(m_count, 0.0), prefix(m_count);
    double total_r = 0.0;
    for (std::size_t i : rows) {
      if (left) {
        total_r += cr[i];
      } else {
        for (std::size_t m = 0; m < m_count; ++m) total[m] += c_(i, m);
      }
    }
    for (std::size_t f = 0; f < x_.cols(); ++f) {
      for (std::size_t k = 0; k < n; ++k) order[k] = {x_(rows[k], f), rows[k]};
      std::sort(order.begin(), order.end());
      std::fill(prefix.begin(), prefix.end(), 0.0);
      double pl = 0.0, pr = 0.0;
      for (std::size_t k = 1; k < n; ++k) {
        const std::size_t i = order[k - 1].second;
        if (left) {
          pl += cl[i];
          pr += cr[i];
        } else {
          for (std::size_t m = 0; m < m_count; ++m) prefix[m] += c_(i, m);
        }
        if (order[k].first == order[k - 1].first) continue;
        if (k < hp_.min_leaf || n - k < hp_.min_leaf) continue;
        double cost;
        if (left) {
          cost = pl + (total_r - pr);
        } else {
          double lb = std::numeric_limits<double>::infinity(), rb = lb;
          for (std::size_t m = 0; m < m_count; ++m) {
            lb = std::min(lb, prefix[m]);
            rb = std::min(rb, total[m] - prefix[m]);
          }
          cost = lb + rb;
        }
        const double thr = order[k - 1].first + 0.5 * (order[k].first - order[k - 1].first);
        out.push_back({static_cast<int>(f), thr, cost});
      }
    }
    return out;
  }

  // Lowest-cost split; equal-cost candidates are chosen among at random.
  const Split* pick_best(const std::vector<Split>& splits) {
    if (splits.empty()) return nullptr;
    double lo = splits[0].cost;
    for (const auto& s : splits) lo = std::min(lo, s.cost);
    const Split* chosen = nullptr;
    std::size_t seen = 0;
    for (const auto& s : splits) {
      if (s.cost > lo + eps_) continue;
      ++seen;
      if (std::uniform_int_distribution<std::size_t>(0, seen - 1)(rng_) == 0) chosen = &s;
    }
    return chosen;
  }

  std::unique_ptr<WNode> split_node(const Split& s, const Rows& rows, std::size_t depth_left) {
    auto n = std::make_unique<WNode>();
    n->feature = s.feature;
    n->threshold = s.threshold;
    Rows l, r;
    partition(*n, rows, l, r);
    n->left = grow(l, depth_left - 1);
    n->right = grow(r, depth_left - 1);
    return n;
  }

  std::unique_ptr<WNode> grow(const Rows& rows, std::size_t depth_left) {
    if (depth_left == 0) return make_leaf(rows);
    auto cands = enumerate(rows, nullptr, nullptr);
    const Split* best = pick_best(cands);
    if (!best) return make_leaf(rows);
    const double leaf_cost = leaf_best(rows).first;
    if (leaf_cost - best->cost <= hp_.lambda + eps_) return make_leaf(rows);
    return split_node(*best, rows, depth_left);
  }

  std::unique_ptr<WNode> random_start(const Rows& rows) {
    if (hp_.max_depth == 0) return nullptr;
    auto cands = enumerate(rows, nullptr, nullptr);
    if (cands.empty()) return nullptr;
    const auto& s = cands[std::uniform_int_distribution<std::size_t>(0, cands.size() - 1)(rng_)];
    return split_node(s, rows, hp_.max_depth);
  }

  struct Slot {
    std::unique_ptr<WNode>* node;
    Rows rows;
    std::size_t depth;
  };

  void collect(std::unique_ptr<WNode>& n, Rows rows, std::size_t depth, std::vector<Slot>& out) const {
    if (!n->is_leaf()) {
      Rows l, r;
      partition(*n, rows, l, r);
      collect(n->left, std::move(l), depth + 1, out);
      collect(n->right, std::move(r), depth + 1, out);
    }
    out.push_back({&n, std::move(rows), depth});
  }

  // Best improving replacement for the subtree at `slot`, or null.
  std::unique_ptr<WNode> improve(const Slot& slot) {
    const WNode& cur = **slot.node;
    const Rows& rows = slot.rows;
    const double current = evaluate(cur, rows).cost;
    double best_cost = current - eps_;
    std::unique_ptr<WNode> best;

    if (!cur.is_leaf() && rows.size() >= hp_.min_leaf) {
      const double c = leaf_best(rows).first;
      if (c < best_cost) {
        best = make_leaf(rows);
        best_cost = c;
      }
    }

    if (!cur.is_leaf()) {
      // New split above the existing children.
      auto cands = enumerate(rows, cur.left.get(), cur.right.get());
      const double pen = hp_.lambda * static_cast<double>(splits(cur));
      std::sort(cands.begin(), cands.end(), [](const Split& a, const Split& b) { return a.cost < b.cost; });
      std::size_t tries = 0;
      for (const auto& s : cands) {
        if (s.cost + pen >= best_cost || tries++ >= 8) break;
        auto n = clone(cur);
        n->feature = s.feature;
        n->threshold = s.threshold;
        reoptimize(*n, rows);
        auto e = evaluate(*n, rows);
        if (e.valid && e.cost < best_cost) {
          best = std::move(n);
          best_cost = e.cost;
          break;
        }
      }
    }

    const std::size_t depth_left = hp_.max_depth - slot.depth;
    if (depth_left > 0) {
      auto g = grow(rows, depth_left);
      auto e = evaluate(*g, rows);
      if (e.valid && e.cost < best_cost) {
        best = std::move(g);
        best_cost = e.cost;
      }
    }
    return best;
  }

  static std::unique_ptr<WNode> clone(const WNode& n) {
    auto c = std::make_unique<WNode>();
    c->feature = n.feature;
    c->threshold = n.threshold;
    c->policy = n.policy;
    if (n.left) c->left = clone(*n.left);
    if (n.right) c->right = clone(*n.right);
    return c;
  }

  void local_search(std::unique_ptr<WNode>& root, const Rows& all) {
    constexpr int kMaxPasses = 100;
    for (int pass = 0; pass < kMaxPasses; ++pass) {
      std::vector<Slot> slots;
      collect(root, all, 0, slots);
      std::shuffle(slots.begin(), slots.end(), rng_);
      bool changed = false;
      for (auto& s : slots) {
        if (auto repl = improve(s)) {
          *s.node = std::move(repl);
          changed = true;
          break;
        }
      }
      if (!changed) break;
    }
  }

  const Matrix& x_;
  Matrix c_;
  TreeHyperparams hp_;
  std::mt19937_64 rng_;
  double eps_ = 0.0;
};

void flatten(const WNode& n, PolicyTree& t) {
  const std::size_t id = t.nodes.size();
  t.nodes.push_back({n.feature, n.threshold, -1, -1, n.policy});
  if (n.is_leaf()) return;
  t.nodes[id].policy = 0;
  t.nodes[id].left = static_cast<int>(t.nodes.size());
  flatten(*n.left, t);
  t.nodes[id].right = static_cast<int>(t.nodes.size());
  flatten(*n.right, t);
}

PolicyTree fit_fixed(const Matrix& x, const Matrix& costs, const TreeHyperparams& hp, std::uint64_t seed) {
  PolicyTree t;
  t.num_features = x.cols();
  t.num_policies = costs.cols();
  t.seed = seed;
  t.lambda = hp.lambda;
  Fitter f(x, costs, hp, seed);
  flatten(*f.run(), t);
  t.objective = tree_objective(t, x, costs, hp.lambda);
  return t;
}

Matrix take_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) std::copy(m.row(idx[k]).begin(), m.row(idx[k]).end(), out.row(k).begin());
  return out;
}

}  // namespace

PolicyTree fit_tree(const Matrix& x, const Matrix& costs, const TreeHyperparams& hp, std::uint64_t seed) {
  if (x.rows() != costs.rows()) throw std::invalid_argument("fit_tree: covariate and cost row counts differ");
  if (costs.cols() == 0 || x.rows() == 0) throw std::invalid_argument("fit_tree: empty cost table");
  if (hp.min_leaf == 0 || !(hp.lambda >= 0.0)) throw std::invalid_argument("fit_tree: bad hyperparameters");
  for (double v : costs.data()) {
    if (!std::isfinite(v)) throw std::invalid_argument("fit_tree: non-finite cost");
  }
  if (!hp.tune_lambda) return fit_fixed(x, costs, hp, seed);

  TreeHyperparams fixed = hp;
  fixed.tune_lambda = false;
  fixed.lambda = 0.0;
  const std::size_t n = x.rows();
  if (n >= 6 * hp.min_leaf) {
    std::vector<std::size_t> idx(n);
    std::iota(idx.begin(), idx.end(), std::size_t{0});
    auto rng = SeedSpec(seed).engine("lambda-holdout");
    std::shuffle(idx.begin(), idx.end(), rng);
    const std::size_t n_fit = (2 * n) / 3;
    std::span<const std::size_t> fit_idx(idx.data(), n_fit), val_idx(idx.data() + n_fit, n - n_fit);
    const Matrix xf = take_rows(x, fit_idx), cf = take_rows(costs, fit_idx);
    const Matrix xv = take_rows(x, val_idx), cv = take_rows(costs, val_idx);
    const double spread = mean_cost_spread(costs);
    double best_val = std::numeric_limits<double>::infinity();
    for (double lam : {0.0, 0.1 * spread, spread}) {
      TreeHyperparams trial = fixed;
      trial.lambda = lam;
      const double v = tree_objective(fit_fixed(xf, cf, trial, seed), xv, cv, 0.0);
      if (v < best_val - 1e-9 * (1.0 + std::abs(best_val))) {
        best_val = v;
        fixed.lambda = lam;
      }
    }
  }
  return fit_fixed(x, costs, fixed, seed);
}

// ---------------------------------------------------------------------------

namespace {

std::string fmt(double v) {
  char buf[32];
  int n = std::snprintf(buf, sizeof buf, "%.17g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::string short_fmt(double v) {
  char buf[32];
  int n = std::snprintf(buf, sizeof buf, "%g", v);
  return std::string(buf, static_cast<std::size_t>(n));
}

}  // namespace

void write_tree(std::ostream& os, const PolicyTree& tree) {
  os << "policy_tree 1\n";
  os << "index_base 0\n";
  os << "features " << tree.num_features << "\n";
  os << "policies " << tree.num_policies << "\n";
  os << "seed " << tree.seed << "\n";
  os << "lambda " << fmt(tree.lambda) << "\n";
  os << "objective " << fmt(tree.objective) << "\n";
  os << "nodes " << tree.nodes.size() << "\n";
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    const auto& n = tree.nodes[v];
    if (n.is_leaf()) {
      os << v << " leaf " << n.policy << "\n";
    } else {
      os << v << " split " << n.feature << ' ' << fmt(n.threshold) << ' ' << n.left << ' ' << n.right << "\n";
    }
  }
}

PolicyTree read_tree(std::istream& is) {
  auto fail = [](const std::string& what) -> PolicyTree { throw std::runtime_error("policy tree: " + what); };
  std::string key;
  long version = 0;
  if (!(is >> key >> version) || key != "policy_tree" || version != 1) return fail("bad header");
  PolicyTree t;
  std::size_t count = 0;
  long base = -1;
  if (!(is >> key >> base) || key != "index_base" || base != 0) return fail("unsupported index base");
  if (!(is >> key >> t.num_features) || key != "features") return fail("missing features");
  if (!(is >> key >> t.num_policies) || key != "policies") return fail("missing policies");
  if (!(is >> key >> t.seed) || key != "seed") return fail("missing seed");
  std::string num;
  if (!(is >> key >> num) || key != "lambda") return fail("missing lambda");
  t.lambda = std::stod(num);
  if (!(is >> key >> num) || key != "objective") return fail("missing objective");
  t.objective = std::stod(num);
  if (!(is >> key >> count) || key != "nodes" || count == 0) return fail("missing nodes");
  t.nodes.resize(count);
  for (std::size_t v = 0; v < count; ++v) {
    std::size_t id = 0;
    std::string kind;
    if (!(is >> id >> kind) || id != v) return fail("bad node line");
    auto& n = t.nodes[v];
    if (kind == "leaf") {
      if (!(is >> n.policy) || n.policy >= t.num_policies) return fail("bad leaf");
    } else if (kind == "split") {
      if (!(is >> n.feature >> num >> n.left >> n.right)) return fail("bad split");
      n.threshold = std::stod(num);
      const auto bad = [&](int c) { return c <= static_cast<int>(v) || c >= static_cast<int>(count); };
      if (n.feature < 0 || static_cast<std::size_t>(n.feature) >= t.num_features || bad(n.left) || bad(n.right)) {
        return fail("bad split");
      }
    } else {
      return fail("unknown node kind '" + kind + "'");
    }
  }
  return t;
}

std::string tree_to_dot(const PolicyTree& tree, std::span<const std::string> policy_names,
                        std::span<const std::string> feature_names) {
  std::ostringstream os;
  os << "digraph policy_tree {\n";
  os << "  node [shape=box, fontname=\"Helvetica\"];\n";
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    const auto& n = tree.nodes[v];
    os << "  n" << v << " [label=\"";
    if (n.is_leaf()) {
      os << (n.policy < policy_names.size() ? policy_names[n.policy] : "policy " + std::to_string(n.policy))
         << "\", shape=ellipse];\n";
    } else {
      const auto f = static_cast<std::size_t>(n.feature);
      os << (f < feature_names.size() ? feature_names[f] : "x" + std::to_string(f)) << " < " << short_fmt(n.threshold)
         << "\"];\n";
    }
  }
  for (std::size_t v = 0; v < tree.nodes.size(); ++v) {
    const auto& n = tree.nodes[v];
    if (n.is_leaf()) continue;
    os << "  n" << v << " -> n" << n.left << " [label=\"yes\"];\n";
    os << "  n" << v << " -> n" << n.right << " [label=\"no\"];\n";
  }
  os << "}\n";
  return os.str();
}

}  // namespace ps
