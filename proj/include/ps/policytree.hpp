#pragma once

#include <cstdint>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "ps/core.hpp"

namespace ps {

struct TreeHyperparams {
  std::size_t max_depth = 3;
  std::size_t min_leaf = 10;
  double lambda = 0.0;
  /// Extra local-search starts from a random root split.
  std::size_t restarts = 3;
  /// Pick lambda from {0, 0.1 s, s} (s = mean per-row cost spread) on a 2/3 to
  /// 1/3 holdout, then refit on all rows. `lambda` is ignored when set.
  bool tune_lambda = false;
};

/// Axis-aligned tree whose leaves name a policy index. Node 0 is the root;
/// rows go left iff x[feature] < threshold.
struct PolicyTree {
  struct Node {
    int feature = -1;  // -1 for a leaf
    double threshold = 0.0;
    int left = -1;
    int right = -1;
    std::size_t policy = 0;

    bool is_leaf() const { return feature < 0; }
    bool operator==(const Node&) const = default;
  };

  std::vector<Node> nodes;
  std::size_t num_features = 0;
  std::size_t num_policies = 0;
  std::uint64_t seed = 0;
  double lambda = 0.0;
  double objective = 0.0;  // regularized training objective

  std::size_t select(std::span<const double> x) const;
  std::size_t leaf_of(std::span<const double> x) const;
  std::size_t depth() const;
  std::size_t num_splits() const;

  static PolicyTree leaf(std::size_t policy, std::size_t num_features, std::size_t num_policies);

  bool operator==(const PolicyTree&) const = default;
};

/// Minimizes sum_i C(i, T(x_i)) + lambda * splits by greedy growth followed by
/// randomized local search. Deterministic given the inputs and seed.
PolicyTree fit_tree(const Matrix& x, const Matrix& costs, const TreeHyperparams& hp, std::uint64_t seed);

/// sum_i C(i, T(x_i)) + lambda * splits.
double tree_objective(const PolicyTree& tree, const Matrix& x, const Matrix& costs, double lambda);

/// Mean over rows of max_m C(i, m) - min_m C(i, m).
double mean_cost_spread(const Matrix& costs);

void write_tree(std::ostream& os, const PolicyTree& tree);
PolicyTree read_tree(std::istream& is);

std::string tree_to_dot(const PolicyTree& tree, std::span<const std::string> policy_names,
                        std::span<const std::string> feature_names = {});

}  // namespace ps
