#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <utility>
#include <vector>

#include "ps/core.hpp"

namespace ps {

/// Sparse nonnegative weights over training indices, sorted by index and
/// summing to one.
struct WeightVector {
  std::vector<std::pair<std::size_t, double>> entries;

  std::size_t support_size() const { return entries.size(); }
  double total() const;
  /// Weight of a given training index (0 when absent).
  double at(std::size_t index) const;
};

/// Column-stacked copy of covariate rows.
Matrix covariate_matrix(const Dataset& data);
Matrix outcome_matrix(const Dataset& data);
/// Column j of the outcome matrix as an n x 1 matrix.
Matrix outcome_column(const Dataset& data, std::size_t j);

/// k-nearest-neighbour model on z-scored features.
///
/// Constant features get scale 1, so they contribute nothing to distances.
/// Ties at the k-th distance go to the lowest training index.
class KnnModel {
 public:
  KnnModel() = default;

  /// Throws std::invalid_argument when k == 0 or k exceeds the row count.
  static KnnModel fit(const Matrix& x, const Matrix& y, std::size_t k);

  std::size_t k() const { return k_; }
  std::size_t num_train() const { return x_.rows(); }
  const std::vector<double>& mean() const { return mean_; }
  const std::vector<double>& scale() const { return scale_; }

  /// Training indices of the k nearest rows, ascending.
  std::vector<std::size_t> neighbors(std::span<const double> x) const;
  WeightVector weights(std::span<const double> x) const;
  Vector predict(std::span<const double> x) const;

  const Matrix& train_x() const { return x_; }
  const Matrix& train_y() const { return y_; }

 private:
  std::size_t k_ = 0;
  std::vector<double> mean_;
  std::vector<double> scale_;
  Matrix x_;  // standardized
  Matrix raw_x_;
  Matrix y_;
};

struct ForestParams {
  std::size_t num_trees = 5;
  std::size_t min_leaf = 5;
  /// Depth cap; nullopt grows until leaves can no longer be split.
  std::optional<std::size_t> max_depth;
  /// Features examined per split; 0 selects ceil(d / 3).
  std::size_t features_per_split = 0;
};

/// One CART regression tree. Leaves hold the distinct bootstrap indices that
/// reached them.
struct RegressionTree {
  struct Node {
    int feature = -1;  // -1 marks a leaf
    double threshold = 0.0;
    std::size_t left = 0;
    std::size_t right = 0;
    std::size_t leaf = 0;
  };
  std::vector<Node> nodes;
  std::vector<std::vector<std::size_t>> leaves;

  std::size_t leaf_of(std::span<const double> x) const;
  std::size_t depth() const;
};

/// Bagged CART forest. Splits minimize the summed within-child sum of squares
/// over all outputs, thresholds sit at midpoints of consecutive distinct
/// values, and a row goes left iff x[feature] < threshold.
class ForestModel {
 public:
  ForestModel() = default;

  /// Throws std::invalid_argument when the data is empty or dimensions disagree.
  static ForestModel fit(const Matrix& x, const Matrix& y, const ForestParams& params, std::uint64_t seed);

  /// Same as fit() with explicit bootstrap draws (one index list per tree).
  static ForestModel fit_with_bootstraps(const Matrix& x, const Matrix& y, const ForestParams& params,
                                         const std::vector<std::vector<std::size_t>>& bootstraps,
                                         std::uint64_t seed);

  const std::vector<RegressionTree>& trees() const { return trees_; }
  std::size_t num_train() const { return y_.rows(); }
  std::size_t covariate_dim() const { return d_; }

  WeightVector weights(std::span<const double> x) const;
  /// Average over trees of the mean outcome of the routed leaf.
  Vector predict(std::span<const double> x) const;

  const Matrix& train_y() const { return y_; }

  /// Rebuilds a model from serialized parts.
  static ForestModel from_parts(std::vector<RegressionTree> trees, Matrix y, std::size_t d);

 private:
  std::vector<RegressionTree> trees_;
  Matrix y_;
  std::size_t d_ = 0;
};

}  // namespace ps
