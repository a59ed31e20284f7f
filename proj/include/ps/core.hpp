#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <random>
#include <span>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace ps {

using Vector = std::vector<double>;
using CovariateVector = Vector;
using OutcomeVector = Vector;
using Decision = Vector;

class FeasibilityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class SolverError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// Row-major dense matrix of doubles.
class Matrix {
 public:
  Matrix() = default;
  Matrix(std::size_t rows, std::size_t cols, double fill = 0.0)
      : rows_(rows), cols_(cols), data_(rows * cols, fill) {}

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

  double& operator()(std::size_t r, std::size_t c) { return data_[r * cols_ + c]; }
  double operator()(std::size_t r, std::size_t c) const { return data_[r * cols_ + c]; }

  std::span<double> row(std::size_t r) { return {data_.data() + r * cols_, cols_}; }
  std::span<const double> row(std::size_t r) const { return {data_.data() + r * cols_, cols_}; }

  const std::vector<double>& data() const { return data_; }

  bool operator==(const Matrix&) const = default;

 private:
  std::size_t rows_ = 0;
  std::size_t cols_ = 0;
  std::vector<double> data_;
};

/// Segment labels are single characters ('A', 'B', 'C'); 0 means unlabeled.
using SegmentLabel = char;

/// Paired covariate and outcome rows with optional segment labels.
///
/// Segment labels are stored per row and per label column. Newsvendor data has
/// one label column per product, shipment data a single column.
class Dataset {
 public:
  Dataset() = default;
  Dataset(std::vector<std::string> feature_names, std::size_t outcome_dim,
          std::size_t segment_columns = 0);

  void add_row(std::int64_t day_index, std::span<const double> x, std::span<const double> y,
               std::span<const SegmentLabel> segments = {});

  std::size_t size() const { return day_index_.size(); }
  bool empty() const { return day_index_.empty(); }
  std::size_t covariate_dim() const { return feature_names_.size(); }
  std::size_t outcome_dim() const { return outcome_dim_; }
  std::size_t segment_columns() const { return segment_columns_; }

  std::span<const double> x(std::size_t i) const;
  std::span<const double> y(std::size_t i) const;
  SegmentLabel segment(std::size_t i, std::size_t column = 0) const;
  std::int64_t day_index(std::size_t i) const { return day_index_[i]; }

  const std::vector<std::string>& feature_names() const { return feature_names_; }

  /// Rows in the given order (indices may repeat).
  Dataset subset(std::span<const std::size_t> indices) const;

  bool operator==(const Dataset&) const = default;

 private:
  std::vector<std::string> feature_names_;
  std::size_t outcome_dim_ = 0;
  std::size_t segment_columns_ = 0;
  std::vector<std::int64_t> day_index_;
  std::vector<double> x_;
  std::vector<double> y_;
  std::vector<SegmentLabel> segments_;
};

/// Deterministic seed derivation keyed on a role string and integer indices.
///
/// derive() is a pure function of (master, role, indices). Different roles hash
/// to different streams; the mixing is SplitMix64.
class SeedSpec {
 public:
  explicit SeedSpec(std::uint64_t master = 0) : master_(master) {}

  std::uint64_t master() const { return master_; }

  std::uint64_t derive(std::string_view role, std::initializer_list<std::uint64_t> indices = {}) const;

  /// Child spec whose master is derive(role, indices).
  SeedSpec child(std::string_view role, std::initializer_list<std::uint64_t> indices = {}) const {
    return SeedSpec(derive(role, indices));
  }

  std::mt19937_64 engine(std::string_view role, std::initializer_list<std::uint64_t> indices = {}) const {
    return std::mt19937_64(derive(role, indices));
  }

 private:
  std::uint64_t master_;
};

std::uint64_t splitmix64(std::uint64_t x);

/// K disjoint index sets covering [0, n).
struct FoldPartition {
  std::vector<std::vector<std::size_t>> folds;

  std::size_t size() const { return folds.size(); }
  /// Every index not in fold k, ascending.
  std::vector<std::size_t> complement(std::size_t k, std::size_t n) const;
};

/// Uniform shuffle then round-robin assignment. Throws std::invalid_argument
/// unless 2 <= k <= n.
FoldPartition make_folds(std::size_t n, std::size_t k, const SeedSpec& seed);

/// Realized held-out costs: costs(i, m) is the cost of policy m on dataset row
/// row_indices[i]. Lower is better.
struct CostTable {
  std::size_t fold_id = 0;
  std::vector<std::size_t> row_indices;
  Matrix costs;
};

/// Runs fn(i) for i in [0, n) on up to `jobs` threads. Exceptions from fn are
/// rethrown (the first one by index) after all workers join.
void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn);

std::size_t default_jobs();

}  // namespace ps
