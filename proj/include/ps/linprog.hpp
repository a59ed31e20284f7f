#pragma once

#include <cstddef>
#include <limits>
#include <ostream>
#include <span>
#include <string>
#include <vector>

namespace ps::lp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

/// Feasibility tolerance applied to constraint residuals and bounds.
inline constexpr double kFeasTol = 1e-7;
/// Target accuracy of the reported optimum.
inline constexpr double kObjTol = 1e-6;

enum class Relation { LessEqual, GreaterEqual, Equal };

enum class Status { Optimal, Infeasible, Unbounded };

std::string to_string(Status s);

/// min c'x  s.t.  rows (coeffs, relation, rhs),  lo <= x <= hi.
///
/// Constraint rows are kept in compressed sparse row form.
class LinearProgram {
 public:
  LinearProgram() = default;
  explicit LinearProgram(std::size_t num_vars);

  std::size_t num_vars() const { return objective_.size(); }
  std::size_t num_rows() const { return rhs_.size(); }

  /// Adds a variable with bounds [lo, hi] and cost; returns its column.
  std::size_t add_var(double cost, double lo = 0.0, double hi = kInf);
  void set_objective(std::size_t j, double cost) { objective_.at(j) = cost; }
  void set_bounds(std::size_t j, double lo, double hi);

  /// Zero coefficients are dropped. Throws std::invalid_argument when the row
  /// is empty, references an unknown column or holds a non-finite value.
  std::size_t add_row(std::span<const std::size_t> cols, std::span<const double> coeffs, Relation rel,
                      double rhs);

  const std::vector<double>& objective() const { return objective_; }
  const std::vector<double>& lower() const { return lo_; }
  const std::vector<double>& upper() const { return hi_; }
  Relation relation(std::size_t r) const { return rel_[r]; }
  double rhs(std::size_t r) const { return rhs_[r]; }
  std::span<const std::size_t> row_cols(std::size_t r) const {
    return {cols_.data() + row_start_[r], row_start_[r + 1] - row_start_[r]};
  }
  std::span<const double> row_values(std::size_t r) const {
    return {vals_.data() + row_start_[r], row_start_[r + 1] - row_start_[r]};
  }

  /// Evaluates row r at x.
  double row_activity(std::size_t r, std::span<const double> x) const;
  /// Largest violation of any row or bound at x.
  double max_violation(std::span<const double> x) const;

  /// Plain-text listing: objective line, one line per constraint, then bounds.
  void dump(std::ostream& os) const;

 private:
  std::vector<double> objective_;
  std::vector<double> lo_;
  std::vector<double> hi_;
  std::vector<std::size_t> row_start_{0};
  std::vector<std::size_t> cols_;
  std::vector<double> vals_;
  std::vector<Relation> rel_;
  std::vector<double> rhs_;
};

struct LpSolution {
  Status status = Status::Infeasible;
  std::vector<double> x;
  double objective = 0.0;
  /// d(objective)/d(rhs_r) for every constraint row, valid when optimal.
  std::vector<double> duals;
  std::size_t iterations = 0;
};

struct SimplexOptions {
  std::size_t max_iterations = 0;  ///< 0 picks a size-based cap
  std::size_t degenerate_before_bland = 50;
  std::size_t refactor_every = 64;
};

/// Two-phase revised simplex with Dantzig pricing, switching to Bland's rule
/// after a run of degenerate pivots. Throws SolverError past the iteration cap.
LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options = {});

}  // namespace ps::lp
