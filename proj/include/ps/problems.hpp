#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <vector>

#include "ps/core.hpp"

namespace ps {

/// Weighted sample of one outcome dimension.
struct Marginal {
  std::vector<double> values;
  std::vector<double> weights;
};

/// A decision problem with cost c(z, y) and a weighted scenario optimizer.
class ScenarioProblem {
 public:
  virtual ~ScenarioProblem() = default;

  virtual std::string name() const = 0;
  virtual std::size_t decision_dim() const = 0;
  virtual std::size_t outcome_dim() const = 0;

  /// Throws FeasibilityError when z is infeasible.
  virtual double cost(std::span<const double> z, std::span<const double> y) const = 0;
  /// Cost split into parts aligned with a dataset's segment columns; the parts
  /// sum to cost(z, y).
  virtual Vector cost_components(std::span<const double> z, std::span<const double> y) const {
    return {cost(z, y)};
  }
  virtual bool is_feasible(std::span<const double> z) const = 0;

  /// argmin over feasible z of sum_i weights[i] * cost(z, scenarios.row(i)).
  virtual Decision solve_weighted(const Matrix& scenarios, std::span<const double> weights) const = 0;

  /// True when the weighted objective separates per outcome dimension up to
  /// feasibility coupling, so each dimension may carry its own weights.
  virtual bool separable() const { return false; }
  /// Weighted solve with per-dimension weights. Only for separable problems.
  virtual Decision solve_marginals(std::span<const Marginal> marginals) const;
};

// ---------------------------------------------------------------------------
// Multi-product newsvendor

struct NewsvendorSpec {
  std::vector<double> price{500.0, 800.0, 50.0, 10.0};
  std::vector<double> cost{350.0, 600.0, 30.0, 6.0};
  std::vector<double> storage{3.0, 15.0, 1.5, 0.5};
  double capacity = 1200.0;

  std::size_t products() const { return price.size(); }
  /// Throws std::invalid_argument unless p > c > 0, s > 0 and capacity > 0.
  void validate() const;
};

enum class NewsvendorMethod { Lagrangian, LinearProgram };

/// c'q - p' min(y, q); profit is the negation.
double newsvendor_cost(std::span<const double> q, std::span<const double> y, const NewsvendorSpec& spec);
/// sum_j [c_j q_j - p_j sum_i w_ij min(y_ij, q_j)].
double newsvendor_weighted_objective(std::span<const double> q, std::span<const Marginal> marginals,
                                     const NewsvendorSpec& spec);
/// Exact knapsack-coupled weighted quantiles. Searches the multiplier of the
/// capacity row over its breakpoints, then fills leftover capacity on the
/// products whose order jumps at the optimal multiplier.
Decision newsvendor_solve_lagrangian(std::span<const Marginal> marginals, const NewsvendorSpec& spec);
/// Same problem as an LP with sales variables m_ij <= min(q_j, y_ij).
Decision newsvendor_solve_lp(std::span<const Marginal> marginals, const NewsvendorSpec& spec);
/// Smallest value whose weighted CDF reaches `ratio`; 0 when ratio <= 0.
double weighted_quantile(const Marginal& m, double ratio);

class NewsvendorProblem final : public ScenarioProblem {
 public:
  explicit NewsvendorProblem(NewsvendorSpec spec, NewsvendorMethod method = NewsvendorMethod::Lagrangian);

  std::string name() const override { return "newsvendor"; }
  std::size_t decision_dim() const override { return spec_.products(); }
  std::size_t outcome_dim() const override { return spec_.products(); }
  double cost(std::span<const double> z, std::span<const double> y) const override;
  Vector cost_components(std::span<const double> z, std::span<const double> y) const override;
  bool is_feasible(std::span<const double> z) const override;
  Decision solve_weighted(const Matrix& scenarios, std::span<const double> weights) const override;
  bool separable() const override { return true; }
  Decision solve_marginals(std::span<const Marginal> marginals) const override;

  const NewsvendorSpec& spec() const { return spec_; }

 private:
  NewsvendorSpec spec_;
  NewsvendorMethod method_;
};

// ---------------------------------------------------------------------------
// Two-stage shipment planning

struct ShipmentSpec {
  std::size_t facilities = 4;
  std::size_t locations = 4;
  double first_stage_cost = 5.0;   // p1
  double second_stage_cost = 10.0;  // p2
  double revenue = 90.0;            // a
  Matrix shipping;                  // facilities x locations

  void validate() const;
};

/// Shipping costs 20 + 2 f + U[0, 3] for 0-based facility f, drawn from `seed`.
ShipmentSpec make_shipment_spec(std::uint64_t seed, std::size_t facilities = 4, std::size_t locations = 4);

struct Recourse {
  double value = 0.0;      // Q(u1; y)
  Matrix shipments;        // facilities x locations
  Vector extra;            // second-stage production e
  Vector capacity_duals;   // dQ/du1, each <= 0
  Vector demand_duals;     // dQ/dy
};

Recourse shipment_second_stage(std::span<const double> u1, std::span<const double> y, const ShipmentSpec& spec);
/// p1 1'u1 + Q(u1; y) - a 1'y.
double shipment_cost(std::span<const double> u1, std::span<const double> y, const ShipmentSpec& spec);
/// p1 1'u1 + sum_i w_i Q(u1; y_i), the solve objective without revenue.
double shipment_weighted_objective(std::span<const double> u1, const Matrix& scenarios,
                                   std::span<const double> weights, const ShipmentSpec& spec);

enum class ShipmentMethod { Auto, ExtensiveLp, Benders };

/// First-stage production minimizing the weighted two-stage objective. The
/// extensive form is solved directly or by L-shaped cutting planes on the same
/// LP; Auto picks the extensive form for small scenario sets.
Decision shipment_solve_weighted(const Matrix& scenarios, std::span<const double> weights, const ShipmentSpec& spec,
                                 ShipmentMethod method = ShipmentMethod::Auto);

class ShipmentProblem final : public ScenarioProblem {
 public:
  explicit ShipmentProblem(ShipmentSpec spec, ShipmentMethod method = ShipmentMethod::Auto);

  std::string name() const override { return "shipment"; }
  std::size_t decision_dim() const override { return spec_.facilities; }
  std::size_t outcome_dim() const override { return spec_.locations; }
  double cost(std::span<const double> z, std::span<const double> y) const override;
  bool is_feasible(std::span<const double> z) const override;
  Decision solve_weighted(const Matrix& scenarios, std::span<const double> weights) const override;

  const ShipmentSpec& spec() const { return spec_; }

 private:
  ShipmentSpec spec_;
  ShipmentMethod method_;
};

}  // namespace ps
