#pragma once

#include <cstdint>
#include <memory>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "ps/core.hpp"
#include "ps/predictors.hpp"
#include "ps/problems.hpp"

namespace ps {

enum class PolicyKind { SAA, PPT_RF, PP_RF, PPT_KNN, PP_KNN };

std::string to_string(PolicyKind kind);
/// Accepts the names produced by to_string (SAA, PPt-RF, ...), case-insensitive.
PolicyKind parse_policy_kind(std::string_view name);
/// SAA, PPt-RF, PP-RF, PPt-kNN, PP-kNN.
const std::vector<PolicyKind>& default_library();

/// Anything mapping covariates to a decision.
class Prescriber {
 public:
  virtual ~Prescriber() = default;
  virtual std::string name() const = 0;
  virtual Decision prescribe(std::span<const double> x) const = 0;
};

struct PolicyParams {
  std::size_t knn_k = 5;
  ForestParams forest{};
};

struct FitState;

class FittedPolicy final : public Prescriber {
 public:
  FittedPolicy(PolicyKind kind, std::shared_ptr<const FitState> state);

  PolicyKind kind() const { return kind_; }
  std::string name() const override { return to_string(kind_); }
  Decision prescribe(std::span<const double> x) const override;

  /// day_index of every row the policy saw during fitting.
  const std::vector<std::int64_t>& fit_days() const;

 private:
  PolicyKind kind_;
  std::shared_ptr<const FitState> state_;
};

using PolicyPtr = std::shared_ptr<const FittedPolicy>;

/// Fits the listed kinds on `train`. Policies of the same model family share
/// one fitted predictor. Separable problems get one forest per outcome
/// dimension; others one multi-output forest. kNN uses min(k, N) neighbours.
std::vector<PolicyPtr> fit_policies(std::span<const PolicyKind> kinds, const Dataset& train,
                                    std::shared_ptr<const ScenarioProblem> problem, const PolicyParams& params,
                                    std::uint64_t seed);

PolicyPtr fit_policy(PolicyKind kind, const Dataset& train, std::shared_ptr<const ScenarioProblem> problem,
                     const PolicyParams& params, std::uint64_t seed);

/// costs(i, m) = problem.cost(policies[m].prescribe(x_r), y_r) for r = rows[i].
/// Throws FeasibilityError naming the policy on an infeasible prescription.
CostTable build_cost_table(std::size_t fold_id, const Dataset& data, std::span<const std::size_t> rows,
                           std::span<const Prescriber* const> policies, const ScenarioProblem& problem,
                           std::size_t jobs = 1);

std::vector<const Prescriber*> as_prescribers(std::span<const PolicyPtr> policies);

}  // namespace ps
