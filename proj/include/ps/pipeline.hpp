#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <span>
#include <vector>

#include "ps/core.hpp"
#include "ps/policies.hpp"
#include "ps/policytree.hpp"
#include "ps/problems.hpp"

namespace ps {

struct PsParams {
  std::vector<PolicyKind> kinds = default_library();
  std::size_t folds = 5;
  std::size_t repetitions = 10;
  PolicyParams policy{};
  TreeHyperparams tree = [] {
    TreeHyperparams h;
    h.tune_lambda = true;
    return h;
  }();
  std::uint64_t seed = 0;
  std::size_t jobs = 1;
};

/// Which training rows each fold's policies read, next to the rows they were
/// scored on.
struct FoldAudit {
  std::size_t fold = 0;
  std::vector<std::int64_t> held_out_days;
  std::vector<std::int64_t> fit_days;
};

struct PsEnsemble {
  std::vector<PolicyKind> kinds;
  std::size_t folds = 0;
  std::size_t repetitions = 0;
  std::uint64_t seed = 0;
  /// Tree (k, r) lives at index k * repetitions + r.
  std::vector<PolicyTree> trees;
  /// Library refit on all training rows, in `kinds` order.
  std::vector<PolicyPtr> policies;
  std::vector<CostTable> cost_tables;
  std::vector<FoldAudit> audit;

  const PolicyTree& tree(std::size_t k, std::size_t r) const { return trees[k * repetitions + r]; }
};

/// Fold-wise cost tables, R trees per fold, then a full-data refit.
PsEnsemble train_ps(const Dataset& train, std::shared_ptr<const ScenarioProblem> problem, const PsParams& params);

/// True when no fold's policies read any of that fold's held-out rows.
bool audit_no_leakage(const PsEnsemble& ens);

/// Most frequent vote; ties go to a uniformly random tied index drawn from `tie_seed`.
std::size_t majority_vote(std::span<const std::size_t> votes, std::size_t num_policies, std::uint64_t tie_seed);

std::uint64_t vote_seed(const PsEnsemble& ens, std::size_t row);
std::size_t ps_select(const PsEnsemble& ens, std::span<const double> x, std::uint64_t tie_seed);
Decision ps_prescribe(const PsEnsemble& ens, std::span<const double> x, std::uint64_t tie_seed);

/// Directory layout: meta.json (manifest), trees/k{K}_r{R}.tree,
/// policies/train.csv plus policies/{kind}.json. Refit policies are
/// reconstructed on load by refitting on the stored rows with the stored
/// parameters and seed, which reproduces them exactly.
void save_ensemble(const std::filesystem::path& dir, const PsEnsemble& ens, const Dataset& train,
                   const PsParams& params, const std::string& problem_json = "{}");
PsEnsemble load_ensemble(const std::filesystem::path& dir, std::shared_ptr<const ScenarioProblem> problem);

}  // namespace ps
