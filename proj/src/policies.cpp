#include "ps/policies.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <optional>
#include <stdexcept>

namespace ps {

std::string to_string(PolicyKind kind) {
  switch (kind) {
    case PolicyKind::SAA: return "SAA";
    case PolicyKind::PPT_RF: return "PPt-RF";
    case PolicyKind::PP_RF: return "PP-RF";
    case PolicyKind::PPT_KNN: return "PPt-kNN";
    case PolicyKind::PP_KNN: return "PP-kNN";
  }
  return "?";
}

PolicyKind parse_policy_kind(std::string_view name) {
  auto lower = [](std::string_view s) {
    std::string out(s);
    for (auto& c : out) c = static_cast<char>(std::tolower(static_cast<unsigned char>(c)));
    std::replace(out.begin(), out.end(), '_', '-');
    return out;
  };
  const std::string key = lower(name);
  for (PolicyKind k : default_library()) {
    if (lower(to_string(k)) == key) return k;
  }
  throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

const std::vector<PolicyKind>& default_library() {
  static const std::vector<PolicyKind> lib{PolicyKind::SAA, PolicyKind::PPT_RF, PolicyKind::PP_RF,
                                           PolicyKind::PPT_KNN, PolicyKind::PP_KNN};
  return lib;
}

struct FitState {
  std::shared_ptr<const ScenarioProblem> problem;
  Matrix y;
  std::vector<std::int64_t> days;
  std::optional<Decision> saa;
  std::optional<KnnModel> knn;
  // One forest per outcome dimension, or a single multi-output forest.
  std::vector<ForestModel> forests;
};

FittedPolicy::FittedPolicy(PolicyKind kind, std::shared_ptr<const FitState> state)
    : kind_(kind), state_(std::move(state)) {}

const std::vector<std::int64_t>& FittedPolicy::fit_days() const { return state_->days; }

namespace {

Decision solve_point(const ScenarioProblem& problem, std::span<const double> yhat) {
  Matrix one(1, yhat.size());
  std::copy(yhat.begin(), yhat.end(), one.row(0).begin());
  const double w[] = {1.0};
  return problem.solve_weighted(one, w);
}

Decision solve_support(const ScenarioProblem& problem, const Matrix& y, const WeightVector& wv) {
  Matrix sc(wv.support_size(), y.cols());
  std::vector<double> w(wv.support_size());
  for (std::size_t s = 0; s < wv.support_size(); ++s) {
    const auto [idx, weight] = wv.entries[s];
    std::copy(y.row(idx).begin(), y.row(idx).end(), sc.row(s).begin());
    w[s] = weight;
  }
  return problem.solve_weighted(sc, w);
}

}  // namespace

Decision FittedPolicy::prescribe(std::span<const double> x) const {
  const auto& st = *state_;
  const auto& problem = *st.problem;
  switch (kind_) {
    case PolicyKind::SAA: return *st.saa;
    case PolicyKind::PPT_KNN: return solve_point(problem, st.knn->predict(x));
    case PolicyKind::PP_KNN: return solve_support(problem, st.y, st.knn->weights(x));
    case PolicyKind::PPT_RF: {
      if (st.forests.size() == 1) return solve_point(problem, st.forests[0].predict(x));
      Vector yhat(st.forests.size());
      for (std::size_t j = 0; j < yhat.size(); ++j) yhat[j] = st.forests[j].predict(x)[0];
      return solve_point(problem, yhat);
    }
    case PolicyKind::PP_RF: {
      if (st.forests.size() == 1) return solve_support(problem, st.y, st.forests[0].weights(x));
      std::vector<Marginal> ms(st.forests.size());
      for (std::size_t j = 0; j < ms.size(); ++j) {
        const auto wv = st.forests[j].weights(x);
        ms[j].values.reserve(wv.support_size());
        ms[j].weights.reserve(wv.support_size());
        for (const auto& [idx, weight] : wv.entries) {
          ms[j].values.push_back(st.y(idx, j));
          ms[j].weights.push_back(weight);
        }
      }
      return problem.solve_marginals(ms);
    }
  }
  throw std::logic_error("unknown policy kind");
}

std::vector<PolicyPtr> fit_policies(std::span<const PolicyKind> kinds, const Dataset& train,
                                    std::shared_ptr<const ScenarioProblem> problem, const PolicyParams& params,
                                    std::uint64_t seed) {
  if (train.empty()) throw std::invalid_argument("fit_policies: empty training set");
  if (!problem) throw std::invalid_argument("fit_policies: no problem");
  if (train.outcome_dim() != problem->outcome_dim()) throw std::invalid_argument("fit_policies: outcome dimension mismatch");
  auto has = [&](std::initializer_list<PolicyKind> ks) {
    return std::any_of(kinds.begin(), kinds.end(),
                       [&](PolicyKind k) { return std::find(ks.begin(), ks.end(), k) != ks.end(); });
  };

  auto st = std::make_shared<FitState>();
  st->problem = problem;
  st->y = outcome_matrix(train);
  st->days.resize(train.size());
  for (std::size_t i = 0; i < train.size(); ++i) st->days[i] = train.day_index(i);
  const Matrix x = covariate_matrix(train);
  const SeedSpec s(seed);

  if (has({PolicyKind::SAA})) {
    std::vector<double> w(train.size(), 1.0 / static_cast<double>(train.size()));
    st->saa = problem->solve_weighted(st->y, w);
  }
  if (has({PolicyKind::PPT_KNN, PolicyKind::PP_KNN})) {
    st->knn = KnnModel::fit(x, st->y, std::min(params.knn_k, train.size()));
  }
  if (has({PolicyKind::PPT_RF, PolicyKind::PP_RF})) {
    if (problem->separable() && train.outcome_dim() > 1) {
      for (std::size_t j = 0; j < train.outcome_dim(); ++j) {
        st->forests.push_back(ForestModel::fit(x, outcome_column(train, j), params.forest, s.derive("forest", {j})));
      }
    } else {
      st->forests.push_back(ForestModel::fit(x, st->y, params.forest, s.derive("forest")));
    }
  }

  std::shared_ptr<const FitState> shared = st;
  std::vector<PolicyPtr> out;
  out.reserve(kinds.size());
  for (PolicyKind k : kinds) out.push_back(std::make_shared<const FittedPolicy>(k, shared));
  return out;
}

PolicyPtr fit_policy(PolicyKind kind, const Dataset& train, std::shared_ptr<const ScenarioProblem> problem,
                     const PolicyParams& params, std::uint64_t seed) {
  const PolicyKind kinds[] = {kind};
  return fit_policies(kinds, train, std::move(problem), params, seed).front();
}

std::vector<const Prescriber*> as_prescribers(std::span<const PolicyPtr> policies) {
  std::vector<const Prescriber*> out;
  out.reserve(policies.size());
  for (const auto& p : policies) out.push_back(p.get());
  return out;
}

CostTable build_cost_table(std::size_t fold_id, const Dataset& data, std::span<const std::size_t> rows,
                           std::span<const Prescriber* const> policies, const ScenarioProblem& problem,
                           std::size_t jobs) {
  CostTable table;
  table.fold_id = fold_id;
  table.row_indices.assign(rows.begin(), rows.end());
  table.costs = Matrix(rows.size(), policies.size());
  parallel_for(rows.size(), jobs, [&](std::size_t i) {
    const std::size_t r = rows[i];
    for (std::size_t m = 0; m < policies.size(); ++m) {
      const Decision z = policies[m]->prescribe(data.x(r));
      if (!problem.is_feasible(z)) {
        throw FeasibilityError("policy " + policies[m]->name() + " prescribed an infeasible decision for row " +
                               std::to_string(r));
      }
      const double c = problem.cost(z, data.y(r));
      if (!std::isfinite(c)) throw SolverError("policy " + policies[m]->name() + " produced a non-finite cost");
      table.costs(i, m) = c;
    }
  });
  return table;
}

}  // namespace ps
