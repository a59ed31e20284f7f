#include "ps/pipeline.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>
#include <unordered_set>

#include "ps/config.hpp"
#include "ps/dataset_io.hpp"
#include "ps/predictors.hpp"

namespace ps {

namespace {

Matrix take_rows(const Matrix& m, std::span<const std::size_t> idx) {
  Matrix out(idx.size(), m.cols());
  for (std::size_t k = 0; k < idx.size(); ++k) std::copy(m.row(idx[k]).begin(), m.row(idx[k]).end(), out.row(k).begin());
  return out;
}

std::uint64_t refit_seed(std::uint64_t master) { return SeedSpec(master).derive("refit"); }

}  // namespace

PsEnsemble train_ps(const Dataset& train, std::shared_ptr<const ScenarioProblem> problem, const PsParams& params) {
  if (params.kinds.empty()) throw std::invalid_argument("train_ps: empty policy library");
  if (params.repetitions == 0) throw std::invalid_argument("train_ps: need at least one repetition");
  const std::size_t n = train.size();
  const std::size_t K = params.folds, R = params.repetitions, M = params.kinds.size();
  const SeedSpec seeds(params.seed);
  const FoldPartition folds = make_folds(n, K, seeds.child("folds"));
  const Matrix x = covariate_matrix(train);

  PsEnsemble ens;
  ens.kinds = params.kinds;
  ens.folds = K;
  ens.repetitions = R;
  ens.seed = params.seed;
  ens.cost_tables.resize(K);
  ens.audit.resize(K);

  parallel_for(K, params.jobs, [&](std::size_t k) {
    try {
      const auto complement = folds.complement(k, n);
      const Dataset fit_rows = train.subset(complement);
      auto policies = fit_policies(params.kinds, fit_rows, problem, params.policy, seeds.derive("fold-policies", {k}));
      auto& audit = ens.audit[k];
      audit.fold = k;
      for (const auto& p : policies) audit.fit_days.insert(audit.fit_days.end(), p->fit_days().begin(), p->fit_days().end());
      for (std::size_t i : folds.folds[k]) audit.held_out_days.push_back(train.day_index(i));
      const auto pres = as_prescribers(policies);
      ens.cost_tables[k] = build_cost_table(k, train, folds.folds[k], pres, *problem, 1);
    } catch (const std::exception& e) {
      throw std::runtime_error("fold " + std::to_string(k) + ": " + e.what());
    }
  });

  ens.trees.resize(K * R);
  parallel_for(K * R, params.jobs, [&](std::size_t t) {
    const std::size_t k = t / R, r = t % R;
    try {
      const Matrix xk = take_rows(x, folds.folds[k]);
      ens.trees[t] = fit_tree(xk, ens.cost_tables[k].costs, params.tree, seeds.derive("tree", {k, r}));
    } catch (const std::exception& e) {
      throw std::runtime_error("fold " + std::to_string(k) + " repetition " + std::to_string(r) + ": " + e.what());
    }
    if (ens.trees[t].num_policies != M) throw std::logic_error("train_ps: tree policy count mismatch");
  });

  ens.policies = fit_policies(params.kinds, train, problem, params.policy, refit_seed(params.seed));
  return ens;
}

bool audit_no_leakage(const PsEnsemble& ens) {
  for (const auto& a : ens.audit) {
    std::unordered_set<std::int64_t> held(a.held_out_days.begin(), a.held_out_days.end());
    for (auto d : a.fit_days) {
      if (held.count(d)) return false;
    }
  }
  return !ens.audit.empty();
}

std::size_t majority_vote(std::span<const std::size_t> votes, std::size_t num_policies, std::uint64_t tie_seed) {
  if (votes.empty()) throw std::invalid_argument("majority_vote: no votes");
  std::vector<std::size_t> count(num_policies, 0);
  for (std::size_t v : votes) {
    if (v >= num_policies) throw std::invalid_argument("majority_vote: vote out of range");
    ++count[v];
  }
  const std::size_t top = *std::max_element(count.begin(), count.end());
  std::vector<std::size_t> tied;
  for (std::size_t m = 0; m < num_policies; ++m) {
    if (count[m] == top) tied.push_back(m);
  }
  if (tied.size() == 1) return tied[0];
  std::mt19937_64 rng(tie_seed);
  return tied[std::uniform_int_distribution<std::size_t>(0, tied.size() - 1)(rng)];
}

std::uint64_t vote_seed(const PsEnsemble& ens, std::size_t row) { return SeedSpec(ens.seed).derive("vote", {row}); }

std::size_t ps_select(const PsEnsemble& ens, std::span<const double> x, std::uint64_t tie_seed) {
  std::vector<std::size_t> votes;
  votes.reserve(ens.trees.size());
  for (const auto& t : ens.trees) votes.push_back(t.select(x));
  return majority_vote(votes, ens.kinds.size(), tie_seed);
}

Decision ps_prescribe(const PsEnsemble& ens, std::span<const double> x, std::uint64_t tie_seed) {
  return ens.policies.at(ps_select(ens, x, tie_seed))->prescribe(x);
}

// ---------------------------------------------------------------------------

namespace {

std::string tree_file(std::size_t k, std::size_t r) {
  return "k" + std::to_string(k) + "_r" + std::to_string(r) + ".tree";
}

std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

}  // namespace

void save_ensemble(const std::filesystem::path& dir, const PsEnsemble& ens, const Dataset& train,
                   const PsParams& params, const std::string& problem_json) {
  namespace fs = std::filesystem;
  fs::create_directories(dir / "trees");
  fs::create_directories(dir / "policies");
  Json meta;
  meta["format"] = "ps-ensemble";
  meta["version"] = 1;
  meta["index_base"] = 0;
  meta["folds"] = ens.folds;
  meta["repetitions"] = ens.repetitions;
  meta["seed"] = ens.seed;
  meta["refit_seed"] = refit_seed(ens.seed);
  meta["library"] = Json::array();
  for (auto k : ens.kinds) meta["library"].push_back(to_string(k));
  meta["policy_params"] = to_json(params.policy);
  meta["tree_params"] = to_json(params.tree);
  meta["problem"] = Json::parse(problem_json);
  meta["trees"] = Json::array();
  for (std::size_t k = 0; k < ens.folds; ++k) {
    for (std::size_t r = 0; r < ens.repetitions; ++r) {
      const auto name = tree_file(k, r);
      std::ostringstream os;
      write_tree(os, ens.tree(k, r));
      write_file_atomic(dir / "trees" / name, os.str());
      meta["trees"].push_back({{"fold", k}, {"repetition", r}, {"file", "trees/" + name},
                               {"seed", SeedSpec(ens.seed).derive("tree", {k, r})}});
    }
  }
  write_dataset_csv(dir / "policies" / "train.csv", train);
  meta["policies"] = Json::array();
  for (std::size_t m = 0; m < ens.kinds.size(); ++m) {
    const auto name = to_string(ens.kinds[m]);
    Json p{{"index", m}, {"kind", name}, {"seed", refit_seed(ens.seed)}, {"params", to_json(params.policy)},
           {"train", "policies/train.csv"}};
    write_file_atomic(dir / "policies" / (name + ".json"), p.dump(2) + "\n");
    meta["policies"].push_back("policies/" + name + ".json");
  }
  write_file_atomic(dir / "meta.json", meta.dump(2) + "\n");
}

PsEnsemble load_ensemble(const std::filesystem::path& dir, std::shared_ptr<const ScenarioProblem> problem) {
  const Json meta = Json::parse(slurp(dir / "meta.json"));
  if (meta.value("format", "") != "ps-ensemble" || meta.value("version", 0) != 1) {
    throw std::runtime_error("load_ensemble: unrecognized manifest");
  }
  if (meta.value("index_base", -1) != 0) throw std::runtime_error("load_ensemble: unsupported index base");
  PsEnsemble ens;
  ens.folds = meta.at("folds").get<std::size_t>();
  ens.repetitions = meta.at("repetitions").get<std::size_t>();
  ens.seed = meta.at("seed").get<std::uint64_t>();
  for (const auto& k : meta.at("library")) ens.kinds.push_back(parse_policy_kind(k.get<std::string>()));
  ens.trees.resize(ens.folds * ens.repetitions);
  for (const auto& t : meta.at("trees")) {
    const auto k = t.at("fold").get<std::size_t>(), r = t.at("repetition").get<std::size_t>();
    if (k >= ens.folds || r >= ens.repetitions) throw std::runtime_error("load_ensemble: tree index out of range");
    std::istringstream is(slurp(dir / t.at("file").get<std::string>()));
    ens.trees[k * ens.repetitions + r] = read_tree(is);
  }
  for (const auto& t : ens.trees) {
    if (t.nodes.empty()) throw std::runtime_error("load_ensemble: missing tree");
    if (t.num_policies != ens.kinds.size()) throw std::runtime_error("load_ensemble: tree/library size mismatch");
  }
  const Dataset train = read_dataset_csv(dir / "policies" / "train.csv");
  const auto params = policy_params_from_json(meta.at("policy_params"));
  ens.policies = fit_policies(ens.kinds, train, std::move(problem), params, meta.at("refit_seed").get<std::uint64_t>());
  return ens;
}

}  // namespace ps
