#include <filesystem>
#include <random>

#include "doctest.h"
#include "ps/config.hpp"
#include "ps/datagen.hpp"
#include "ps/pipeline.hpp"

namespace {

ps::PsParams small_params(std::vector<ps::PolicyKind> kinds = ps::default_library()) {
  ps::PsParams p;
  p.kinds = std::move(kinds);
  p.folds = 5;
  p.repetitions = 10;
  p.seed = 42;
  p.tree.restarts = 1;
  return p;
}

std::filesystem::path temp_dir(const std::string& name) {
  auto d = std::filesystem::temp_directory_path() / ("ps_test_" + name);
  std::filesystem::remove_all(d);
  return d;
}

}  // namespace

TEST_CASE("majority vote") {
  const std::size_t v1[] = {1, 1, 2};
  CHECK(ps::majority_vote(v1, 3, 0) == 1);
  std::vector<std::size_t> tie(50);
  for (std::size_t i = 0; i < 50; ++i) tie[i] = i < 25 ? 0 : 3;
  int zeros = 0;
  for (std::uint64_t s = 0; s < 10000; ++s) {
    const auto pick = ps::majority_vote(tie, 5, ps::SeedSpec(7).derive("vote", {s}));
    CHECK((pick == 0 || pick == 3));
    zeros += pick == 0;
  }
  CHECK(std::abs(zeros / 1e4 - 0.5) <= 0.05);
  CHECK_THROWS(ps::majority_vote(std::vector<std::size_t>{}, 3, 0));
  CHECK_THROWS(ps::majority_vote(std::vector<std::size_t>{4}, 3, 0));
}

TEST_CASE("train_ps on newsvendor") {
  auto problem = std::make_shared<ps::NewsvendorProblem>(ps::NewsvendorSpec{});
  auto train = ps::gen_newsvendor(250, {}, 3);
  auto params = small_params();
  auto ens = ps::train_ps(train, problem, params);
  CHECK(ens.trees.size() == 50);
  CHECK(ens.policies.size() == 5);
  CHECK(ens.cost_tables.size() == 5);
  std::size_t rows = 0;
  for (const auto& t : ens.cost_tables) {
    rows += t.row_indices.size();
    CHECK(t.costs.cols() == 5);
  }
  CHECK(rows == 250);
  CHECK(ps::audit_no_leakage(ens));
  for (const auto& a : ens.audit) CHECK(a.fit_days.size() == 5 * 200);

  auto tampered = ens;
  tampered.audit[2].fit_days.push_back(tampered.audit[2].held_out_days.front());
  CHECK_FALSE(ps::audit_no_leakage(tampered));

  // Meta-policy feasibility on fuzzed covariates.
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> dow(0, 6), dom(1, 31), month(1, 12), doy(1, 366), bit(0, 1);
  for (int i = 0; i < 10000; ++i) {
    const int d = dow(rng);
    const double x[] = {double(d), double(dom(rng)), double(month(rng)), double(doy(rng)), d >= 5 ? 1.0 : 0.0,
                        double(bit(rng))};
    CHECK(problem->is_feasible(ps::ps_prescribe(ens, x, ps::vote_seed(ens, i))));
  }

  // Determinism.
  auto again = ps::train_ps(train, problem, params);
  CHECK(again.trees == ens.trees);
  for (std::size_t i = 0; i < 20; ++i) {
    CHECK(ps::ps_prescribe(again, train.x(i), 5) == ps::ps_prescribe(ens, train.x(i), 5));
  }

  // Save and reload.
  auto dir = temp_dir("ensemble");
  ps::save_ensemble(dir, ens, train, params);
  CHECK(std::filesystem::exists(dir / "trees" / "k4_r9.tree"));
  CHECK(std::filesystem::exists(dir / "policies" / "PP-RF.json"));
  auto loaded = ps::load_ensemble(dir, problem);
  CHECK(loaded.trees == ens.trees);
  CHECK(loaded.kinds == ens.kinds);
  for (std::size_t i = 0; i < 30; ++i) {
    CHECK(ps::ps_prescribe(loaded, train.x(i), ps::vote_seed(loaded, i)) ==
          ps::ps_prescribe(ens, train.x(i), ps::vote_seed(ens, i)));
  }
  std::filesystem::remove_all(dir);
}

TEST_CASE("single-policy library reduces to that policy") {
  auto problem = std::make_shared<ps::NewsvendorProblem>(ps::NewsvendorSpec{});
  auto train = ps::gen_newsvendor(200, {}, 8);
  auto ens = ps::train_ps(train, problem, small_params({ps::PolicyKind::PP_KNN}));
  for (const auto& t : ens.trees) CHECK(t.nodes.size() == 1);
  auto test = ps::gen_newsvendor(50, {}, 9);
  for (std::size_t i = 0; i < test.size(); ++i) {
    CHECK(ps::ps_prescribe(ens, test.x(i), i) == ens.policies[0]->prescribe(test.x(i)));
  }
}

TEST_CASE("tied library collapses to the first index") {
  auto problem = std::make_shared<ps::NewsvendorProblem>(ps::NewsvendorSpec{});
  auto train = ps::gen_newsvendor(150, {}, 11);
  auto ens = ps::train_ps(train, problem, small_params({ps::PolicyKind::SAA, ps::PolicyKind::SAA}));
  for (const auto& t : ens.trees) {
    CHECK(t.nodes.size() == 1);
    CHECK(t.nodes[0].policy == 0);
  }
  CHECK(ps::ps_select(ens, train.x(0), 1) == 0);
}

TEST_CASE("train_ps on shipment") {
  ps::ExperimentConfig cfg;
  cfg.problem = "shipment";
  auto problem = ps::make_problem(cfg);
  auto train = ps::gen_shipment(150, {}, 2);
  auto params = small_params();
  params.repetitions = 2;
  auto ens = ps::train_ps(train, problem, params);
  CHECK(ens.trees.size() == 10);
  CHECK(ps::audit_no_leakage(ens));
  for (std::size_t i = 0; i < 10; ++i) CHECK(problem->is_feasible(ps::ps_prescribe(ens, train.x(i), i)));
}

TEST_CASE("config parsing") {
  auto j = ps::Json::parse(R"({
    "problem": "shipment",
    "seed": 9,
    "data": {"n_values": [200, 400], "samples": 3, "test_size": 500},
    "pipeline": {"folds": 4, "repetitions": 2, "policies": ["SAA", "pp-rf"]},
    "predictors": {"knn_k": 7, "rf_max_depth": 6},
    "tree": {"max_depth": 2, "tune_lambda": false},
    "generator": {"latent_sd": 5.0, "epoch": "2019-04-01"},
    "output": {"dump_trees": true}
  })");
  auto c = ps::parse_config(j);
  CHECK(c.problem == "shipment");
  CHECK(c.n_values == std::vector<std::size_t>{200, 400});
  CHECK(c.kinds == std::vector<ps::PolicyKind>{ps::PolicyKind::SAA, ps::PolicyKind::PP_RF});
  CHECK(c.policy.knn_k == 7);
  CHECK(*c.policy.forest.max_depth == 6);
  CHECK(c.tree.max_depth == 2);
  CHECK_FALSE(c.tree.tune_lambda);
  CHECK(c.shipment_gen.latent_sd == 5.0);
  CHECK(c.shipment_gen.epoch == std::chrono::year_month_day{std::chrono::year{2019}, std::chrono::April, std::chrono::day{1}});
  CHECK(c.dump_trees);

  // Round trip through JSON.
  auto back = ps::parse_config(ps::to_json(c));
  CHECK(ps::to_json(back) == ps::to_json(c));

  CHECK_THROWS_AS(ps::parse_config(ps::Json::parse(R"({"problme": "x"})")), ps::ConfigError);
  CHECK_THROWS_AS(ps::parse_config(ps::Json::parse(R"({"data": {"n_values": [10]}})")), ps::ConfigError);
  CHECK_THROWS_AS(ps::parse_config(ps::Json::parse(R"({"pipeline": {"folds": 1}})")), ps::ConfigError);
  CHECK_THROWS_AS(ps::parse_config(ps::Json::parse(R"({"pipeline": {"policies": ["oracle"]}})")), ps::ConfigError);
  CHECK_THROWS_AS(ps::parse_config(ps::Json::parse(R"({"data": {"samples": "two"}})")), ps::ConfigError);

  // Shipping costs depend only on the seed.
  auto a = ps::problem_json(c), b = ps::problem_json(back);
  CHECK(a == b);
}
