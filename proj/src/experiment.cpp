#include "ps/experiment.hpp"

#include <algorithm>
#include <fstream>
#include <random>
#include <sstream>
#include <stdexcept>

#include "ps/datagen.hpp"
#include "ps/dataset_io.hpp"

namespace fs = std::filesystem;

namespace ps {

Dataset generate_data(const ExperimentConfig& cfg, std::size_t rows, std::uint64_t seed) {
  if (cfg.problem == "newsvendor") return gen_newsvendor(rows, cfg.newsvendor_gen, seed);
  return gen_shipment(rows, cfg.shipment_gen, seed);
}

PsParams pipeline_params(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t jobs) {
  PsParams p;
  p.kinds = cfg.kinds;
  p.folds = cfg.folds;
  p.repetitions = cfg.repetitions;
  p.policy = cfg.policy;
  p.tree = cfg.tree;
  p.seed = seed;
  p.jobs = jobs;
  return p;
}

CellOutcome run_cell(const ExperimentConfig& cfg, std::shared_ptr<const ScenarioProblem> problem,
                     const Dataset& train, const Dataset& test, std::uint64_t seed, std::size_t jobs) {
  CellOutcome out;
  out.ensemble = train_ps(train, problem, pipeline_params(cfg, seed, jobs));
  for (const auto& p : out.ensemble.policies) out.results.push_back(evaluate_policy(*p, test, *problem, jobs));
  out.results.push_back(evaluate_meta(out.ensemble, test, *problem, jobs));
  if (!cfg.segments) {
    for (auto& r : out.results) r.segments.clear();
  }
  return out;
}

namespace {

std::string cell_name(std::size_t n, std::size_t s) {
  return "N" + std::to_string(n) + "_s" + std::to_string(s);
}

fs::path manifest_path(const fs::path& out) { return out / "data" / "manifest.json"; }
fs::path test_path(const fs::path& out) { return out / "data" / "test.csv"; }

std::string dataset_text(const Dataset& d) {
  std::ostringstream os;
  write_dataset_csv(os, d);
  return os.str();
}

Json manifest(const ExperimentConfig& cfg) {
  const ExperimentSeeds seeds(cfg.seed);
  Json train = Json::array();
  for (std::size_t n : cfg.n_values) {
    for (std::size_t s = 0; s < cfg.samples; ++s) {
      train.push_back({{"N", n},
                       {"sample", s},
                       {"file", "data/train_" + cell_name(n, s) + ".csv"},
                       {"seed", seeds.train(n, s)},
                       {"pipeline_seed", seeds.pipeline(n, s)},
                       {"dot_seed", seeds.dot(n, s)}});
    }
  }
  // Thread count and location never change a result, so they stay out.
  Json config = to_json(cfg);
  config.erase("jobs");
  config.erase("output_dir");
  return {{"format", "ps-experiment"},
          {"version", 1},
          {"master_seed", cfg.seed},
          {"shipping_cost_seed", SeedSpec(cfg.seed).derive("shipping-costs")},
          {"test", {{"file", "data/test.csv"}, {"rows", cfg.test_size}, {"seed", seeds.test()}}},
          {"train", train},
          {"problem", problem_json(cfg)},
          {"config", config}};
}

void ensure_data(const ExperimentConfig& cfg, GenSummary* summary) {
  const fs::path out = cfg.output_dir;
  const ExperimentSeeds seeds(cfg.seed);
  fs::create_directories(out / "data");
  auto emit = [&](const fs::path& p, const std::string& text) {
    write_file_atomic(p, text);
    if (summary) summary->files.push_back(p);
  };
  emit(manifest_path(out), manifest(cfg).dump(2) + "\n");
  if (summary || !fs::exists(test_path(out))) {
    emit(test_path(out), dataset_text(generate_data(cfg, cfg.test_size, seeds.test())));
  }
  for (std::size_t n : cfg.n_values) {
    for (std::size_t s = 0; s < cfg.samples; ++s) {
      const auto p = train_path(out, n, s);
      if (summary || !fs::exists(p)) emit(p, dataset_text(generate_data(cfg, n, seeds.train(n, s))));
    }
  }
}

bool cell_complete(const fs::path& p) {
  std::ifstream in(p);
  if (!in) return false;
  try {
    auto rows = read_results_csv(in);
    if (rows.empty()) return false;
    for (const auto& r : rows) {
      if (r.policy == "ERROR") return false;
    }
    return true;
  } catch (const std::exception&) {
    return false;
  }
}

std::string rows_text(std::span<const ResultRow> rows) {
  std::ostringstream os;
  os << kResultsHeader << '\n';
  write_result_rows(os, rows);
  return os.str();
}

void dump_trees(const fs::path& out, const ExperimentConfig& cfg, const CellOutcome& cell, const Dataset& train,
                std::size_t n, std::size_t s) {
  const auto& ens = cell.ensemble;
  const ExperimentSeeds seeds(cfg.seed);
  std::vector<std::string> names;
  for (auto k : ens.kinds) names.push_back(to_string(k));
  std::mt19937_64 rng(seeds.dot(n, s));
  std::vector<std::size_t> idx(ens.trees.size());
  for (std::size_t i = 0; i < idx.size(); ++i) idx[i] = i;
  std::shuffle(idx.begin(), idx.end(), rng);
  fs::create_directories(out / "dot");
  const char* tags[] = {"a", "b"};
  for (std::size_t t = 0; t < 2; ++t) {
    const auto& tree = ens.trees[idx[t % idx.size()]];
    write_file_atomic(out / "dot" / (cell_name(n, s) + "_" + tags[t] + ".dot"),
                      tree_to_dot(tree, names, train.feature_names()));
  }
  const auto dir = out / "ensembles" / cell_name(n, s);
  fs::remove_all(dir);
  save_ensemble(dir, ens, train, pipeline_params(cfg, ens.seed, 1), problem_json(cfg).dump());
}

}  // namespace

fs::path train_path(const fs::path& out, std::size_t n, std::size_t sample) {
  return out / "data" / ("train_" + cell_name(n, sample) + ".csv");
}

fs::path cell_path(const fs::path& out, std::size_t n, std::size_t sample) {
  return out / "cells" / (cell_name(n, sample) + ".csv");
}

GenSummary cmd_gen(const ExperimentConfig& cfg) {
  GenSummary summary;
  ensure_data(cfg, &summary);
  return summary;
}

RunSummary cmd_run(const ExperimentConfig& cfg) {
  const fs::path out = cfg.output_dir;
  ensure_data(cfg, nullptr);
  fs::create_directories(out / "cells");
  const ExperimentSeeds seeds(cfg.seed);
  const auto problem = make_problem(cfg);
  const Dataset test = read_dataset_csv(test_path(out));

  struct Cell {
    std::size_t n, s;
  };
  std::vector<Cell> cells;
  for (std::size_t n : cfg.n_values) {
    for (std::size_t s = 0; s < cfg.samples; ++s) cells.push_back({n, s});
  }
  RunSummary summary;
  summary.cells = cells.size();
  std::vector<Cell> todo;
  for (const auto& c : cells) {
    if (cell_complete(cell_path(out, c.n, c.s))) {
      ++summary.resumed;
    } else {
      todo.push_back(c);
    }
  }

  // Cells share the pool; leftover threads go to the work inside each cell.
  // Neither split changes any result.
  const std::size_t jobs = cfg.jobs == 0 ? default_jobs() : cfg.jobs;
  const std::size_t outer = std::max<std::size_t>(1, std::min(jobs, todo.size()));
  const std::size_t inner = std::max<std::size_t>(1, jobs / outer);
  std::vector<std::string> errors(todo.size());
  parallel_for(todo.size(), outer, [&](std::size_t i) {
    const auto [n, s] = todo[i];
    std::vector<ResultRow> rows;
    try {
      const Dataset train = read_dataset_csv(train_path(out, n, s));
      const auto cell = run_cell(cfg, problem, train, test, seeds.pipeline(n, s), inner);
      rows = result_rows(cfg.problem, n, s, cell.results);
      if (cfg.dump_trees) dump_trees(out, cfg, cell, train, n, s);
    } catch (const std::exception& e) {
      errors[i] = cell_name(n, s) + ": " + e.what();
      rows = {error_row(cfg.problem, n, s, e.what())};
    }
    write_file_atomic(cell_path(out, n, s), rows_text(rows));
  });
  for (auto& e : errors) {
    if (e.empty()) {
      ++summary.computed;
    } else {
      ++summary.failed;
      summary.errors.push_back(e);
    }
  }

  std::vector<ResultRow> all;
  for (const auto& c : cells) {
    std::ifstream in(cell_path(out, c.n, c.s));
    auto rows = read_results_csv(in);
    all.insert(all.end(), rows.begin(), rows.end());
  }
  write_file_atomic(out / "results.csv", rows_text(all));
  return summary;
}

Report cmd_report(const fs::path& out, double alpha) {
  std::ifstream in(out / "results.csv");
  if (!in) throw std::invalid_argument("no results.csv in " + out.string());
  const auto rows = read_results_csv(in);
  auto rep = build_report(rows, alpha);
  write_file_atomic(out / "summary.csv", rep.summary_csv);
  write_file_atomic(out / "segments.csv", rep.segments_csv);
  write_file_atomic(out / "comparison.csv", rep.comparison_csv);
  return rep;
}

}  // namespace ps
