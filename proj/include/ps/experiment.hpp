#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "ps/config.hpp"
#include "ps/eval.hpp"
#include "ps/pipeline.hpp"

namespace ps {

/// Seeds of one experiment. Every file under the output directory is a
/// function of the config and these values, which all derive from the master.
struct ExperimentSeeds {
  explicit ExperimentSeeds(std::uint64_t master) : spec(master) {}
  SeedSpec spec;

  std::uint64_t train(std::size_t n, std::size_t sample) const { return spec.derive("train", {n, sample}); }
  std::uint64_t test() const { return spec.derive("test"); }
  std::uint64_t pipeline(std::size_t n, std::size_t sample) const { return spec.derive("ps", {n, sample}); }
  std::uint64_t dot(std::size_t n, std::size_t sample) const { return spec.derive("dot", {n, sample}); }
};

Dataset generate_data(const ExperimentConfig& cfg, std::size_t rows, std::uint64_t seed);
PsParams pipeline_params(const ExperimentConfig& cfg, std::uint64_t seed, std::size_t jobs);

/// Everything one (N, sample) cell produces.
struct CellOutcome {
  PsEnsemble ensemble;
  /// Refit single policies in library order, then PS last.
  std::vector<EvalResult> results;
};

CellOutcome run_cell(const ExperimentConfig& cfg, std::shared_ptr<const ScenarioProblem> problem,
                     const Dataset& train, const Dataset& test, std::uint64_t seed, std::size_t jobs = 1);

// Output directory layout:
//   data/manifest.json, data/test.csv, data/train_N{N}_s{s}.csv
//   cells/N{N}_s{s}.csv          one results file per cell, rewritten whole
//   results.csv                  all cells in (N, s) order
//   dot/N{N}_s{s}_{a,b}.dot      with dump_trees
//   ensembles/N{N}_s{s}/         with dump_trees
//   summary.csv, segments.csv, comparison.csv   from report
std::filesystem::path train_path(const std::filesystem::path& out, std::size_t n, std::size_t sample);
std::filesystem::path cell_path(const std::filesystem::path& out, std::size_t n, std::size_t sample);

struct GenSummary {
  std::vector<std::filesystem::path> files;
};
/// Writes the train samples, the test horizon and a manifest of seeds.
GenSummary cmd_gen(const ExperimentConfig& cfg);

struct RunSummary {
  std::size_t cells = 0;
  std::size_t computed = 0;
  std::size_t resumed = 0;  ///< cells whose results file already existed
  std::size_t failed = 0;
  std::vector<std::string> errors;
};
/// Runs every cell that has no results yet (missing data is generated
/// first). A failing cell leaves an ERROR row and the run continues; such
/// cells are retried on the next run.
RunSummary cmd_run(const ExperimentConfig& cfg);

/// Reads results.csv from `out` and writes the summary tables next to it.
/// Throws std::invalid_argument when there are no results.
Report cmd_report(const std::filesystem::path& out, double alpha = 0.05);

}  // namespace ps
