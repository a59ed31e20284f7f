#include <cstdio>
#include <iostream>
#include <optional>

#include "CLI11.hpp"
#include "ps/experiment.hpp"

namespace {

constexpr int kOk = 0;
constexpr int kConfigError = 1;
constexpr int kPartialFailure = 2;

struct Options {
  std::string config;
  std::string out;
  std::optional<std::uint64_t> seed;
  std::optional<std::size_t> jobs;
  bool dump_trees = false;
  std::optional<bool> segments;
  double alpha = 0.05;
};

ps::ExperimentConfig resolve(const Options& o) {
  auto cfg = ps::load_config(o.config);
  if (o.seed) cfg.seed = *o.seed;
  if (o.jobs) cfg.jobs = *o.jobs;
  if (o.dump_trees) cfg.dump_trees = true;
  if (o.segments) cfg.segments = *o.segments;
  if (!o.out.empty()) cfg.output_dir = o.out;
  return cfg;
}

int print_report(const std::string& dir, double alpha) {
  auto rep = ps::cmd_report(dir, alpha);
  std::cout << rep.summary_csv;
  for (const auto& n : rep.notes) std::cerr << "note: " << n << '\n';
  std::cerr << "wrote " << dir << "/summary.csv, segments.csv, comparison.csv\n";
  return kOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prescribe-then-select experiments: generate data, train and evaluate, summarize."};
  app.require_subcommand(1);
  Options o;

  auto common = [&](CLI::App* sub) {
    sub->add_option("--config", o.config, "Experiment config (JSON, comments allowed)")->required()->check(CLI::ExistingFile);
    sub->add_option("--seed", o.seed, "Override the master seed");
    sub->add_option("--jobs", o.jobs, "Worker threads (0 = all cores)");
    sub->add_option("--out", o.out, "Override the output directory");
  };

  auto* gen = app.add_subcommand("gen", "Write train samples, the test horizon and a seed manifest");
  common(gen);

  auto* run = app.add_subcommand("run", "Train all policies and PS per (N, sample) cell and evaluate them");
  common(run);
  run->add_flag("--dump-trees", o.dump_trees, "Write two DOT trees and the serialized ensemble per cell");
  run->add_flag("--segments,!--no-segments", o.segments, "Per-segment rows in the results");

  auto* report = app.add_subcommand("report", "Summarize results.csv with t-intervals");
  std::string dir;
  auto* rep_cfg = report->add_option("--config", o.config, "Take the output directory from this config")
                      ->check(CLI::ExistingFile);
  report->add_option("--dir", dir, "Output directory of a run")->excludes(rep_cfg);
  report->add_option("--alpha", o.alpha, "Two-sided level")->check(CLI::Range(1e-9, 1.0));

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kOk : kConfigError;
  }

  try {
    if (gen->parsed()) {
      const auto cfg = resolve(o);
      const auto s = ps::cmd_gen(cfg);
      std::cerr << "wrote " << s.files.size() << " files under " << cfg.output_dir << '\n';
      return kOk;
    }
    if (run->parsed()) {
      const auto cfg = resolve(o);
      const auto s = ps::cmd_run(cfg);
      std::cerr << s.cells << " cells: " << s.computed << " computed, " << s.resumed << " already done, "
                << s.failed << " failed\n";
      for (const auto& e : s.errors) std::cerr << "error: " << e << '\n';
      return s.failed ? kPartialFailure : kOk;
    }
    if (dir.empty()) {
      if (o.config.empty()) {
        std::cerr << "report: pass --dir or --config\n";
        return kConfigError;
      }
      dir = resolve(o).output_dir;
    }
    return print_report(dir, o.alpha);
  } catch (const ps::ConfigError& e) {
    std::cerr << "config error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  }
}
