#pragma once

#include <cstdint>
#include <filesystem>
#include <memory>
#include <string>
#include <vector>

#include "json.hpp"
#include "ps/datagen.hpp"
#include "ps/pipeline.hpp"
#include "ps/problems.hpp"

namespace ps {

using Json = nlohmann::json;

Json to_json(const NewsvendorSpec& s);
Json to_json(const ShipmentSpec& s);
Json to_json(const PolicyParams& p);
Json to_json(const TreeHyperparams& h);

NewsvendorSpec newsvendor_spec_from_json(const Json& j);
ShipmentSpec shipment_spec_from_json(const Json& j);
PolicyParams policy_params_from_json(const Json& j);
TreeHyperparams tree_params_from_json(const Json& j);

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// One experiment: which problem, the (N, sample) grid, and every knob of the
/// pipeline. Missing keys take the defaults below.
struct ExperimentConfig {
  std::string problem = "newsvendor";
  std::vector<std::size_t> n_values{250};
  std::size_t samples = 2;
  std::size_t test_size = 2000;
  std::size_t folds = 5;
  std::size_t repetitions = 10;
  std::vector<PolicyKind> kinds = default_library();
  PolicyParams policy{};
  TreeHyperparams tree = PsParams{}.tree;
  NewsvendorSpec newsvendor{};
  ShipmentSpec shipment{};  // shipping costs are drawn, see make_problem
  NewsvendorGenParams newsvendor_gen{};
  ShipmentGenParams shipment_gen{};
  std::uint64_t seed = 1;
  std::size_t jobs = 0;  // 0 = all cores
  std::string output_dir = "out";
  bool dump_trees = false;
  bool segments = true;
};

/// Throws ConfigError on unknown keys, wrong types or invalid values.
ExperimentConfig parse_config(const Json& j);
ExperimentConfig load_config(const std::filesystem::path& path);
Json to_json(const ExperimentConfig& c);

/// Shipping costs come from the experiment seed, so every policy and fold
/// sees the same network.
std::shared_ptr<const ScenarioProblem> make_problem(const ExperimentConfig& c);
Json problem_json(const ExperimentConfig& c);

}  // namespace ps
