#include "ps/config.hpp"

#include <algorithm>
#include <cstdio>
#include <fstream>
#include <sstream>

namespace ps {

namespace {

void check_keys(const Json& obj, std::initializer_list<const char*> allowed, const std::string& where) {
  if (!obj.is_object()) throw ConfigError(where + ": expected an object");
  for (const auto& [key, _] : obj.items()) {
    if (std::none_of(allowed.begin(), allowed.end(), [&](const char* a) { return key == a; })) {
      throw ConfigError(where + ": unknown key '" + key + "'");
    }
  }
}

template <class T>
void read(const Json& obj, const char* key, T& out, const std::string& where) {
  if (!obj.contains(key)) return;
  try {
    out = obj.at(key).get<T>();
  } catch (const Json::exception&) {
    throw ConfigError(where + "." + key + ": wrong type");
  }
}

void read_count(const Json& obj, const char* key, std::size_t& out, const std::string& where) {
  if (!obj.contains(key)) return;
  const auto& v = obj.at(key);
  if (!v.is_number_integer() || v.get<long long>() < 0) throw ConfigError(where + "." + key + ": expected a count");
  out = v.get<std::size_t>();
}

std::string date_string(std::chrono::year_month_day d) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%04d-%02u-%02u", static_cast<int>(d.year()), static_cast<unsigned>(d.month()),
                static_cast<unsigned>(d.day()));
  return buf;
}

std::chrono::year_month_day parse_date(const std::string& s, const std::string& where) {
  int y = 0;
  unsigned m = 0, d = 0;
  char tail = 0;
  if (std::sscanf(s.c_str(), "%d-%u-%u%c", &y, &m, &d, &tail) != 3) throw ConfigError(where + ": expected YYYY-MM-DD");
  std::chrono::year_month_day ymd{std::chrono::year{y}, std::chrono::month{m}, std::chrono::day{d}};
  if (!ymd.ok()) throw ConfigError(where + ": invalid date");
  return ymd;
}

Json gen_json(const NewsvendorGenParams& g) {
  return {{"baseline", g.baseline},   {"holiday_lift", g.holiday_lift}, {"july_offset", g.july_offset},
          {"august_offset", g.august_offset}, {"sigma_a", g.sigma_a}, {"sigma_b", g.sigma_b},
          {"sigma_c", g.sigma_c},     {"p_holiday", g.p_holiday},     {"epoch", date_string(g.epoch)}};
}

Json gen_json(const ShipmentGenParams& g) {
  return {{"baseline", g.baseline}, {"latent_sd", g.latent_sd}, {"sigma_a", g.sigma_a}, {"sigma_b", g.sigma_b},
          {"sigma_c", g.sigma_c},   {"p_holiday", g.p_holiday}, {"epoch", date_string(g.epoch)}};
}

}  // namespace

Json to_json(const NewsvendorSpec& s) {
  return {{"price", s.price}, {"cost", s.cost}, {"storage", s.storage}, {"capacity", s.capacity}};
}

Json to_json(const ShipmentSpec& s) {
  Json c = Json::array();
  for (std::size_t f = 0; f < s.shipping.rows(); ++f) {
    c.push_back(std::vector<double>(s.shipping.row(f).begin(), s.shipping.row(f).end()));
  }
  return {{"facilities", s.facilities},   {"locations", s.locations}, {"first_stage_cost", s.first_stage_cost},
          {"second_stage_cost", s.second_stage_cost}, {"revenue", s.revenue}, {"shipping", c}};
}

Json to_json(const PolicyParams& p) {
  Json j{{"knn_k", p.knn_k},
         {"rf_trees", p.forest.num_trees},
         {"rf_min_leaf", p.forest.min_leaf},
         {"rf_features_per_split", p.forest.features_per_split}};
  j["rf_max_depth"] = p.forest.max_depth ? Json(*p.forest.max_depth) : Json(nullptr);
  return j;
}

Json to_json(const TreeHyperparams& h) {
  return {{"max_depth", h.max_depth},
          {"min_leaf", h.min_leaf},
          {"lambda", h.lambda},
          {"restarts", h.restarts},
          {"tune_lambda", h.tune_lambda}};
}

NewsvendorSpec newsvendor_spec_from_json(const Json& j) {
  const std::string where = "newsvendor";
  check_keys(j, {"price", "cost", "storage", "capacity"}, where);
  NewsvendorSpec s;
  read(j, "price", s.price, where);
  read(j, "cost", s.cost, where);
  read(j, "storage", s.storage, where);
  read(j, "capacity", s.capacity, where);
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

ShipmentSpec shipment_spec_from_json(const Json& j) {
  const std::string where = "shipment";
  check_keys(j, {"facilities", "locations", "first_stage_cost", "second_stage_cost", "revenue", "shipping"}, where);
  ShipmentSpec s;
  read_count(j, "facilities", s.facilities, where);
  read_count(j, "locations", s.locations, where);
  read(j, "first_stage_cost", s.first_stage_cost, where);
  read(j, "second_stage_cost", s.second_stage_cost, where);
  read(j, "revenue", s.revenue, where);
  std::vector<std::vector<double>> rows;
  read(j, "shipping", rows, where);
  s.shipping = Matrix(s.facilities, s.locations);
  if (rows.size() != s.facilities) throw ConfigError("shipment.shipping: expected one row per facility");
  for (std::size_t f = 0; f < rows.size(); ++f) {
    if (rows[f].size() != s.locations) throw ConfigError("shipment.shipping: expected one entry per location");
    std::copy(rows[f].begin(), rows[f].end(), s.shipping.row(f).begin());
  }
  try {
    s.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return s;
}

PolicyParams policy_params_from_json(const Json& j) {
  const std::string where = "predictors";
  check_keys(j, {"knn_k", "rf_trees", "rf_min_leaf", "rf_max_depth", "rf_features_per_split"}, where);
  PolicyParams p;
  read_count(j, "knn_k", p.knn_k, where);
  read_count(j, "rf_trees", p.forest.num_trees, where);
  read_count(j, "rf_min_leaf", p.forest.min_leaf, where);
  read_count(j, "rf_features_per_split", p.forest.features_per_split, where);
  if (j.contains("rf_max_depth") && !j.at("rf_max_depth").is_null()) {
    std::size_t d = 0;
    read_count(j, "rf_max_depth", d, where);
    p.forest.max_depth = d;
  }
  if (p.knn_k == 0 || p.forest.num_trees == 0 || p.forest.min_leaf == 0) {
    throw ConfigError("predictors: knn_k, rf_trees and rf_min_leaf must be positive");
  }
  return p;
}

TreeHyperparams tree_params_from_json(const Json& j) {
  const std::string where = "tree";
  check_keys(j, {"max_depth", "min_leaf", "lambda", "restarts", "tune_lambda"}, where);
  TreeHyperparams h = PsParams{}.tree;
  read_count(j, "max_depth", h.max_depth, where);
  read_count(j, "min_leaf", h.min_leaf, where);
  read(j, "lambda", h.lambda, where);
  read_count(j, "restarts", h.restarts, where);
  read(j, "tune_lambda", h.tune_lambda, where);
  if (h.min_leaf == 0 || !(h.lambda >= 0.0)) throw ConfigError("tree: need min_leaf >= 1 and lambda >= 0");
  return h;
}

ExperimentConfig parse_config(const Json& j) {
  check_keys(j, {"problem", "seed", "jobs", "output_dir", "data", "pipeline", "predictors", "tree", "newsvendor",
                 "shipment", "generator", "output"},
             "config");
  ExperimentConfig c;
  read(j, "problem", c.problem, "config");
  if (c.problem != "newsvendor" && c.problem != "shipment") throw ConfigError("config.problem: newsvendor or shipment");
  read(j, "seed", c.seed, "config");
  read_count(j, "jobs", c.jobs, "config");
  read(j, "output_dir", c.output_dir, "config");

  if (j.contains("data")) {
    const auto& d = j.at("data");
    check_keys(d, {"n_values", "samples", "test_size"}, "data");
    read(d, "n_values", c.n_values, "data");
    read_count(d, "samples", c.samples, "data");
    read_count(d, "test_size", c.test_size, "data");
  }
  if (j.contains("pipeline")) {
    const auto& p = j.at("pipeline");
    check_keys(p, {"folds", "repetitions", "policies"}, "pipeline");
    read_count(p, "folds", c.folds, "pipeline");
    read_count(p, "repetitions", c.repetitions, "pipeline");
    if (p.contains("policies")) {
      std::vector<std::string> names;
      read(p, "policies", names, "pipeline");
      c.kinds.clear();
      for (const auto& n : names) {
        try {
          c.kinds.push_back(parse_policy_kind(n));
        } catch (const std::invalid_argument& e) {
          throw ConfigError(std::string("pipeline.policies: ") + e.what());
        }
      }
    }
  }
  if (j.contains("predictors")) c.policy = policy_params_from_json(j.at("predictors"));
  if (j.contains("tree")) c.tree = tree_params_from_json(j.at("tree"));
  if (j.contains("newsvendor")) c.newsvendor = newsvendor_spec_from_json(j.at("newsvendor"));
  if (j.contains("shipment")) {
    const auto& s = j.at("shipment");
    check_keys(s, {"first_stage_cost", "second_stage_cost", "revenue", "facilities", "locations"}, "shipment");
    read(s, "first_stage_cost", c.shipment.first_stage_cost, "shipment");
    read(s, "second_stage_cost", c.shipment.second_stage_cost, "shipment");
    read(s, "revenue", c.shipment.revenue, "shipment");
    read_count(s, "facilities", c.shipment.facilities, "shipment");
    read_count(s, "locations", c.shipment.locations, "shipment");
    c.shipment_gen.locations = c.shipment.locations;
  }
  if (j.contains("generator")) {
    const auto& g = j.at("generator");
    const std::string where = "generator";
    check_keys(g, {"baseline", "holiday_lift", "july_offset", "august_offset", "latent_sd", "sigma_a", "sigma_b",
                   "sigma_c", "p_holiday", "epoch"},
               where);
    std::string epoch;
    read(g, "epoch", epoch, where);
    if (c.problem == "newsvendor") {
      auto& n = c.newsvendor_gen;
      if (g.contains("latent_sd")) throw ConfigError("generator.latent_sd applies to shipment only");
      read(g, "baseline", n.baseline, where);
      read(g, "holiday_lift", n.holiday_lift, where);
      read(g, "july_offset", n.july_offset, where);
      read(g, "august_offset", n.august_offset, where);
      read(g, "sigma_a", n.sigma_a, where);
      read(g, "sigma_b", n.sigma_b, where);
      read(g, "sigma_c", n.sigma_c, where);
      read(g, "p_holiday", n.p_holiday, where);
      if (!epoch.empty()) n.epoch = parse_date(epoch, "generator.epoch");
    } else {
      auto& s = c.shipment_gen;
      for (const char* k : {"holiday_lift", "july_offset", "august_offset"}) {
        if (g.contains(k)) throw ConfigError(std::string("generator.") + k + " applies to newsvendor only");
      }
      read(g, "baseline", s.baseline, where);
      read(g, "latent_sd", s.latent_sd, where);
      read(g, "sigma_a", s.sigma_a, where);
      read(g, "sigma_b", s.sigma_b, where);
      read(g, "sigma_c", s.sigma_c, where);
      read(g, "p_holiday", s.p_holiday, where);
      if (!epoch.empty()) s.epoch = parse_date(epoch, "generator.epoch");
    }
  }
  if (j.contains("output")) {
    const auto& o = j.at("output");
    check_keys(o, {"dump_trees", "segments"}, "output");
    read(o, "dump_trees", c.dump_trees, "output");
    read(o, "segments", c.segments, "output");
  }

  if (c.n_values.empty() || c.samples == 0 || c.test_size == 0) throw ConfigError("data: counts must be positive");
  if (c.folds < 2 || c.repetitions == 0) throw ConfigError("pipeline: need folds >= 2 and repetitions >= 1");
  if (c.kinds.empty()) throw ConfigError("pipeline.policies: empty library");
  const std::size_t min_n = 2 * c.folds * std::max(c.tree.min_leaf, c.policy.forest.min_leaf);
  for (auto n : c.n_values) {
    if (n < min_n) throw ConfigError("data.n_values: " + std::to_string(n) + " is below 2*folds*min_leaf = " + std::to_string(min_n));
  }
  if (c.shipment.facilities == 0 || c.shipment.locations == 0) throw ConfigError("shipment: empty network");
  if (!(c.shipment.second_stage_cost > c.shipment.first_stage_cost && c.shipment.first_stage_cost > 0.0)) {
    throw ConfigError("shipment: need 0 < first_stage_cost < second_stage_cost");
  }
  return c;
}

ExperimentConfig load_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config " + path.string());
  Json j;
  try {
    j = Json::parse(in, nullptr, true, true);
  } catch (const Json::parse_error& e) {
    throw ConfigError(path.string() + ": " + e.what());
  }
  return parse_config(j);
}

Json to_json(const ExperimentConfig& c) {
  Json j;
  j["problem"] = c.problem;
  j["seed"] = c.seed;
  j["jobs"] = c.jobs;
  j["output_dir"] = c.output_dir;
  j["data"] = {{"n_values", c.n_values}, {"samples", c.samples}, {"test_size", c.test_size}};
  Json kinds = Json::array();
  for (auto k : c.kinds) kinds.push_back(to_string(k));
  j["pipeline"] = {{"folds", c.folds}, {"repetitions", c.repetitions}, {"policies", kinds}};
  j["predictors"] = to_json(c.policy);
  j["tree"] = to_json(c.tree);
  if (c.problem == "newsvendor") {
    j["newsvendor"] = to_json(c.newsvendor);
    j["generator"] = gen_json(c.newsvendor_gen);
  } else {
    j["shipment"] = {{"first_stage_cost", c.shipment.first_stage_cost},
                     {"second_stage_cost", c.shipment.second_stage_cost},
                     {"revenue", c.shipment.revenue},
                     {"facilities", c.shipment.facilities},
                     {"locations", c.shipment.locations}};
    j["generator"] = gen_json(c.shipment_gen);
  }
  j["output"] = {{"dump_trees", c.dump_trees}, {"segments", c.segments}};
  return j;
}

std::shared_ptr<const ScenarioProblem> make_problem(const ExperimentConfig& c) {
  if (c.problem == "newsvendor") return std::make_shared<NewsvendorProblem>(c.newsvendor);
  auto spec = make_shipment_spec(SeedSpec(c.seed).derive("shipping-costs"), c.shipment.facilities, c.shipment.locations);
  spec.first_stage_cost = c.shipment.first_stage_cost;
  spec.second_stage_cost = c.shipment.second_stage_cost;
  spec.revenue = c.shipment.revenue;
  return std::make_shared<ShipmentProblem>(spec);
}

Json problem_json(const ExperimentConfig& c) {
  auto p = make_problem(c);
  if (auto nv = std::dynamic_pointer_cast<const NewsvendorProblem>(p)) {
    return {{"name", "newsvendor"}, {"spec", to_json(nv->spec())}};
  }
  auto sh = std::dynamic_pointer_cast<const ShipmentProblem>(p);
  return {{"name", "shipment"}, {"spec", to_json(sh->spec())}};
}

}  // namespace ps
