#include <cmath>
#include <random>
#include <sstream>

#include "doctest.h"
#include "ps/datagen.hpp"
#include "ps/eval.hpp"

using doctest::Approx;

namespace {

class ZeroProblem final : public ps::ScenarioProblem {
 public:
  std::string name() const override { return "zero"; }
  std::size_t decision_dim() const override { return 1; }
  std::size_t outcome_dim() const override { return 1; }
  double cost(std::span<const double>, std::span<const double>) const override { return 0.0; }
  bool is_feasible(std::span<const double>) const override { return true; }
  ps::Decision solve_weighted(const ps::Matrix&, std::span<const double>) const override { return {0.0}; }
};

class YCost final : public ps::ScenarioProblem {
 public:
  std::string name() const override { return "ycost"; }
  std::size_t decision_dim() const override { return 1; }
  std::size_t outcome_dim() const override { return 1; }
  double cost(std::span<const double>, std::span<const double> y) const override { return y[0]; }
  bool is_feasible(std::span<const double>) const override { return true; }
  ps::Decision solve_weighted(const ps::Matrix&, std::span<const double>) const override { return {0.0}; }
};

ps::Dataset labelled(const std::vector<std::pair<char, double>>& rows) {
  ps::Dataset d({"f"}, 1, 1);
  std::int64_t day = 0;
  for (auto [s, y] : rows) {
    const double x[] = {0.0}, yy[] = {y};
    const char lab[] = {s};
    d.add_row(day++, x, yy, lab);
  }
  return d;
}

}  // namespace

TEST_CASE("avg_cost basics") {
  auto d = labelled({{'A', 1}, {'B', 2}, {'C', 3}});
  auto zero = ps::avg_cost("z", [](std::size_t) { return ps::Decision{0.0}; }, d, ZeroProblem{});
  CHECK(zero.mean_cost == 0.0);

  auto one = labelled({{'A', 7.5}});
  auto r1 = ps::avg_cost("y", [](std::size_t) { return ps::Decision{0.0}; }, one, YCost{});
  CHECK(r1.mean_cost == 7.5);
  CHECK(r1.mean_profit() == -7.5);

  // Segment counts (10, 20, 30) recompose the overall mean.
  std::vector<std::pair<char, double>> rows;
  std::mt19937_64 rng(1);
  std::normal_distribution<double> n(5, 2);
  for (int i = 0; i < 10; ++i) rows.push_back({'A', n(rng)});
  for (int i = 0; i < 20; ++i) rows.push_back({'B', n(rng)});
  for (int i = 0; i < 30; ++i) rows.push_back({'C', n(rng)});
  auto d60 = labelled(rows);
  auto r = ps::avg_cost("y", [](std::size_t) { return ps::Decision{0.0}; }, d60, YCost{});
  CHECK(r.segments.at('A').count == 10);
  CHECK(r.segments.at('C').count == 30);
  double recomposed = 0.0;
  for (const auto& [s, st] : r.segments) recomposed += st.count * st.mean_cost;
  CHECK(std::abs(recomposed / 60 - r.mean_cost) <= 1e-9);

  // Permutation invariance.
  std::reverse(rows.begin(), rows.end());
  auto rr = ps::avg_cost("y", [](std::size_t) { return ps::Decision{0.0}; }, labelled(rows), YCost{});
  CHECK(rr.mean_cost == Approx(r.mean_cost).epsilon(1e-12));
}

TEST_CASE("newsvendor segment attribution is per product-day") {
  ps::NewsvendorProblem prob(ps::NewsvendorSpec{});
  auto test = ps::gen_newsvendor(300, {}, 4);
  ps::Decision q{30, 30, 30, 30};
  auto r = ps::avg_cost("fixed", [&](std::size_t) { return q; }, test, prob);
  std::size_t units = 0;
  double total = 0.0;
  for (const auto& [s, st] : r.segments) {
    units += st.count;
    total += st.count * st.mean_cost;
  }
  CHECK(units == 4 * 300);
  CHECK(std::abs(total / 300 - r.mean_cost) <= 1e-9 * std::abs(r.mean_cost));
}

TEST_CASE("student t intervals") {
  CHECK(ps::student_t_quantile(0.975, 4) == Approx(2.7764).epsilon(1e-4));
  CHECK(std::abs(ps::student_t_quantile(0.975, 4) - 2.776445105) < 1e-6);
  CHECK(std::abs(ps::student_t_quantile(0.975, 30) - 2.042272456) < 1e-6);
  CHECK(std::abs(ps::student_t_quantile(0.95, 1) - 6.313751515) < 1e-6);

  const double flat[] = {4, 4, 4, 4};
  auto c0 = ps::student_t_ci(flat);
  CHECK(c0.lo == 4.0);
  CHECK(c0.hi == 4.0);

  const double v[] = {1, 2, 3, 4, 5};
  auto c = ps::student_t_ci(v, 0.05);
  CHECK(c.mean == 3.0);
  CHECK(c.sd == Approx(std::sqrt(2.5)));
  CHECK(c.hi - c.mean == Approx(1.963).epsilon(1e-3));
  CHECK(c.mean - c.lo == Approx(c.hi - c.mean));

  auto c1 = ps::student_t_ci(v, 1.0);
  CHECK(c1.lo == 3.0);
  CHECK(c1.hi == 3.0);
  CHECK_THROWS_AS(ps::student_t_ci(std::vector<double>{1.0}), std::invalid_argument);
}

TEST_CASE("interval width shrinks like one over root S") {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> n(0, 1);
  auto mean_width = [&](std::size_t s) {
    double w = 0.0;
    for (int rep = 0; rep < 400; ++rep) {
      std::vector<double> v(s);
      for (auto& x : v) x = n(rng);
      auto c = ps::student_t_ci(v);
      // remove the t factor to isolate sd / sqrt(S)
      w += (c.hi - c.lo) / ps::student_t_quantile(0.975, double(s - 1));
    }
    return w / 400;
  };
  const double w4 = mean_width(4), w16 = mean_width(16), w64 = mean_width(64);
  CHECK(std::abs((w4 / w16) / 2.0 - 1.0) <= 0.15);
  CHECK(std::abs((w16 / w64) / 2.0 - 1.0) <= 0.15);
}

TEST_CASE("compare policies") {
  std::vector<std::pair<std::string, std::vector<double>>> v{
      {"PS", {10, 11, 12}}, {"A", {10, 11, 12}}, {"B", {100, 101, 102}}};
  auto cmp = ps::compare_policies(v);
  REQUIRE(cmp.size() == 3);
  CHECK(cmp[1].ci.lo == cmp[0].ci.lo);
  CHECK(cmp[1].overlaps_reference);
  CHECK_FALSE(cmp[2].overlaps_reference);
  v.push_back({"C", {1, 2}});
  CHECK_THROWS_AS(ps::compare_policies(v), std::invalid_argument);
  CHECK_THROWS_AS(ps::compare_policies({{"A", {1, 2}}}), std::invalid_argument);
}

TEST_CASE("results round trip and report") {
  std::vector<ps::ResultRow> rows;
  for (std::size_t s = 0; s < 3; ++s) {
    ps::EvalResult a;
    a.policy = "SAA";
    a.mean_cost = 10.0 + s;
    a.segments['A'] = {5, 9.0 + s};
    ps::EvalResult b = a;
    b.policy = "PS";
    b.mean_cost = 8.0 + s;
    std::vector<ps::EvalResult> both{a, b};
    auto r = ps::result_rows("shipment", 250, s, both);
    rows.insert(rows.end(), r.begin(), r.end());
  }
  rows.push_back(ps::error_row("shipment", 250, 3, "solver, failed\nbadly"));
  std::stringstream ss;
  ss << ps::kResultsHeader << '\n';
  ps::write_result_rows(ss, rows);
  auto back = ps::read_results_csv(ss);
  REQUIRE(back.size() == rows.size());
  CHECK(back[0].mean_cost == rows[0].mean_cost);
  CHECK(back.back().policy == "ERROR");

  auto rep = ps::build_report(back);
  CHECK(rep.summary_csv.rfind(ps::kSummaryHeader, 0) == 0);
  CHECK(rep.summary_csv.find("shipment,250,SAA,-11,") != std::string::npos);
  CHECK(rep.summary_csv.find("shipment,250,PS,-9,") != std::string::npos);
  CHECK(rep.segments_csv.find("shipment,250,SAA,A,-10,") != std::string::npos);
  CHECK(rep.comparison_csv.find(",PS,") != std::string::npos);
  CHECK(rep.notes.size() == 1);

  CHECK_THROWS_AS(ps::build_report(std::vector<ps::ResultRow>{}), std::invalid_argument);
}
