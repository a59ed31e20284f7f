#include <cmath>
#include <random>

#include "doctest.h"
#include "ps/datagen.hpp"
#include "ps/policies.hpp"

using doctest::Approx;

namespace {

// cost(z, y) = z[0]; decisions are whatever the stub policy returns.
class StubProblem final : public ps::ScenarioProblem {
 public:
  std::string name() const override { return "stub"; }
  std::size_t decision_dim() const override { return 1; }
  std::size_t outcome_dim() const override { return 1; }
  double cost(std::span<const double> z, std::span<const double>) const override { return z[0]; }
  bool is_feasible(std::span<const double> z) const override { return z[0] >= 0.0; }
  ps::Decision solve_weighted(const ps::Matrix&, std::span<const double>) const override { return {0.0}; }
};

class Scripted final : public ps::Prescriber {
 public:
  explicit Scripted(double offset) : offset_(offset) {}
  std::string name() const override { return "scripted"; }
  ps::Decision prescribe(std::span<const double> x) const override { return {x[0] + offset_}; }

 private:
  double offset_;
};

ps::Dataset tiny(std::size_t n) {
  ps::Dataset d({"f"}, 1, 0);
  for (std::size_t i = 0; i < n; ++i) {
    const double x[] = {static_cast<double>(i)};
    const double y[] = {1.0};
    d.add_row(static_cast<std::int64_t>(i), x, y);
  }
  return d;
}

std::shared_ptr<ps::NewsvendorProblem> newsvendor() { return std::make_shared<ps::NewsvendorProblem>(ps::NewsvendorSpec{}); }

}  // namespace

TEST_CASE("policy names round-trip") {
  for (auto k : ps::default_library()) CHECK(ps::parse_policy_kind(ps::to_string(k)) == k);
  CHECK(ps::parse_policy_kind("pp_knn") == ps::PolicyKind::PP_KNN);
  CHECK_THROWS(ps::parse_policy_kind("oracle"));
  CHECK(ps::default_library().size() == 5);
  CHECK(ps::default_library()[1] == ps::PolicyKind::PPT_RF);
}

TEST_CASE("cost table with a stub problem") {
  StubProblem stub;
  auto data = tiny(3);
  Scripted a(0.0), b(10.0), c(0.5), d(2.0), e(7.0);
  std::vector<const ps::Prescriber*> pol{&a, &b, &c, &d, &e};
  std::vector<std::size_t> rows{0, 1, 2};
  auto t = ps::build_cost_table(2, data, rows, pol, stub);
  CHECK(t.fold_id == 2);
  REQUIRE(t.costs.rows() == 3);
  REQUIRE(t.costs.cols() == 5);
  const double offs[] = {0.0, 10.0, 0.5, 2.0, 7.0};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t m = 0; m < 5; ++m) CHECK(t.costs(i, m) == i + offs[m]);

  // Columns follow the policy order.
  std::vector<const ps::Prescriber*> perm{&e, &a, &d, &b, &c};
  auto tp = ps::build_cost_table(2, data, rows, perm, stub, 3);
  const std::size_t map[] = {4, 0, 3, 1, 2};
  for (std::size_t i = 0; i < 3; ++i)
    for (std::size_t m = 0; m < 5; ++m) CHECK(tp.costs(i, m) == t.costs(i, map[m]));

  Scripted bad(-5.0);
  std::vector<const ps::Prescriber*> with_bad{&a, &bad};
  try {
    ps::build_cost_table(0, data, rows, with_bad, stub);
    FAIL("expected a feasibility error");
  } catch (const ps::FeasibilityError& err) {
    CHECK(std::string(err.what()).find("scripted") != std::string::npos);
  }
}

TEST_CASE("cost table on newsvendor with perfect stocking") {
  ps::NewsvendorSpec spec;
  ps::NewsvendorProblem prob(spec);
  class Perfect final : public ps::Prescriber {
   public:
    std::string name() const override { return "perfect"; }
    ps::Decision prescribe(std::span<const double>) const override { return {10, 12, 14, 16}; }
  } perfect;
  ps::Dataset d({"f"}, 4, 0);
  const double x[] = {0.0}, y[] = {10, 12, 14, 16};
  d.add_row(0, x, y);
  std::vector<const ps::Prescriber*> pol{&perfect, &perfect};
  std::vector<std::size_t> rows{0};
  auto t = ps::build_cost_table(0, d, rows, pol, prob);
  double expect = 0.0;
  for (int j = 0; j < 4; ++j) expect += (spec.cost[j] - spec.price[j]) * y[j];
  CHECK(t.costs(0, 0) == Approx(expect));
  CHECK(t.costs(0, 1) == t.costs(0, 0));
}

TEST_CASE("SAA on one row equals the deterministic solve") {
  auto prob = newsvendor();
  ps::Dataset d(ps::calendar_feature_names(), 4, 0);
  const double x[] = {1, 2, 3, 4, 0, 0}, y[] = {20, 25, 30, 35};
  d.add_row(0, x, y);
  auto saa = ps::fit_policy(ps::PolicyKind::SAA, d, prob, {}, 1);
  auto q = saa->prescribe(x);
  for (int j = 0; j < 4; ++j) CHECK(q[j] == Approx(y[j]));
}

TEST_CASE("policy library on generated newsvendor data") {
  auto prob = newsvendor();
  auto train = ps::gen_newsvendor(300, {}, 21);
  auto test = ps::gen_newsvendor(60, {}, 22);
  auto lib = ps::fit_policies(ps::default_library(), train, prob, {}, 5);
  REQUIRE(lib.size() == 5);
  CHECK(lib[0]->fit_days().size() == 300);

  const auto saa0 = lib[0]->prescribe(test.x(0));
  for (std::size_t i = 0; i < test.size(); ++i) {
    CHECK(lib[0]->prescribe(test.x(i)) == saa0);
    for (const auto& p : lib) CHECK(prob->is_feasible(p->prescribe(test.x(i))));
  }

  // Refitting reproduces prescriptions exactly.
  auto again = ps::fit_policies(ps::default_library(), train, prob, {}, 5);
  for (std::size_t i = 0; i < 10; ++i)
    for (std::size_t m = 0; m < 5; ++m) CHECK(lib[m]->prescribe(test.x(i)) == again[m]->prescribe(test.x(i)));

  // PP-kNN with k = N is SAA.
  ps::PolicyParams all;
  all.knn_k = train.size();
  auto ppk = ps::fit_policy(ps::PolicyKind::PP_KNN, train, prob, all, 5);
  for (std::size_t i = 0; i < 10; ++i) CHECK(ppk->prescribe(test.x(i)) == saa0);
}

TEST_CASE("PPt with slack capacity orders the prediction") {
  auto prob = newsvendor();
  auto train = ps::gen_newsvendor(200, {}, 2);
  auto ppt = ps::fit_policy(ps::PolicyKind::PPT_KNN, train, prob, {}, 1);
  auto knn = ps::KnnModel::fit(ps::covariate_matrix(train), ps::outcome_matrix(train), 5);
  for (std::size_t i = 0; i < 20; ++i) {
    auto yhat = knn.predict(train.x(i));
    auto q = ppt->prescribe(train.x(i));
    for (int j = 0; j < 4; ++j) CHECK(q[j] == Approx(yhat[j]));
  }
}

TEST_CASE("PPt-RF with a single depth-0 tree is constant") {
  auto prob = newsvendor();
  auto train = ps::gen_newsvendor(150, {}, 8);
  ps::PolicyParams p;
  p.forest.num_trees = 1;
  p.forest.max_depth = 0;
  auto ppt = ps::fit_policy(ps::PolicyKind::PPT_RF, train, prob, p, 3);
  const auto q0 = ppt->prescribe(train.x(0));
  for (std::size_t i = 1; i < 40; ++i) CHECK(ppt->prescribe(train.x(i)) == q0);
}

TEST_CASE("PP-kNN with k = 1 in a noiseless problem is optimal for the row") {
  auto prob = std::make_shared<ps::ShipmentProblem>(ps::make_shipment_spec(1));
  ps::ShipmentGenParams gp;
  gp.sigma_a = gp.sigma_b = gp.sigma_c = 0.0;
  gp.latent_sd = 0.0;
  auto train = ps::gen_shipment(120, gp, 4);
  ps::PolicyParams p;
  p.knn_k = 1;
  auto pp = ps::fit_policy(ps::PolicyKind::PP_KNN, train, prob, p, 1);
  for (std::size_t i = 0; i < 15; ++i) {
    auto u = pp->prescribe(train.x(i));
    ps::Matrix one(1, 4);
    for (int l = 0; l < 4; ++l) one(0, l) = train.y(i)[l];
    auto best = prob->solve_weighted(one, std::vector<double>{1.0});
    CHECK(prob->cost(u, train.y(i)) == Approx(prob->cost(best, train.y(i))).epsilon(1e-7));
  }
}

TEST_CASE("shipment policies stay feasible and PP point mass matches PPt") {
  auto prob = std::make_shared<ps::ShipmentProblem>(ps::make_shipment_spec(6));
  auto train = ps::gen_shipment(200, {}, 17);
  auto lib = ps::fit_policies(ps::default_library(), train, prob, {}, 9);
  std::mt19937_64 rng(1);
  std::uniform_int_distribution<int> dow(0, 6), dom(1, 28), month(1, 12), hol(0, 1);
  for (int t = 0; t < 25; ++t) {
    const int dw = dow(rng);
    const double x[] = {double(dw), double(dom(rng)), double(month(rng)), double(1 + t * 7), dw >= 5 ? 1.0 : 0.0,
                        double(hol(rng))};
    for (const auto& p : lib) CHECK(prob->is_feasible(p->prescribe(x)));
  }
  // Point-mass weights on scenario i and a point prediction at y_i cost the same.
  const auto y = train.y(3);
  ps::Matrix sc(2, 4);
  for (int l = 0; l < 4; ++l) sc(0, l) = y[l], sc(1, l) = y[l] * 2 + 1;
  auto pm = prob->solve_weighted(sc, std::vector<double>{1.0, 0.0});
  ps::Matrix one(1, 4);
  for (int l = 0; l < 4; ++l) one(0, l) = y[l];
  auto pt = prob->solve_weighted(one, std::vector<double>{1.0});
  CHECK(prob->cost(pm, y) == Approx(prob->cost(pt, y)).epsilon(1e-7));
}
