#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

#include "doctest.h"
#include "ps/predictors.hpp"

using ps::ForestModel;
using ps::ForestParams;
using ps::KnnModel;
using ps::Matrix;

namespace {

Matrix column(std::initializer_list<double> v) {
  Matrix m(v.size(), 1);
  std::size_t i = 0;
  for (double x : v) m(i++, 0) = x;
  return m;
}

Matrix random_matrix(std::mt19937_64& rng, std::size_t n, std::size_t d, double lo, double hi) {
  std::uniform_real_distribution<double> u(lo, hi);
  Matrix m(n, d);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < d; ++j) m(i, j) = u(rng);
  }
  return m;
}

}  // namespace

TEST_CASE("knn with k = N uses every row") {
  auto x = column({1, 2, 3, 4, 5});
  auto y = column({10, 20, 30, 40, 50});
  auto m = KnnModel::fit(x, y, 5);
  const double q[] = {100.0};
  CHECK(m.neighbors(q) == std::vector<std::size_t>{0, 1, 2, 3, 4});
  auto w = m.weights(q);
  for (const auto& [i, v] : w.entries) CHECK(v == doctest::Approx(0.2));
  CHECK(m.predict(q)[0] == doctest::Approx(30.0));
}

TEST_CASE("knn ignores constant features") {
  Matrix x(4, 2);
  for (std::size_t i = 0; i < 4; ++i) {
    x(i, 0) = static_cast<double>(i);
    x(i, 1) = 7.0;
  }
  auto y = column({1, 2, 3, 4});
  auto m = KnnModel::fit(x, y, 1);
  CHECK(m.scale()[1] == 1.0);
  const double far[] = {2.1, 1e6};
  CHECK(m.neighbors(far) == std::vector<std::size_t>{2});
}

TEST_CASE("knn exact match and mean prediction") {
  auto x = column({0, 1, 2, 3, 4, 5, 6, 7});
  auto y = column({5, 10, 20, 30, 1, 2, 3, 4});
  auto m1 = KnnModel::fit(x, y, 1);
  const double q[] = {3.0};
  CHECK(m1.neighbors(q) == std::vector<std::size_t>{3});
  CHECK(m1.predict(q)[0] == 30.0);

  auto m3 = KnnModel::fit(x, y, 3);
  const double q2[] = {2.0};
  CHECK(m3.neighbors(q2) == std::vector<std::size_t>{1, 2, 3});
  CHECK(m3.predict(q2)[0] == doctest::Approx(20.0));
  auto w = m3.weights(q2);
  REQUIRE(w.support_size() == 3);
  CHECK(w.at(1) == doctest::Approx(1.0 / 3));
  CHECK(w.at(0) == 0.0);
}

TEST_CASE("knn tie at the k-th distance prefers lower index") {
  auto x = column({1, 3, 5, 0});
  auto y = column({1, 2, 3, 4});
  auto m = KnnModel::fit(x, y, 2);
  // Query 2: distances 1, 1, 3, 2 -> indices 0 and 1.
  const double q[] = {2.0};
  CHECK(m.neighbors(q) == std::vector<std::size_t>{0, 1});
  auto m1 = KnnModel::fit(x, y, 1);
  CHECK(m1.neighbors(q) == std::vector<std::size_t>{0});
}

TEST_CASE("knn constant outcomes and errors") {
  auto x = column({1, 2, 3});
  auto y = column({7, 7, 7});
  CHECK(KnnModel::fit(x, y, 2).predict(std::vector<double>{9.0})[0] == 7.0);
  CHECK_THROWS_AS(KnnModel::fit(x, y, 4), std::invalid_argument);
  CHECK_THROWS_AS(KnnModel::fit(x, y, 0), std::invalid_argument);
}

TEST_CASE("knn is invariant to affine feature rescaling") {
  std::mt19937_64 rng(1);
  auto x = random_matrix(rng, 60, 3, 0, 10);
  auto y = random_matrix(rng, 60, 1, 0, 100);
  Matrix scaled = x;
  for (std::size_t i = 0; i < 60; ++i) scaled(i, 1) = 250.0 * x(i, 1) - 13.0;
  auto a = KnnModel::fit(x, y, 5);
  auto b = KnnModel::fit(scaled, y, 5);
  for (int t = 0; t < 50; ++t) {
    auto q = random_matrix(rng, 1, 3, 0, 10);
    std::vector<double> qa(q.row(0).begin(), q.row(0).end());
    std::vector<double> qb = qa;
    qb[1] = 250.0 * qa[1] - 13.0;
    CHECK(a.neighbors(qa) == b.neighbors(qb));
    CHECK(a.predict(qa)[0] == doctest::Approx(b.predict(qb)[0]));
  }
}

TEST_CASE("knn weights permute with training rows") {
  std::mt19937_64 rng(8);
  auto x = random_matrix(rng, 30, 2, 0, 1);
  auto y = random_matrix(rng, 30, 1, 0, 1);
  std::vector<std::size_t> perm(30);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix px(30, 2), py(30, 1);
  for (std::size_t i = 0; i < 30; ++i) {
    px(i, 0) = x(perm[i], 0);
    px(i, 1) = x(perm[i], 1);
    py(i, 0) = y(perm[i], 0);
  }
  auto a = KnnModel::fit(x, y, 4);
  auto b = KnnModel::fit(px, py, 4);
  const double q[] = {0.3, 0.6};
  std::vector<std::size_t> mapped;
  for (auto i : b.neighbors(q)) mapped.push_back(perm[i]);
  std::sort(mapped.begin(), mapped.end());
  CHECK(mapped == a.neighbors(q));
}

TEST_CASE("forest depth cap gives a single leaf") {
  auto x = column({1, 2, 3, 4});
  auto y = column({10, 20, 30, 40});
  ForestParams p;
  p.num_trees = 1;
  p.max_depth = 0;
  auto f = ForestModel::fit_with_bootstraps(x, y, p, {{0, 1, 2, 3}}, 3);
  REQUIRE(f.trees().size() == 1);
  CHECK(f.trees()[0].leaves.size() == 1);
  CHECK(f.trees()[0].leaves[0] == std::vector<std::size_t>{0, 1, 2, 3});
  const double q[] = {2.5};
  CHECK(f.predict(q)[0] == doctest::Approx(25.0));
  auto w = f.weights(q);
  for (const auto& [i, v] : w.entries) CHECK(v == doctest::Approx(0.25));

  auto g = ForestModel::fit(x, y, p, 11);
  std::vector<std::size_t> members = g.trees()[0].leaves[0];
  CHECK(!members.empty());
  CHECK(std::is_sorted(members.begin(), members.end()));
}

TEST_CASE("forest weights follow the leaf formula") {
  // Two single-leaf trees over {0,1} and {1,2}.
  ps::RegressionTree a, b;
  a.nodes.push_back({});
  a.leaves = {{0, 1}};
  b.nodes.push_back({});
  b.leaves = {{1, 2}};
  auto f = ForestModel::from_parts({a, b}, column({10, 20, 30}), 1);
  const double q[] = {0.0};
  auto w = f.weights(q);
  CHECK(w.at(0) == doctest::Approx(0.25));
  CHECK(w.at(1) == doctest::Approx(0.5));
  CHECK(w.at(2) == doctest::Approx(0.25));
  // Leaf means 15 and 25.
  CHECK(f.predict(q)[0] == doctest::Approx(20.0));

  ps::RegressionTree c, d;
  c.nodes.push_back({});
  c.leaves = {{0}};
  d.nodes.push_back({});
  d.leaves = {{2}};
  auto g = ForestModel::from_parts({c, d}, column({10, 20, 30}), 1);
  CHECK(g.predict(q)[0] == doctest::Approx(20.0));
}

TEST_CASE("forest splits a separable target on the informative feature") {
  // y = 1{x0 > 0}; feature 1 is noise.
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::size_t n = 40;
  Matrix x(n, 2), y(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    x(i, 0) = (i % 2 == 0 ? -1.0 : 1.0) * (0.5 + 0.5 * u(rng) * u(rng));
    x(i, 1) = u(rng);
    y(i, 0) = x(i, 0) > 0 ? 1.0 : 0.0;
  }
  ForestParams p;
  p.num_trees = 8;
  p.min_leaf = 2;
  p.features_per_split = 2;  // feature 0 always sampled
  auto f = ForestModel::fit(x, y, p, 21);
  for (const auto& t : f.trees()) {
    CHECK(t.nodes[0].feature == 0);
    CHECK(t.nodes[0].threshold > -0.5);
    CHECK(t.nodes[0].threshold < 0.5);
  }
}

TEST_CASE("forest is deterministic and its weights are normalized") {
  std::mt19937_64 rng(9);
  auto x = random_matrix(rng, 120, 6, 0, 10);
  auto y = random_matrix(rng, 120, 2, 0, 50);
  ForestParams p;
  auto a = ForestModel::fit(x, y, p, 77);
  auto b = ForestModel::fit(x, y, p, 77);
  for (int t = 0; t < 40; ++t) {
    auto q = random_matrix(rng, 1, 6, 0, 10);
    std::vector<double> qv(q.row(0).begin(), q.row(0).end());
    auto wa = a.weights(qv);
    auto wb = b.weights(qv);
    CHECK(wa.entries == wb.entries);
    CHECK(std::abs(wa.total() - 1.0) <= 1e-9);
    // Point prediction equals the weight-weighted outcome mean.
    auto pred = a.predict(qv);
    for (std::size_t j = 0; j < 2; ++j) {
      double s = 0.0;
      for (const auto& [i, w] : wa.entries) s += w * y(i, j);
      CHECK(pred[j] == doctest::Approx(s).epsilon(1e-12));
    }
  }
  for (const auto& t : a.trees()) {
    for (const auto& leaf : t.leaves) CHECK(leaf.size() >= p.min_leaf);
  }
}

TEST_CASE("forest leaves partition the distinct bootstrap rows") {
  std::mt19937_64 rng(12);
  auto x = random_matrix(rng, 80, 3, 0, 1);
  auto y = random_matrix(rng, 80, 1, 0, 1);
  ForestParams p;
  p.num_trees = 3;
  auto f = ForestModel::fit(x, y, p, 5);
  for (const auto& t : f.trees()) {
    std::vector<int> seen(80, 0);
    for (std::size_t l = 0; l < t.leaves.size(); ++l) {
      for (auto i : t.leaves[l]) {
        ++seen[i];
        CHECK(t.leaf_of(x.row(i)) == l);
      }
    }
    CHECK(std::all_of(seen.begin(), seen.end(), [](int s) { return s <= 1; }));
  }
}

TEST_CASE("forest with identical targets yields single-leaf trees") {
  std::mt19937_64 rng(2);
  auto x = random_matrix(rng, 50, 3, 0, 1);
  Matrix y(50, 1, 3.0);
  auto f = ForestModel::fit(x, y, ForestParams{}, 1);
  for (const auto& t : f.trees()) CHECK(t.leaves.size() == 1);
}

TEST_CASE("forest weights permute with training rows under matched bootstraps") {
  std::mt19937_64 rng(31);
  const std::size_t n = 50;
  auto x = random_matrix(rng, n, 3, 0, 1);
  auto y = random_matrix(rng, n, 1, 0, 1);
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  std::shuffle(perm.begin(), perm.end(), rng);
  std::vector<std::size_t> inv(n);
  for (std::size_t i = 0; i < n; ++i) inv[perm[i]] = i;
  Matrix px(n, 3), py(n, 1);
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t j = 0; j < 3; ++j) px(i, j) = x(perm[i], j);
    py(i, 0) = y(perm[i], 0);
  }
  ForestParams p;
  p.num_trees = 3;
  std::vector<std::vector<std::size_t>> boots(3), pboots(3);
  std::uniform_int_distribution<std::size_t> draw(0, n - 1);
  for (std::size_t b = 0; b < 3; ++b) {
    for (std::size_t t = 0; t < n; ++t) {
      std::size_t i = draw(rng);
      boots[b].push_back(i);
      pboots[b].push_back(inv[i]);
    }
  }
  auto a = ForestModel::fit_with_bootstraps(x, y, p, boots, 8);
  auto b = ForestModel::fit_with_bootstraps(px, py, p, pboots, 8);
  for (int t = 0; t < 20; ++t) {
    auto q = random_matrix(rng, 1, 3, 0, 1);
    auto wa = a.weights(q.row(0));
    auto wb = b.weights(q.row(0));
    REQUIRE(wa.support_size() == wb.support_size());
    for (const auto& [i, w] : wb.entries) CHECK(wa.at(perm[i]) == doctest::Approx(w));
  }
}
