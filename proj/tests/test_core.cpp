#include <algorithm>
#include <set>

#include "doctest.h"
#include "ps/core.hpp"

using ps::FoldPartition;
using ps::SeedSpec;

namespace {

void check_partition(const FoldPartition& p, std::size_t n, std::size_t k) {
  REQUIRE(p.size() == k);
  std::vector<int> seen(n, 0);
  std::size_t lo = n, hi = 0;
  for (const auto& f : p.folds) {
    CHECK(!f.empty());
    lo = std::min(lo, f.size());
    hi = std::max(hi, f.size());
    for (auto i : f) {
      REQUIRE(i < n);
      ++seen[i];
    }
  }
  CHECK(hi - lo <= 1);
  CHECK(std::all_of(seen.begin(), seen.end(), [](int c) { return c == 1; }));
}

}  // namespace

TEST_CASE("make_folds sizes and coverage") {
  SeedSpec seed(7);
  auto p = ps::make_folds(10, 5, seed);
  check_partition(p, 10, 5);
  for (const auto& f : p.folds) CHECK(f.size() == 2);

  auto q = ps::make_folds(7, 3, seed);
  check_partition(q, 7, 3);
  std::multiset<std::size_t> sizes;
  for (const auto& f : q.folds) sizes.insert(f.size());
  CHECK(sizes == std::multiset<std::size_t>{2, 2, 3});
}

TEST_CASE("make_folds is deterministic and seed-sensitive") {
  auto a = ps::make_folds(101, 5, SeedSpec(3));
  auto b = ps::make_folds(101, 5, SeedSpec(3));
  auto c = ps::make_folds(101, 5, SeedSpec(4));
  CHECK(a.folds == b.folds);
  CHECK(a.folds != c.folds);
}

TEST_CASE("make_folds property sweep") {
  for (std::size_t n = 2; n < 40; ++n) {
    for (std::size_t k = 2; k <= std::min<std::size_t>(n, 9); ++k) {
      check_partition(ps::make_folds(n, k, SeedSpec(n * 31 + k)), n, k);
    }
  }
}

TEST_CASE("make_folds rejects bad k") {
  CHECK_THROWS_AS(ps::make_folds(5, 1, SeedSpec(1)), std::invalid_argument);
  CHECK_THROWS_AS(ps::make_folds(5, 6, SeedSpec(1)), std::invalid_argument);
}

TEST_CASE("fold complement") {
  auto p = ps::make_folds(12, 4, SeedSpec(2));
  for (std::size_t k = 0; k < 4; ++k) {
    auto comp = p.complement(k, 12);
    CHECK(comp.size() == 12 - p.folds[k].size());
    for (auto i : p.folds[k]) CHECK(!std::binary_search(comp.begin(), comp.end(), i));
  }
}

TEST_CASE("seed derivation separates roles and indices") {
  SeedSpec s(12345);
  CHECK(s.derive("fold", {1, 2}) == s.derive("fold", {1, 2}));
  CHECK(s.derive("fold", {1, 2}) != s.derive("tree", {1, 2}));
  std::set<std::uint64_t> firsts;
  std::size_t count = 0;
  for (std::uint64_t a = 0; a < 12; ++a) {
    for (std::uint64_t k = 0; k < 6; ++k) {
      for (std::uint64_t r = 0; r < 12; ++r) {
        auto eng = s.engine("rep", {a, k, r});
        firsts.insert(eng());
        ++count;
      }
    }
  }
  CHECK(firsts.size() == count);
  CHECK(SeedSpec(1).derive("x") != SeedSpec(2).derive("x"));
  CHECK(s.derive("x", {1, 0}) != s.derive("x", {0, 1}));
}

TEST_CASE("dataset rows and subset") {
  ps::Dataset d({"a", "b"}, 1, 1);
  const double x0[] = {1, 2}, y0[] = {3};
  const double x1[] = {4, 5}, y1[] = {6};
  const char s0[] = {'A'}, s1[] = {'C'};
  d.add_row(0, x0, y0, s0);
  d.add_row(1, x1, y1, s1);
  CHECK(d.size() == 2);
  CHECK(d.x(1)[1] == 5);
  CHECK(d.segment(1) == 'C');
  std::vector<std::size_t> idx{1, 1, 0};
  auto sub = d.subset(idx);
  CHECK(sub.size() == 3);
  CHECK(sub.y(0)[0] == 6);
  CHECK(sub.day_index(2) == 0);
  const double bad[] = {-1};
  CHECK_THROWS_AS(d.add_row(2, x0, bad), std::invalid_argument);
}

TEST_CASE("parallel_for covers every index and propagates errors") {
  std::vector<int> hits(200, 0);
  ps::parallel_for(hits.size(), 4, [&](std::size_t i) { hits[i] += 1; });
  CHECK(std::all_of(hits.begin(), hits.end(), [](int h) { return h == 1; }));
  CHECK_THROWS_AS(ps::parallel_for(10, 3,
                                   [](std::size_t i) {
                                     if (i == 4) throw std::runtime_error("boom");
                                   }),
                  std::runtime_error);
}
