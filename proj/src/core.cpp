#include "ps/core.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <exception>
#include <numeric>
#include <thread>

namespace ps {

Dataset::Dataset(std::vector<std::string> feature_names, std::size_t outcome_dim,
                 std::size_t segment_columns)
    : feature_names_(std::move(feature_names)),
      outcome_dim_(outcome_dim),
      segment_columns_(segment_columns) {}

void Dataset::add_row(std::int64_t day_index, std::span<const double> x, std::span<const double> y,
                      std::span<const SegmentLabel> segments) {
  if (x.size() != covariate_dim() || y.size() != outcome_dim_) {
    throw std::invalid_argument("Dataset::add_row: dimension mismatch");
  }
  if (!segments.empty() && segments.size() != segment_columns_) {
    throw std::invalid_argument("Dataset::add_row: segment column mismatch");
  }
  for (double v : x) {
    if (!std::isfinite(v)) throw std::invalid_argument("Dataset::add_row: non-finite covariate");
  }
  for (double v : y) {
    if (!std::isfinite(v) || v < 0.0) {
      throw std::invalid_argument("Dataset::add_row: outcomes must be finite and nonnegative");
    }
  }
  day_index_.push_back(day_index);
  x_.insert(x_.end(), x.begin(), x.end());
  y_.insert(y_.end(), y.begin(), y.end());
  if (segments.empty()) {
    segments_.insert(segments_.end(), segment_columns_, SegmentLabel{0});
  } else {
    segments_.insert(segments_.end(), segments.begin(), segments.end());
  }
}

std::span<const double> Dataset::x(std::size_t i) const {
  return {x_.data() + i * covariate_dim(), covariate_dim()};
}

std::span<const double> Dataset::y(std::size_t i) const {
  return {y_.data() + i * outcome_dim_, outcome_dim_};
}

SegmentLabel Dataset::segment(std::size_t i, std::size_t column) const {
  if (column >= segment_columns_) return SegmentLabel{0};
  return segments_[i * segment_columns_ + column];
}

Dataset Dataset::subset(std::span<const std::size_t> indices) const {
  Dataset out(feature_names_, outcome_dim_, segment_columns_);
  out.day_index_.reserve(indices.size());
  for (std::size_t i : indices) {
    out.day_index_.push_back(day_index_[i]);
    auto xi = x(i);
    auto yi = y(i);
    out.x_.insert(out.x_.end(), xi.begin(), xi.end());
    out.y_.insert(out.y_.end(), yi.begin(), yi.end());
    auto first = segments_.begin() + static_cast<std::ptrdiff_t>(i * segment_columns_);
    out.segments_.insert(out.segments_.end(), first, first + static_cast<std::ptrdiff_t>(segment_columns_));
  }
  return out;
}

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

std::uint64_t SeedSpec::derive(std::string_view role, std::initializer_list<std::uint64_t> indices) const {
  // FNV-1a over the role, then chained SplitMix64 over the indices.
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (char ch : role) {
    h ^= static_cast<unsigned char>(ch);
    h *= 0x100000001b3ULL;
  }
  std::uint64_t state = splitmix64(master_ ^ splitmix64(h));
  std::uint64_t position = 1;
  for (std::uint64_t v : indices) {
    state = splitmix64(state ^ splitmix64(v + 0x632be59bd9b4e019ULL * position));
    ++position;
  }
  return splitmix64(state ^ position);
}

std::vector<std::size_t> FoldPartition::complement(std::size_t k, std::size_t n) const {
  std::vector<char> held(n, 0);
  for (std::size_t i : folds.at(k)) held[i] = 1;
  std::vector<std::size_t> out;
  out.reserve(n - folds[k].size());
  for (std::size_t i = 0; i < n; ++i) {
    if (!held[i]) out.push_back(i);
  }
  return out;
}

FoldPartition make_folds(std::size_t n, std::size_t k, const SeedSpec& seed) {
  if (k < 2 || k > n) throw std::invalid_argument("make_folds: require 2 <= k <= n");
  std::vector<std::size_t> order(n);
  std::iota(order.begin(), order.end(), std::size_t{0});
  auto rng = seed.engine("folds", {n, k});
  std::shuffle(order.begin(), order.end(), rng);
  FoldPartition p;
  p.folds.resize(k);
  for (std::size_t i = 0; i < n; ++i) p.folds[i % k].push_back(order[i]);
  for (auto& f : p.folds) std::sort(f.begin(), f.end());
  return p;
}

void parallel_for(std::size_t n, std::size_t jobs, const std::function<void(std::size_t)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (std::size_t i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::vector<std::exception_ptr> errors(n);
  auto worker = [&] {
    for (std::size_t i = next++; i < n; i = next++) {
      try {
        fn(i);
      } catch (...) {
        errors[i] = std::current_exception();
      }
    }
  };
  std::vector<std::jthread> pool;
  for (std::size_t t = 0; t < std::min(jobs, n); ++t) pool.emplace_back(worker);
  pool.clear();
  for (auto& e : errors) {
    if (e) std::rethrow_exception(e);
  }
}

std::size_t default_jobs() {
  unsigned hc = std::thread::hardware_concurrency();
  return hc == 0 ? 1 : hc;
}

}  // namespace ps
