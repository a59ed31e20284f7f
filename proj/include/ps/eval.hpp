#pragma once

#include <functional>
#include <iosfwd>
#include <map>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "ps/core.hpp"
#include "ps/pipeline.hpp"
#include "ps/policies.hpp"
#include "ps/problems.hpp"

namespace ps {

struct SegmentStat {
  std::size_t count = 0;  // labelled units (product-days or days)
  double mean_cost = 0.0;
  double mean_profit() const { return -mean_cost; }
};

struct EvalResult {
  std::string policy;
  double mean_cost = 0.0;
  std::map<SegmentLabel, SegmentStat> segments;
  std::vector<double> row_costs;

  double mean_profit() const { return -mean_cost; }
};

/// Mean realized cost over the test rows. Each labelled unit (a product-day
/// for newsvendor, a day for shipment) contributes its cost component to its
/// own segment, so sum_s count_s * mean_s equals the total test cost.
EvalResult avg_cost(const std::string& name, const std::function<Decision(std::size_t row)>& prescribe,
                    const Dataset& test, const ScenarioProblem& problem, std::size_t jobs = 1);
EvalResult evaluate_policy(const Prescriber& policy, const Dataset& test, const ScenarioProblem& problem,
                           std::size_t jobs = 1);
/// The meta-policy; vote ties on test row i use vote_seed(ens, i).
EvalResult evaluate_meta(const PsEnsemble& ens, const Dataset& test, const ScenarioProblem& problem,
                         std::size_t jobs = 1, const std::string& name = "PS");

struct CiSummary {
  std::size_t n = 0;
  double mean = 0.0;
  double sd = 0.0;
  double alpha = 0.05;
  double lo = 0.0;
  double hi = 0.0;

  bool overlaps(const CiSummary& o) const { return lo <= o.hi && o.lo <= hi; }
};

/// Two-sided quantile t_{p, dof}.
double student_t_quantile(double p, double dof);
/// mean +- t_{1-alpha/2, n-1} sd / sqrt(n). Throws std::invalid_argument for n < 2.
CiSummary student_t_ci(std::span<const double> values, double alpha = 0.05);

struct Comparison {
  std::string policy;
  CiSummary ci;
  bool overlaps_reference = true;
};

/// One row per policy in input order. Throws std::invalid_argument when
/// sample counts differ or the reference policy is missing.
std::vector<Comparison> compare_policies(const std::vector<std::pair<std::string, std::vector<double>>>& values,
                                         const std::string& reference = "PS", double alpha = 0.05);

// Results files ------------------------------------------------------------

struct ResultRow {
  std::string problem;
  std::size_t n = 0;
  std::size_t sample = 0;
  std::string policy;
  double mean_cost = 0.0;
  double mean_profit = 0.0;
  std::string segment;  // "ALL" or a label; the error message for ERROR rows
  double segment_mean_profit = 0.0;
};

inline constexpr const char* kResultsHeader = "problem,N,sample,policy,mean_cost,mean_profit,segment,segment_mean_profit";
inline constexpr const char* kSummaryHeader = "problem,N,policy,mean,ci_lo,ci_hi";

std::vector<ResultRow> result_rows(const std::string& problem, std::size_t n, std::size_t sample,
                                   std::span<const EvalResult> results);
ResultRow error_row(const std::string& problem, std::size_t n, std::size_t sample, const std::string& message);
void write_result_rows(std::ostream& os, std::span<const ResultRow> rows);
std::vector<ResultRow> read_results_csv(std::istream& is);

/// Per (problem, N, policy) profit means with t-intervals over samples, plus
/// a per-segment table and a comparison table with overlap flags against PS.
/// Rows keep first-appearance order of N and policy. With one sample the
/// interval is degenerate at the mean.
struct Report {
  std::string summary_csv;
  std::string segments_csv;
  std::string comparison_csv;
  std::vector<std::string> notes;
};
Report build_report(std::span<const ResultRow> rows, double alpha = 0.05);

}  // namespace ps
