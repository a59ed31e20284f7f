#include "ps/eval.hpp"

#include <algorithm>
#include <boost/math/distributions/students_t.hpp>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace ps {

EvalResult avg_cost(const std::string& name, const std::function<Decision(std::size_t row)>& prescribe,
                    const Dataset& test, const ScenarioProblem& problem, std::size_t jobs) {
  if (test.empty()) throw std::invalid_argument("avg_cost: empty test set");
  const std::size_t n = test.size();
  std::vector<Vector> parts(n);
  EvalResult res;
  res.policy = name;
  res.row_costs.resize(n);
  parallel_for(n, jobs, [&](std::size_t i) {
    const Decision z = prescribe(i);
    if (!problem.is_feasible(z)) {
      throw FeasibilityError(name + " prescribed an infeasible decision for test row " + std::to_string(i));
    }
    res.row_costs[i] = problem.cost(z, test.y(i));
    parts[i] = problem.cost_components(z, test.y(i));
  });
  double total = 0.0;
  for (double c : res.row_costs) total += c;
  res.mean_cost = total / static_cast<double>(n);

  const std::size_t cols = test.segment_columns();
  if (cols > 0) {
    std::map<SegmentLabel, double> sums;
    for (std::size_t i = 0; i < n; ++i) {
      if (cols == parts[i].size()) {
        for (std::size_t j = 0; j < cols; ++j) {
          const SegmentLabel s = test.segment(i, j);
          if (!s) continue;
          sums[s] += parts[i][j];
          ++res.segments[s].count;
        }
      } else if (cols == 1) {
        const SegmentLabel s = test.segment(i, 0);
        if (!s) continue;
        sums[s] += res.row_costs[i];
        ++res.segments[s].count;
      }
    }
    for (auto& [s, stat] : res.segments) stat.mean_cost = sums[s] / static_cast<double>(stat.count);
  }
  return res;
}

EvalResult evaluate_policy(const Prescriber& policy, const Dataset& test, const ScenarioProblem& problem,
                           std::size_t jobs) {
  return avg_cost(policy.name(), [&](std::size_t i) { return policy.prescribe(test.x(i)); }, test, problem, jobs);
}

EvalResult evaluate_meta(const PsEnsemble& ens, const Dataset& test, const ScenarioProblem& problem, std::size_t jobs,
                         const std::string& name) {
  return avg_cost(name, [&](std::size_t i) { return ps_prescribe(ens, test.x(i), vote_seed(ens, i)); }, test, problem,
                  jobs);
}

double student_t_quantile(double p, double dof) {
  if (!(p > 0.0 && p < 1.0) || !(dof > 0.0)) throw std::invalid_argument("student_t_quantile: bad arguments");
  return boost::math::quantile(boost::math::students_t(dof), p);
}

CiSummary student_t_ci(std::span<const double> values, double alpha) {
  if (values.size() < 2) throw std::invalid_argument("student_t_ci: need at least two values");
  if (!(alpha > 0.0 && alpha <= 1.0)) throw std::invalid_argument("student_t_ci: alpha must be in (0, 1]");
  CiSummary ci;
  ci.n = values.size();
  ci.alpha = alpha;
  double s = 0.0;
  for (double v : values) s += v;
  ci.mean = s / static_cast<double>(ci.n);
  double ss = 0.0;
  for (double v : values) ss += (v - ci.mean) * (v - ci.mean);
  ci.sd = std::sqrt(ss / static_cast<double>(ci.n - 1));
  const double t = alpha >= 1.0 ? 0.0 : student_t_quantile(1.0 - alpha / 2.0, static_cast<double>(ci.n - 1));
  const double half = t * ci.sd / std::sqrt(static_cast<double>(ci.n));
  ci.lo = ci.mean - half;
  ci.hi = ci.mean + half;
  return ci;
}

std::vector<Comparison> compare_policies(const std::vector<std::pair<std::string, std::vector<double>>>& values,
                                         const std::string& reference, double alpha) {
  if (values.empty()) throw std::invalid_argument("compare_policies: no policies");
  const std::size_t s = values.front().second.size();
  std::vector<Comparison> out;
  const CiSummary* ref = nullptr;
  for (const auto& [name, v] : values) {
    if (v.size() != s) throw std::invalid_argument("compare_policies: ragged sample counts");
    out.push_back({name, student_t_ci(v, alpha), true});
  }
  for (const auto& c : out) {
    if (c.policy == reference) ref = &c.ci;
  }
  if (!ref) throw std::invalid_argument("compare_policies: reference policy '" + reference + "' missing");
  for (auto& c : out) c.overlaps_reference = c.ci.overlaps(*ref);
  return out;
}

// ---------------------------------------------------------------------------

namespace {

std::string num(double v, const char* f = "%.17g") {
  char buf[40];
  int n = std::snprintf(buf, sizeof buf, f, v);
  return std::string(buf, static_cast<std::size_t>(n));
}

std::vector<std::string> split(const std::string& line) {
  std::vector<std::string> out;
  std::string cur;
  for (char c : line) {
    if (c == ',') {
      out.push_back(cur);
      cur.clear();
    } else if (c != '\r') {
      cur.push_back(c);
    }
  }
  out.push_back(cur);
  return out;
}

double to_real(const std::string& s) {
  if (s.empty()) return std::nan("");
  double v = 0.0;
  auto [p, ec] = std::from_chars(s.data(), s.data() + s.size(), v);
  if (ec != std::errc{} || p != s.data() + s.size()) throw std::runtime_error("results csv: bad number '" + s + "'");
  return v;
}

}  // namespace

std::vector<ResultRow> result_rows(const std::string& problem, std::size_t n, std::size_t sample,
                                   std::span<const EvalResult> results) {
  std::vector<ResultRow> rows;
  for (const auto& r : results) {
    rows.push_back({problem, n, sample, r.policy, r.mean_cost, r.mean_profit(), "ALL", r.mean_profit()});
    for (const auto& [label, stat] : r.segments) {
      rows.push_back({problem, n, sample, r.policy, r.mean_cost, r.mean_profit(), std::string(1, label),
                      stat.mean_profit()});
    }
  }
  return rows;
}

ResultRow error_row(const std::string& problem, std::size_t n, std::size_t sample, const std::string& message) {
  std::string clean = message;
  for (auto& c : clean) {
    if (c == ',' || c == '\n' || c == '\r') c = ';';
  }
  return {problem, n, sample, "ERROR", std::nan(""), std::nan(""), clean, std::nan("")};
}

void write_result_rows(std::ostream& os, std::span<const ResultRow> rows) {
  for (const auto& r : rows) {
    os << r.problem << ',' << r.n << ',' << r.sample << ',' << r.policy << ',';
    if (r.policy == "ERROR") {
      os << ",," << r.segment << ",\n";
      continue;
    }
    os << num(r.mean_cost) << ',' << num(r.mean_profit) << ',' << r.segment << ',' << num(r.segment_mean_profit)
       << '\n';
  }
}

std::vector<ResultRow> read_results_csv(std::istream& is) {
  std::string line;
  if (!std::getline(is, line)) throw std::invalid_argument("results csv: empty");
  if (!line.empty() && line.back() == '\r') line.pop_back();
  if (line != kResultsHeader) throw std::runtime_error("results csv: unexpected header");
  std::vector<ResultRow> rows;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    auto c = split(line);
    if (c.size() != 8) throw std::runtime_error("results csv: wrong column count");
    ResultRow r;
    r.problem = c[0];
    r.n = static_cast<std::size_t>(std::stoull(c[1]));
    r.sample = static_cast<std::size_t>(std::stoull(c[2]));
    r.policy = c[3];
    r.mean_cost = to_real(c[4]);
    r.mean_profit = to_real(c[5]);
    r.segment = c[6];
    r.segment_mean_profit = to_real(c[7]);
    rows.push_back(std::move(r));
  }
  return rows;
}

Report build_report(std::span<const ResultRow> rows, double alpha) {
  using Key = std::tuple<std::string, std::size_t, std::string, std::string>;  // problem, N, policy, segment
  std::vector<Key> order;
  std::map<Key, std::vector<std::pair<std::size_t, double>>> values;
  Report rep;
  std::size_t errors = 0;
  for (const auto& r : rows) {
    if (r.policy == "ERROR") {
      ++errors;
      continue;
    }
    Key k{r.problem, r.n, r.policy, r.segment};
    auto [it, fresh] = values.try_emplace(k);
    if (fresh) order.push_back(k);
    it->second.emplace_back(r.sample, r.segment_mean_profit);
  }
  if (values.empty()) throw std::invalid_argument("report: no results");
  if (errors) rep.notes.push_back(std::to_string(errors) + " failed cell(s) excluded");

  auto interval = [&](std::vector<std::pair<std::size_t, double>> v) {
    std::sort(v.begin(), v.end());
    std::vector<double> xs;
    for (auto& p : v) xs.push_back(p.second);
    if (xs.size() >= 2) return student_t_ci(xs, alpha);
    CiSummary ci;
    ci.n = xs.size();
    ci.mean = ci.lo = ci.hi = xs.empty() ? 0.0 : xs[0];
    ci.alpha = alpha;
    return ci;
  };

  std::ostringstream summary, segments, comparison;
  summary << kSummaryHeader << '\n';
  segments << "problem,N,policy,segment,mean,ci_lo,ci_hi\n";
  comparison << "problem,N,policy,mean,ci_lo,ci_hi,overlaps_ps\n";
  bool degenerate = false;
  std::map<std::pair<std::string, std::size_t>, CiSummary> ps_ci;
  for (const auto& k : order) {
    const auto& [problem, n, policy, segment] = k;
    if (segment == "ALL" && policy == "PS") ps_ci[{problem, n}] = interval(values[k]);
  }
  for (const auto& k : order) {
    const auto& [problem, n, policy, segment] = k;
    const auto ci = interval(values[k]);
    degenerate = degenerate || ci.n < 2;
    const std::string tail = num(ci.mean, "%.10g") + ',' + num(ci.lo, "%.10g") + ',' + num(ci.hi, "%.10g");
    if (segment == "ALL") {
      summary << problem << ',' << n << ',' << policy << ',' << tail << '\n';
      auto ref = ps_ci.find({problem, n});
      if (ref != ps_ci.end()) {
        comparison << problem << ',' << n << ',' << policy << ',' << tail << ','
                   << (ci.overlaps(ref->second) ? "true" : "false") << '\n';
      }
    } else {
      segments << problem << ',' << n << ',' << policy << ',' << segment << ',' << tail << '\n';
    }
  }
  if (degenerate) rep.notes.push_back("fewer than two samples for some cells: intervals are degenerate");
  rep.summary_csv = summary.str();
  rep.segments_csv = segments.str();
  rep.comparison_csv = comparison.str();
  return rep;
}

}  // namespace ps
