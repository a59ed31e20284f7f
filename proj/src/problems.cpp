#include "ps/problems.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <stdexcept>
#include <string>

#include "ps/linprog.hpp"

namespace ps {

Decision ScenarioProblem::solve_marginals(std::span<const Marginal>) const {
  throw std::logic_error(name() + ": per-dimension weights are not supported");
}

namespace {

// Sorted distinct values with merged weights and the running CDF normalized to
// the total weight.
struct SortedMarginal {
  std::vector<double> values;
  std::vector<double> cdf;
};

SortedMarginal sort_marginal(const Marginal& m) {
  if (m.values.size() != m.weights.size()) throw std::invalid_argument("marginal: size mismatch");
  std::vector<std::pair<double, double>> vw;
  vw.reserve(m.values.size());
  double total = 0.0;
  for (std::size_t i = 0; i < m.values.size(); ++i) {
    if (m.weights[i] < 0.0 || !std::isfinite(m.weights[i])) throw std::invalid_argument("marginal: bad weight");
    if (m.weights[i] == 0.0) continue;
    vw.emplace_back(m.values[i], m.weights[i]);
    total += m.weights[i];
  }
  SortedMarginal out;
  if (vw.empty()) return out;
  std::sort(vw.begin(), vw.end());
  double acc = 0.0;
  for (const auto& [v, w] : vw) {
    acc += w;
    if (!out.values.empty() && out.values.back() == v) {
      out.cdf.back() = acc / total;
    } else {
      out.values.push_back(v);
      out.cdf.push_back(acc / total);
    }
  }
  out.cdf.back() = 1.0;
  return out;
}

constexpr double kCdfTol = 1e-12;

double quantile_of(const SortedMarginal& m, double ratio) {
  if (ratio <= 0.0 || m.values.empty()) return 0.0;
  auto it = std::lower_bound(m.cdf.begin(), m.cdf.end(), ratio - kCdfTol);
  if (it == m.cdf.end()) return m.values.back();
  return m.values[static_cast<std::size_t>(it - m.cdf.begin())];
}

void check_dim(std::span<const double> v, std::size_t n, const char* what) {
  if (v.size() != n) throw std::invalid_argument(std::string(what) + ": dimension mismatch");
}

}  // namespace

double weighted_quantile(const Marginal& m, double ratio) { return quantile_of(sort_marginal(m), ratio); }

// ---------------------------------------------------------------------------

void NewsvendorSpec::validate() const {
  const std::size_t n = price.size();
  if (n == 0 || cost.size() != n || storage.size() != n) throw std::invalid_argument("newsvendor: inconsistent sizes");
  for (std::size_t j = 0; j < n; ++j) {
    if (!(cost[j] > 0.0 && price[j] > cost[j])) throw std::invalid_argument("newsvendor: need p > c > 0");
    if (!(storage[j] > 0.0)) throw std::invalid_argument("newsvendor: need s > 0");
  }
  if (!(capacity > 0.0)) throw std::invalid_argument("newsvendor: need capacity > 0");
}

double newsvendor_cost(std::span<const double> q, std::span<const double> y, const NewsvendorSpec& spec) {
  check_dim(q, spec.products(), "newsvendor q");
  check_dim(y, spec.products(), "newsvendor y");
  double c = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) c += spec.cost[j] * q[j] - spec.price[j] * std::min(y[j], q[j]);
  return c;
}

double newsvendor_weighted_objective(std::span<const double> q, std::span<const Marginal> marginals,
                                     const NewsvendorSpec& spec) {
  check_dim(q, spec.products(), "newsvendor q");
  double total = 0.0;
  for (std::size_t j = 0; j < q.size(); ++j) {
    const auto& m = marginals[j];
    double sales = 0.0;
    for (std::size_t i = 0; i < m.values.size(); ++i) sales += m.weights[i] * std::min(m.values[i], q[j]);
    total += spec.cost[j] * q[j] - spec.price[j] * sales;
  }
  return total;
}

Decision newsvendor_solve_lagrangian(std::span<const Marginal> marginals, const NewsvendorSpec& spec) {
  const std::size_t n = spec.products();
  if (marginals.size() != n) throw std::invalid_argument("newsvendor: one marginal per product required");
  std::vector<SortedMarginal> sorted;
  sorted.reserve(n);
  for (const auto& m : marginals) sorted.push_back(sort_marginal(m));

  auto order_at = [&](std::size_t j, double lambda) {
    const double r = (spec.price[j] - spec.cost[j] - lambda * spec.storage[j]) / spec.price[j];
    return quantile_of(sorted[j], r);
  };
  auto orders_at = [&](double lambda) {
    Decision q(n);
    for (std::size_t j = 0; j < n; ++j) q[j] = order_at(j, lambda);
    return q;
  };
  auto usage = [&](const Decision& q) {
    double u = 0.0;
    for (std::size_t j = 0; j < n; ++j) u += spec.storage[j] * q[j];
    return u;
  };

  Decision q0 = orders_at(0.0);
  if (usage(q0) <= spec.capacity) return q0;

  // Multipliers where some order quantity drops to a lower support point.
  std::vector<double> breaks;
  for (std::size_t j = 0; j < n; ++j) {
    const auto& m = sorted[j];
    const double margin = spec.price[j] - spec.cost[j];
    for (std::size_t k = 0; k + 1 < m.cdf.size(); ++k) {
      const double lam = (margin - spec.price[j] * m.cdf[k]) / spec.storage[j];
      if (lam > 0.0) breaks.push_back(lam);
    }
    breaks.push_back(margin / spec.storage[j]);
  }
  std::sort(breaks.begin(), breaks.end());
  breaks.erase(std::unique(breaks.begin(), breaks.end()), breaks.end());

  // Smallest breakpoint whose orders fit. The largest one zeroes everything.
  std::size_t lo = 0, hi = breaks.size() - 1;
  while (lo < hi) {
    const std::size_t mid = (lo + hi) / 2;
    if (usage(orders_at(breaks[mid])) <= spec.capacity) hi = mid;
    else lo = mid + 1;
  }
  Decision q = orders_at(breaks[lo]);
  const Decision before = lo == 0 ? q0 : orders_at(breaks[lo - 1]);
  double room = spec.capacity - usage(q);
  for (std::size_t j = 0; j < n && room > 0.0; ++j) {
    if (before[j] <= q[j]) continue;
    const double add = std::min(before[j] - q[j], room / spec.storage[j]);
    q[j] += add;
    room -= add * spec.storage[j];
  }
  return q;
}

Decision newsvendor_solve_lp(std::span<const Marginal> marginals, const NewsvendorSpec& spec) {
  const std::size_t n = spec.products();
  if (marginals.size() != n) throw std::invalid_argument("newsvendor: one marginal per product required");
  lp::LinearProgram prog;
  std::vector<std::size_t> qv(n);
  for (std::size_t j = 0; j < n; ++j) qv[j] = prog.add_var(spec.cost[j]);
  for (std::size_t j = 0; j < n; ++j) {
    const auto& m = marginals[j];
    for (std::size_t i = 0; i < m.values.size(); ++i) {
      if (m.weights[i] == 0.0 || m.values[i] <= 0.0) continue;
      const std::size_t s = prog.add_var(-spec.price[j] * m.weights[i], 0.0, m.values[i]);
      const std::size_t cols[] = {s, qv[j]};
      const double coef[] = {1.0, -1.0};
      prog.add_row(cols, coef, lp::Relation::LessEqual, 0.0);
    }
  }
  prog.add_row(qv, spec.storage, lp::Relation::LessEqual, spec.capacity);
  auto sol = lp::solve_lp(prog);
  if (sol.status != lp::Status::Optimal) throw SolverError("newsvendor lp: " + lp::to_string(sol.status));
  Decision q(n);
  for (std::size_t j = 0; j < n; ++j) q[j] = std::max(0.0, sol.x[qv[j]]);
  return q;
}

NewsvendorProblem::NewsvendorProblem(NewsvendorSpec spec, NewsvendorMethod method)
    : spec_(std::move(spec)), method_(method) {
  spec_.validate();
}

bool NewsvendorProblem::is_feasible(std::span<const double> z) const {
  if (z.size() != spec_.products()) return false;
  double used = 0.0;
  for (std::size_t j = 0; j < z.size(); ++j) {
    if (!std::isfinite(z[j]) || z[j] < -1e-9) return false;
    used += spec_.storage[j] * z[j];
  }
  return used <= spec_.capacity + 1e-7 * (1.0 + spec_.capacity);
}

double NewsvendorProblem::cost(std::span<const double> z, std::span<const double> y) const {
  if (!is_feasible(z)) throw FeasibilityError("newsvendor: infeasible order");
  return newsvendor_cost(z, y, spec_);
}

Vector NewsvendorProblem::cost_components(std::span<const double> z, std::span<const double> y) const {
  if (!is_feasible(z)) throw FeasibilityError("newsvendor: infeasible order");
  check_dim(y, spec_.products(), "newsvendor y");
  Vector parts(z.size());
  for (std::size_t j = 0; j < z.size(); ++j) parts[j] = spec_.cost[j] * z[j] - spec_.price[j] * std::min(y[j], z[j]);
  return parts;
}

Decision NewsvendorProblem::solve_weighted(const Matrix& scenarios, std::span<const double> weights) const {
  if (scenarios.cols() != spec_.products() || scenarios.rows() != weights.size()) {
    throw std::invalid_argument("newsvendor: scenario shape mismatch");
  }
  std::vector<Marginal> ms(spec_.products());
  for (std::size_t j = 0; j < ms.size(); ++j) {
    ms[j].values.resize(scenarios.rows());
    ms[j].weights.assign(weights.begin(), weights.end());
    for (std::size_t i = 0; i < scenarios.rows(); ++i) ms[j].values[i] = scenarios(i, j);
  }
  return solve_marginals(ms);
}

Decision NewsvendorProblem::solve_marginals(std::span<const Marginal> marginals) const {
  return method_ == NewsvendorMethod::Lagrangian ? newsvendor_solve_lagrangian(marginals, spec_)
                                                 : newsvendor_solve_lp(marginals, spec_);
}

// ---------------------------------------------------------------------------

void ShipmentSpec::validate() const {
  if (facilities == 0 || locations == 0) throw std::invalid_argument("shipment: empty network");
  if (shipping.rows() != facilities || shipping.cols() != locations) {
    throw std::invalid_argument("shipment: shipping cost shape mismatch");
  }
  if (!(first_stage_cost > 0.0 && second_stage_cost > first_stage_cost)) {
    throw std::invalid_argument("shipment: need 0 < p1 < p2");
  }
  for (double c : shipping.data()) {
    if (!(c >= 0.0) || !std::isfinite(c)) throw std::invalid_argument("shipment: bad shipping cost");
  }
}

ShipmentSpec make_shipment_spec(std::uint64_t seed, std::size_t facilities, std::size_t locations) {
  ShipmentSpec spec;
  spec.facilities = facilities;
  spec.locations = locations;
  spec.shipping = Matrix(facilities, locations);
  auto rng = SeedSpec(seed).engine("shipping-costs");
  std::uniform_real_distribution<double> xi(0.0, 3.0);
  for (std::size_t f = 0; f < facilities; ++f) {
    for (std::size_t l = 0; l < locations; ++l) spec.shipping(f, l) = 20.0 + 2.0 * static_cast<double>(f) + xi(rng);
  }
  return spec;
}

namespace {

// Adds one scenario's recourse block. Returns the first row index; demand rows
// come first, then capacity rows. Variables are u2 (F x L, row-major) then e.
struct RecourseBlock {
  std::size_t first_var;
  std::size_t first_row;
};

RecourseBlock add_recourse(lp::LinearProgram& prog, std::span<const double> y, const ShipmentSpec& spec,
                           double weight, std::span<const std::size_t> u1_vars, std::span<const double> u1_fixed) {
  const std::size_t F = spec.facilities, L = spec.locations;
  RecourseBlock b{prog.num_vars(), prog.num_rows()};
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t l = 0; l < L; ++l) prog.add_var(weight * spec.shipping(f, l));
  }
  for (std::size_t f = 0; f < F; ++f) prog.add_var(weight * spec.second_stage_cost);
  std::vector<std::size_t> cols;
  std::vector<double> coef;
  for (std::size_t l = 0; l < L; ++l) {
    cols.clear();
    coef.clear();
    for (std::size_t f = 0; f < F; ++f) {
      cols.push_back(b.first_var + f * L + l);
      coef.push_back(1.0);
    }
    prog.add_row(cols, coef, lp::Relation::GreaterEqual, y[l]);
  }
  for (std::size_t f = 0; f < F; ++f) {
    cols.clear();
    coef.clear();
    for (std::size_t l = 0; l < L; ++l) {
      cols.push_back(b.first_var + f * L + l);
      coef.push_back(1.0);
    }
    cols.push_back(b.first_var + F * L + f);
    coef.push_back(-1.0);
    double rhs = 0.0;
    if (u1_vars.empty()) {
      rhs = u1_fixed[f];
    } else {
      cols.push_back(u1_vars[f]);
      coef.push_back(-1.0);
    }
    prog.add_row(cols, coef, lp::Relation::LessEqual, rhs);
  }
  return b;
}

bool all_zero(std::span<const double> y) {
  return std::all_of(y.begin(), y.end(), [](double v) { return v == 0.0; });
}

}  // namespace

Recourse shipment_second_stage(std::span<const double> u1, std::span<const double> y, const ShipmentSpec& spec) {
  check_dim(u1, spec.facilities, "shipment u1");
  check_dim(y, spec.locations, "shipment y");
  const std::size_t F = spec.facilities, L = spec.locations;
  Recourse r;
  r.shipments = Matrix(F, L);
  r.extra.assign(F, 0.0);
  r.capacity_duals.assign(F, 0.0);
  r.demand_duals.assign(L, 0.0);
  if (all_zero(y)) return r;

  lp::LinearProgram prog;
  auto b = add_recourse(prog, y, spec, 1.0, {}, u1);
  auto sol = lp::solve_lp(prog);
  if (sol.status != lp::Status::Optimal) throw SolverError("shipment recourse: " + lp::to_string(sol.status));
  r.value = std::max(0.0, sol.objective);
  for (std::size_t f = 0; f < F; ++f) {
    for (std::size_t l = 0; l < L; ++l) r.shipments(f, l) = sol.x[b.first_var + f * L + l];
    r.extra[f] = sol.x[b.first_var + F * L + f];
  }
  for (std::size_t l = 0; l < L; ++l) r.demand_duals[l] = sol.duals[b.first_row + l];
  for (std::size_t f = 0; f < F; ++f) r.capacity_duals[f] = std::min(0.0, sol.duals[b.first_row + L + f]);
  return r;
}

double shipment_cost(std::span<const double> u1, std::span<const double> y, const ShipmentSpec& spec) {
  double c = 0.0;
  for (double u : u1) c += spec.first_stage_cost * u;
  c += shipment_second_stage(u1, y, spec).value;
  for (double v : y) c -= spec.revenue * v;
  return c;
}

double shipment_weighted_objective(std::span<const double> u1, const Matrix& scenarios,
                                   std::span<const double> weights, const ShipmentSpec& spec) {
  double total = 0.0;
  for (double u : u1) total += spec.first_stage_cost * u;
  for (std::size_t i = 0; i < scenarios.rows(); ++i) {
    if (weights[i] == 0.0) continue;
    total += weights[i] * shipment_second_stage(u1, scenarios.row(i), spec).value;
  }
  return total;
}

namespace {

Decision solve_extensive(const Matrix& scenarios, std::span<const double> weights, const ShipmentSpec& spec) {
  lp::LinearProgram prog;
  std::vector<std::size_t> u(spec.facilities);
  for (auto& v : u) v = prog.add_var(spec.first_stage_cost);
  for (std::size_t i = 0; i < scenarios.rows(); ++i) {
    if (weights[i] == 0.0) continue;
    add_recourse(prog, scenarios.row(i), spec, weights[i], u, {});
  }
  auto sol = lp::solve_lp(prog);
  if (sol.status != lp::Status::Optimal) throw SolverError("shipment extensive lp: " + lp::to_string(sol.status));
  Decision z(u.size());
  for (std::size_t f = 0; f < u.size(); ++f) z[f] = std::max(0.0, sol.x[u[f]]);
  return z;
}

// L-shaped method. Multi-cut keeps one epigraph variable per scenario; with
// many scenarios the cuts are aggregated into a single one.
Decision solve_benders(const Matrix& scenarios, std::span<const double> weights, const ShipmentSpec& spec) {
  const std::size_t F = spec.facilities;
  std::vector<std::size_t> active;
  for (std::size_t i = 0; i < scenarios.rows(); ++i) {
    if (weights[i] > 0.0 && !all_zero(scenarios.row(i))) active.push_back(i);
  }
  if (active.empty()) return Decision(F, 0.0);
  const bool multi = active.size() <= 64;

  lp::LinearProgram master;
  std::vector<std::size_t> u(F);
  for (auto& v : u) v = master.add_var(spec.first_stage_cost);
  std::vector<std::size_t> theta;
  if (multi) {
    for (std::size_t i : active) theta.push_back(master.add_var(weights[i]));
  } else {
    theta.push_back(master.add_var(1.0));
  }

  Decision best(F, 0.0);
  double best_ub = lp::kInf;
  std::vector<std::size_t> cols;
  std::vector<double> coef;
  constexpr int kMaxRounds = 2000;
  for (int round = 0; round < kMaxRounds; ++round) {
    Decision z(F, 0.0);
    double lb = 0.0;
    std::vector<double> theta_val(theta.size(), 0.0);
    if (round > 0) {
      auto sol = lp::solve_lp(master);
      if (sol.status != lp::Status::Optimal) throw SolverError("shipment master: " + lp::to_string(sol.status));
      for (std::size_t f = 0; f < F; ++f) z[f] = std::max(0.0, sol.x[u[f]]);
      for (std::size_t t = 0; t < theta.size(); ++t) theta_val[t] = sol.x[theta[t]];
      lb = sol.objective;
    }
    double ub = 0.0;
    for (double v : z) ub += spec.first_stage_cost * v;
    Vector agg_grad(F, 0.0);
    double agg_value = 0.0;
    std::vector<Recourse> recs;
    recs.reserve(active.size());
    for (std::size_t a = 0; a < active.size(); ++a) {
      recs.push_back(shipment_second_stage(z, scenarios.row(active[a]), spec));
      const double w = weights[active[a]];
      ub += w * recs.back().value;
      agg_value += w * recs.back().value;
      for (std::size_t f = 0; f < F; ++f) agg_grad[f] += w * recs.back().capacity_duals[f];
    }
    if (ub < best_ub) {
      best_ub = ub;
      best = z;
    }
    const double tol = 1e-9 * (1.0 + std::abs(best_ub));
    if (round > 0 && best_ub - lb <= tol) break;

    // theta >= Q(z) + g'(u - z)
    auto add_cut = [&](std::size_t t, double value, std::span<const double> grad) {
      cols.assign({theta[t]});
      coef.assign({1.0});
      double rhs = value;
      for (std::size_t f = 0; f < F; ++f) {
        if (grad[f] == 0.0) continue;
        cols.push_back(u[f]);
        coef.push_back(-grad[f]);
        rhs -= grad[f] * z[f];
      }
      master.add_row(cols, coef, lp::Relation::GreaterEqual, rhs);
    };
    bool added = false;
    if (multi) {
      for (std::size_t a = 0; a < active.size(); ++a) {
        if (round > 0 && theta_val[a] >= recs[a].value - tol) continue;
        add_cut(a, recs[a].value, recs[a].capacity_duals);
        added = true;
      }
    } else if (round == 0 || theta_val[0] < agg_value - tol) {
      add_cut(0, agg_value, agg_grad);
      added = true;
    }
    if (!added) break;
  }
  return best;
}

}  // namespace

Decision shipment_solve_weighted(const Matrix& scenarios, std::span<const double> weights, const ShipmentSpec& spec,
                                 ShipmentMethod method) {
  if (scenarios.cols() != spec.locations || scenarios.rows() != weights.size()) {
    throw std::invalid_argument("shipment: scenario shape mismatch");
  }
  if (method == ShipmentMethod::Auto) {
    method = scenarios.rows() <= 8 ? ShipmentMethod::ExtensiveLp : ShipmentMethod::Benders;
  }
  return method == ShipmentMethod::ExtensiveLp ? solve_extensive(scenarios, weights, spec)
                                               : solve_benders(scenarios, weights, spec);
}

ShipmentProblem::ShipmentProblem(ShipmentSpec spec, ShipmentMethod method) : spec_(std::move(spec)), method_(method) {
  spec_.validate();
}

bool ShipmentProblem::is_feasible(std::span<const double> z) const {
  if (z.size() != spec_.facilities) return false;
  return std::all_of(z.begin(), z.end(), [](double v) { return std::isfinite(v) && v >= -1e-9; });
}

double ShipmentProblem::cost(std::span<const double> z, std::span<const double> y) const {
  if (!is_feasible(z)) throw FeasibilityError("shipment: infeasible production");
  Decision clamped(z.begin(), z.end());
  for (auto& v : clamped) v = std::max(0.0, v);
  return shipment_cost(clamped, y, spec_);
}

Decision ShipmentProblem::solve_weighted(const Matrix& scenarios, std::span<const double> weights) const {
  return shipment_solve_weighted(scenarios, weights, spec_, method_);
}

}  // namespace ps
