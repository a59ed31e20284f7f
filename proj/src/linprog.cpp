#include "ps/linprog.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "ps/core.hpp"

namespace ps::lp {

std::string to_string(Status s) {
  switch (s) {
    case Status::Optimal: return "optimal";
    case Status::Infeasible: return "infeasible";
    case Status::Unbounded: return "unbounded";
  }
  return "unknown";
}

LinearProgram::LinearProgram(std::size_t num_vars)
    : objective_(num_vars, 0.0), lo_(num_vars, 0.0), hi_(num_vars, kInf) {}

std::size_t LinearProgram::add_var(double cost, double lo, double hi) {
  if (!std::isfinite(cost)) throw std::invalid_argument("add_var: non-finite cost");
  objective_.push_back(cost);
  lo_.push_back(lo);
  hi_.push_back(hi);
  return objective_.size() - 1;
}

void LinearProgram::set_bounds(std::size_t j, double lo, double hi) {
  lo_.at(j) = lo;
  hi_.at(j) = hi;
}

std::size_t LinearProgram::add_row(std::span<const std::size_t> cols, std::span<const double> coeffs,
                                   Relation rel, double rhs) {
  if (cols.size() != coeffs.size()) throw std::invalid_argument("add_row: size mismatch");
  if (!std::isfinite(rhs)) throw std::invalid_argument("add_row: non-finite rhs");
  std::size_t nnz = 0;
  for (std::size_t k = 0; k < cols.size(); ++k) {
    if (cols[k] >= num_vars()) throw std::invalid_argument("add_row: unknown column");
    if (!std::isfinite(coeffs[k])) throw std::invalid_argument("add_row: non-finite coefficient");
    if (coeffs[k] == 0.0) continue;
    cols_.push_back(cols[k]);
    vals_.push_back(coeffs[k]);
    ++nnz;
  }
  if (nnz == 0) throw std::invalid_argument("add_row: constraint row has no nonzero");
  row_start_.push_back(cols_.size());
  rel_.push_back(rel);
  rhs_.push_back(rhs);
  return rhs_.size() - 1;
}

double LinearProgram::row_activity(std::size_t r, std::span<const double> x) const {
  double s = 0.0;
  auto c = row_cols(r);
  auto v = row_values(r);
  for (std::size_t k = 0; k < c.size(); ++k) s += v[k] * x[c[k]];
  return s;
}

double LinearProgram::max_violation(std::span<const double> x) const {
  double worst = 0.0;
  for (std::size_t j = 0; j < num_vars(); ++j) {
    worst = std::max({worst, lo_[j] - x[j], x[j] - hi_[j]});
  }
  for (std::size_t r = 0; r < num_rows(); ++r) {
    double a = row_activity(r, x);
    switch (rel_[r]) {
      case Relation::LessEqual: worst = std::max(worst, a - rhs_[r]); break;
      case Relation::GreaterEqual: worst = std::max(worst, rhs_[r] - a); break;
      case Relation::Equal: worst = std::max(worst, std::abs(a - rhs_[r])); break;
    }
  }
  return worst;
}

void LinearProgram::dump(std::ostream& os) const {
  os << "min";
  for (std::size_t j = 0; j < num_vars(); ++j) {
    if (objective_[j] != 0.0) os << ' ' << objective_[j] << "*x" << j;
  }
  os << '\n';
  for (std::size_t r = 0; r < num_rows(); ++r) {
    auto c = row_cols(r);
    auto v = row_values(r);
    os << 'r' << r << ':';
    for (std::size_t k = 0; k < c.size(); ++k) os << ' ' << v[k] << "*x" << c[k];
    os << (rel_[r] == Relation::LessEqual ? " <= " : rel_[r] == Relation::GreaterEqual ? " >= " : " = ")
       << rhs_[r] << '\n';
  }
  for (std::size_t j = 0; j < num_vars(); ++j) {
    os << "bound x" << j << " [" << lo_[j] << ", " << hi_[j] << "]\n";
  }
}

namespace {

constexpr double kPivotTol = 1e-9;
constexpr double kCostTol = 1e-9;

// Equality-form problem: min c'x, A x = b, 0 <= x <= u, with b >= 0.
struct StandardForm {
  std::size_t m = 0;
  std::vector<std::vector<std::pair<std::size_t, double>>> cols;
  std::vector<double> cost;
  std::vector<double> upper;
  std::vector<double> b;
  std::vector<char> artificial;
  std::vector<std::size_t> initial_basis;

  // Recovery of original variables: x_j = offset_j + sum sign * x'_col.
  struct Term {
    std::size_t col;
    double sign;
  };
  std::vector<double> offset;
  std::vector<std::vector<Term>> terms;
  std::vector<double> row_sign;  // -1 where an original row was negated
  double objective_offset = 0.0;
};

StandardForm standardize(const LinearProgram& lp) {
  StandardForm sf;
  const std::size_t n = lp.num_vars();
  sf.offset.assign(n, 0.0);
  sf.terms.resize(n);

  for (std::size_t j = 0; j < n; ++j) {
    const double lo = lp.lower()[j];
    const double hi = lp.upper()[j];
    const double c = lp.objective()[j];
    if (std::isfinite(lo)) {
      sf.offset[j] = lo;
      sf.terms[j].push_back({sf.cost.size(), 1.0});
      sf.cost.push_back(c);
      sf.upper.push_back(std::isfinite(hi) ? hi - lo : kInf);
    } else if (std::isfinite(hi)) {
      sf.offset[j] = hi;
      sf.terms[j].push_back({sf.cost.size(), -1.0});
      sf.cost.push_back(-c);
      sf.upper.push_back(kInf);
    } else {
      sf.terms[j].push_back({sf.cost.size(), 1.0});
      sf.cost.push_back(c);
      sf.upper.push_back(kInf);
      sf.terms[j].push_back({sf.cost.size(), -1.0});
      sf.cost.push_back(-c);
      sf.upper.push_back(kInf);
    }
    sf.objective_offset += c * sf.offset[j];
  }
  sf.cols.resize(sf.cost.size());

  const std::size_t m = lp.num_rows();
  sf.m = m;
  sf.b.resize(m);
  sf.row_sign.assign(m, 1.0);
  std::vector<double> slack_coef(m, 0.0);
  for (std::size_t r = 0; r < m; ++r) {
    double rhs = lp.rhs(r);
    auto rc = lp.row_cols(r);
    auto rv = lp.row_values(r);
    for (std::size_t k = 0; k < rc.size(); ++k) rhs -= rv[k] * sf.offset[rc[k]];
    double sign = rhs < 0.0 ? -1.0 : 1.0;
    sf.row_sign[r] = sign;
    sf.b[r] = sign * rhs;
    for (std::size_t k = 0; k < rc.size(); ++k) {
      for (const auto& t : sf.terms[rc[k]]) sf.cols[t.col].emplace_back(r, sign * rv[k] * t.sign);
    }
    if (lp.relation(r) == Relation::LessEqual) slack_coef[r] = sign;
    if (lp.relation(r) == Relation::GreaterEqual) slack_coef[r] = -sign;
  }
  // Merge duplicate (row, col) entries from free-variable splits sharing a column.
  for (auto& col : sf.cols) {
    std::sort(col.begin(), col.end());
    std::vector<std::pair<std::size_t, double>> merged;
    for (const auto& e : col) {
      if (!merged.empty() && merged.back().first == e.first) {
        merged.back().second += e.second;
      } else {
        merged.push_back(e);
      }
    }
    std::erase_if(merged, [](const auto& e) { return e.second == 0.0; });
    col = std::move(merged);
  }
  sf.artificial.assign(sf.cost.size(), 0);
  sf.initial_basis.assign(m, 0);
  for (std::size_t r = 0; r < m; ++r) {
    if (slack_coef[r] != 0.0) {
      sf.cols.push_back({{r, slack_coef[r]}});
      sf.cost.push_back(0.0);
      sf.upper.push_back(kInf);
      sf.artificial.push_back(0);
      if (slack_coef[r] > 0.0) {
        sf.initial_basis[r] = sf.cols.size() - 1;
        continue;
      }
    }
    sf.cols.push_back({{r, 1.0}});
    sf.cost.push_back(0.0);
    sf.upper.push_back(kInf);
    sf.artificial.push_back(1);
    sf.initial_basis[r] = sf.cols.size() - 1;
  }
  return sf;
}

enum class VarState : unsigned char { Basic, AtLower, AtUpper };

class BoundedSimplex {
 public:
  BoundedSimplex(const StandardForm& sf, const SimplexOptions& opt) : sf_(sf), opt_(opt) {
    m_ = sf.m;
    n_ = sf.cols.size();
    state_.assign(n_, VarState::AtLower);
    basis_ = sf.initial_basis;
    for (std::size_t k = 0; k < m_; ++k) state_[basis_[k]] = VarState::Basic;
    binv_.assign(m_ * m_, 0.0);
    xb_.assign(m_, 0.0);
    y_.assign(m_, 0.0);
    alpha_.assign(m_, 0.0);
    max_iter_ = opt.max_iterations ? opt.max_iterations : 200 * (m_ + n_) + 1000;
  }

  // Returns false when the phase ends unbounded.
  bool run(const std::vector<double>& cost, bool allow_artificial_entering) {
    refactor();
    std::size_t degenerate_run = 0;
    std::size_t since_refactor = 0;
    for (;;) {
      if (iterations_ >= max_iter_) {
        std::ostringstream msg;
        msg << "simplex exceeded " << max_iter_ << " iterations (rows=" << m_ << ", cols=" << n_ << ")";
        throw SolverError(msg.str());
      }
      compute_duals(cost);
      const bool bland = degenerate_run >= opt_.degenerate_before_bland;
      std::size_t entering = n_;
      double best = 0.0;
      for (std::size_t j = 0; j < n_; ++j) {
        if (state_[j] == VarState::Basic) continue;
        if (sf_.artificial[j] && !allow_artificial_entering) continue;
        double d = reduced_cost(cost, j);
        double gain = 0.0;
        if (state_[j] == VarState::AtLower && d < -kCostTol) gain = -d;
        if (state_[j] == VarState::AtUpper && d > kCostTol) gain = d;
        if (gain <= 0.0) continue;
        if (bland) {
          entering = j;
          break;
        }
        if (gain > best) {
          best = gain;
          entering = j;
        }
      }
      if (entering == n_) return true;

      const double dir = state_[entering] == VarState::AtLower ? 1.0 : -1.0;
      column(entering);

      double t_max = sf_.upper[entering];
      std::size_t leave = m_;
      bool leave_upper = false;
      for (std::size_t k = 0; k < m_; ++k) {
        double g = dir * alpha_[k];
        double limit;
        bool to_upper;
        if (g > kPivotTol) {
          limit = std::max(xb_[k], 0.0) / g;
          to_upper = false;
        } else if (g < -kPivotTol && std::isfinite(sf_.upper[basis_[k]])) {
          limit = std::max(sf_.upper[basis_[k]] - xb_[k], 0.0) / -g;
          to_upper = true;
        } else {
          continue;
        }
        bool take = false;
        if (leave == m_) {
          take = limit <= t_max;
        } else if (limit < t_max - 1e-12) {
          take = true;
        } else if (limit <= t_max + 1e-12) {
          take = bland ? basis_[k] < basis_[leave] : std::abs(alpha_[k]) > std::abs(alpha_[leave]);
        }
        if (take) {
          t_max = std::min(t_max, limit);
          leave = k;
          leave_upper = to_upper;
        }
      }
      if (!std::isfinite(t_max)) return false;

      ++iterations_;
      degenerate_run = t_max <= 1e-12 ? degenerate_run + 1 : 0;

      for (std::size_t k = 0; k < m_; ++k) xb_[k] -= dir * t_max * alpha_[k];
      if (leave == m_) {
        state_[entering] = state_[entering] == VarState::AtLower ? VarState::AtUpper : VarState::AtLower;
        continue;
      }
      const double entering_value = (dir > 0 ? 0.0 : sf_.upper[entering]) + dir * t_max;
      const std::size_t old = basis_[leave];
      state_[old] = leave_upper ? VarState::AtUpper : VarState::AtLower;
      basis_[leave] = entering;
      state_[entering] = VarState::Basic;
      xb_[leave] = entering_value;
      pivot(leave);
      if (++since_refactor >= opt_.refactor_every) {
        refactor();
        since_refactor = 0;
      }
    }
  }

  // Pivot basic artificials out where a structural column can replace them.
  void expel_artificials() {
    for (std::size_t k = 0; k < m_; ++k) {
      if (!sf_.artificial[basis_[k]]) continue;
      for (std::size_t j = 0; j < n_; ++j) {
        if (state_[j] == VarState::Basic || sf_.artificial[j]) continue;
        column(j);
        if (std::abs(alpha_[k]) <= 1e-7) continue;
        const std::size_t old = basis_[k];
        state_[old] = VarState::AtLower;
        basis_[k] = j;
        state_[j] = VarState::Basic;
        pivot(k);
        recompute_xb();
        break;
      }
    }
  }

  void refactor() {
    // Gauss-Jordan inversion of the basis matrix with partial pivoting.
    std::vector<double> a(m_ * m_, 0.0);
    for (std::size_t k = 0; k < m_; ++k) {
      for (const auto& [r, v] : sf_.cols[basis_[k]]) a[r * m_ + k] = v;
    }
    std::fill(binv_.begin(), binv_.end(), 0.0);
    for (std::size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = 1.0;
    for (std::size_t c = 0; c < m_; ++c) {
      std::size_t p = c;
      for (std::size_t r = c + 1; r < m_; ++r) {
        if (std::abs(a[r * m_ + c]) > std::abs(a[p * m_ + c])) p = r;
      }
      if (std::abs(a[p * m_ + c]) < 1e-13) throw SolverError("simplex: singular basis during refactorization");
      if (p != c) {
        for (std::size_t j = 0; j < m_; ++j) {
          std::swap(a[p * m_ + j], a[c * m_ + j]);
          std::swap(binv_[p * m_ + j], binv_[c * m_ + j]);
        }
      }
      const double inv = 1.0 / a[c * m_ + c];
      for (std::size_t j = 0; j < m_; ++j) {
        a[c * m_ + j] *= inv;
        binv_[c * m_ + j] *= inv;
      }
      for (std::size_t r = 0; r < m_; ++r) {
        if (r == c) continue;
        const double f = a[r * m_ + c];
        if (f == 0.0) continue;
        for (std::size_t j = 0; j < m_; ++j) {
          a[r * m_ + j] -= f * a[c * m_ + j];
          binv_[r * m_ + j] -= f * binv_[c * m_ + j];
        }
      }
    }
    recompute_xb();
  }

  void compute_duals(const std::vector<double>& cost) {
    std::fill(y_.begin(), y_.end(), 0.0);
    for (std::size_t k = 0; k < m_; ++k) {
      const double cb = cost[basis_[k]];
      if (cb == 0.0) continue;
      const double* row = &binv_[k * m_];
      for (std::size_t i = 0; i < m_; ++i) y_[i] += cb * row[i];
    }
  }

  double reduced_cost(const std::vector<double>& cost, std::size_t j) const {
    double d = cost[j];
    for (const auto& [r, v] : sf_.cols[j]) d -= y_[r] * v;
    return d;
  }

  double value(std::size_t j) const {
    if (state_[j] == VarState::AtUpper) return sf_.upper[j];
    return 0.0;
  }

  std::vector<double> primal() const {
    std::vector<double> x(n_);
    for (std::size_t j = 0; j < n_; ++j) x[j] = value(j);
    for (std::size_t k = 0; k < m_; ++k) x[basis_[k]] = xb_[k];
    return x;
  }

  const std::vector<double>& duals() const { return y_; }
  std::size_t iterations() const { return iterations_; }

 private:
  void column(std::size_t j) {
    std::fill(alpha_.begin(), alpha_.end(), 0.0);
    for (const auto& [r, v] : sf_.cols[j]) {
      for (std::size_t k = 0; k < m_; ++k) alpha_[k] += binv_[k * m_ + r] * v;
    }
  }

  void pivot(std::size_t r) {
    const double piv = alpha_[r];
    double* row_r = &binv_[r * m_];
    for (std::size_t i = 0; i < m_; ++i) row_r[i] /= piv;
    for (std::size_t k = 0; k < m_; ++k) {
      if (k == r || alpha_[k] == 0.0) continue;
      const double f = alpha_[k];
      double* row_k = &binv_[k * m_];
      for (std::size_t i = 0; i < m_; ++i) row_k[i] -= f * row_r[i];
    }
  }

  void recompute_xb() {
    std::vector<double> rhs = sf_.b;
    for (std::size_t j = 0; j < n_; ++j) {
      if (state_[j] != VarState::AtUpper) continue;
      for (const auto& [r, v] : sf_.cols[j]) rhs[r] -= v * sf_.upper[j];
    }
    for (std::size_t k = 0; k < m_; ++k) {
      double s = 0.0;
      const double* row = &binv_[k * m_];
      for (std::size_t i = 0; i < m_; ++i) s += row[i] * rhs[i];
      xb_[k] = s;
    }
  }

  const StandardForm& sf_;
  SimplexOptions opt_;
  std::size_t m_ = 0;
  std::size_t n_ = 0;
  std::vector<VarState> state_;
  std::vector<std::size_t> basis_;
  std::vector<double> binv_;
  std::vector<double> xb_;
  std::vector<double> y_;
  std::vector<double> alpha_;
  std::size_t iterations_ = 0;
  std::size_t max_iter_ = 0;
};

}  // namespace

LpSolution solve_lp(const LinearProgram& lp, const SimplexOptions& options) {
  LpSolution sol;
  const std::size_t n = lp.num_vars();
  for (std::size_t j = 0; j < n; ++j) {
    if (lp.lower()[j] > lp.upper()[j]) {
      sol.status = Status::Infeasible;
      return sol;
    }
  }
  StandardForm sf = standardize(lp);
  BoundedSimplex simplex(sf, options);

  std::vector<double> phase1(sf.cost.size(), 0.0);
  bool any_artificial = false;
  for (std::size_t j = 0; j < sf.cost.size(); ++j) {
    if (sf.artificial[j]) {
      phase1[j] = 1.0;
      any_artificial = true;
    }
  }
  if (any_artificial) {
    simplex.run(phase1, true);
    auto x = simplex.primal();
    double infeas = 0.0;
    double scale = 1.0;
    for (double v : sf.b) scale = std::max(scale, std::abs(v));
    for (std::size_t j = 0; j < x.size(); ++j) {
      if (sf.artificial[j]) infeas += x[j];
    }
    if (infeas > kFeasTol * scale) {
      sol.status = Status::Infeasible;
      sol.iterations = simplex.iterations();
      return sol;
    }
    simplex.expel_artificials();
  }

  if (!simplex.run(sf.cost, false)) {
    sol.status = Status::Unbounded;
    sol.iterations = simplex.iterations();
    return sol;
  }
  simplex.refactor();
  simplex.compute_duals(sf.cost);

  auto xs = simplex.primal();
  sol.status = Status::Optimal;
  sol.iterations = simplex.iterations();
  sol.x.assign(n, 0.0);
  for (std::size_t j = 0; j < n; ++j) {
    double v = sf.offset[j];
    for (const auto& t : sf.terms[j]) v += t.sign * xs[t.col];
    v = std::clamp(v, lp.lower()[j], lp.upper()[j]);
    sol.x[j] = v;
  }
  sol.objective = 0.0;
  for (std::size_t j = 0; j < n; ++j) sol.objective += lp.objective()[j] * sol.x[j];
  sol.duals.resize(lp.num_rows());
  for (std::size_t r = 0; r < lp.num_rows(); ++r) sol.duals[r] = sf.row_sign[r] * simplex.duals()[r];
  return sol;
}

}  // namespace ps::lp
