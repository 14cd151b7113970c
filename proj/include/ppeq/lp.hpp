#pragma once

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <cstring>
#include <limits>
#include <sstream>
#include <string>
#include <vector>

#include "ppeq/rational.hpp"

namespace ppeq {

struct SolverFailure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace lp {

constexpr double kInf = std::numeric_limits<double>::infinity();

struct Row {
  std::vector<std::pair<size_t, double>> coeffs;
  double rhs = 0;
  char sense = '=';  // '=', '<', '>'
};

struct Problem {
  size_t ncols = 0;
  bool maximize = true;
  std::vector<double> obj;
  std::vector<double> lo, hi;
  std::vector<Row> rows;
  std::vector<std::string> col_names;  // optional, for dumps

  size_t add_col(double lo_, double hi_, double obj_ = 0, const std::string& name = "") {
    obj.push_back(obj_);
    lo.push_back(lo_);
    hi.push_back(hi_);
    col_names.push_back(name.empty() ? "x" + std::to_string(ncols) : name);
    return ncols++;
  }

  std::string dump_lp_format() const {
    std::ostringstream os;
    os << (maximize ? "Maximize" : "Minimize") << "\n obj:";
    for (size_t j = 0; j < ncols; ++j)
      if (obj[j] != 0) os << (obj[j] >= 0 ? " + " : " - ") << std::abs(obj[j]) << " " << col_names[j];
    os << "\nSubject To\n";
    for (size_t i = 0; i < rows.size(); ++i) {
      os << " c" << i << ":";
      for (auto& [j, a] : rows[i].coeffs)
        os << (a >= 0 ? " + " : " - ") << std::abs(a) << " " << col_names[j];
      os << (rows[i].sense == '=' ? " = " : rows[i].sense == '<' ? " <= " : " >= ")
         << rows[i].rhs << "\n";
    }
    os << "Bounds\n";
    for (size_t j = 0; j < ncols; ++j) {
      if (lo[j] == -kInf && hi[j] == kInf)
        os << " " << col_names[j] << " free\n";
      else if (lo[j] == -kInf)
        os << " -inf <= " << col_names[j] << " <= " << hi[j] << "\n";
      else if (hi[j] == kInf)
        os << " " << col_names[j] << " >= " << lo[j] << "\n";
      else
        os << " " << lo[j] << " <= " << col_names[j] << " <= " << hi[j] << "\n";
    }
    os << "End\n";
    return os.str();
  }
};

enum class Status { Optimal, Infeasible, Unbounded, Failure };

struct Solution {
  Status status = Status::Failure;
  std::vector<double> x;
  double objective = 0;
  long iterations = 0;
  std::string detail;
};

/// Bounded-variable two-phase revised primal simplex with a dense basis
/// inverse. Built for the moderate, very sparse systems produced by the
/// Handelman translation; exact certificate checking happens downstream, so
/// double precision here only has to find a candidate, not prove it.
class Simplex {
 public:
  explicit Simplex(const Problem& p) : p_(p) { build(); }

  Solution solve(long max_iters = 200000) {
    Solution sol;
    if (m_ == 0) return solve_trivial();
    // Phase 1
    phase_ = 1;
    if (!iterate(max_iters)) {
      sol.status = Status::Failure;
      sol.detail = "phase1: " + fail_reason_;
      sol.iterations = iters_;
      return sol;
    }
    double infeas = phase1_value();
    if (infeas > 1e-6 * (1.0 + bscale_)) {
      sol.status = Status::Infeasible;
      sol.iterations = iters_;
      return sol;
    }
    for (size_t j = art_begin_; j < n_; ++j) {
      lo_[j] = 0;
      hi_[j] = 0;
    }
    // Phase 2
    phase_ = 2;
    if (!iterate(max_iters)) {
      sol.status = Status::Failure;
      sol.detail = "phase2: " + fail_reason_;
      sol.iterations = iters_;
      return sol;
    }
    if (unbounded_) {
      sol.status = Status::Unbounded;
      sol.iterations = iters_;
      return sol;
    }
    sol.status = Status::Optimal;
    sol.x = extract();
    sol.objective = 0;
    for (size_t j = 0; j < p_.ncols; ++j) sol.objective += p_.obj[j] * sol.x[j];
    sol.iterations = iters_;
    return sol;
  }

 private:
  const Problem& p_;
  size_t m_ = 0, n_ = 0, nstruct_ = 0, art_begin_ = 0;
  std::vector<std::vector<std::pair<size_t, double>>> cols_;  // by column: (row, value)
  std::vector<double> lo_, hi_, cost_, art_cost_;
  std::vector<double> b_;
  double bscale_ = 1.0;

  std::vector<double> binv_;  // m x m row-major
  std::vector<int> basic_;    // row -> var
  std::vector<int> in_row_;   // var -> row or -1
  enum class VS : uint8_t { AtLower, AtUpper, Basic, FreeZero };
  std::vector<VS> vstat_;
  std::vector<double> xb_;
  int phase_ = 1;
  bool trace_ = std::getenv("PPEQ_TRACE_LP") != nullptr;
  std::string fail_reason_;
  bool unbounded_ = false;
  long iters_ = 0;
  long degenerate_run_ = 0;

  Solution solve_trivial() {
    Solution sol;
    sol.status = Status::Optimal;
    sol.x.assign(p_.ncols, 0.0);
    for (size_t j = 0; j < p_.ncols; ++j) {
      double v = 0;
      if (p_.lo[j] > 0 || p_.hi[j] < 0) v = std::abs(p_.lo[j]) < std::abs(p_.hi[j]) ? p_.lo[j] : p_.hi[j];
      if (p_.maximize ? p_.obj[j] > 0 : p_.obj[j] < 0)
        v = p_.hi[j] < kInf ? p_.hi[j] : v;
      else if (p_.maximize ? p_.obj[j] < 0 : p_.obj[j] > 0)
        v = p_.lo[j] > -kInf ? p_.lo[j] : v;
      sol.x[j] = v;
      sol.objective += p_.obj[j] * v;
    }
    return sol;
  }

  void build() {
    m_ = p_.rows.size();
    nstruct_ = p_.ncols;
    // row scaling
    std::vector<double> rscale(m_, 1.0);
    for (size_t i = 0; i < m_; ++i) {
      double mx = std::abs(p_.rows[i].rhs);
      for (auto& [j, a] : p_.rows[i].coeffs) mx = std::max(mx, std::abs(a));
      if (mx > 0) rscale[i] = 1.0 / mx;
    }
    // slacks
    size_t nslack = 0;
    for (auto& r : p_.rows)
      if (r.sense != '=') ++nslack;
    n_ = nstruct_ + nslack + m_;  // + artificials
    cols_.assign(n_, {});
    lo_.assign(n_, 0.0);
    hi_.assign(n_, 0.0);
    cost_.assign(n_, 0.0);
    art_cost_.assign(n_, 0.0);
    b_.assign(m_, 0.0);
    for (size_t j = 0; j < nstruct_; ++j) {
      lo_[j] = p_.lo[j];
      hi_[j] = p_.hi[j];
      cost_[j] = p_.maximize ? p_.obj[j] : -p_.obj[j];
    }
    for (size_t i = 0; i < m_; ++i) {
      for (auto& [j, a] : p_.rows[i].coeffs) cols_[j].emplace_back(i, a * rscale[i]);
      b_[i] = p_.rows[i].rhs * rscale[i];
      bscale_ = std::max(bscale_, std::abs(b_[i]));
    }
    size_t sj = nstruct_;
    for (size_t i = 0; i < m_; ++i) {
      if (p_.rows[i].sense == '=') continue;
      cols_[sj].emplace_back(i, 1.0);
      if (p_.rows[i].sense == '<') {
        lo_[sj] = 0;
        hi_[sj] = kInf;
      } else {
        lo_[sj] = -kInf;
        hi_[sj] = 0;
      }
      ++sj;
    }
    // nonbasic start for structurals and slacks
    vstat_.assign(n_, VS::AtLower);
    for (size_t j = 0; j < sj; ++j) {
      if (lo_[j] == -kInf && hi_[j] == kInf)
        vstat_[j] = VS::FreeZero;
      else if (std::abs(bound_or(lo_[j], 0)) <= std::abs(bound_or(hi_[j], 0)) && lo_[j] > -kInf)
        vstat_[j] = VS::AtLower;
      else if (hi_[j] < kInf)
        vstat_[j] = VS::AtUpper;
      else
        vstat_[j] = VS::AtLower;
    }
    // artificial columns soak up the residual
    std::vector<double> resid = b_;
    for (size_t j = 0; j < sj; ++j) {
      double v = nb_value(j);
      if (v == 0) continue;
      for (auto& [i, a] : cols_[j]) resid[i] -= a * v;
    }
    basic_.assign(m_, -1);
    in_row_.assign(n_, -1);
    size_t aj = nstruct_ + nslack;
    art_begin_ = aj;
    for (size_t i = 0; i < m_; ++i, ++aj) {
      double sgn = resid[i] >= 0 ? 1.0 : -1.0;
      cols_[aj].emplace_back(i, sgn);
      lo_[aj] = 0;
      hi_[aj] = kInf;
      art_cost_[aj] = -1.0;  // phase 1 maximizes -sum(artificials)
      basic_[i] = static_cast<int>(aj);
      in_row_[aj] = static_cast<int>(i);
      vstat_[aj] = VS::Basic;
    }
    binv_.assign(m_ * m_, 0.0);
    for (size_t i = 0; i < m_; ++i) binv_[i * m_ + i] = resid[i] >= 0 ? 1.0 : -1.0;
    xb_.assign(m_, 0.0);
    for (size_t i = 0; i < m_; ++i) xb_[i] = std::abs(resid[i]);
  }

  static double bound_or(double b, double fallback) {
    return (b == kInf || b == -kInf) ? fallback : b;
  }

  double nb_value(size_t j) const {
    switch (vstat_[j]) {
      case VS::AtLower: return lo_[j] == -kInf ? 0.0 : lo_[j];
      case VS::AtUpper: return hi_[j] == kInf ? 0.0 : hi_[j];
      case VS::FreeZero: return 0.0;
      case VS::Basic: return xb_[static_cast<size_t>(in_row_[j])];
    }
    return 0.0;
  }

  double phase1_value() const {
    double s = 0;
    for (size_t j = art_begin_; j < n_; ++j) s += std::abs(nb_value(j));
    return s;
  }

  double current_objective() const {
    double s = 0;
    for (size_t j = 0; j < nstruct_; ++j)
      if (cost_[j] != 0) s += cost_[j] * nb_value(j);
    return s;
  }

  const std::vector<double>& active_cost() const { return phase_ == 1 ? art_cost_ : cost_; }

  void compute_duals(std::vector<double>& y) const {
    y.assign(m_, 0.0);
    const auto& c = active_cost();
    for (size_t k = 0; k < m_; ++k) {
      double ck = c[static_cast<size_t>(basic_[k])];
      if (ck == 0) continue;
      const double* row = &binv_[k * m_];
      for (size_t i = 0; i < m_; ++i) y[i] += ck * row[i];
    }
  }

  double reduced_cost(size_t j, const std::vector<double>& y) const {
    double d = active_cost()[j];
    for (auto& [i, a] : cols_[j]) d -= y[i] * a;
    return d;
  }

  void ftran(size_t j, std::vector<double>& w) const {
    w.assign(m_, 0.0);
    for (auto& [i, a] : cols_[j]) {
      const size_t col = i;
      for (size_t k = 0; k < m_; ++k) w[k] += binv_[k * m_ + col] * a;
    }
  }

  bool iterate(long max_iters) {
    unbounded_ = false;
    std::vector<double> y, w;
    const double dtol = 1e-7;
    bool bland = false;
    long bland_since = 0;
    double best_obj = -kInf;
    long stalled = 0;
    while (iters_ < max_iters) {
      ++iters_;
      // phase 1 only needs feasibility, not dual optimality; degenerate
      // wandering near zero infeasibility is common and pointless
      if (phase_ == 1 && iters_ % 64 == 0 && phase1_value() <= 1e-8 * (1.0 + bscale_))
        return true;
      if (phase_ == 2 && iters_ % 256 == 0) {
        double cur = current_objective();
        if (cur > best_obj + 1e-9 * (1.0 + std::abs(best_obj))) {
          best_obj = cur;
          stalled = 0;
        } else if (++stalled > 60) {
          return true;  // objective stalled; exact verification gates the result
        }
      }
      compute_duals(y);
      // pricing
      int enter = -1;
      int dir = 0;
      double best = dtol;
      for (size_t j = 0; j < n_; ++j) {
        if (vstat_[j] == VS::Basic) continue;
        if (lo_[j] == hi_[j]) continue;  // fixed (includes retired artificials)
        double d = reduced_cost(j, y);
        if ((vstat_[j] == VS::AtLower || vstat_[j] == VS::FreeZero) && d > (bland ? dtol : best)) {
          enter = static_cast<int>(j);
          dir = +1;
          if (bland) break;
          best = d;
        } else if ((vstat_[j] == VS::AtUpper || vstat_[j] == VS::FreeZero) &&
                   -d > (bland ? dtol : best)) {
          enter = static_cast<int>(j);
          dir = -1;
          if (bland) break;
          best = -d;
        }
      }
      if (enter < 0) return true;  // optimal for this phase
      ftran(static_cast<size_t>(enter), w);
      // two-pass (Harris-style) ratio test: find the tightest ratio with a
      // small feasibility slack, then pick the largest pivot among the
      // near-ties; keeps pivots away from numerical noise
      double theta = kInf;
      int leave_row = -1;
      int leave_to_upper = 0;
      double own_range = hi_[static_cast<size_t>(enter)] - lo_[static_cast<size_t>(enter)];
      if (own_range < kInf) theta = own_range;
      const double ptol = 1e-9;
      const double ftol = 1e-9;
      double theta_cap = theta;
      for (size_t k = 0; k < m_; ++k) {
        double delta = -dir * w[k];
        size_t bj = static_cast<size_t>(basic_[k]);
        if (delta > ptol && hi_[bj] < kInf)
          theta_cap = std::min(theta_cap, (hi_[bj] - xb_[k] + ftol) / delta);
        else if (delta < -ptol && lo_[bj] > -kInf)
          theta_cap = std::min(theta_cap, (lo_[bj] - xb_[k] - ftol) / delta);
      }
      double best_piv = 0;
      int best_bland = -1;
      for (size_t k = 0; k < m_; ++k) {
        double delta = -dir * w[k];
        size_t bj = static_cast<size_t>(basic_[k]);
        double t;
        int to_upper;
        if (delta > ptol && hi_[bj] < kInf) {
          t = (hi_[bj] - xb_[k]) / delta;
          to_upper = 1;
        } else if (delta < -ptol && lo_[bj] > -kInf) {
          t = (lo_[bj] - xb_[k]) / delta;
          to_upper = 0;
        } else {
          continue;
        }
        if (t > theta_cap) continue;
        bool take;
        if (bland) {
          // anti-cycling: smallest variable index among eligible rows
          take = best_bland < 0 || basic_[k] < best_bland;
        } else {
          take = std::abs(w[k]) > best_piv;
        }
        if (take) {
          best_piv = std::abs(w[k]);
          best_bland = basic_[k];
          theta = t;
          leave_row = static_cast<int>(k);
          leave_to_upper = to_upper;
        }
      }
      if (leave_row < 0 && theta_cap < kInf && own_range < theta_cap) {
        theta = own_range;  // pure bound flip
      } else if (leave_row < 0) {
        theta = theta_cap;
      }
      if (theta == kInf) {
        if (phase_ == 1) {
          fail_reason_ = "unbounded phase-1 ray";
          return false;
        }
        unbounded_ = true;
        return true;
      }
      if (trace_ && iters_ % 5000 == 0) {
        double p1 = phase1_value();
        fprintf(stderr, "[lp] phase=%d iter=%ld infeas=%g degrun=%ld\n", phase_, iters_, p1,
                degenerate_run_);
      }
      if (theta < 0) theta = 0;
      if (theta < 1e-11) {
        if (++degenerate_run_ > 200) {
          bland = true;
          ++bland_since;
          if (bland_since > 50000) {
            fail_reason_ = "cycling under Bland's rule";
            return false;
          }
        }
      } else {
        degenerate_run_ = 0;
        bland = false;
        bland_since = 0;
      }
      // apply step
      for (size_t k = 0; k < m_; ++k) xb_[k] -= dir * theta * w[k];
      size_t ej = static_cast<size_t>(enter);
      if (leave_row < 0) {
        // bound flip
        vstat_[ej] = dir > 0 ? VS::AtUpper : VS::AtLower;
        continue;
      }
      size_t lr = static_cast<size_t>(leave_row);
      size_t lj = static_cast<size_t>(basic_[lr]);
      double enter_val = nb_value(ej) + dir * theta;
      // pivot binv
      double piv = w[lr];
      if (std::abs(piv) < 1e-11) {
        if (!refactor()) {
          fail_reason_ = "singular basis during refactorization";
          return false;
        }
        continue;
      }
      double* prow = &binv_[lr * m_];
      double inv = 1.0 / piv;
      for (size_t i = 0; i < m_; ++i) prow[i] *= inv;
      for (size_t k = 0; k < m_; ++k) {
        if (k == lr) continue;
        double f = w[k];
        if (f == 0) continue;
        double* row = &binv_[k * m_];
        for (size_t i = 0; i < m_; ++i) row[i] -= f * prow[i];
      }
      basic_[lr] = enter;
      in_row_[ej] = static_cast<int>(lr);
      in_row_[lj] = -1;
      vstat_[ej] = VS::Basic;
      vstat_[lj] = leave_to_upper ? VS::AtUpper : VS::AtLower;
      if (lo_[lj] == -kInf && hi_[lj] == kInf) vstat_[lj] = VS::FreeZero;
      xb_[lr] = enter_val;
      if (iters_ % 512 == 0) {
        if (!refactor()) {
          fail_reason_ = "singular basis during periodic refactorization";
          return false;
        }
      }
    }
    return false;
  }

  bool try_invert() {
    std::vector<double> mat(m_ * m_, 0.0);
    for (size_t k = 0; k < m_; ++k)
      for (auto& [i, a] : cols_[static_cast<size_t>(basic_[k])]) mat[i * m_ + k] = a;
    std::vector<double> inv(m_ * m_, 0.0);
    for (size_t i = 0; i < m_; ++i) inv[i * m_ + i] = 1.0;
    for (size_t col = 0; col < m_; ++col) {
      size_t piv = col;
      double best = std::abs(mat[col * m_ + col]);
      for (size_t r = col + 1; r < m_; ++r) {
        double v = std::abs(mat[r * m_ + col]);
        if (v > best) {
          best = v;
          piv = r;
        }
      }
      if (best < 1e-12) return false;  // singular basis
      if (piv != col) {
        for (size_t i = 0; i < m_; ++i) {
          std::swap(mat[piv * m_ + i], mat[col * m_ + i]);
          std::swap(inv[piv * m_ + i], inv[col * m_ + i]);
        }
      }
      double d = 1.0 / mat[col * m_ + col];
      for (size_t i = 0; i < m_; ++i) {
        mat[col * m_ + i] *= d;
        inv[col * m_ + i] *= d;
      }
      for (size_t r = 0; r < m_; ++r) {
        if (r == col) continue;
        double f = mat[r * m_ + col];
        if (f == 0) continue;
        for (size_t i = 0; i < m_; ++i) {
          mat[r * m_ + i] -= f * mat[col * m_ + i];
          inv[r * m_ + i] -= f * inv[col * m_ + i];
        }
      }
    }
    binv_ = std::move(inv);
    return true;
  }

  // Replaces linearly dependent basis columns with artificial unit columns.
  void repair_basis() {
    std::vector<double> mat(m_ * m_, 0.0);
    for (size_t k = 0; k < m_; ++k)
      for (auto& [i, a] : cols_[static_cast<size_t>(basic_[k])]) mat[i * m_ + k] = a;
    std::vector<bool> row_used(m_, false);
    std::vector<bool> slot_ok(m_, false);
    for (size_t col = 0; col < m_; ++col) {
      size_t piv = SIZE_MAX;
      double best = 1e-9;
      for (size_t r = 0; r < m_; ++r) {
        if (row_used[r]) continue;
        double v = std::abs(mat[r * m_ + col]);
        if (v > best) {
          best = v;
          piv = r;
        }
      }
      if (piv == SIZE_MAX) continue;  // dependent slot
      slot_ok[col] = true;
      row_used[piv] = true;
      double d = 1.0 / mat[piv * m_ + col];
      for (size_t c2 = col + 1; c2 < m_; ++c2) mat[piv * m_ + c2] *= d;
      for (size_t r = 0; r < m_; ++r) {
        if (r == piv || mat[r * m_ + col] == 0) continue;
        double f = mat[r * m_ + col];
        for (size_t c2 = col + 1; c2 < m_; ++c2) mat[r * m_ + c2] -= f * mat[piv * m_ + c2];
        mat[r * m_ + col] = 0;
      }
    }
    size_t next_free_row = 0;
    for (size_t k = 0; k < m_; ++k) {
      if (slot_ok[k]) continue;
      while (next_free_row < m_ && row_used[next_free_row]) ++next_free_row;
      if (next_free_row >= m_) break;
      size_t row = next_free_row++;
      size_t old = static_cast<size_t>(basic_[k]);
      // displaced variable goes nonbasic at its nearest bound
      in_row_[old] = -1;
      if (lo_[old] == -kInf && hi_[old] == kInf)
        vstat_[old] = VS::FreeZero;
      else if (lo_[old] > -kInf)
        vstat_[old] = VS::AtLower;
      else
        vstat_[old] = VS::AtUpper;
      size_t art = art_begin_ + row;
      basic_[k] = static_cast<int>(art);
      in_row_[art] = static_cast<int>(k);
      vstat_[art] = VS::Basic;
      row_used[row] = true;
    }
  }

  // Rebuilds binv and xb from the current basis, repairing it if singular.
  bool refactor() {
    if (!try_invert()) {
      repair_basis();
      if (!try_invert()) return false;
    }
    // xb = binv (b - N x_N)
    std::vector<double> rhs = b_;
    for (size_t j = 0; j < n_; ++j) {
      if (vstat_[j] == VS::Basic) continue;
      double v = nb_value(j);
      if (v == 0) continue;
      for (auto& [i, a] : cols_[j]) rhs[i] -= a * v;
    }
    for (size_t k = 0; k < m_; ++k) {
      double s = 0;
      const double* row = &binv_[k * m_];
      for (size_t i = 0; i < m_; ++i) s += row[i] * rhs[i];
      xb_[k] = s;
    }
    return true;
  }

  std::vector<double> extract() const {
    std::vector<double> x(p_.ncols, 0.0);
    for (size_t j = 0; j < p_.ncols; ++j) x[j] = nb_value(j);
    return x;
  }
};

inline Solution solve(const Problem& p, long max_iters = 200000) {
  Simplex s(p);
  return s.solve(max_iters);
}

}  // namespace lp

// ---------------------------------------------------------------------------
// Exact rational simplex for small systems:  min c.x  s.t.  A x = b, x >= 0.
// Dense tableau, Bland's rule, two phases. Used for Handelman witness fitting
// and one-step invariant entailment checks, where exactness is the point.
// ---------------------------------------------------------------------------

namespace ratlp {

enum class Status { Optimal, Infeasible, Unbounded };

struct Result {
  Status status = Status::Infeasible;
  std::vector<Rational> x;
  Rational objective = 0;
};

class ExactSimplex {
 public:
  // rows[i] = sparse row of A
  ExactSimplex(const std::vector<std::vector<std::pair<size_t, Rational>>>& rows,
               const std::vector<Rational>& b, const std::vector<Rational>& c, size_t ncols)
      : m_(rows.size()), n_(ncols) {
    T_.assign(m_ + 1, std::vector<Rational>(n_ + m_ + 1, Rational(0)));
    basis_.resize(m_);
    for (size_t i = 0; i < m_; ++i) {
      Rational sgn = b[i] >= 0 ? 1 : -1;
      for (auto& [j, a] : rows[i]) T_[i][j] = a * sgn;
      T_[i][n_ + i] = 1;  // artificial
      T_[i].back() = b[i] * sgn;
      basis_[i] = n_ + i;
    }
    c_ = c;
    c_.resize(n_, Rational(0));
  }

  Result solve() {
    // phase 1: minimize sum of artificials
    for (size_t j = 0; j < n_ + m_; ++j) T_[m_][j] = 0;
    T_[m_].back() = 0;
    for (size_t j = n_; j < n_ + m_; ++j) T_[m_][j] = 1;
    reduce_objective();
    run();
    if (T_[m_].back() != 0) return {Status::Infeasible, {}, 0};
    // drive artificials out of the basis where possible
    for (size_t i = 0; i < m_; ++i) {
      if (basis_[i] < n_) continue;
      size_t piv = SIZE_MAX;
      for (size_t j = 0; j < n_; ++j)
        if (T_[i][j] != 0) {
          piv = j;
          break;
        }
      if (piv != SIZE_MAX) pivot(i, piv);
    }
    // phase 2
    for (size_t j = 0; j < n_ + m_; ++j) T_[m_][j] = j < n_ ? c_[j] : Rational(1);
    T_[m_].back() = 0;
    reduce_objective();
    bool bounded = run();
    if (!bounded) return {Status::Unbounded, {}, 0};
    Result r;
    r.status = Status::Optimal;
    r.x.assign(n_, Rational(0));
    for (size_t i = 0; i < m_; ++i)
      if (basis_[i] < n_) r.x[basis_[i]] = T_[i].back();
    r.objective = -T_[m_].back();
    return r;
  }

 private:
  size_t m_, n_;
  std::vector<std::vector<Rational>> T_;
  std::vector<size_t> basis_;
  std::vector<Rational> c_;

  void reduce_objective() {
    for (size_t i = 0; i < m_; ++i) {
      Rational f = T_[m_][basis_[i]];
      if (f == 0) continue;
      for (size_t j = 0; j <= n_ + m_; ++j) T_[m_][j] -= f * T_[i][j];
    }
  }

  // returns false when unbounded
  bool run() {
    while (true) {
      size_t enter = SIZE_MAX;
      for (size_t j = 0; j < n_ + m_; ++j) {  // Bland: first improving index
        if (T_[m_][j] < 0) {
          enter = j;
          break;
        }
      }
      if (enter == SIZE_MAX) return true;
      size_t leave = SIZE_MAX;
      Rational best = 0;
      for (size_t i = 0; i < m_; ++i) {
        if (T_[i][enter] <= 0) continue;
        Rational ratio = T_[i].back() / T_[i][enter];
        if (leave == SIZE_MAX || ratio < best ||
            (ratio == best && basis_[i] < basis_[leave])) {
          best = ratio;
          leave = i;
        }
      }
      if (leave == SIZE_MAX) return false;
      pivot(leave, enter);
    }
  }

  void pivot(size_t row, size_t col) {
    Rational p = T_[row][col];
    for (auto& v : T_[row]) v /= p;
    for (size_t i = 0; i <= m_; ++i) {
      if (i == row) continue;
      Rational f = T_[i][col];
      if (f == 0) continue;
      for (size_t j = 0; j <= n_ + m_; ++j) T_[i][j] -= f * T_[row][j];
    }
    if (row < m_) basis_[row] = col;
  }
};

inline Result solve_eq_nonneg(const std::vector<std::vector<std::pair<size_t, Rational>>>& rows,
                              const std::vector<Rational>& b, const std::vector<Rational>& c,
                              size_t ncols) {
  ExactSimplex s(rows, b, c, ncols);
  return s.solve();
}

/// Exact feasibility of  A x = b, x >= 0  restricted to a column subset;
/// returns the witness on success.
inline std::optional<std::vector<Rational>> feasible_eq_nonneg(
    const std::vector<std::vector<std::pair<size_t, Rational>>>& rows,
    const std::vector<Rational>& b, size_t ncols) {
  std::vector<Rational> c(ncols, Rational(0));
  auto r = solve_eq_nonneg(rows, b, c, ncols);
  if (r.status != Status::Optimal) return std::nullopt;
  return r.x;
}

}  // namespace ratlp
}  // namespace ppeq
