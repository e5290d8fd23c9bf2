// Bounded-variable revised primal simplex with an explicit dense basis inverse.
//
// Every row i gets a logical s_i = a_i^T x with bounds [lo_i, hi_i], so the
// working system is A x - s (+ artificials) = 0. Phase 1 minimizes the sum of
// artificials placed on rows whose starting activity is out of range.

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <string>
#include <vector>

#include "flexmkt/errors.hpp"
#include "flexmkt/linalg.hpp"
#include "flexmkt/mp_solver.hpp"

namespace flexmkt::mp {
namespace {

enum class VarState : unsigned char { basic, lower, upper, free_zero };

struct Entry {
  int row;
  double coef;
};

class Simplex {
 public:
  Simplex(const LinearProgram& lp, const SimplexOptions& opt);
  Solution run();

 private:
  bool is_artificial(int j) const { return j >= n_ + m_; }
  double column_dot(int j, const Eigen::VectorXd& y) const {
    double s = 0.0;
    for (const auto& e : cols_[j]) s += e.coef * y(e.row);
    return s;
  }
  Eigen::VectorXd ftran(int j) const {
    Eigen::VectorXd a = Eigen::VectorXd::Zero(m_);
    for (const auto& e : cols_[j]) a.noalias() += e.coef * binv_.col(e.row);
    return a;
  }

  void refactor();
  void recompute_basics();
  void pivot(int r, int q, const Eigen::VectorXd& alpha);
  // Returns false when the phase stopped on an unbounded ray.
  bool optimize(const std::vector<double>& cost);
  void drive_out_artificials();

  const LinearProgram& lp_;
  SimplexOptions opt_;
  int n_, m_, ncols_;
  std::vector<std::vector<Entry>> cols_;
  std::vector<double> lb_, ub_, x_;
  std::vector<VarState> state_;
  std::vector<int> head_;
  Eigen::MatrixXd binv_;
  int since_refactor_ = 0;
  int iterations_ = 0;
  int max_iterations_ = 0;
};

Simplex::Simplex(const LinearProgram& lp, const SimplexOptions& opt)
    : lp_(lp), opt_(opt), n_(lp.num_variables()), m_(lp.num_constraints()) {
  ncols_ = n_ + 2 * m_;
  cols_.resize(ncols_);
  lb_.resize(ncols_);
  ub_.resize(ncols_);
  x_.assign(ncols_, 0.0);
  state_.assign(ncols_, VarState::lower);
  head_.assign(m_, -1);

  // Merge duplicate terms per row.
  std::vector<double> acc(n_, 0.0);
  std::vector<int> touched;
  for (int i = 0; i < m_; ++i) {
    touched.clear();
    for (const auto& t : lp.constraints()[i].terms) {
      if (acc[t.var] == 0.0) touched.push_back(t.var);
      acc[t.var] += t.coef;
      if (acc[t.var] == 0.0) acc[t.var] = 0.0;
    }
    std::sort(touched.begin(), touched.end());
    touched.erase(std::unique(touched.begin(), touched.end()), touched.end());
    for (int j : touched) {
      if (acc[j] != 0.0) cols_[j].push_back({i, acc[j]});
      acc[j] = 0.0;
    }
  }

  for (int j = 0; j < n_; ++j) {
    const auto& v = lp.variables()[j];
    lb_[j] = v.lower;
    ub_[j] = v.upper;
    if (std::isfinite(v.lower)) {
      x_[j] = v.lower;
      state_[j] = VarState::lower;
    } else if (std::isfinite(v.upper)) {
      x_[j] = v.upper;
      state_[j] = VarState::upper;
    } else {
      x_[j] = 0.0;
      state_[j] = VarState::free_zero;
    }
  }

  binv_ = Eigen::MatrixXd::Zero(m_, m_);
  for (int i = 0; i < m_; ++i) {
    const auto& row = lp.constraints()[i];
    double act = 0.0;
    for (const auto& t : row.terms) act += t.coef * x_[t.var];
    const int s = n_ + i, a = n_ + m_ + i;
    cols_[s].push_back({i, -1.0});
    lb_[s] = row.lower;
    ub_[s] = row.upper;
    lb_[a] = 0.0;
    ub_[a] = 0.0;
    state_[a] = VarState::lower;
    if (act >= row.lower - opt_.primal_tol && act <= row.upper + opt_.primal_tol) {
      x_[s] = std::clamp(act, row.lower, row.upper);
      state_[s] = VarState::basic;
      head_[i] = s;
      binv_(i, i) = -1.0;
      cols_[a].push_back({i, 1.0});
    } else {
      const double v = act < row.lower ? row.lower : row.upper;
      x_[s] = v;
      state_[s] = act < row.lower ? VarState::lower : VarState::upper;
      const double sigma = v > act ? 1.0 : -1.0;
      cols_[a].push_back({i, sigma});
      ub_[a] = kInf;
      x_[a] = std::abs(v - act);
      state_[a] = VarState::basic;
      head_[i] = a;
      binv_(i, i) = sigma;
    }
  }
  max_iterations_ =
      opt_.max_iterations > 0 ? opt_.max_iterations : 20000 + 50 * (n_ + m_);
}

void Simplex::refactor() {
  if (m_ == 0) return;
  Eigen::MatrixXd b = Eigen::MatrixXd::Zero(m_, m_);
  for (int k = 0; k < m_; ++k)
    for (const auto& e : cols_[head_[k]]) b(e.row, k) = e.coef;
  try {
    binv_ = linalg::DenseLu(b, 1e-12).inverse();
  } catch (const linalg::SingularMatrixError& e) {
    const int j = head_[e.pivot()];
    std::string name = j < n_ ? lp_.variables()[j].name
                       : j < n_ + m_ ? "logical of " + lp_.constraints()[j - n_].name
                                     : "artificial of " + lp_.constraints()[j - n_ - m_].name;
    throw NumericalError("singular basis at pivot " + std::to_string(e.pivot()) + " (" + name +
                         ")");
  }
  since_refactor_ = 0;
  recompute_basics();
}

void Simplex::recompute_basics() {
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(m_);
  for (int j = 0; j < ncols_; ++j) {
    if (state_[j] == VarState::basic || x_[j] == 0.0) continue;
    for (const auto& e : cols_[j]) rhs(e.row) -= e.coef * x_[j];
  }
  const Eigen::VectorXd xb = binv_ * rhs;
  for (int k = 0; k < m_; ++k) x_[head_[k]] = xb(k);
}

void Simplex::pivot(int r, int q, const Eigen::VectorXd& alpha) {
  const Eigen::RowVectorXd pr = binv_.row(r) / alpha(r);
  binv_.noalias() -= alpha * pr;
  binv_.row(r) = pr;
  head_[r] = q;
  state_[q] = VarState::basic;
  ++since_refactor_;
}

bool Simplex::optimize(const std::vector<double>& cost) {
  const double piv_tol = 1e-9;
  int degenerate_run = 0;
  Eigen::VectorXd cb(m_);
  for (;;) {
    if (since_refactor_ >= opt_.refactor_interval) refactor();
    if (iterations_ >= max_iterations_)
      throw NumericalError("simplex iteration limit reached (" + std::to_string(iterations_) + ")");
    const bool bland = degenerate_run >= opt_.bland_after_degenerate;

    for (int k = 0; k < m_; ++k) cb(k) = cost[head_[k]];
    const Eigen::VectorXd y = binv_.transpose() * cb;

    // Pricing.
    int q = -1;
    double best = 0.0, dq = 0.0;
    for (int j = 0; j < ncols_; ++j) {
      const VarState st = state_[j];
      if (st == VarState::basic || lb_[j] == ub_[j]) continue;
      const double d = cost[j] - column_dot(j, y);
      bool eligible = false;
      if (st == VarState::lower) eligible = d < -opt_.dual_tol;
      else if (st == VarState::upper) eligible = d > opt_.dual_tol;
      else eligible = std::abs(d) > opt_.dual_tol;
      if (!eligible) continue;
      if (bland) {
        q = j;
        dq = d;
        break;
      }
      if (std::abs(d) > best) {
        best = std::abs(d);
        q = j;
        dq = d;
      }
    }
    if (q < 0) return true;

    const double dir = dq < 0 ? 1.0 : -1.0;
    const Eigen::VectorXd alpha = ftran(q);

    // Ratio test. Basic value k moves by rate_k * t.
    int r = -1;
    double theta = kInf;
    if (!bland) {
      double theta_max = kInf;
      for (int k = 0; k < m_; ++k) {
        if (std::abs(alpha(k)) <= piv_tol) continue;
        const int j = head_[k];
        const double rate = -dir * alpha(k);
        double lim = kInf;
        if (rate < 0 && std::isfinite(lb_[j])) lim = (x_[j] - lb_[j] + opt_.primal_tol) / -rate;
        else if (rate > 0 && std::isfinite(ub_[j])) lim = (ub_[j] - x_[j] + opt_.primal_tol) / rate;
        theta_max = std::min(theta_max, lim);
      }
      if (std::isfinite(theta_max)) {
        double best_piv = 0.0;
        for (int k = 0; k < m_; ++k) {
          if (std::abs(alpha(k)) <= piv_tol) continue;
          const int j = head_[k];
          const double rate = -dir * alpha(k);
          double ratio = kInf;
          if (rate < 0 && std::isfinite(lb_[j])) ratio = (x_[j] - lb_[j]) / -rate;
          else if (rate > 0 && std::isfinite(ub_[j])) ratio = (ub_[j] - x_[j]) / rate;
          if (ratio <= theta_max && std::abs(alpha(k)) > best_piv) {
            best_piv = std::abs(alpha(k));
            r = k;
            theta = std::max(0.0, ratio);
          }
        }
      }
    } else {
      for (int k = 0; k < m_; ++k) {
        if (std::abs(alpha(k)) <= piv_tol) continue;
        const int j = head_[k];
        const double rate = -dir * alpha(k);
        double ratio = kInf;
        if (rate < 0 && std::isfinite(lb_[j])) ratio = (x_[j] - lb_[j]) / -rate;
        else if (rate > 0 && std::isfinite(ub_[j])) ratio = (ub_[j] - x_[j]) / rate;
        if (!std::isfinite(ratio)) continue;
        ratio = std::max(0.0, ratio);
        if (r < 0 || ratio < theta - 1e-12 || (ratio <= theta + 1e-12 && j < head_[r])) {
          r = k;
          theta = ratio;
        }
      }
    }

    const double flip = ub_[q] - lb_[q];
    if (r < 0 && !std::isfinite(flip)) return false;
    ++iterations_;

    if (std::isfinite(flip) && flip <= theta) {
      // Entering variable runs into its own opposite bound.
      for (int k = 0; k < m_; ++k) x_[head_[k]] -= dir * flip * alpha(k);
      if (dir > 0) {
        x_[q] = ub_[q];
        state_[q] = VarState::upper;
      } else {
        x_[q] = lb_[q];
        state_[q] = VarState::lower;
      }
      degenerate_run = flip <= 1e-12 ? degenerate_run + 1 : 0;
      continue;
    }

    for (int k = 0; k < m_; ++k) x_[head_[k]] -= dir * theta * alpha(k);
    x_[q] += dir * theta;
    const int leave = head_[r];
    if (-dir * alpha(r) < 0) {
      x_[leave] = lb_[leave];
      state_[leave] = VarState::lower;
    } else {
      x_[leave] = ub_[leave];
      state_[leave] = VarState::upper;
    }
    pivot(r, q, alpha);
    degenerate_run = theta <= 1e-12 ? degenerate_run + 1 : 0;
  }
}

void Simplex::drive_out_artificials() {
  bool changed = false;
  for (int r = 0; r < m_; ++r) {
    if (!is_artificial(head_[r])) continue;
    const Eigen::RowVectorXd rho = binv_.row(r);
    int best_j = -1;
    double best = 1e-7;
    for (int j = 0; j < n_ + m_; ++j) {
      if (state_[j] == VarState::basic) continue;
      double v = 0.0;
      for (const auto& e : cols_[j]) v += e.coef * rho(e.row);
      if (std::abs(v) > best) {
        best = std::abs(v);
        best_j = j;
      }
    }
    if (best_j < 0) continue;  // redundant row
    const int a = head_[r];
    pivot(r, best_j, ftran(best_j));
    x_[a] = 0.0;
    state_[a] = VarState::lower;
    changed = true;
  }
  if (changed) refactor();
}

Solution Simplex::run() {
  Solution sol;
  std::vector<double> cost(ncols_, 0.0);
  bool need_phase1 = false;
  for (int i = 0; i < m_; ++i) {
    if (is_artificial(head_[i])) {
      cost[head_[i]] = 1.0;
      need_phase1 = true;
    }
  }
  if (need_phase1) {
    optimize(cost);
    refactor();
    double infeas = 0.0;
    for (int k = 0; k < m_; ++k)
      if (is_artificial(head_[k])) infeas += std::max(0.0, x_[head_[k]]);
    if (infeas > opt_.phase1_tol) {
      sol.status = SolveStatus::infeasible;
      sol.iterations = iterations_;
      return sol;
    }
    for (int j = n_ + m_; j < ncols_; ++j) {
      ub_[j] = 0.0;
      if (state_[j] != VarState::basic) x_[j] = 0.0;
    }
    drive_out_artificials();
  }

  std::fill(cost.begin(), cost.end(), 0.0);
  for (int j = 0; j < n_; ++j) cost[j] = lp_.variables()[j].cost;
  const bool bounded = optimize(cost);
  sol.iterations = iterations_;
  if (!bounded) {
    sol.status = SolveStatus::unbounded;
    return sol;
  }
  refactor();

  Eigen::VectorXd cb(m_);
  for (int k = 0; k < m_; ++k) cb(k) = cost[head_[k]];
  const Eigen::VectorXd y = binv_.transpose() * cb;

  sol.status = SolveStatus::optimal;
  sol.primal.resize(n_);
  for (int j = 0; j < n_; ++j) {
    double v = x_[j];
    // Trim round-off that leaks just past a bound.
    if (v < lb_[j] && v > lb_[j] - 1e-9) v = lb_[j];
    if (v > ub_[j] && v < ub_[j] + 1e-9) v = ub_[j];
    sol.primal[j] = v;
  }
  sol.row_duals.resize(m_);
  for (int i = 0; i < m_; ++i) sol.row_duals[i] = y(i);
  sol.reduced_costs.resize(n_);
  for (int j = 0; j < n_; ++j) sol.reduced_costs[j] = cost[j] - column_dot(j, y);
  sol.objective = lp_.evaluate(sol.primal);
  return sol;
}

}  // namespace

Solution solve_lp(const LinearProgram& lp, const SimplexOptions& opt) {
  lp.validate();
  Simplex s(lp, opt);
  return s.run();
}

}  // namespace flexmkt::mp
