#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "flexmkt/mp_solver.hpp"

namespace lptest {

using flexmkt::mp::kInf;
using flexmkt::mp::LinearProgram;
using flexmkt::mp::Solution;

// Feasible, bounded random LP: a random interior point x0 fixes the row ranges.
inline LinearProgram random_lp(std::mt19937_64& rng, int max_vars = 50) {
  std::uniform_int_distribution<int> nv(2, max_vars);
  std::uniform_real_distribution<double> u01(0.0, 1.0);
  const int n = nv(rng);
  const int m = std::uniform_int_distribution<int>(1, std::max(1, (3 * n) / 4))(rng);
  LinearProgram lp;
  std::vector<double> x0(n);
  for (int j = 0; j < n; ++j) {
    double lo = -5.0 + 5.0 * u01(rng);
    double hi = lo + 0.5 + 6.0 * u01(rng);
    double cost = -10.0 + 20.0 * u01(rng);
    const double kind = u01(rng);
    if (kind < 0.15) {
      hi = kInf;
      cost = std::abs(cost);
    } else if (kind < 0.25) {
      lo = -kInf;
      cost = -std::abs(cost);
    }
    const double a = std::isfinite(lo) ? lo : hi - 3.0;
    const double b = std::isfinite(hi) ? hi : lo + 3.0;
    x0[j] = a + (b - a) * u01(rng);
    lp.add_variable("x" + std::to_string(j), lo, hi, cost);
  }
  for (int i = 0; i < m; ++i) {
    std::vector<flexmkt::mp::Term> terms;
    double act = 0.0;
    for (int j = 0; j < n; ++j) {
      if (u01(rng) < 0.35) {
        const double c = std::round((-4.0 + 8.0 * u01(rng)) * 100.0) / 100.0;
        if (c == 0.0) continue;
        terms.push_back({j, c});
        act += c * x0[j];
      }
    }
    const double kind = u01(rng);
    double lo, hi;
    if (kind < 0.25) {
      lo = hi = act;
    } else if (kind < 0.5) {
      lo = -kInf;
      hi = act + 2.0 * u01(rng);
    } else if (kind < 0.75) {
      lo = act - 2.0 * u01(rng);
      hi = kInf;
    } else {
      lo = act - 2.0 * u01(rng);
      hi = act + 2.0 * u01(rng);
    }
    lp.add_constraint("r" + std::to_string(i), std::move(terms), lo, hi);
  }
  return lp;
}

struct DualCheck {
  double dual_objective = 0.0;
  double max_sign_violation = 0.0;  // dual infeasibility
  double max_primal_residual = 0.0;
};

// Recomputes the dual objective from the returned row multipliers alone.
// Reduced costs are derived here, not read from the solver.
inline DualCheck check_duality(const LinearProgram& lp, const Solution& s) {
  DualCheck out;
  const auto& vars = lp.variables();
  const auto& rows = lp.constraints();
  std::vector<double> d(vars.size());
  for (size_t j = 0; j < vars.size(); ++j) d[j] = vars[j].cost;
  for (size_t i = 0; i < rows.size(); ++i) {
    const double y = s.row_duals[i];
    double act = 0.0;
    for (const auto& t : rows[i].terms) {
      d[t.var] -= t.coef * y;
      act += t.coef * s.primal[t.var];
    }
    out.max_primal_residual = std::max(
        {out.max_primal_residual, rows[i].lower - act, act - rows[i].upper});
    if (y > 0) {
      if (!std::isfinite(rows[i].lower)) out.max_sign_violation = std::max(out.max_sign_violation, y);
      else out.dual_objective += y * rows[i].lower;
    } else if (y < 0) {
      if (!std::isfinite(rows[i].upper)) out.max_sign_violation = std::max(out.max_sign_violation, -y);
      else out.dual_objective += y * rows[i].upper;
    }
  }
  for (size_t j = 0; j < vars.size(); ++j) {
    out.max_primal_residual = std::max({out.max_primal_residual, vars[j].lower - s.primal[j],
                                        s.primal[j] - vars[j].upper});
    if (d[j] > 0) {
      if (!std::isfinite(vars[j].lower)) out.max_sign_violation = std::max(out.max_sign_violation, d[j]);
      else out.dual_objective += d[j] * vars[j].lower;
    } else if (d[j] < 0) {
      if (!std::isfinite(vars[j].upper)) out.max_sign_violation = std::max(out.max_sign_violation, -d[j]);
      else out.dual_objective += d[j] * vars[j].upper;
    }
  }
  out.dual_objective += lp.objective_offset();
  return out;
}

}  // namespace lptest
