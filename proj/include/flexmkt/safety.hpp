#pragma once

#include <vector>

#include "flexmkt/market_model.hpp"

namespace flexmkt::safety {

inline constexpr double kSafetyTol = 1e-6;  // MW

struct SafetyVerdict {
  bool safe = false;
  std::vector<bool> dso_feasible;  // per DSO, its own grid alone with z free in bounds
  bool transmission_feasible = false;
  double max_line_violation = 0.0;    // MW, at the least-violating operating point
  double max_balance_residual = 0.0;  // MW
};

/// Existence check: is there (p_0, p_m, z) meeting every nodal balance, every
/// line limit and every interface bound with the given volumes held fixed?
/// Solved as one LP that minimizes a common violation bound t.
SafetyVerdict is_grid_safe(const market::MarketCase& c, const std::vector<double>& volumes);

struct EfficiencyReport {
  double j_tot = 0.0;
  double j_com = 0.0;
  double gap = 0.0;     // j_tot - j_com
  bool defined = false; // false when |j_com| <= 1e-9
  double eta_pct = 0.0; // 100 gap / |j_com| when defined, NaN otherwise
};

EfficiencyReport inefficiency(double j_tot, double j_com);

struct OracleResult {
  bool feasible = false;
  double objective = 0.0;
  std::vector<double> volumes;
  long long points = 0;  // grid points visited
};

/// Exhaustive common-market search for tiny cases (at most 6 bids and 6 buses
/// over all grids). Every bid but one transmission "slack" bid is swept on
/// {0, step, 2 step, ..., qmax}; the slack closes the system balance exactly.
/// Interface flows follow from each DSO's total balance and line flows come
/// from a direct DC solve. Throws ContractError for larger cases.
OracleResult brute_force_oracle(const market::MarketCase& c, double step);

}  // namespace flexmkt::safety
