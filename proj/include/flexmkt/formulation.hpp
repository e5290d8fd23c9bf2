#pragma once

// LP building blocks shared by the clearing problems, the safety check,
// validation and case generation.

#include <string>
#include <vector>

#include "flexmkt/market_model.hpp"
#include "flexmkt/mp_solver.hpp"

namespace flexmkt::form {

/// Extra lhs term in a nodal balance, e.g. +z at a feeder head.
struct Injection {
  int bus_index;
  int var;
  double coef;
};

struct BlockOptions {
  bool nodal = true;        // false: one aggregated balance row, no p, no flows
  bool flow_limits = true;  // only meaningful with nodal = true
  bool bid_costs = true;    // put unit costs of the new volumes in the objective
  std::string prefix;
};

/// Variable and row indices of one grid inside a larger LP.
struct Block {
  int system = 0;
  std::vector<int> volume_var;  // per case bid; -1 when the bid gets no variable
  std::vector<int> p_var;       // per bus index
  std::vector<int> bus_rows;    // nodal balance rows per bus index
  int sum_row = -1;             // lossless row 1'p = 0, or the aggregated balance
  std::vector<int> flow_rows;   // per line
};

/// Adds one grid. For each bid of `system`, `fixed[b]` MW are already
/// committed (moved to the rhs) and a new variable in [0, cap[b]] is created
/// when cap[b] > 0. `fixed` and `cap` are indexed by case bid position.
///   nodal row k:  sum_b sign_b (fixed_b + v_b) - p_k + extra_k = e_k
///   sum row:      sum_k p_k = 0
///   aggregated:   sum_b sign_b (fixed_b + v_b) + extra = sum_k e_k
Block add_system(mp::LinearProgram& lp, const market::MarketCase& c, int system,
                 const std::vector<double>& fixed, const std::vector<double>& cap,
                 const std::vector<Injection>& extra, const BlockOptions& opt);

/// Residual capacity qmax - fixed, floored at zero.
std::vector<double> residual_caps(const market::MarketCase& c, const std::vector<double>& fixed);

/// Zero vector with one entry per case bid.
std::vector<double> zeros(const market::MarketCase& c);

/// Volumes of `block` read from an LP solution, added onto `into`.
void accumulate_volumes(const Block& block, const mp::Solution& s, std::vector<double>& into);

/// Flow of each line given nodal injections (bus order).
std::vector<double> flows(const market::MarketCase& c, int system, const std::vector<double>& p);

}  // namespace flexmkt::form
