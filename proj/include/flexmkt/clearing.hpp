#pragma once

#include <string>
#include <vector>

#include "flexmkt/market_model.hpp"
#include "flexmkt/mp_solver.hpp"

namespace flexmkt::clearing {

// Conventions used throughout:
//  * a DSO is named by its index m (>= 1); per-DSO vectors follow the order
//    of MarketCase::dsos;
//  * volume vectors have one entry per case bid;
//  * interface prices multiply z (positive = import into the DSO grid).

enum class PricingKind { none, optimal, midpoint };

const char* to_string(PricingKind k);
/// Accepts "none", "optimal", "midpoint"; throws ContractError otherwise.
PricingKind parse_pricing(const std::string& s);

struct PricingRule {
  PricingKind kind = PricingKind::none;
  std::vector<double> prices;  // EUR/MW per DSO; empty means all zero
  double price(int dso_pos) const { return prices.empty() ? 0.0 : prices.at(dso_pos); }
};

struct ClearingResult {
  mp::SolveStatus status = mp::SolveStatus::infeasible;
  std::vector<double> volumes;             // cleared in this problem only
  std::vector<std::vector<double>> p;      // [0] transmission, [1 + pos] DSO; empty if not modeled
  std::vector<double> z;                   // per DSO; NaN where not part of the problem
  double objective = 0.0;                  // LP objective incl. interface terms
  double bid_cost = 0.0;                   // unit_cost . volumes
  std::vector<double> tx_balance_duals;    // per transmission bus, EUR/MW
  std::vector<std::vector<double>> dso_balance_duals;  // per DSO per bus
  std::vector<double> interface_duals;     // dual of z = fixed value rows where present
  int lp_solves = 0;
  int iterations = 0;
  int milp_nodes = 0;
  bool optimal() const { return status == mp::SolveStatus::optimal; }
  /// Sum of upward minus downward volume of DSO m's bids in this result.
  double net_position(const market::MarketCase& c, int m) const;
  double upward_volume(const market::MarketCase& c, int m) const;
  double downward_volume(const market::MarketCase& c, int m) const;
};

struct Layer2Options {
  // Subtract c_z * z in the TSO objective. Off by default: the interface
  // payment is a transfer between operators and is already charged to the
  // DSO in its own clearing.
  bool interface_term = false;
};

/// DSO local market: bid cost + c_z z subject to nodal balances, flow limits
/// and interface bounds.
ClearingResult clear_dso_layer1(const market::MarketCase& c, int m, const PricingRule& pricing);

/// DSO local market with z fixed to `z`, no interface price. The dual of the
/// fixing row is returned in interface_duals[0] as d cost / d z.
ClearingResult clear_dso_fixed_z(const market::MarketCase& c, int m, double z);

/// TSO market with one aggregated balance per DSO. `dist_caps` bounds the
/// additional volume of each distribution bid (transmission bids always get
/// their full qmax).
ClearingResult clear_tso_layer2(const market::MarketCase& c, const std::vector<ClearingResult>& layer1,
                                const PricingRule& pricing, const std::vector<double>& dist_caps,
                                const Layer2Options& opt = {});

/// TSO market that also sees every DSO nodal balance and line limit.
ClearingResult clear_idealized_layer2(const market::MarketCase& c, const std::vector<ClearingResult>& layer1,
                                      const PricingRule& pricing, const Layer2Options& opt = {});

/// TSO market with distribution bids excluded and z frozen at Layer-1 values.
ClearingResult clear_fragmented_layer2(const market::MarketCase& c, const std::vector<ClearingResult>& layer1,
                                       const PricingRule& pricing, const Layer2Options& opt = {});

/// Single co-optimized clearing over all grids.
ClearingResult clear_common(const market::MarketCase& c);

/// none: zeros; optimal: transmission balance duals at the coupling buses of
/// the common market (throws InfeasibleError if it has no solution);
/// midpoint: per DSO (max local downward + min local upward price) / 2.
PricingRule interface_price(const market::MarketCase& c, PricingKind kind);

/// Layer 1 for every DSO, in case order.
std::vector<ClearingResult> clear_all_layer1(const market::MarketCase& c, const PricingRule& pricing);

/// Element-wise sum of the volumes of several results.
std::vector<double> total_volumes(const market::MarketCase& c, const std::vector<const ClearingResult*>& parts);

}  // namespace flexmkt::clearing
