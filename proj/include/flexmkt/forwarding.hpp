#pragma once

#include <string>
#include <vector>

#include "flexmkt/clearing.hpp"
#include "flexmkt/safety.hpp"

namespace flexmkt::fwd {

/// End-to-end result of one method on one case.
struct Outcome {
  std::string method;
  clearing::PricingRule pricing;
  std::vector<clearing::ClearingResult> layer1;  // per DSO; for aggregation: the selected RSF steps
  clearing::ClearingResult layer2;
  std::vector<clearing::ClearingResult> layer3;  // three-layer only, per DSO
  std::vector<double> volumes;                   // final cleared MW per bid
  double j_tot = 0.0;                            // sum of unit_cost * volumes
  bool completed = false;                        // every layer solved
  std::string status = "ok";                     // "ok" or what failed
  std::vector<int> failed_dsos;                  // DSO indices whose corrective market had no solution
  safety::SafetyVerdict safety;

  // solve accounting
  int layer1_solves = 0;
  int layer2_solves = 0;
  int layer3_solves = 0;
  int filter_solves = 0;  // feasibility checks, filtering only
  int rsf_solves = 0;     // fixed-z DSO solves, aggregation only
  int milp_nodes = 0;
  long long iterations = 0;
  double wall_ms = 0.0;
  int lp_solves() const { return layer1_solves + layer2_solves + layer3_solves + filter_solves + rsf_solves; }

  // aggregation only
  std::vector<double> selected_z;  // per DSO
  std::vector<double> delta;       // realized step size per DSO of the last round
  double delta_bar = 0.0;          // max over delta
};

// ---- three-layer corrective scheme ----

Outcome run_three_layer(const market::MarketCase& c, const clearing::PricingRule& pricing);

/// Corrective market of DSO m: volumes `committed` are fixed, z is pinned,
/// new volumes are bounded by what remains of each bid.
clearing::ClearingResult clear_dso_corrective(const market::MarketCase& c, int m,
                                              const std::vector<double>& committed, double z);

// ---- bid prequalification ----

struct FilterResult {
  std::vector<int> up;    // forwardable bid positions, case order
  std::vector<int> down;
  std::vector<int> discarded;  // in discard order
  int checks = 0;              // feasibility LPs solved
};

/// Discards bids one at a time until the set passes a full-activation check:
/// every remaining bid of the direction is activated at its residual maximum,
/// the other direction held at Layer-1 values, p and z free within limits.
/// Upward discards the most expensive, downward the cheapest; ties go to the
/// lowest bid id. An empty set is not checked.
FilterResult filter_bids(const market::MarketCase& c, int m, const clearing::ClearingResult& layer1);

Outcome run_bid_filtering(const market::MarketCase& c, const clearing::PricingRule& pricing);

/// Plain two-layer variants for comparison, in the same Outcome shape.
Outcome run_sequential(const market::MarketCase& c, const clearing::PricingRule& pricing);  // practical, unsafe
Outcome run_idealized(const market::MarketCase& c, const clearing::PricingRule& pricing);
Outcome run_fragmented(const market::MarketCase& c, const clearing::PricingRule& pricing);

// ---- RSF bid aggregation ----

enum class RsfVariant { primal, dual };

const char* to_string(RsfVariant v);

struct RsfStep {
  double z = 0.0;
  double cost = 0.0;               // value used by the TSO
  double exact_cost = 0.0;         // optimal Layer-1 cost with z fixed
  double dual = 0.0;               // d cost / d z at this step
  clearing::ClearingResult clearing;
};

struct Rsf {
  int dso = 0;
  std::vector<RsfStep> steps;  // z strictly increasing, feasible steps only
  double delta = 0.0;          // largest gap of the requested grid
  int solves = 0;
};

/// Uniform grid on [lo, hi] with gap at most delta_bar, endpoints included
/// and 0 added when it lies strictly inside.
std::vector<double> uniform_grid(double lo, double hi, double delta_bar);

/// Largest gap between consecutive grid values (0 for fewer than two).
double max_gap(const std::vector<double>& grid);

/// One fixed-z Layer-1 solve per grid value; infeasible values are dropped.
/// Throws InfeasibleError if none is feasible.
Rsf build_rsf(const market::MarketCase& c, int m, const std::vector<double>& grid);

/// Same steps, but costs are the lowest step's exact cost plus accumulated
/// trapezoids of the fixed-z duals.
Rsf build_rsf_dual(const market::MarketCase& c, int m, const std::vector<double>& grid);

struct RsfClearing {
  clearing::ClearingResult result;   // transmission volumes, z, objective
  std::vector<int> selected_step;    // per DSO
};

/// TSO market with the RSF steps as one-hot choices; z is substituted by the
/// chosen step. Throws InfeasibleError if no combination is feasible.
RsfClearing clear_tso_rsf(const market::MarketCase& c, const std::vector<Rsf>& rsfs);

struct AggregationOptions {
  double delta_bar = 1.0;
  int refine_rounds = 0;
  RsfVariant variant = RsfVariant::primal;
  std::vector<std::vector<double>> extra_points;  // per DSO, added to the first grid
};

Outcome run_bid_aggregation(const market::MarketCase& c, const AggregationOptions& opt);

/// Infinity norm of the combined interface-flow cost sensitivity built from
/// pseudo-inverses of the balance matrices. Throws ModelError on rank loss.
double suboptimality_constant(const market::MarketCase& c);

}  // namespace flexmkt::fwd
