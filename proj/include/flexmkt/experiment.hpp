#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flexmkt/clearing.hpp"
#include "flexmkt/forwarding.hpp"
#include "flexmkt/market_model.hpp"

namespace flexmkt::bench {

inline const std::vector<std::string> kMethods = {"three_layer",        "filtering", "aggregation_primal",
                                                  "aggregation_dual",   "fragmented", "idealized",
                                                  "sequential_raw"};

bool is_aggregation(const std::string& method);

/// Where cases come from: explicit files, or one recipe and a seed list.
struct CaseSpec {
  std::string path;      // empty for generated cases
  market::Recipe recipe;
  std::uint64_t seed = 0;
};

struct ExperimentConfig {
  std::vector<std::string> case_files;
  market::Recipe recipe;
  std::vector<std::uint64_t> seeds;
  std::vector<std::string> methods;
  std::vector<clearing::PricingKind> pricings{clearing::PricingKind::none};
  std::vector<double> deltas;
  int refine_rounds = 0;
  std::string out_dir = ".";
  int workers = 1;
  bool timing = true;  // false writes 0 in wall_ms/time, making files byte-stable

  /// Throws ContractError when the config cannot run.
  void check() const;
  std::vector<CaseSpec> cases() const;
};

struct ResultRow {
  std::string case_id;
  std::string seed;     // empty for file cases
  std::string method;
  std::string pricing;  // "-" for aggregation, which takes no interface price
  std::string delta_bar;  // empty unless aggregation
  double j_tot = 0.0;
  double j_com = 0.0;
  double eta_pct = 0.0;
  bool has_j = false;    // j_tot meaningful
  bool has_com = false;
  bool safe = false;
  int lp_solves = 0;
  int milp_nodes = 0;
  double wall_ms = 0.0;
  std::string status;
};

/// Loads or generates one case.
market::MarketCase load_case(const CaseSpec& s);

/// All rows of one case in deterministic order: methods as given, then
/// pricing rules (or delta values for aggregation). Component errors become
/// rows with the status set.
std::vector<ResultRow> run_case(const CaseSpec& spec, const ExperimentConfig& cfg);

/// Every case, `workers` at a time; rows are ordered by case, not finish time.
std::vector<ResultRow> run_rows(const ExperimentConfig& cfg);

std::string results_header();
std::string format_row(const ResultRow& r, bool timing);
/// delta sweep rows: case_id, seed, method, delta_bar, eta, time.
std::string sweep_csv(const std::vector<ResultRow>& rows, bool timing);

/// Writes results.csv, plus sweep.csv when an aggregation method ran.
void run_experiment(const ExperimentConfig& cfg);

/// Generates (recipe, seed) and writes it as case JSON. Throws IoError.
void emit_case(const market::Recipe& recipe, std::uint64_t seed, const std::string& path);

// ---- property suite ----

struct PropertyFailure {
  std::string case_id;
  std::string property;
  std::string detail;
};

struct PropertyOptions {
  std::vector<double> deltas{0.5, 1.0, 2.0};
  int refine_rounds = 2;  // for the monotone-under-refinement check
  double tol = 1e-6;
};

/// Runs the structural properties on one case and lists what failed:
/// idealized <= fragmented, filtering is safe (when the case satisfies the
/// radial and price-ordering assumptions), aggregation is safe and never
/// beats the common optimum, tightness when the common interface flows are
/// on the grid, the L * delta bound, no DSO both buying up and down in
/// Layer 2, and monotone primal cost under refinement.
std::vector<PropertyFailure> check_properties(const market::MarketCase& c, const PropertyOptions& opt = {});

}  // namespace flexmkt::bench
