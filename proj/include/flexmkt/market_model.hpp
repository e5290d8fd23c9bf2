#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "flexmkt/netmodel.hpp"

namespace flexmkt::market {

enum class Direction { up, down };

const char* to_string(Direction d);

/// Single price step. system 0 is the transmission grid, m >= 1 is DSO m.
struct Bid {
  int id = 0;
  int system = 0;
  int bus = 0;
  Direction dir = Direction::up;
  double price = 0.0;  // EUR/MW
  double qmax = 0.0;   // MW
  /// +1 for upward, -1 for downward: sign of the volume in a nodal balance.
  double sign() const { return dir == Direction::up ? 1.0 : -1.0; }
  /// Cost per MW activated: price for upward, -price for downward.
  double unit_cost() const { return dir == Direction::up ? price : -price; }
};

/// z is positive from the transmission bus into the distribution grid.
struct DistributionSystem {
  int index = 1;
  net::Network network;
  int coupling_bus = 0;  // transmission bus id
  double z_min = 0.0;
  double z_max = 0.0;
  std::vector<double> e;  // base injections (net need) per bus, network order
};

struct MarketCase {
  std::string case_id;
  net::Network transmission;
  std::vector<double> e0;
  std::vector<DistributionSystem> dsos;
  std::vector<Bid> bids;

  /// Position of DSO `index` in `dsos`; throws ContractError if absent.
  int dso_position(int index) const;
  const net::Network& network_of(int system) const;
  const std::vector<double>& base_of(int system) const;
  /// Positions in `bids` belonging to `system`, in case order.
  std::vector<int> bids_of(int system) const;
  /// J = sum of unit_cost * volume over all bids.
  double cost(const std::vector<double>& volumes) const;

  /// Throws ValidationError with a JSON-style path on the first violated invariant.
  void check() const;
};

// ---- ingestion ----

/// JSON case file. Schema errors raise ParseError with a path such as
/// "dsos[1].z_min"; invariant breaches raise ValidationError.
MarketCase parse_case(const std::string& text);
std::string serialize_case(const MarketCase& c);

/// Bus and branch tables of a MATPOWER case. Branch rateA = 0 maps to the
/// unlimited sentinel and adds a warning; out-of-service branches are skipped.
net::Network parse_matpower(const std::string& text, std::vector<std::string>* warnings = nullptr);

// ---- validation ----

struct DsoCheck {
  int index = 0;
  bool radial = false;
  bool oriented = false;      // every line points away from the feeder head
  bool price_ordering = false;  // max local downward price < min local upward price
  double max_down_price = 0.0;
  double min_up_price = 0.0;
  bool layer1_feasible = false;
};

struct ValidationReport {
  std::vector<DsoCheck> dsos;
  std::vector<std::string> warnings;
  bool all_radial() const;
  bool all_price_ordered() const;
  bool all_layer1_feasible() const;
  bool ok() const { return all_radial() && all_price_ordered() && all_layer1_feasible(); }
};

ValidationReport validate_case(const MarketCase& c);

// ---- generation ----

struct Range {
  double lo = 0.0;
  double hi = 0.0;
};

/// Knobs of the random case generator. The four presets A-D share every
/// random stream except the ones their differences touch.
struct Recipe {
  std::string name = "A";
  std::string topology = "synthetic";  // or "matpower"
  int tx_buses_min = 5, tx_buses_max = 8;
  int dsos_min = 1, dsos_max = 3;
  int dso_buses_min = 4, dso_buses_max = 10;
  bool meshed_dso = false;
  int dist_up_bids = 3;    // per DSO, on distinct non-root buses
  int dist_down_bids = 2;  // per DSO, on distinct buses
  int tx_up_bids = 3;
  int tx_down_bids = 2;
  int extra_up_bids = 0;   // extra distribution upward bids at congested feeder ends
  Range tx_up{30.0, 42.5};
  Range dist_up{42.5, 55.0};
  Range tx_down{17.5, 25.0};
  Range dist_down{10.0, 17.5};
  Range extra_up{170.0, 200.0};
  Range dist_qmax{0.5, 3.0};
  Range tx_qmax{5.0, 15.0};
  Range tso_need{4.0, 12.0};
  bool tso_need_upward = true;
  double line_limit_scale = 0.8;  // feeder rating as a fraction of base flow
  double min_line_limit = 0.5;    // MW

  static Recipe preset(const std::string& name);
  std::string to_json() const;
  static Recipe from_json(const std::string& text);
};

/// Pure function of (recipe, seed). Throws GenerationError when the recipe
/// cannot be realized.
MarketCase generate_case(const Recipe& recipe, std::uint64_t seed);

}  // namespace flexmkt::market
