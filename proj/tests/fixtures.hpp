#pragma once

#include "flexmkt/market_model.hpp"

namespace fixtures {

using flexmkt::market::Bid;
using flexmkt::market::Direction;
using flexmkt::market::DistributionSystem;
using flexmkt::market::MarketCase;
using flexmkt::net::Line;
using flexmkt::net::Network;

// Micro case M1.
//   transmission: buses 1-2, root 1, unlimited line, need 8 MW at bus 2
//   DSO 1 on transmission bus 1: feeder 1->2 rated +/-line_limit, need 6 MW at the leaf,
//   z in [-10, 10]
//   bids: T up 30 @ 35 (bus 1), T down 10 @ 12 (bus 2),
//         D up 5 @ 40 (leaf), D down 5 @ 15 (feeder head)
inline MarketCase m1(double line_limit = 4.0) {
  MarketCase c;
  c.case_id = "M1";
  c.transmission = Network({1, 2}, {Line{1, 2, 0.1}}, 1);
  c.e0 = {0.0, 8.0};
  DistributionSystem d;
  d.index = 1;
  d.network = Network({1, 2}, {Line{1, 2, 0.05, -line_limit, line_limit}}, 1);
  d.coupling_bus = 1;
  d.z_min = -10.0;
  d.z_max = 10.0;
  d.e = {0.0, 6.0};
  c.dsos.push_back(d);
  c.bids = {
      Bid{1, 0, 1, Direction::up, 35.0, 30.0},
      Bid{2, 0, 2, Direction::down, 12.0, 10.0},
      Bid{3, 1, 2, Direction::up, 40.0, 5.0},
      Bid{4, 1, 1, Direction::down, 15.0, 5.0},
  };
  c.check();
  return c;
}

// Bid positions in m1().
inline constexpr int kTUp = 0, kTDown = 1, kDUp = 2, kDDown = 3;

}  // namespace fixtures

#include <cmath>
#include <random>

#include "flexmkt/clearing.hpp"
#include "flexmkt/forwarding.hpp"

namespace fixtures {

// Tiny random case for the brute-force oracle: radial 2-3 bus transmission,
// one radial 2-3 bus DSO, at most 6 bids, every number on a 0.25 grid.
inline MarketCase random_micro(unsigned seed) {
  std::mt19937_64 rng(seed);
  auto pick = [&](int lo, int hi) { return std::uniform_int_distribution<int>(lo, hi)(rng); };
  auto q = [&](int lo, int hi) { return 0.25 * pick(lo, hi); };
  MarketCase c;
  c.case_id = "micro" + std::to_string(seed);
  const int nt = pick(2, 3), nd = pick(2, 6 - nt);
  std::vector<int> tb;
  std::vector<Line> tl;
  for (int k = 1; k <= nt; ++k) tb.push_back(k);
  for (int k = 2; k <= nt; ++k) tl.push_back({pick(1, k - 1), k, 0.1, -q(8, 40), q(8, 40)});
  c.transmission = Network(tb, tl, 1);
  c.e0.assign(nt, 0.0);
  for (auto& e : c.e0) e = q(-4, 12);
  DistributionSystem d;
  d.index = 1;
  std::vector<int> db;
  std::vector<Line> dl;
  for (int k = 1; k <= nd; ++k) db.push_back(k);
  for (int k = 2; k <= nd; ++k) dl.push_back({pick(1, k - 1), k, 0.05, -q(2, 16), q(2, 16)});
  d.network = Network(db, dl, 1);
  d.coupling_bus = pick(1, nt);
  d.z_min = -q(8, 40);
  d.z_max = q(8, 40);
  d.e.assign(nd, 0.0);
  for (auto& e : d.e) e = q(-4, 10);
  c.dsos.push_back(d);
  int id = 1;
  c.bids.push_back({id++, 0, pick(1, nt), Direction::up, q(120, 170), q(60, 100)});
  c.bids.push_back({id++, 0, pick(1, nt), Direction::down, q(40, 100), q(4, 8)});
  const int nb = pick(2, 4);
  for (int k = 0; k < nb; ++k) {
    const bool up = k % 2 == 0;
    c.bids.push_back({id++, 1, pick(1, nd), up ? Direction::up : Direction::down,
                      up ? q(120, 220) : q(40, 100), q(2, 8)});
  }
  c.check();
  return c;
}

// Exhaustive search over RSF step combinations: TSO cost with the interface
// flows pinned (fragmented Layer 2 on a synthetic Layer 1) plus step costs.
inline double rsf_enumeration(const MarketCase& c, const std::vector<flexmkt::fwd::Rsf>& rsfs) {
  using flexmkt::clearing::ClearingResult;
  double best = INFINITY;
  std::vector<size_t> idx(rsfs.size(), 0);
  while (true) {
    std::vector<ClearingResult> l1(rsfs.size());
    double dist = 0.0;
    for (size_t i = 0; i < rsfs.size(); ++i) {
      l1[i].status = flexmkt::mp::SolveStatus::optimal;
      l1[i].volumes.assign(c.bids.size(), 0.0);
      l1[i].z.assign(c.dsos.size(), 0.0);
      l1[i].z[i] = rsfs[i].steps[idx[i]].z;
      dist += rsfs[i].steps[idx[i]].cost;
    }
    const auto r = flexmkt::clearing::clear_fragmented_layer2(c, l1, {});
    if (r.optimal()) best = std::min(best, r.objective + dist);
    size_t i = 0;
    while (i < idx.size() && ++idx[i] == rsfs[i].steps.size()) idx[i++] = 0;
    if (i == idx.size()) break;
  }
  return best;
}

}  // namespace fixtures
