#include <algorithm>

#include "flexmkt/errors.hpp"
#include "flexmkt/formulation.hpp"
#include "fwd_internal.hpp"

namespace flexmkt::fwd {

using clearing::ClearingResult;
using market::Direction;
using market::MarketCase;

namespace {

// Is the grid of DSO m feasible with the bids in `active` at their residual
// maximum on top of the Layer-1 clearing? p and z are the only unknowns.
bool corner_feasible(const MarketCase& c, int m, const ClearingResult& l1, const std::vector<int>& active) {
  const auto& d = c.dsos[c.dso_position(m)];
  std::vector<double> fixed = l1.volumes;
  for (size_t b = 0; b < fixed.size(); ++b)
    if (c.bids[b].system != m) fixed[b] = 0.0;
  for (int b : active) fixed[b] = c.bids[b].qmax;
  mp::LinearProgram lp;
  const int z = lp.add_variable("z", d.z_min, d.z_max, 0.0);
  form::add_system(lp, c, m, fixed, form::zeros(c), {{d.network.root_index(), z, 1.0}}, {});
  return mp::solve_lp(lp).optimal();
}

// Candidates with residual capacity left; a bid exhausted in Layer 1 has
// nothing to forward.
std::vector<int> candidates(const MarketCase& c, int m, const ClearingResult& l1, Direction dir) {
  std::vector<int> out;
  for (int b : c.bids_of(m))
    if (c.bids[b].dir == dir && c.bids[b].qmax - l1.volumes[b] > 0.0) out.push_back(b);
  return out;
}

void filter_one(const MarketCase& c, int m, const ClearingResult& l1, Direction dir, std::vector<int>& set,
                FilterResult& res) {
  while (!set.empty()) {
    ++res.checks;
    if (corner_feasible(c, m, l1, set)) return;
    auto worse = [&](int a, int b) {
      // true if a should be discarded before b
      const double pa = c.bids[a].price, pb = c.bids[b].price;
      if (pa != pb) return dir == Direction::up ? pa > pb : pa < pb;
      return c.bids[a].id < c.bids[b].id;
    };
    auto it = std::min_element(set.begin(), set.end(), worse);
    res.discarded.push_back(*it);
    set.erase(it);
  }
}

}  // namespace

FilterResult filter_bids(const MarketCase& c, int m, const ClearingResult& layer1) {
  if (!layer1.optimal()) throw ContractError("filter_bids: Layer-1 result is not optimal");
  FilterResult res;
  res.up = candidates(c, m, layer1, Direction::up);
  res.down = candidates(c, m, layer1, Direction::down);
  filter_one(c, m, layer1, Direction::up, res.up, res);
  filter_one(c, m, layer1, Direction::down, res.down, res);
  return res;
}

Outcome run_bid_filtering(const MarketCase& c, const clearing::PricingRule& pricing) {
  const auto t0 = detail::Clock::now();
  Outcome out;
  out.method = "filtering";
  out.pricing = pricing;
  if (!detail::run_layer1(c, out)) {
    detail::finalize(c, out, t0);
    return out;
  }
  const auto l1 = detail::layer1_volumes(c, out.layer1);
  const auto residual = form::residual_caps(c, l1);
  std::vector<double> caps(c.bids.size(), 0.0);
  for (size_t i = 0; i < c.dsos.size(); ++i) {
    const auto f = filter_bids(c, c.dsos[i].index, out.layer1[i]);
    out.filter_solves += f.checks;
    for (int b : f.up) caps[b] = residual[b];
    for (int b : f.down) caps[b] = residual[b];
  }
  out.layer2 = clearing::clear_tso_layer2(c, out.layer1, pricing, caps);
  ++out.layer2_solves;
  out.iterations += out.layer2.iterations;
  out.completed = out.layer2.optimal();
  if (!out.completed) out.status = "layer2_infeasible";
  detail::finalize(c, out, t0);
  return out;
}

}  // namespace flexmkt::fwd
