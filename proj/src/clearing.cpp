#include "flexmkt/clearing.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "flexmkt/errors.hpp"
#include "flexmkt/formulation.hpp"

namespace flexmkt::clearing {

using market::MarketCase;
using mp::kInf;

const char* to_string(PricingKind k) {
  switch (k) {
    case PricingKind::none: return "none";
    case PricingKind::optimal: return "optimal";
    case PricingKind::midpoint: return "midpoint";
  }
  return "?";
}

PricingKind parse_pricing(const std::string& s) {
  if (s == "none") return PricingKind::none;
  if (s == "optimal") return PricingKind::optimal;
  if (s == "midpoint") return PricingKind::midpoint;
  throw ContractError("unknown pricing rule '" + s + "'");
}

double ClearingResult::upward_volume(const MarketCase& c, int m) const {
  double s = 0.0;
  for (int b : c.bids_of(m))
    if (c.bids[b].dir == market::Direction::up) s += volumes[b];
  return s;
}

double ClearingResult::downward_volume(const MarketCase& c, int m) const {
  double s = 0.0;
  for (int b : c.bids_of(m))
    if (c.bids[b].dir == market::Direction::down) s += volumes[b];
  return s;
}

double ClearingResult::net_position(const MarketCase& c, int m) const {
  return upward_volume(c, m) - downward_volume(c, m);
}

namespace {

constexpr double kNaN = std::numeric_limits<double>::quiet_NaN();

ClearingResult blank(const MarketCase& c) {
  ClearingResult r;
  r.volumes.assign(c.bids.size(), 0.0);
  r.p.assign(c.dsos.size() + 1, {});
  r.z.assign(c.dsos.size(), kNaN);
  r.dso_balance_duals.assign(c.dsos.size(), {});
  return r;
}

struct Assembled {
  mp::LinearProgram lp;
  std::vector<form::Block> blocks;  // any order
  std::vector<int> z_var;           // per DSO position, -1 if absent
  std::vector<int> z_fix_rows;
};

ClearingResult finish(const MarketCase& c, const Assembled& a) {
  ClearingResult r = blank(c);
  const auto s = mp::solve_lp(a.lp);
  r.status = s.status;
  r.lp_solves = 1;
  r.iterations = s.iterations;
  if (!s.optimal()) return r;
  r.objective = s.objective;
  for (const auto& blk : a.blocks) {
    form::accumulate_volumes(blk, s, r.volumes);
    const int slot = blk.system == 0 ? 0 : 1 + c.dso_position(blk.system);
    if (!blk.p_var.empty()) {
      r.p[slot].clear();
      for (int v : blk.p_var) r.p[slot].push_back(s.primal[v]);
    }
    if (!blk.bus_rows.empty()) {
      std::vector<double> duals;
      for (int row : blk.bus_rows) duals.push_back(s.row_duals[row]);
      if (blk.system == 0) r.tx_balance_duals = duals;
      else r.dso_balance_duals[slot - 1] = duals;
    }
  }
  for (size_t i = 0; i < a.z_var.size(); ++i)
    if (a.z_var[i] >= 0) r.z[i] = s.primal[a.z_var[i]];
  for (int row : a.z_fix_rows) r.interface_duals.push_back(s.row_duals[row]);
  r.bid_cost = c.cost(r.volumes);
  return r;
}

std::vector<double> full_caps(const MarketCase& c) {
  std::vector<double> cap(c.bids.size());
  for (size_t b = 0; b < c.bids.size(); ++b) cap[b] = c.bids[b].qmax;
  return cap;
}

std::vector<double> only_system(const MarketCase& c, std::vector<double> v, int system) {
  for (size_t b = 0; b < c.bids.size(); ++b)
    if (c.bids[b].system != system) v[b] = 0.0;
  return v;
}

void require_layer1(const MarketCase& c, const std::vector<ClearingResult>& layer1) {
  if (layer1.size() != c.dsos.size()) throw ContractError("one Layer-1 result per DSO expected");
  for (size_t i = 0; i < layer1.size(); ++i)
    if (!layer1[i].optimal())
      throw ContractError("Layer-1 result of DSO " + std::to_string(c.dsos[i].index) + " is not optimal");
}

// Transmission block plus one z variable per DSO, shared by every TSO-side problem.
void add_transmission(Assembled& a, const MarketCase& c, const std::vector<double>& zlo,
                      const std::vector<double>& zhi, const std::vector<double>& zcost) {
  std::vector<form::Injection> inj;
  for (size_t i = 0; i < c.dsos.size(); ++i) {
    const auto& d = c.dsos[i];
    const int z = a.lp.add_variable("z" + std::to_string(d.index), zlo[i], zhi[i], zcost[i]);
    a.z_var.push_back(z);
    inj.push_back({c.transmission.index_of(d.coupling_bus), z, -1.0});
  }
  a.blocks.push_back(form::add_system(a.lp, c, 0, form::zeros(c), only_system(c, full_caps(c), 0), inj, {}));
}

std::vector<double> layer1_sum(const MarketCase& c, const std::vector<ClearingResult>& layer1) {
  std::vector<double> v(c.bids.size(), 0.0);
  for (const auto& r : layer1)
    for (size_t b = 0; b < v.size(); ++b) v[b] += r.volumes[b];
  return v;
}

enum class Layer2Kind { aggregated, idealized, fragmented };

ClearingResult layer2(const MarketCase& c, const std::vector<ClearingResult>& layer1, const PricingRule& pricing,
                      const std::vector<double>& dist_caps, const Layer2Options& opt, Layer2Kind kind) {
  require_layer1(c, layer1);
  const int nd = static_cast<int>(c.dsos.size());
  std::vector<double> zlo(nd), zhi(nd), zcost(nd);
  for (int i = 0; i < nd; ++i) {
    zlo[i] = c.dsos[i].z_min;
    zhi[i] = c.dsos[i].z_max;
    if (kind == Layer2Kind::fragmented) zlo[i] = zhi[i] = layer1[i].z[i];
    zcost[i] = opt.interface_term ? -pricing.price(i) : 0.0;
  }
  Assembled a;
  add_transmission(a, c, zlo, zhi, zcost);
  if (kind != Layer2Kind::fragmented) {
    const auto fixed = layer1_sum(c, layer1);
    for (int i = 0; i < nd; ++i) {
      const auto& d = c.dsos[i];
      form::BlockOptions bo;
      bo.nodal = kind == Layer2Kind::idealized;
      a.blocks.push_back(form::add_system(a.lp, c, d.index, fixed, only_system(c, dist_caps, d.index),
                                          {{d.network.root_index(), a.z_var[i], 1.0}}, bo));
    }
  }
  return finish(c, a);
}

}  // namespace

ClearingResult clear_dso_layer1(const MarketCase& c, int m, const PricingRule& pricing) {
  const int pos = c.dso_position(m);
  const auto& d = c.dsos[pos];
  Assembled a;
  a.z_var.assign(c.dsos.size(), -1);
  a.z_var[pos] = a.lp.add_variable("z" + std::to_string(m), d.z_min, d.z_max, pricing.price(pos));
  a.blocks.push_back(form::add_system(a.lp, c, m, form::zeros(c), only_system(c, full_caps(c), m),
                                      {{d.network.root_index(), a.z_var[pos], 1.0}}, {}));
  return finish(c, a);
}

ClearingResult clear_dso_fixed_z(const MarketCase& c, int m, double z) {
  const int pos = c.dso_position(m);
  const auto& d = c.dsos[pos];
  Assembled a;
  a.z_var.assign(c.dsos.size(), -1);
  a.z_var[pos] = a.lp.add_variable("z" + std::to_string(m), -kInf, kInf, 0.0);
  a.z_fix_rows.push_back(a.lp.add_equality("zfix" + std::to_string(m), {{a.z_var[pos], 1.0}}, z));
  a.blocks.push_back(form::add_system(a.lp, c, m, form::zeros(c), only_system(c, full_caps(c), m),
                                      {{d.network.root_index(), a.z_var[pos], 1.0}}, {}));
  return finish(c, a);
}

ClearingResult clear_tso_layer2(const MarketCase& c, const std::vector<ClearingResult>& layer1,
                                const PricingRule& pricing, const std::vector<double>& dist_caps,
                                const Layer2Options& opt) {
  if (dist_caps.size() != c.bids.size()) throw ContractError("dist_caps: one entry per bid expected");
  return layer2(c, layer1, pricing, dist_caps, opt, Layer2Kind::aggregated);
}

ClearingResult clear_idealized_layer2(const MarketCase& c, const std::vector<ClearingResult>& layer1,
                                      const PricingRule& pricing, const Layer2Options& opt) {
  require_layer1(c, layer1);
  return layer2(c, layer1, pricing, form::residual_caps(c, layer1_sum(c, layer1)), opt, Layer2Kind::idealized);
}

ClearingResult clear_fragmented_layer2(const MarketCase& c, const std::vector<ClearingResult>& layer1,
                                       const PricingRule& pricing, const Layer2Options& opt) {
  return layer2(c, layer1, pricing, form::zeros(c), opt, Layer2Kind::fragmented);
}

ClearingResult clear_common(const MarketCase& c) {
  const int nd = static_cast<int>(c.dsos.size());
  std::vector<double> zlo(nd), zhi(nd), zcost(nd, 0.0);
  for (int i = 0; i < nd; ++i) {
    zlo[i] = c.dsos[i].z_min;
    zhi[i] = c.dsos[i].z_max;
  }
  Assembled a;
  add_transmission(a, c, zlo, zhi, zcost);
  for (int i = 0; i < nd; ++i) {
    const auto& d = c.dsos[i];
    a.blocks.push_back(form::add_system(a.lp, c, d.index, form::zeros(c), only_system(c, full_caps(c), d.index),
                                        {{d.network.root_index(), a.z_var[i], 1.0}}, {}));
  }
  return finish(c, a);
}

PricingRule interface_price(const MarketCase& c, PricingKind kind) {
  PricingRule rule;
  rule.kind = kind;
  rule.prices.assign(c.dsos.size(), 0.0);
  if (kind == PricingKind::none) return rule;
  if (kind == PricingKind::optimal) {
    const auto com = clear_common(c);
    if (!com.optimal()) throw InfeasibleError("optimal interface price: common market is not solvable");
    for (size_t i = 0; i < c.dsos.size(); ++i)
      rule.prices[i] = com.tx_balance_duals[c.transmission.index_of(c.dsos[i].coupling_bus)];
    return rule;
  }
  for (size_t i = 0; i < c.dsos.size(); ++i) {
    double max_down = -kInf, min_up = kInf;
    for (int b : c.bids_of(c.dsos[i].index)) {
      const auto& bid = c.bids[b];
      if (bid.dir == market::Direction::down) max_down = std::max(max_down, bid.price);
      else min_up = std::min(min_up, bid.price);
    }
    if (!std::isfinite(max_down) && !std::isfinite(min_up)) rule.prices[i] = 0.0;
    else if (!std::isfinite(max_down)) rule.prices[i] = min_up;
    else if (!std::isfinite(min_up)) rule.prices[i] = max_down;
    else rule.prices[i] = 0.5 * (max_down + min_up);
  }
  return rule;
}

std::vector<ClearingResult> clear_all_layer1(const MarketCase& c, const PricingRule& pricing) {
  std::vector<ClearingResult> out;
  for (const auto& d : c.dsos) out.push_back(clear_dso_layer1(c, d.index, pricing));
  return out;
}

std::vector<double> total_volumes(const MarketCase& c, const std::vector<const ClearingResult*>& parts) {
  std::vector<double> v(c.bids.size(), 0.0);
  for (const auto* r : parts)
    for (size_t b = 0; b < v.size(); ++b) v[b] += r->volumes[b];
  return v;
}

}  // namespace flexmkt::clearing
