#include <cmath>

#include "flexmkt/errors.hpp"
#include "flexmkt/formulation.hpp"
#include "fwd_internal.hpp"

namespace flexmkt::fwd {

using clearing::ClearingResult;
using market::MarketCase;

namespace detail {

std::vector<double> layer1_volumes(const MarketCase& c, const std::vector<ClearingResult>& l1) {
  std::vector<double> v(c.bids.size(), 0.0);
  for (const auto& r : l1)
    for (size_t b = 0; b < v.size(); ++b) v[b] += r.volumes[b];
  return v;
}

bool run_layer1(const MarketCase& c, Outcome& out) {
  out.layer1 = clearing::clear_all_layer1(c, out.pricing);
  for (size_t i = 0; i < out.layer1.size(); ++i) {
    ++out.layer1_solves;
    out.iterations += out.layer1[i].iterations;
    if (!out.layer1[i].optimal()) {
      out.status = "layer1_infeasible_dso" + std::to_string(c.dsos[i].index);
      return false;
    }
  }
  return true;
}

void finalize(const MarketCase& c, Outcome& out, Clock::time_point t0) {
  std::vector<double> v = layer1_volumes(c, out.layer1);
  if (out.layer2.optimal())
    for (size_t b = 0; b < v.size(); ++b) v[b] += out.layer2.volumes[b];
  for (const auto& r : out.layer3)
    if (r.optimal())
      for (size_t b = 0; b < v.size(); ++b) v[b] += r.volumes[b];
  out.volumes = v;
  out.j_tot = c.cost(v);
  out.safety = safety::is_grid_safe(c, v);
  out.wall_ms = elapsed_ms(t0);
}

}  // namespace detail

ClearingResult clear_dso_corrective(const MarketCase& c, int m, const std::vector<double>& committed, double z) {
  const int pos = c.dso_position(m);
  const auto& d = c.dsos[pos];
  mp::LinearProgram lp;
  const int zv = lp.add_variable("z" + std::to_string(m), z, z, 0.0);
  auto cap = form::residual_caps(c, committed);
  for (size_t b = 0; b < cap.size(); ++b)
    if (c.bids[b].system != m) cap[b] = 0.0;
  const auto blk = form::add_system(lp, c, m, committed, cap, {{d.network.root_index(), zv, 1.0}}, {});

  ClearingResult r;
  r.volumes.assign(c.bids.size(), 0.0);
  r.p.assign(c.dsos.size() + 1, {});
  r.z.assign(c.dsos.size(), std::nan(""));
  r.dso_balance_duals.assign(c.dsos.size(), {});
  const auto s = mp::solve_lp(lp);
  r.status = s.status;
  r.lp_solves = 1;
  r.iterations = s.iterations;
  if (!s.optimal()) return r;
  form::accumulate_volumes(blk, s, r.volumes);
  for (int v : blk.p_var) r.p[1 + pos].push_back(s.primal[v]);
  for (int row : blk.bus_rows) r.dso_balance_duals[pos].push_back(s.row_duals[row]);
  r.z[pos] = z;
  r.objective = s.objective;
  r.bid_cost = c.cost(r.volumes);
  return r;
}

Outcome run_three_layer(const MarketCase& c, const clearing::PricingRule& pricing) {
  const auto t0 = detail::Clock::now();
  Outcome out;
  out.method = "three_layer";
  out.pricing = pricing;
  if (!detail::run_layer1(c, out)) {
    detail::finalize(c, out, t0);
    return out;
  }
  const auto l1 = detail::layer1_volumes(c, out.layer1);
  out.layer2 = clearing::clear_tso_layer2(c, out.layer1, pricing, form::residual_caps(c, l1));
  ++out.layer2_solves;
  out.iterations += out.layer2.iterations;
  if (!out.layer2.optimal()) {
    out.status = "layer2_infeasible";
    detail::finalize(c, out, t0);
    return out;
  }
  std::vector<double> committed = l1;
  for (size_t b = 0; b < committed.size(); ++b) committed[b] += out.layer2.volumes[b];
  for (size_t i = 0; i < c.dsos.size(); ++i) {
    const auto& d = c.dsos[i];
    out.layer3.push_back(clear_dso_corrective(c, d.index, committed, out.layer2.z[i]));
    ++out.layer3_solves;
    out.iterations += out.layer3.back().iterations;
    if (!out.layer3.back().optimal()) out.failed_dsos.push_back(d.index);
  }
  out.completed = out.failed_dsos.empty();
  if (!out.completed) out.status = "layer3_infeasible";
  detail::finalize(c, out, t0);
  return out;
}

namespace {

enum class Plain { practical, idealized, fragmented };

Outcome run_plain(const MarketCase& c, const clearing::PricingRule& pricing, Plain kind) {
  const auto t0 = detail::Clock::now();
  Outcome out;
  out.method = kind == Plain::practical ? "sequential_raw" : kind == Plain::idealized ? "idealized" : "fragmented";
  out.pricing = pricing;
  if (!detail::run_layer1(c, out)) {
    detail::finalize(c, out, t0);
    return out;
  }
  if (kind == Plain::practical)
    out.layer2 = clearing::clear_tso_layer2(c, out.layer1, pricing,
                                            form::residual_caps(c, detail::layer1_volumes(c, out.layer1)));
  else if (kind == Plain::idealized)
    out.layer2 = clearing::clear_idealized_layer2(c, out.layer1, pricing);
  else
    out.layer2 = clearing::clear_fragmented_layer2(c, out.layer1, pricing);
  ++out.layer2_solves;
  out.iterations += out.layer2.iterations;
  out.completed = out.layer2.optimal();
  if (!out.completed) out.status = "layer2_infeasible";
  detail::finalize(c, out, t0);
  return out;
}

}  // namespace

Outcome run_sequential(const MarketCase& c, const clearing::PricingRule& pricing) {
  return run_plain(c, pricing, Plain::practical);
}
Outcome run_idealized(const MarketCase& c, const clearing::PricingRule& pricing) {
  return run_plain(c, pricing, Plain::idealized);
}
Outcome run_fragmented(const MarketCase& c, const clearing::PricingRule& pricing) {
  return run_plain(c, pricing, Plain::fragmented);
}

}  // namespace flexmkt::fwd
