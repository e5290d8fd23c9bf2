#include <algorithm>
#include <cmath>

#include "flexmkt/errors.hpp"
#include "flexmkt/formulation.hpp"
#include "flexmkt/linalg.hpp"
#include "fwd_internal.hpp"

namespace flexmkt::fwd {

using clearing::ClearingResult;
using market::MarketCase;

const char* to_string(RsfVariant v) { return v == RsfVariant::primal ? "primal" : "dual"; }

std::vector<double> uniform_grid(double lo, double hi, double delta_bar) {
  if (!(delta_bar > 0.0)) throw ContractError("uniform_grid: step must be positive");
  if (lo > hi) throw ContractError("uniform_grid: empty range");
  std::vector<double> g;
  if (hi == lo) return {lo};
  const int n = std::max(1, static_cast<int>(std::ceil((hi - lo) / delta_bar - 1e-9)));
  for (int k = 0; k <= n; ++k) g.push_back(k == n ? hi : lo + (hi - lo) * k / n);
  if (lo < 0.0 && hi > 0.0) {
    bool has_zero = false;
    for (double v : g) has_zero |= std::abs(v) <= 1e-12;
    if (!has_zero) g.push_back(0.0);
    std::sort(g.begin(), g.end());
  }
  return g;
}

double max_gap(const std::vector<double>& grid) {
  double d = 0.0;
  for (size_t k = 1; k < grid.size(); ++k) d = std::max(d, grid[k] - grid[k - 1]);
  return d;
}

namespace {

std::vector<double> sorted_unique(std::vector<double> g) {
  std::sort(g.begin(), g.end());
  std::vector<double> out;
  for (double v : g)
    if (out.empty() || v - out.back() > 1e-9) out.push_back(v);
  return out;
}

}  // namespace

Rsf build_rsf(const MarketCase& c, int m, const std::vector<double>& grid_in) {
  const auto& d = c.dsos[c.dso_position(m)];
  const auto grid = sorted_unique(grid_in);
  for (double z : grid)
    if (z < d.z_min - 1e-9 || z > d.z_max + 1e-9)
      throw ContractError("build_rsf: grid value " + std::to_string(z) + " outside interface bounds");
  Rsf rsf;
  rsf.dso = m;
  rsf.delta = max_gap(grid);
  for (double z : grid) {
    auto r = clearing::clear_dso_fixed_z(c, m, z);
    ++rsf.solves;
    if (!r.optimal()) continue;
    RsfStep st;
    st.z = z;
    st.exact_cost = st.cost = r.objective;
    st.dual = r.interface_duals.at(0);
    st.clearing = std::move(r);
    rsf.steps.push_back(std::move(st));
  }
  if (rsf.steps.empty())
    throw InfeasibleError("DSO " + std::to_string(m) + ": no feasible interface flow step");
  return rsf;
}

Rsf build_rsf_dual(const MarketCase& c, int m, const std::vector<double>& grid) {
  Rsf rsf = build_rsf(c, m, grid);
  for (size_t k = 1; k < rsf.steps.size(); ++k) {
    auto& prev = rsf.steps[k - 1];
    auto& cur = rsf.steps[k];
    cur.cost = prev.cost + 0.5 * (prev.dual + cur.dual) * (cur.z - prev.z);
  }
  return rsf;
}

RsfClearing clear_tso_rsf(const MarketCase& c, const std::vector<Rsf>& rsfs) {
  if (rsfs.size() != c.dsos.size()) throw ContractError("clear_tso_rsf: one RSF per DSO expected");
  mp::MixedProgram mip;
  std::vector<form::Injection> inj;
  std::vector<std::vector<int>> y(rsfs.size());
  for (size_t i = 0; i < rsfs.size(); ++i) {
    const auto& d = c.dsos[i];
    if (rsfs[i].dso != d.index) throw ContractError("clear_tso_rsf: RSFs must follow case DSO order");
    mp::OneHotGroup g{"dso" + std::to_string(d.index), {}};
    const int bus = c.transmission.index_of(d.coupling_bus);
    for (size_t k = 0; k < rsfs[i].steps.size(); ++k) {
      const auto& st = rsfs[i].steps[k];
      const int v = mip.lp.add_variable("y" + std::to_string(d.index) + "_" + std::to_string(k), 0.0, 1.0, st.cost);
      y[i].push_back(v);
      g.members.push_back(v);
      if (st.z != 0.0) inj.push_back({bus, v, -st.z});
    }
    mip.groups.push_back(std::move(g));
  }
  std::vector<double> cap(c.bids.size(), 0.0);
  for (size_t b = 0; b < cap.size(); ++b)
    if (c.bids[b].system == 0) cap[b] = c.bids[b].qmax;
  const auto blk = form::add_system(mip.lp, c, 0, form::zeros(c), cap, inj, {});
  const auto s = mp::solve_milp(mip);

  RsfClearing out;
  auto& r = out.result;
  r.volumes.assign(c.bids.size(), 0.0);
  r.p.assign(c.dsos.size() + 1, {});
  r.z.assign(c.dsos.size(), std::nan(""));
  r.dso_balance_duals.assign(c.dsos.size(), {});
  r.status = s.status;
  r.lp_solves = s.nodes;
  r.milp_nodes = s.nodes;
  r.iterations = s.iterations;
  if (!s.optimal()) throw InfeasibleError("TSO market with RSF steps has no feasible selection");
  form::accumulate_volumes(blk, s, r.volumes);
  for (int v : blk.p_var) r.p[0].push_back(s.primal[v]);
  for (int row : blk.bus_rows) r.tx_balance_duals.push_back(s.row_duals[row]);
  for (size_t i = 0; i < rsfs.size(); ++i) {
    int best = 0;
    for (size_t k = 0; k < y[i].size(); ++k)
      if (s.primal[y[i][k]] > s.primal[y[i][best]]) best = static_cast<int>(k);
    out.selected_step.push_back(best);
    r.z[i] = rsfs[i].steps[best].z;
  }
  r.objective = s.objective;
  r.bid_cost = c.cost(r.volumes);
  return out;
}

Outcome run_bid_aggregation(const MarketCase& c, const AggregationOptions& opt) {
  const auto t0 = detail::Clock::now();
  if (!(opt.delta_bar > 0.0)) throw ContractError("run_bid_aggregation: delta_bar must be positive");
  if (opt.refine_rounds < 0) throw ContractError("run_bid_aggregation: refine_rounds must be >= 0");
  if (!opt.extra_points.empty() && opt.extra_points.size() != c.dsos.size())
    throw ContractError("run_bid_aggregation: extra_points needs one list per DSO");
  Outcome out;
  out.method = std::string("aggregation_") + to_string(opt.variant);
  out.pricing = {};
  const int nd = static_cast<int>(c.dsos.size());

  std::vector<std::vector<double>> grids(nd);
  for (int i = 0; i < nd; ++i) {
    const auto& d = c.dsos[i];
    grids[i] = uniform_grid(d.z_min, d.z_max, opt.delta_bar);
    if (!opt.extra_points.empty())
      for (double z : opt.extra_points[i]) grids[i].push_back(std::clamp(z, d.z_min, d.z_max));
    grids[i] = sorted_unique(grids[i]);
  }

  std::vector<Rsf> rsfs;
  RsfClearing tso;
  for (int round = 0; round <= opt.refine_rounds; ++round) {
    rsfs.clear();
    for (int i = 0; i < nd; ++i) {
      rsfs.push_back(opt.variant == RsfVariant::primal ? build_rsf(c, c.dsos[i].index, grids[i])
                                                       : build_rsf_dual(c, c.dsos[i].index, grids[i]));
      out.rsf_solves += rsfs.back().solves;
    }
    tso = clear_tso_rsf(c, rsfs);
    ++out.layer2_solves;
    out.milp_nodes += tso.result.milp_nodes;
    out.iterations += tso.result.iterations;
    if (round == opt.refine_rounds) break;
    for (int i = 0; i < nd; ++i) {
      const auto& d = c.dsos[i];
      const double zc = rsfs[i].steps[tso.selected_step[i]].z, w = rsfs[i].delta;
      if (w <= 0.0) continue;
      auto g = uniform_grid(std::max(d.z_min, zc - w), std::min(d.z_max, zc + w), w / 10.0);
      g.push_back(zc);  // keeps the current choice available
      grids[i] = sorted_unique(g);
    }
  }

  out.layer2 = tso.result;
  out.selected_z.clear();
  out.delta.clear();
  for (int i = 0; i < nd; ++i) {
    const auto& st = rsfs[i].steps[tso.selected_step[i]];
    out.layer1.push_back(st.clearing);
    out.selected_z.push_back(st.z);
    out.delta.push_back(rsfs[i].delta);
    out.delta_bar = std::max(out.delta_bar, rsfs[i].delta);
  }
  out.completed = true;
  detail::finalize(c, out, t0);
  return out;
}

double suboptimality_constant(const MarketCase& c) {
  // Balance rows of a grid as A x + B z = e with x = (u, d, p):
  // A = [S_u, -S_d, -I], cost c = (c_u, -c_d, 0).
  auto block = [&](int system, Eigen::MatrixXd& a, Eigen::VectorXd& cost) {
    const auto& nw = c.network_of(system);
    const auto ids = c.bids_of(system);
    const int n = nw.num_buses(), nb = static_cast<int>(ids.size());
    a = Eigen::MatrixXd::Zero(n, nb + n);
    cost = Eigen::VectorXd::Zero(nb + n);
    for (int j = 0; j < nb; ++j) {
      const auto& bid = c.bids[ids[j]];
      a(nw.index_of(bid.bus), j) = bid.sign();
      cost(j) = bid.unit_cost();
    }
    a.rightCols(n) = -Eigen::MatrixXd::Identity(n, n);
  };
  const int nd = static_cast<int>(c.dsos.size());
  Eigen::MatrixXd a0;
  Eigen::VectorXd c0;
  block(0, a0, c0);
  Eigen::MatrixXd b0 = Eigen::MatrixXd::Zero(c.transmission.num_buses(), nd);
  for (int i = 0; i < nd; ++i) b0(c.transmission.index_of(c.dsos[i].coupling_bus), i) = -1.0;
  const Eigen::VectorXd tx = (c0.transpose() * linalg::pinv_full_row_rank(a0) * b0).transpose();
  double l = 0.0;
  for (int i = 0; i < nd; ++i) {
    Eigen::MatrixXd am;
    Eigen::VectorXd cm;
    block(c.dsos[i].index, am, cm);
    Eigen::VectorXd bm = Eigen::VectorXd::Zero(am.rows());
    bm(c.dsos[i].network.root_index()) = 1.0;
    const double dm = cm.dot(linalg::pinv_full_row_rank(am) * bm);
    l = std::max(l, std::abs(tx(i) + dm));
  }
  return l;
}

}  // namespace flexmkt::fwd
