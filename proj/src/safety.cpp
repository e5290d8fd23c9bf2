#include "flexmkt/safety.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <limits>

#include "flexmkt/errors.hpp"
#include "flexmkt/mp_solver.hpp"

namespace flexmkt::safety {

using market::MarketCase;
using mp::kInf;
using mp::Term;

namespace {

struct Violation {
  double line = kInf;
  double balance = kInf;
  bool ok() const { return line <= kSafetyTol && balance <= kSafetyTol; }
};

// Two stages over (p, z, s): first the smallest bound r on every balance
// slack, then, with r held, the smallest bound t on line overloads.
// `with_tx` adds the transmission grid and couples every included DSO to it.
Violation min_violation(const MarketCase& c, const std::vector<double>& vol, const std::vector<int>& dso_pos,
                        bool with_tx, bool dso_grids = true) {
  mp::LinearProgram lp;
  const int r = lp.add_variable("r", 0.0, kInf, 1.0);
  const int t = lp.add_variable("t", 0.0, kInf, 0.0);
  std::vector<int> slack_vars;
  std::vector<std::pair<int, std::vector<int>>> flow_checks;  // (system, p vars)

  auto relaxed_row = [&](const std::string& name, std::vector<Term> terms, double rhs) {
    const int s = lp.add_variable("s_" + name, -kInf, kInf, 0.0);
    slack_vars.push_back(s);
    terms.push_back({s, 1.0});
    lp.add_equality(name, std::move(terms), rhs);
    lp.add_constraint("ub_" + name, {{s, 1.0}, {r, -1.0}}, -kInf, 0.0);
    lp.add_constraint("lb_" + name, {{s, 1.0}, {r, 1.0}}, 0.0, kInf);
  };

  auto add_grid = [&](int system, const std::vector<std::pair<int, std::pair<int, double>>>& inj) {
    const auto& nw = c.network_of(system);
    const auto& e = c.base_of(system);
    const int n = nw.num_buses();
    std::vector<double> rhs(e.begin(), e.end());
    for (int b : c.bids_of(system)) rhs[nw.index_of(c.bids[b].bus)] -= c.bids[b].sign() * vol[b];
    std::vector<int> p(n);
    const std::string pre = "g" + std::to_string(system) + "_";
    for (int k = 0; k < n; ++k) p[k] = lp.add_variable(pre + "p" + std::to_string(k), -kInf, kInf, 0.0);
    for (int k = 0; k < n; ++k) {
      std::vector<Term> terms{{p[k], -1.0}};
      for (const auto& [bus, vc] : inj)
        if (bus == k) terms.push_back({vc.first, vc.second});
      relaxed_row(pre + "bal" + std::to_string(k), std::move(terms), rhs[k]);
    }
    std::vector<Term> sum;
    for (int k = 0; k < n; ++k) sum.push_back({p[k], 1.0});
    relaxed_row(pre + "sum", std::move(sum), 0.0);
    const auto sens = net::build_sensitivity(nw);
    for (int l = 0; l < nw.num_lines(); ++l) {
      const auto& ln = nw.lines()[l];
      std::vector<Term> terms;
      for (int k = 0; k < n; ++k)
        if (sens(l, k) != 0.0) terms.push_back({p[k], sens(l, k)});
      if (ln.fmax < net::kUnlimited) {
        auto hi = terms;
        hi.push_back({t, -1.0});
        lp.add_constraint(pre + "fmax" + std::to_string(l), std::move(hi), -kInf, ln.fmax);
      }
      if (ln.fmin > -net::kUnlimited) {
        terms.push_back({t, 1.0});
        lp.add_constraint(pre + "fmin" + std::to_string(l), std::move(terms), ln.fmin, kInf);
      }
    }
    flow_checks.push_back({system, p});
  };

  std::vector<int> z(dso_pos.size());
  for (size_t i = 0; i < dso_pos.size(); ++i) {
    const auto& d = c.dsos[dso_pos[i]];
    z[i] = lp.add_variable("z" + std::to_string(d.index), d.z_min, d.z_max, 0.0);
    if (dso_grids) add_grid(d.index, {{d.network.root_index(), {z[i], 1.0}}});
  }
  if (with_tx) {
    std::vector<std::pair<int, std::pair<int, double>>> inj;
    for (size_t i = 0; i < dso_pos.size(); ++i)
      inj.push_back({c.transmission.index_of(c.dsos[dso_pos[i]].coupling_bus), {z[i], -1.0}});
    add_grid(0, inj);
  }

  const auto first = mp::solve_lp(lp);
  if (!first.optimal())
    throw NumericalError("grid-safety LP did not solve: " + std::string(mp::to_string(first.status)));
  lp.set_bounds(r, 0.0, first.primal[r]);
  lp.set_cost(r, 0.0);
  lp.set_cost(t, 1.0);
  const auto s = mp::solve_lp(lp);
  if (!s.optimal()) throw NumericalError("grid-safety LP did not solve: " + std::string(mp::to_string(s.status)));
  Violation v;
  v.balance = 0.0;
  for (int sv : slack_vars) v.balance = std::max(v.balance, std::abs(s.primal[sv]));
  v.line = 0.0;
  for (const auto& [system, p] : flow_checks) {
    const auto& nw = c.network_of(system);
    const auto sens = net::build_sensitivity(nw);
    Eigen::VectorXd pv(p.size());
    for (size_t k = 0; k < p.size(); ++k) pv(k) = s.primal[p[k]];
    const Eigen::VectorXd f = sens * pv;
    for (int l = 0; l < nw.num_lines(); ++l) {
      const auto& ln = nw.lines()[l];
      v.line = std::max({v.line, f(l) - ln.fmax, ln.fmin - f(l)});
    }
  }
  return v;
}

}  // namespace

SafetyVerdict is_grid_safe(const MarketCase& c, const std::vector<double>& volumes) {
  if (volumes.size() != c.bids.size()) throw ContractError("is_grid_safe: one volume per bid expected");
  SafetyVerdict out;
  std::vector<int> all;
  for (size_t i = 0; i < c.dsos.size(); ++i) {
    all.push_back(static_cast<int>(i));
    out.dso_feasible.push_back(min_violation(c, volumes, {static_cast<int>(i)}, false).ok());
  }
  const auto joint = min_violation(c, volumes, all, true);
  out.max_line_violation = std::max(0.0, joint.line);
  out.max_balance_residual = joint.balance;
  out.safe = joint.ok();
  // Transmission alone, interface flows free within their bounds.
  out.transmission_feasible = out.safe || min_violation(c, volumes, all, true, false).ok();
  return out;
}

EfficiencyReport inefficiency(double j_tot, double j_com) {
  EfficiencyReport r;
  r.j_tot = j_tot;
  r.j_com = j_com;
  r.gap = j_tot - j_com;
  r.defined = std::abs(j_com) > 1e-9;
  r.eta_pct = r.defined ? 100.0 * r.gap / std::abs(j_com) : std::numeric_limits<double>::quiet_NaN();
  return r;
}

namespace {

// Line flows by solving the reduced DC equations directly: B theta = p with
// the root angle pinned. Deliberately not the library's sensitivity matrix.
Eigen::VectorXd direct_flows(const net::Network& nw, const Eigen::VectorXd& p) {
  const int n = nw.num_buses(), r = nw.root_index();
  Eigen::MatrixXd lap = Eigen::MatrixXd::Zero(n, n);
  for (const auto& ln : nw.lines()) {
    const int a = nw.index_of(ln.from), b = nw.index_of(ln.to);
    lap(a, a) += 1 / ln.x;
    lap(b, b) += 1 / ln.x;
    lap(a, b) -= 1 / ln.x;
    lap(b, a) -= 1 / ln.x;
  }
  Eigen::VectorXd rhs = p;
  lap.row(r).setZero();
  lap(r, r) = 1.0;
  rhs(r) = 0.0;
  const Eigen::VectorXd theta = lap.fullPivLu().solve(rhs);
  Eigen::VectorXd f(nw.num_lines());
  for (int l = 0; l < nw.num_lines(); ++l) {
    const auto& ln = nw.lines()[l];
    f(l) = (theta(nw.index_of(ln.from)) - theta(nw.index_of(ln.to))) / ln.x;
  }
  return f;
}

bool within_limits(const net::Network& nw, const Eigen::VectorXd& f, double tol) {
  for (int l = 0; l < nw.num_lines(); ++l)
    if (f(l) > nw.lines()[l].fmax + tol || f(l) < nw.lines()[l].fmin - tol) return false;
  return true;
}

}  // namespace

OracleResult brute_force_oracle(const MarketCase& c, double step) {
  if (!(step > 0.0)) throw ContractError("brute_force_oracle: step must be positive");
  int buses = c.transmission.num_buses();
  for (const auto& d : c.dsos) buses += d.network.num_buses();
  if (c.bids.size() > 6 || buses > 6)
    throw ContractError("brute_force_oracle: case too large (" + std::to_string(c.bids.size()) + " bids, " +
                        std::to_string(buses) + " buses; limit 6 and 6)");
  int slack = -1;
  for (size_t b = 0; b < c.bids.size(); ++b)
    if (c.bids[b].system == 0 && (slack < 0 || c.bids[b].qmax > c.bids[slack].qmax)) slack = static_cast<int>(b);
  if (slack < 0) throw ContractError("brute_force_oracle: needs at least one transmission bid");

  constexpr double tol = 1e-9;
  std::vector<int> swept;
  std::vector<std::vector<double>> levels;
  for (size_t b = 0; b < c.bids.size(); ++b) {
    if (static_cast<int>(b) == slack) continue;
    swept.push_back(static_cast<int>(b));
    std::vector<double> lv;
    const double q = c.bids[b].qmax;
    for (int k = 0; k * step < q - tol; ++k) lv.push_back(k * step);
    lv.push_back(q);
    levels.push_back(lv);
  }

  OracleResult best;
  best.objective = std::numeric_limits<double>::infinity();
  std::vector<size_t> idx(swept.size(), 0);
  std::vector<double> vol(c.bids.size(), 0.0);
  while (true) {
    ++best.points;
    for (size_t i = 0; i < swept.size(); ++i) vol[swept[i]] = levels[i][idx[i]];
    vol[slack] = 0.0;

    bool ok = true;
    Eigen::VectorXd p0 = Eigen::VectorXd::Zero(c.transmission.num_buses());
    for (int k = 0; k < c.transmission.num_buses(); ++k) p0(k) = -c.e0[k];
    for (const auto& d : c.dsos) {
      const int n = d.network.num_buses();
      Eigen::VectorXd p(n);
      for (int k = 0; k < n; ++k) p(k) = -d.e[k];
      for (int b : c.bids_of(d.index)) p(d.network.index_of(c.bids[b].bus)) += c.bids[b].sign() * vol[b];
      const double z = -p.sum();  // lossless: the feeder head receives z
      if (z < d.z_min - tol || z > d.z_max + tol) {
        ok = false;
        break;
      }
      p(d.network.root_index()) += z;
      if (!within_limits(d.network, direct_flows(d.network, p), tol)) {
        ok = false;
        break;
      }
      p0(c.transmission.index_of(d.coupling_bus)) -= z;
    }
    if (ok) {
      for (int b : c.bids_of(0))
        if (b != slack) p0(c.transmission.index_of(c.bids[b].bus)) += c.bids[b].sign() * vol[b];
      // The slack bid must cancel the transmission surplus.
      const double need = -p0.sum() * c.bids[slack].sign();
      if (need < -tol || need > c.bids[slack].qmax + tol) ok = false;
      else {
        vol[slack] = std::clamp(need, 0.0, c.bids[slack].qmax);
        p0(c.transmission.index_of(c.bids[slack].bus)) += c.bids[slack].sign() * vol[slack];
        ok = within_limits(c.transmission, direct_flows(c.transmission, p0), tol);
      }
    }
    if (ok) {
      const double j = c.cost(vol);
      if (j < best.objective) {
        best.objective = j;
        best.volumes = vol;
        best.feasible = true;
      }
    }

    size_t i = 0;
    while (i < idx.size() && ++idx[i] == levels[i].size()) idx[i++] = 0;
    if (i == idx.size()) break;
  }
  if (!best.feasible) best.objective = 0.0;
  return best;
}

}  // namespace flexmkt::safety
