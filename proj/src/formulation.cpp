#include "flexmkt/formulation.hpp"

#include <algorithm>

#include "flexmkt/errors.hpp"

namespace flexmkt::form {

using mp::kInf;
using mp::Term;

Block add_system(mp::LinearProgram& lp, const market::MarketCase& c, int system,
                 const std::vector<double>& fixed, const std::vector<double>& cap,
                 const std::vector<Injection>& extra, const BlockOptions& opt) {
  const auto& nw = c.network_of(system);
  const auto& e = c.base_of(system);
  const int n = nw.num_buses();
  if (fixed.size() != c.bids.size() || cap.size() != c.bids.size())
    throw ContractError("add_system: volume vectors must have one entry per bid");

  Block blk;
  blk.system = system;
  blk.volume_var.assign(c.bids.size(), -1);
  const std::string pre = opt.prefix.empty() ? "s" + std::to_string(system) + "_" : opt.prefix;

  std::vector<std::vector<Term>> bus_terms(n);
  std::vector<double> rhs(e.begin(), e.end());
  for (int b : c.bids_of(system)) {
    const auto& bid = c.bids[b];
    const int k = nw.index_of(bid.bus);
    rhs[k] -= bid.sign() * fixed[b];
    if (cap[b] > 0.0) {
      const int v = lp.add_variable(pre + (bid.dir == market::Direction::up ? "u" : "d") +
                                        std::to_string(bid.id),
                                    0.0, cap[b], opt.bid_costs ? bid.unit_cost() : 0.0);
      blk.volume_var[b] = v;
      bus_terms[k].push_back({v, bid.sign()});
    }
  }
  for (const auto& inj : extra) {
    if (inj.bus_index < 0 || inj.bus_index >= n) throw ContractError("add_system: bad injection bus");
    bus_terms[inj.bus_index].push_back({inj.var, inj.coef});
  }

  if (!opt.nodal) {
    std::vector<Term> all;
    double total = 0.0;
    for (int k = 0; k < n; ++k) {
      all.insert(all.end(), bus_terms[k].begin(), bus_terms[k].end());
      total += rhs[k];
    }
    blk.sum_row = lp.add_equality(pre + "aggregate", std::move(all), total);
    return blk;
  }

  blk.p_var.resize(n);
  for (int k = 0; k < n; ++k)
    blk.p_var[k] = lp.add_variable(pre + "p" + std::to_string(nw.buses()[k]), -kInf, kInf, 0.0);
  blk.bus_rows.resize(n);
  for (int k = 0; k < n; ++k) {
    auto terms = bus_terms[k];
    terms.push_back({blk.p_var[k], -1.0});
    blk.bus_rows[k] = lp.add_equality(pre + "bal" + std::to_string(nw.buses()[k]), std::move(terms), rhs[k]);
  }
  std::vector<Term> sum;
  for (int k = 0; k < n; ++k) sum.push_back({blk.p_var[k], 1.0});
  blk.sum_row = lp.add_equality(pre + "lossless", std::move(sum), 0.0);

  if (opt.flow_limits) {
    const auto sens = net::build_sensitivity(nw);
    for (int l = 0; l < nw.num_lines(); ++l) {
      std::vector<Term> terms;
      for (int k = 0; k < n; ++k)
        if (sens(l, k) != 0.0) terms.push_back({blk.p_var[k], sens(l, k)});
      const auto& ln = nw.lines()[l];
      blk.flow_rows.push_back(lp.add_constraint(pre + "flow" + std::to_string(l), std::move(terms),
                                                ln.fmin, ln.fmax));
    }
  }
  return blk;
}

std::vector<double> residual_caps(const market::MarketCase& c, const std::vector<double>& fixed) {
  std::vector<double> cap(c.bids.size());
  for (size_t b = 0; b < c.bids.size(); ++b) cap[b] = std::max(0.0, c.bids[b].qmax - fixed[b]);
  return cap;
}

std::vector<double> zeros(const market::MarketCase& c) { return std::vector<double>(c.bids.size(), 0.0); }

void accumulate_volumes(const Block& block, const mp::Solution& s, std::vector<double>& into) {
  for (size_t b = 0; b < block.volume_var.size(); ++b)
    if (block.volume_var[b] >= 0) into[b] += s.primal[block.volume_var[b]];
}

std::vector<double> flows(const market::MarketCase& c, int system, const std::vector<double>& p) {
  const auto sens = net::build_sensitivity(c.network_of(system));
  const Eigen::VectorXd f = net::line_flows(sens, Eigen::Map<const Eigen::VectorXd>(p.data(), p.size()));
  return std::vector<double>(f.data(), f.data() + f.size());
}

}  // namespace flexmkt::form
