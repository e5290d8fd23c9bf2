// Random case generator. Each kind of draw has its own random stream, so
// recipes that only change one price range reproduce every other number.

#include <algorithm>
#include <cmath>
#include <fstream>
#include <functional>
#include <json.hpp>
#include <random>
#include <set>
#include <sstream>

#include "flexmkt/errors.hpp"
#include "flexmkt/formulation.hpp"
#include "flexmkt/market_model.hpp"

namespace flexmkt::market {

using mp::kInf;

Recipe Recipe::preset(const std::string& name) {
  Recipe r;
  r.name = name;
  if (name == "A") return r;
  if (name == "B") {
    r.tx_up = {90.0, 165.0};
    return r;
  }
  if (name == "C") {
    r.tx_up = {90.0, 165.0};
    r.extra_up_bids = 2;
    return r;
  }
  if (name == "D") {
    r.tso_need_upward = false;
    return r;
  }
  throw ContractError("unknown recipe '" + name + "' (expected A, B, C or D)");
}

namespace {

using json = nlohmann::json;

json range_json(const Range& r) { return json::array({r.lo, r.hi}); }
Range range_from(const json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

// Field table keeps to_json/from_json in sync.
template <class F>
void visit(Recipe& r, F&& f) {
  f("tx_buses_min", r.tx_buses_min);
  f("tx_buses_max", r.tx_buses_max);
  f("dsos_min", r.dsos_min);
  f("dsos_max", r.dsos_max);
  f("dso_buses_min", r.dso_buses_min);
  f("dso_buses_max", r.dso_buses_max);
  f("meshed_dso", r.meshed_dso);
  f("dist_up_bids", r.dist_up_bids);
  f("dist_down_bids", r.dist_down_bids);
  f("tx_up_bids", r.tx_up_bids);
  f("tx_down_bids", r.tx_down_bids);
  f("extra_up_bids", r.extra_up_bids);
  f("tso_need_upward", r.tso_need_upward);
  f("line_limit_scale", r.line_limit_scale);
  f("min_line_limit", r.min_line_limit);
}

template <class F>
void visit_ranges(Recipe& r, F&& f) {
  f("tx_up", r.tx_up);
  f("dist_up", r.dist_up);
  f("tx_down", r.tx_down);
  f("dist_down", r.dist_down);
  f("extra_up", r.extra_up);
  f("dist_qmax", r.dist_qmax);
  f("tx_qmax", r.tx_qmax);
  f("tso_need", r.tso_need);
}

}  // namespace

std::string Recipe::to_json() const {
  json j;
  Recipe copy = *this;
  j["name"] = name;
  j["topology"] = topology;
  visit(copy, [&](const char* k, auto& v) { j[k] = v; });
  visit_ranges(copy, [&](const char* k, Range& v) { j[k] = range_json(v); });
  return j.dump(1);
}

Recipe Recipe::from_json(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ParseError("", std::string("invalid recipe JSON: ") + e.what());
  }
  Recipe r = preset(j.value("name", std::string("A")));
  r.topology = j.value("topology", r.topology);
  try {
    visit(r, [&](const char* k, auto& v) {
      if (j.contains(k)) v = j[k].get<std::decay_t<decltype(v)>>();
    });
    visit_ranges(r, [&](const char* k, Range& v) {
      if (j.contains(k)) v = range_from(j[k]);
    });
  } catch (const json::exception& e) {
    throw ParseError("", std::string("bad recipe field: ") + e.what());
  }
  return r;
}

namespace {

class Stream {
 public:
  Stream(std::uint64_t seed, const std::string& tag) {
    std::uint64_t h = 1469598103934665603ULL;  // FNV-1a
    for (unsigned char ch : tag) h = (h ^ ch) * 1099511628211ULL;
    std::seed_seq seq{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32),
                      static_cast<std::uint32_t>(h), static_cast<std::uint32_t>(h >> 32)};
    rng_.seed(seq);
  }
  double u01() { return static_cast<double>(rng_() >> 11) * 0x1.0p-53; }
  double uniform(const Range& r) { return r.lo + (r.hi - r.lo) * u01(); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(std::min<double>(hi - lo, std::floor(u01() * (hi - lo + 1))));
  }
  template <class T>
  void shuffle(std::vector<T>& v) {
    for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) std::swap(v[i], v[integer(0, i)]);
  }

 private:
  std::mt19937_64 rng_;
};

double round2(double v) { return std::round(v * 100.0) / 100.0; }
double ceil2(double v) { return std::ceil(v * 100.0 - 1e-9) / 100.0; }
double floor2(double v) { return std::floor(v * 100.0 + 1e-9) / 100.0; }
double round3(double v) { return std::round(v * 1000.0) / 1000.0; }

net::Network random_tree(Stream& s, int n, bool meshed) {
  std::vector<int> buses;
  std::vector<net::Line> lines;
  std::set<std::pair<int, int>> edges;
  for (int k = 1; k <= n; ++k) buses.push_back(k);
  for (int k = 2; k <= n; ++k) {
    const int parent = s.integer(1, k - 1);
    lines.push_back({parent, k, round3(0.05 + 0.2 * s.u01())});
    edges.insert({parent, k});
  }
  const int extra = meshed ? std::max(1, n / 4) : 0;
  for (int t = 0, tries = 0; t < extra && tries < 50; ++tries) {
    int a = s.integer(1, n), b = s.integer(1, n);
    if (a == b) continue;
    if (a > b) std::swap(a, b);
    if (edges.count({a, b})) continue;
    edges.insert({a, b});
    lines.push_back({a, b, round3(0.05 + 0.2 * s.u01())});
    ++t;
  }
  return net::Network(buses, lines, 1);
}

std::string read_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw GenerationError("cannot read topology file " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

net::Network matpower_topology(const std::string& file) {
  auto nw = parse_matpower(read_file(std::string(FLEXMKT_DATA_DIR) + "/matpower/" + file));
  if (net::is_radial(nw)) nw = net::orient_from_root(nw);
  // Ratings are set by the generator; drop whatever the file carried.
  std::vector<double> lo(nw.num_lines(), -net::kUnlimited), hi(nw.num_lines(), net::kUnlimited);
  return nw.with_limits(lo, hi);
}

// Min (sense = +1) or max (sense = -1) interface flow the DSO can realize.
double extreme_z(const MarketCase& c, int pos, double sense) {
  const auto& d = c.dsos[pos];
  mp::LinearProgram lp;
  const int z = lp.add_variable("z", d.z_min, d.z_max, sense);
  std::vector<double> cap(c.bids.size(), 0.0);
  for (int b : c.bids_of(d.index)) cap[b] = c.bids[b].qmax;
  form::BlockOptions bo;
  bo.bid_costs = false;
  form::add_system(lp, c, d.index, form::zeros(c), cap, {{d.network.root_index(), z, 1.0}}, bo);
  const auto s = mp::solve_lp(lp);
  return s.optimal() ? s.primal[z] : std::nan("");
}

bool tso_feasible(const MarketCase& c, const std::vector<double>& z) {
  mp::LinearProgram lp;
  std::vector<form::Injection> inj;
  for (size_t i = 0; i < c.dsos.size(); ++i) {
    const int v = lp.add_variable("z", z[i], z[i], 0.0);
    inj.push_back({c.transmission.index_of(c.dsos[i].coupling_bus), v, -1.0});
  }
  std::vector<double> cap(c.bids.size(), 0.0);
  for (int b : c.bids_of(0)) cap[b] = c.bids[b].qmax;
  form::BlockOptions bo;
  bo.bid_costs = false;
  form::add_system(lp, c, 0, form::zeros(c), cap, inj, bo);
  return mp::solve_lp(lp).optimal();
}

struct Placement {
  int bus;
  double qmax;
};

std::vector<Placement> place(Stream& where, Stream& size, const std::vector<int>& candidates, int count,
                             const Range& qrange, bool distinct) {
  std::vector<Placement> out;
  std::vector<int> pool = candidates;
  if (distinct) where.shuffle(pool);
  for (int i = 0; i < count; ++i) {
    const int bus = distinct ? pool[i] : candidates[where.integer(0, static_cast<int>(candidates.size()) - 1)];
    out.push_back({bus, round2(size.uniform(qrange))});
  }
  return out;
}

}  // namespace

MarketCase generate_case(const Recipe& r, std::uint64_t seed) {
  if (r.dist_up_bids > r.dso_buses_min - 1)
    throw GenerationError("requested upward liquidity (" + std::to_string(r.dist_up_bids) +
                          " bids per DSO) exceeds the non-root bus count of the smallest feeder");
  if (r.dist_down_bids > r.dso_buses_min)
    throw GenerationError("requested downward liquidity exceeds the bus count of the smallest feeder");
  if (r.tx_buses_min < 2 || r.tx_buses_max < r.tx_buses_min || r.dso_buses_min < 2 ||
      r.dso_buses_max < r.dso_buses_min || r.dsos_min < 1 || r.dsos_max < r.dsos_min)
    throw GenerationError("recipe size ranges are inconsistent");
  if (r.topology != "synthetic" && r.topology != "matpower")
    throw GenerationError("unknown topology source '" + r.topology + "'");

  Stream topo(seed, "topology"), base(seed, "base"), where(seed, "placement"), qty(seed, "quantity");
  Stream p_tx_up(seed, "price.tx_up"), p_tx_down(seed, "price.tx_down");
  Stream p_dist_up(seed, "price.dist_up"), p_dist_down(seed, "price.dist_down");
  Stream extra(seed, "extra");

  MarketCase c;
  c.case_id = r.name + "-" + std::to_string(seed);

  // Grids.
  int n_dsos;
  if (r.topology == "matpower") {
    c.transmission = matpower_topology("case14.m");
    n_dsos = std::min(r.dsos_max, std::max(r.dsos_min, topo.integer(r.dsos_min, r.dsos_max)));
  } else {
    const int n0 = topo.integer(r.tx_buses_min, r.tx_buses_max);
    c.transmission = random_tree(topo, n0, true);
    n_dsos = topo.integer(r.dsos_min, std::min(r.dsos_max, n0 - 1));
    if (n_dsos < r.dsos_min) throw GenerationError("too few transmission buses for the requested DSOs");
  }
  std::vector<int> tx_candidates;
  for (int b : c.transmission.buses())
    if (b != c.transmission.root()) tx_candidates.push_back(b);
  topo.shuffle(tx_candidates);
  for (int i = 0; i < n_dsos; ++i) {
    DistributionSystem d;
    d.index = i + 1;
    d.coupling_bus = tx_candidates[i];
    if (r.topology == "matpower") {
      d.network = matpower_topology(i % 2 == 0 ? "case69.m" : "case141.m");
    } else {
      d.network = random_tree(topo, topo.integer(r.dso_buses_min, r.dso_buses_max), r.meshed_dso);
    }
    d.e.assign(d.network.num_buses(), 0.0);
    for (int k = 0; k < d.network.num_buses(); ++k)
      if (k != d.network.root_index()) d.e[k] = round2(-0.5 + 2.5 * base.u01());
    c.dsos.push_back(std::move(d));
  }
  c.e0.assign(c.transmission.num_buses(), 0.0);
  {
    const double need = round2(base.uniform(r.tso_need));
    const int a = base.integer(0, c.transmission.num_buses() - 1);
    const int b = base.integer(0, c.transmission.num_buses() - 1);
    const double share = round2(need * (0.4 + 0.6 * base.u01()));
    c.e0[a] += share;
    c.e0[b] += need - share;
    if (!r.tso_need_upward)
      for (double& v : c.e0) v = -v;
    for (double& v : c.e0) v = round2(v);
  }

  // Bids: transmission first, then each DSO, extras last.
  int next_id = 1;
  auto add_bid = [&](int system, int bus, Direction dir, double price, double q) {
    c.bids.push_back({next_id++, system, bus, dir, round2(price), q});
  };
  for (const auto& pl : place(where, qty, c.transmission.buses(), r.tx_up_bids, r.tx_qmax, false))
    add_bid(0, pl.bus, Direction::up, p_tx_up.uniform(r.tx_up), pl.qmax);
  for (const auto& pl : place(where, qty, c.transmission.buses(), r.tx_down_bids, r.tx_qmax, false))
    add_bid(0, pl.bus, Direction::down, p_tx_down.uniform(r.tx_down), pl.qmax);
  for (const auto& d : c.dsos) {
    std::vector<int> non_root;
    for (int b : d.network.buses())
      if (b != d.network.root()) non_root.push_back(b);
    if (static_cast<int>(non_root.size()) < r.dist_up_bids)
      throw GenerationError("requested liquidity exceeds bus count");
    for (const auto& pl : place(where, qty, non_root, r.dist_up_bids, r.dist_qmax, true))
      add_bid(d.index, pl.bus, Direction::up, p_dist_up.uniform(r.dist_up), pl.qmax);
    for (const auto& pl : place(where, qty, d.network.buses(), r.dist_down_bids, r.dist_qmax, true))
      add_bid(d.index, pl.bus, Direction::down, p_dist_down.uniform(r.dist_down), pl.qmax);
  }

  // Feeder ratings: congested relative to the base flow but relievable by
  // downstream flexibility.
  for (size_t i = 0; i < c.dsos.size(); ++i) {
    auto& d = c.dsos[i];
    const auto& nw = d.network;
    const auto sens = net::build_sensitivity(nw);
    Eigen::VectorXd p0(nw.num_buses());
    double total = 0.0;
    for (int k = 0; k < nw.num_buses(); ++k) {
      p0(k) = -d.e[k];
      total += d.e[k];
    }
    p0(nw.root_index()) += total;
    const Eigen::VectorXd f0 = net::line_flows(sens, p0);
    const bool radial = net::is_radial(nw);
    std::vector<double> up_flex(nw.num_lines(), 0.0), down_flex(nw.num_lines(), 0.0);
    if (radial) {
      for (int b : c.bids_of(d.index)) {
        const int k = nw.index_of(c.bids[b].bus);
        for (int l = 0; l < nw.num_lines(); ++l)
          if (sens(l, k) != 0.0) (c.bids[b].dir == Direction::up ? up_flex : down_flex)[l] += c.bids[b].qmax;
      }
    }
    std::vector<double> limit(nw.num_lines());
    for (int l = 0; l < nw.num_lines(); ++l) {
      const double f = std::abs(f0(l));
      const double flex = f0(l) >= 0 ? up_flex[l] : down_flex[l];
      limit[l] = ceil2(std::max({r.line_limit_scale * f, f - 0.6 * flex, r.min_line_limit}));
    }
    const double cap = std::abs(total) + 1.0 + [&] {
      double q = 0.0;
      for (int b : c.bids_of(d.index)) q += c.bids[b].qmax;
      return q;
    }();
    bool ok = false;
    for (int attempt = 0; attempt < 12 && !ok; ++attempt) {
      std::vector<double> lo(limit.size()), hi(limit.size());
      for (size_t l = 0; l < limit.size(); ++l) {
        lo[l] = -limit[l];
        hi[l] = limit[l];
      }
      d.network = nw.with_limits(lo, hi);
      d.z_min = -ceil2(cap);
      d.z_max = ceil2(cap);
      const double zlo = extreme_z(c, static_cast<int>(i), 1.0);
      const double zhi = extreme_z(c, static_cast<int>(i), -1.0);
      if (std::isfinite(zlo) && std::isfinite(zhi) && ceil2(zlo) + 0.02 <= floor2(zhi)) {
        d.z_min = ceil2(zlo);
        d.z_max = floor2(zhi);
        ok = true;
      } else {
        for (double& v : limit) v = ceil2(v * 1.25);
      }
    }
    if (!ok) throw GenerationError("could not make DSO " + std::to_string(d.index) + " locally feasible");
  }

  // Transmission capacity: enough flexibility for any admissible interface flow.
  {
    double e_sum = 0.0, zmax = 0.0, zmin = 0.0;
    for (double v : c.e0) e_sum += v;
    for (const auto& d : c.dsos) {
      zmax += d.z_max;
      zmin += d.z_min;
    }
    const double up_need = std::max(0.0, e_sum + zmax) * 1.2 + 1.0;
    const double down_need = std::max(0.0, -(e_sum + zmin)) * 1.2 + 1.0;
    double up_cap = 0.0, down_cap = 0.0;
    for (int b : c.bids_of(0)) (c.bids[b].dir == Direction::up ? up_cap : down_cap) += c.bids[b].qmax;
    for (int b : c.bids_of(0)) {
      auto& bid = c.bids[b];
      const double have = bid.dir == Direction::up ? up_cap : down_cap;
      const double want = bid.dir == Direction::up ? up_need : down_need;
      if (have < want && have > 0.0) bid.qmax = ceil2(bid.qmax * want / have);
    }
    if (up_cap == 0.0 || down_cap == 0.0) throw GenerationError("recipe gives the TSO no bids in one direction");
  }

  // Transmission ratings: tight guess, relaxed until every z corner is served.
  {
    const auto& tx = c.transmission;
    double bound = 0.0;
    for (double v : c.e0) bound += std::abs(v);
    for (const auto& d : c.dsos) bound += std::max(std::abs(d.z_min), std::abs(d.z_max));
    for (int b : c.bids_of(0)) bound += c.bids[b].qmax;
    double rating = ceil2(0.3 * bound);
    const int nd = static_cast<int>(c.dsos.size());
    bool ok = false;
    for (int attempt = 0; attempt < 20 && !ok; ++attempt) {
      std::vector<double> lo(tx.num_lines(), -rating), hi(tx.num_lines(), rating);
      c.transmission = tx.with_limits(lo, hi);
      ok = true;
      for (int mask = 0; mask < (1 << nd) && ok; ++mask) {
        std::vector<double> z(nd);
        for (int i = 0; i < nd; ++i) z[i] = (mask >> i & 1) ? c.dsos[i].z_max : c.dsos[i].z_min;
        ok = tso_feasible(c, z);
      }
      if (!ok) rating = ceil2(rating * 1.3);
    }
    if (!ok) throw GenerationError("transmission grid cannot serve the interface range");
  }

  // Extra upward bids behind the most loaded feeder line of each DSO.
  for (int t = 0; t < r.extra_up_bids; ++t) {
    for (const auto& d : c.dsos) {
      const auto& nw = d.network;
      const auto sens = net::build_sensitivity(nw);
      int worst = 0;
      double worst_ratio = -1.0;
      for (int l = 0; l < nw.num_lines(); ++l) {
        double ratio = 0.0;
        for (int k = 0; k < nw.num_buses(); ++k) ratio += std::abs(sens(l, k) * d.e[k]);
        ratio /= std::max(1e-9, nw.lines()[l].fmax);
        if (ratio > worst_ratio) {
          worst_ratio = ratio;
          worst = l;
        }
      }
      std::vector<int> behind;
      for (int k = 0; k < nw.num_buses(); ++k)
        if (std::abs(sens(worst, k)) > 0.5) behind.push_back(nw.buses()[k]);
      if (behind.empty()) behind.push_back(nw.lines()[worst].to);
      const int bus = behind[extra.integer(0, static_cast<int>(behind.size()) - 1)];
      add_bid(d.index, bus, Direction::up, extra.uniform(r.extra_up), round2(extra.uniform(r.dist_qmax)));
    }
  }

  c.check();
  return c;
}

}  // namespace flexmkt::market
