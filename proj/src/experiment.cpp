#include "flexmkt/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "flexmkt/errors.hpp"
#include "flexmkt/safety.hpp"

namespace flexmkt::bench {

using clearing::PricingKind;
using market::MarketCase;

bool is_aggregation(const std::string& method) { return method.rfind("aggregation_", 0) == 0; }

void ExperimentConfig::check() const {
  if (methods.empty()) throw ContractError("no method selected");
  for (const auto& m : methods)
    if (std::find(kMethods.begin(), kMethods.end(), m) == kMethods.end())
      throw ContractError("unknown method '" + m + "'");
  if (case_files.empty() && seeds.empty()) throw ContractError("no case: give case files or seeds");
  const bool agg = std::any_of(methods.begin(), methods.end(), is_aggregation);
  if (agg && deltas.empty()) throw ContractError("aggregation needs at least one --delta");
  if (!agg && !deltas.empty()) throw ContractError("--delta only applies to aggregation methods");
  for (double d : deltas)
    if (!(d > 0.0)) throw ContractError("--delta values must be positive");
  const bool other = std::any_of(methods.begin(), methods.end(), [](auto& m) { return !is_aggregation(m); });
  if (other && pricings.empty()) throw ContractError("no pricing rule selected");
  if (refine_rounds < 0) throw ContractError("--refine must be >= 0");
  if (workers < 1) throw ContractError("--workers must be >= 1");
}

std::vector<CaseSpec> ExperimentConfig::cases() const {
  std::vector<CaseSpec> out;
  for (const auto& f : case_files) out.push_back({f, recipe, 0});
  for (auto s : seeds) out.push_back({"", recipe, s});
  return out;
}

namespace {

std::string read_text(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << text;
  if (!out) throw IoError("write failed: " + path);
}

std::string num(double v, int prec = 6) {
  if (std::isnan(v)) return "";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.*f", prec, v);
  std::string s = buf;
  if (s == "-0.000000" || s == "-0.0000") s.erase(0, 1);
  return s;
}

std::string short_num(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%g", v);
  return buf;
}

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char ch : s) q += ch == '"' ? std::string("\"\"") : std::string(1, ch);
  return q + "\"";
}

fwd::Outcome run_method(const MarketCase& c, const std::string& method, const clearing::PricingRule& pr) {
  if (method == "three_layer") return fwd::run_three_layer(c, pr);
  if (method == "filtering") return fwd::run_bid_filtering(c, pr);
  if (method == "fragmented") return fwd::run_fragmented(c, pr);
  if (method == "idealized") return fwd::run_idealized(c, pr);
  if (method == "sequential_raw") return fwd::run_sequential(c, pr);
  throw ContractError("unknown method '" + method + "'");
}

void fill(ResultRow& row, const fwd::Outcome& o, bool has_com, double j_com) {
  row.lp_solves = o.lp_solves();
  row.milp_nodes = o.milp_nodes;
  row.wall_ms = o.wall_ms;
  row.status = o.status;
  row.has_j = o.completed;
  row.j_tot = o.j_tot;
  row.safe = o.completed && o.safety.safe;
  if (has_com && o.completed) row.eta_pct = safety::inefficiency(o.j_tot, j_com).eta_pct;
}

}  // namespace

MarketCase load_case(const CaseSpec& s) {
  if (!s.path.empty()) return market::parse_case(read_text(s.path));
  return market::generate_case(s.recipe, s.seed);
}

std::vector<ResultRow> run_case(const CaseSpec& spec, const ExperimentConfig& cfg) {
  std::vector<ResultRow> rows;
  ResultRow base;
  base.case_id = spec.path.empty() ? spec.recipe.name + "-" + std::to_string(spec.seed) : spec.path;
  base.seed = spec.path.empty() ? std::to_string(spec.seed) : "";
  base.eta_pct = std::nan("");

  MarketCase c;
  try {
    c = load_case(spec);
  } catch (const std::exception& e) {
    ResultRow r = base;
    r.method = "-";
    r.pricing = "-";
    r.status = std::string("load_error: ") + e.what();
    return {r};
  }
  if (!spec.path.empty() && !c.case_id.empty()) base.case_id = c.case_id;

  try {
    const auto com = clearing::clear_common(c);
    if (com.optimal()) {
      base.has_com = true;
      base.j_com = com.objective;
    }
  } catch (const std::exception&) {
  }

  for (const auto& method : cfg.methods) {
    if (is_aggregation(method)) {
      for (double d : cfg.deltas) {
        ResultRow r = base;
        r.method = method;
        r.pricing = "-";
        r.delta_bar = short_num(d);
        try {
          fwd::AggregationOptions opt;
          opt.delta_bar = d;
          opt.refine_rounds = cfg.refine_rounds;
          opt.variant = method == "aggregation_dual" ? fwd::RsfVariant::dual : fwd::RsfVariant::primal;
          fill(r, fwd::run_bid_aggregation(c, opt), base.has_com, base.j_com);
        } catch (const std::exception& e) {
          r.status = std::string("error: ") + e.what();
        }
        rows.push_back(r);
      }
      continue;
    }
    for (auto kind : cfg.pricings) {
      ResultRow r = base;
      r.method = method;
      r.pricing = clearing::to_string(kind);
      try {
        const auto pr = clearing::interface_price(c, kind);
        fill(r, run_method(c, method, pr), base.has_com, base.j_com);
      } catch (const std::exception& e) {
        r.status = std::string("error: ") + e.what();
      }
      rows.push_back(r);
    }
  }
  return rows;
}

std::vector<ResultRow> run_rows(const ExperimentConfig& cfg) {
  cfg.check();
  const auto specs = cfg.cases();
  std::vector<std::vector<ResultRow>> per(specs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next++) < specs.size();) per[i] = run_case(specs[i], cfg);
  };
  const int n = std::min<int>(cfg.workers, static_cast<int>(specs.size()));
  if (n <= 1) {
    worker();
  } else {
    std::vector<std::thread> pool;
    for (int k = 0; k < n; ++k) pool.emplace_back(worker);
    for (auto& t : pool) t.join();
  }
  std::vector<ResultRow> rows;
  for (auto& v : per) rows.insert(rows.end(), v.begin(), v.end());
  return rows;
}

std::string results_header() {
  return "case_id,seed,method,pricing,delta_bar,J_tot,J_com,eta_pct,safe,lp_solves,milp_nodes,wall_ms,status\n";
}

std::string format_row(const ResultRow& r, bool timing) {
  std::ostringstream o;
  o << csv_field(r.case_id) << ',' << r.seed << ',' << r.method << ',' << r.pricing << ',' << r.delta_bar << ','
    << (r.has_j ? num(r.j_tot) : "") << ',' << (r.has_com ? num(r.j_com) : "") << ',' << num(r.eta_pct, 4) << ','
    << (r.safe ? "true" : "false") << ',' << r.lp_solves << ',' << r.milp_nodes << ','
    << (timing ? num(r.wall_ms, 3) : "0") << ',' << csv_field(r.status) << '\n';
  return o.str();
}

std::string sweep_csv(const std::vector<ResultRow>& rows, bool timing) {
  std::string s = "case_id,seed,method,delta_bar,eta,time\n";
  for (const auto& r : rows) {
    if (!is_aggregation(r.method)) continue;
    s += csv_field(r.case_id) + ',' + r.seed + ',' + r.method + ',' + r.delta_bar + ',' + num(r.eta_pct, 4) + ',' +
         (timing ? num(r.wall_ms / 1000.0, 6) : "0") + '\n';
  }
  return s;
}

void run_experiment(const ExperimentConfig& cfg) {
  const auto rows = run_rows(cfg);
  std::filesystem::create_directories(cfg.out_dir);
  std::string text = results_header();
  for (const auto& r : rows) text += format_row(r, cfg.timing);
  write_text(cfg.out_dir + "/results.csv", text);
  if (std::any_of(cfg.methods.begin(), cfg.methods.end(), is_aggregation))
    write_text(cfg.out_dir + "/sweep.csv", sweep_csv(rows, cfg.timing));
}

void emit_case(const market::Recipe& recipe, std::uint64_t seed, const std::string& path) {
  write_text(path, market::serialize_case(market::generate_case(recipe, seed)));
}

// ---- property suite ----

std::vector<PropertyFailure> check_properties(const MarketCase& c, const PropertyOptions& opt) {
  std::vector<PropertyFailure> fails;
  auto fail = [&](const std::string& prop, const std::string& detail) { fails.push_back({c.case_id, prop, detail}); };
  auto str = [](double v) { return num(v); };

  const auto com = clearing::clear_common(c);
  if (!com.optimal()) {
    fail("setup", "common market has no solution");
    return fails;
  }
  const double jcom = com.objective;
  const double tol = opt.tol * std::max(1.0, std::abs(jcom));
  const auto report = market::validate_case(c);
  const clearing::PricingRule none;

  const auto frag = fwd::run_fragmented(c, none);
  const auto ideal = fwd::run_idealized(c, none);
  if (frag.completed) {
    if (!ideal.completed) fail("idealized<=fragmented", "idealized has no solution");
    else if (ideal.j_tot > frag.j_tot + tol)
      fail("idealized<=fragmented", str(ideal.j_tot) + " > " + str(frag.j_tot));
  }

  if (report.all_price_ordered()) {
    const auto seq = fwd::run_sequential(c, none);
    if (seq.completed)
      for (const auto& d : c.dsos) {
        const double m = std::min(seq.layer2.upward_volume(c, d.index), seq.layer2.downward_volume(c, d.index));
        if (m > opt.tol) fail("layer2_one_direction", "DSO " + std::to_string(d.index) + " buys both ways: " + str(m));
      }
  }

  if (report.all_radial() && report.all_price_ordered() && frag.completed) {
    const auto f = fwd::run_bid_filtering(c, none);
    if (!f.completed) fail("filtering_safe", "no Layer-2 solution: " + f.status);
    else if (!f.safety.safe)
      fail("filtering_safe", "line " + str(f.safety.max_line_violation) + " balance " +
                                 str(f.safety.max_balance_residual));
  }

  const double l = fwd::suboptimality_constant(c);
  for (double d : opt.deltas)
    for (auto v : {fwd::RsfVariant::primal, fwd::RsfVariant::dual}) {
      fwd::AggregationOptions ao;
      ao.delta_bar = d;
      ao.variant = v;
      const auto o = fwd::run_bid_aggregation(c, ao);
      const std::string tag = std::string(fwd::to_string(v)) + " delta " + short_num(d);
      if (!o.safety.safe) fail("aggregation_safe", tag);
      if (o.j_tot < jcom - tol) fail("aggregation>=common", tag + ": " + str(o.j_tot) + " < " + str(jcom));
      if (v == fwd::RsfVariant::primal && o.j_tot - jcom > l * d + tol)
        fail("suboptimality_bound", tag + ": gap " + str(o.j_tot - jcom) + " > L*delta " + str(l * d));
    }

  {
    fwd::AggregationOptions ao;
    ao.delta_bar = opt.deltas.empty() ? 1.0 : opt.deltas.back();
    for (double z : com.z) ao.extra_points.push_back({z});
    const auto o = fwd::run_bid_aggregation(c, ao);
    if (std::abs(o.j_tot - jcom) > tol) fail("aggregation_tight", str(o.j_tot) + " vs " + str(jcom));
  }

  {
    fwd::AggregationOptions ao;
    ao.delta_bar = opt.deltas.empty() ? 1.0 : opt.deltas.back();
    double prev = std::numeric_limits<double>::infinity();
    for (int r = 0; r <= opt.refine_rounds; ++r) {
      ao.refine_rounds = r;
      const double j = fwd::run_bid_aggregation(c, ao).j_tot;
      if (j > prev + tol) fail("refinement_monotone", "round " + std::to_string(r) + ": " + str(j) + " > " + str(prev));
      prev = j;
    }
  }
  return fails;
}

}  // namespace flexmkt::bench
