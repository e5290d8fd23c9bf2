#include <CLI11.hpp>

#include <atomic>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <mutex>
#include <sstream>
#include <thread>

#include "flexmkt/errors.hpp"
#include "flexmkt/experiment.hpp"

using namespace flexmkt;

namespace {

// "7" or "1-100" or "3,5,9"; CLI11 splits on commas already.
std::vector<std::uint64_t> expand_seeds(const std::vector<std::string>& items) {
  std::vector<std::uint64_t> out;
  for (const auto& s : items) {
    const auto dash = s.find('-', 1);
    try {
      if (dash == std::string::npos) {
        out.push_back(std::stoull(s));
        continue;
      }
      const auto lo = std::stoull(s.substr(0, dash)), hi = std::stoull(s.substr(dash + 1));
      if (hi < lo) throw ContractError("empty seed range '" + s + "'");
      for (auto k = lo; k <= hi; ++k) out.push_back(k);
    } catch (const std::logic_error&) {
      throw ContractError("bad seed '" + s + "'");
    }
  }
  return out;
}

market::Recipe load_recipe(const std::string& r) {
  if (std::filesystem::is_regular_file(r)) {
    std::ifstream in(r);
    std::stringstream ss;
    ss << in.rdbuf();
    return market::Recipe::from_json(ss.str());
  }
  return market::Recipe::preset(r);
}

struct Common {
  std::vector<std::string> cases;
  std::string recipe = "A";
  std::vector<std::string> seeds;
  std::vector<std::string> methods;
  std::vector<std::string> pricings{"none"};
  std::vector<double> deltas;
  int refine = 0;
  std::string out = ".";
  int workers = 1;
  bool no_timing = false;

  bench::ExperimentConfig config() const {
    bench::ExperimentConfig cfg;
    cfg.case_files = cases;
    cfg.recipe = load_recipe(recipe);
    cfg.seeds = expand_seeds(seeds);
    cfg.methods = methods;
    cfg.pricings.clear();
    for (const auto& p : pricings) cfg.pricings.push_back(clearing::parse_pricing(p));
    cfg.deltas = deltas;
    cfg.refine_rounds = refine;
    cfg.out_dir = out;
    cfg.workers = workers;
    cfg.timing = !no_timing;
    return cfg;
  }
};

void add_case_flags(CLI::App* sub, Common& o) {
  sub->add_option("--case", o.cases, "case JSON file(s)");
  sub->add_option("--recipe", o.recipe, "preset A-D or a recipe JSON file")->capture_default_str();
  sub->add_option("--seed", o.seeds, "seeds: 7, 1-100 or a comma list")->delimiter(',');
  sub->add_option("--workers", o.workers, "cases run in parallel")->capture_default_str();
}

int run_check(const Common& o, const bench::PropertyOptions& popt) {
  auto cfg = o.config();
  if (cfg.case_files.empty() && cfg.seeds.empty()) throw ContractError("no case: give --case or --seed");
  const auto specs = cfg.cases();
  std::vector<std::vector<bench::PropertyFailure>> fails(specs.size());
  std::atomic<size_t> next{0};
  auto worker = [&] {
    for (size_t i; (i = next++) < specs.size();) {
      try {
        fails[i] = bench::check_properties(bench::load_case(specs[i]), popt);
      } catch (const std::exception& e) {
        fails[i] = {{specs[i].path.empty() ? std::to_string(specs[i].seed) : specs[i].path, "error", e.what()}};
      }
    }
  };
  std::vector<std::thread> pool;
  for (int k = 0; k < std::max(1, cfg.workers); ++k) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  size_t bad = 0;
  for (const auto& f : fails)
    for (const auto& x : f) {
      ++bad;
      std::cout << "FAIL " << x.case_id << " " << x.property << ": " << x.detail << "\n";
    }
  std::cout << specs.size() << " cases, " << bad << " property failures\n";
  return bad ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Flexibility market coordination benchmarks"};
  app.require_subcommand(1);

  Common o;
  std::string out_file;
  std::uint64_t one_seed = 1;
  auto* gen = app.add_subcommand("gen-case", "write a generated case as JSON");
  gen->add_option("--recipe", o.recipe, "preset A-D or a recipe JSON file")->capture_default_str();
  gen->add_option("--seed", one_seed)->capture_default_str();
  gen->add_option("--out", out_file, "output file")->required();

  std::string case_file;
  auto* val = app.add_subcommand("validate", "parse a case and report on its structure");
  val->add_option("--case", case_file)->required();

  auto* run = app.add_subcommand("run", "run methods on cases, write results.csv");
  add_case_flags(run, o);
  run->add_option("--method", o.methods, "methods")->delimiter(',')->check(CLI::IsMember(bench::kMethods));
  run->add_option("--pricing", o.pricings, "none, optimal, midpoint")->delimiter(',');
  run->add_option("--delta", o.deltas, "RSF step sizes")->delimiter(',');
  run->add_option("--refine", o.refine, "refinement rounds")->capture_default_str();
  run->add_option("--out", o.out, "output directory")->capture_default_str();
  run->add_flag("--no-timing", o.no_timing, "write 0 for wall times");

  auto* sweep = app.add_subcommand("sweep-delta", "aggregation over a step-size list, write sweep.csv");
  add_case_flags(sweep, o);
  sweep->add_option("--method", o.methods)->delimiter(',');
  sweep->add_option("--delta", o.deltas)->delimiter(',');
  sweep->add_option("--refine", o.refine)->capture_default_str();
  sweep->add_option("--out", o.out)->capture_default_str();
  sweep->add_flag("--no-timing", o.no_timing);

  bench::PropertyOptions popt;
  auto* chk = app.add_subcommand("check", "property suite; exit 1 on any failure");
  add_case_flags(chk, o);
  chk->add_option("--delta", popt.deltas)->delimiter(',');
  chk->add_option("--refine", popt.refine_rounds)->capture_default_str();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*gen) {
      bench::emit_case(load_recipe(o.recipe), one_seed, out_file);
      return 0;
    }
    if (*val) {
      std::ifstream in(case_file);
      if (!in) throw IoError("cannot read " + case_file);
      std::stringstream ss;
      ss << in.rdbuf();
      const auto c = market::parse_case(ss.str());
      const auto r = market::validate_case(c);
      std::cout << "case " << c.case_id << ": " << c.dsos.size() << " DSOs, " << c.bids.size() << " bids\n";
      for (const auto& d : r.dsos)
        std::cout << "  DSO " << d.index << " radial=" << d.radial << " oriented=" << d.oriented
                  << " price_ordering=" << d.price_ordering << " layer1_feasible=" << d.layer1_feasible << "\n";
      for (const auto& w : r.warnings) std::cout << "  warning: " << w << "\n";
      std::cout << (r.ok() ? "ok" : "assumptions not met") << "\n";
      return r.ok() ? 0 : 1;
    }
    if (*run) {
      if (o.methods.empty()) throw ContractError("--method is required");
      bench::run_experiment(o.config());
      return 0;
    }
    if (*sweep) {
      if (o.methods.empty()) o.methods = {"aggregation_primal", "aggregation_dual"};
      for (const auto& m : o.methods)
        if (!bench::is_aggregation(m)) throw ContractError("sweep-delta takes aggregation methods only");
      if (o.deltas.empty()) o.deltas = {10, 8, 6, 5, 4, 3, 2, 1, 0.5, 0.25};
      bench::run_experiment(o.config());
      return 0;
    }
    if (*chk) return run_check(o, popt);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 2;
  }
  return 0;
}
