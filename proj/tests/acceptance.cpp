// Acceptance run: one PASS/FAIL line per criterion. Exit status 1 if any fails.
#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <mutex>
#include <random>
#include <string>
#include <thread>
#include <vector>

#include "fixtures.hpp"
#include "flexmkt/clearing.hpp"
#include "flexmkt/forwarding.hpp"
#include "flexmkt/safety.hpp"
#include "lp_support.hpp"

using namespace flexmkt;
using clearing::PricingKind;
using clearing::PricingRule;
using market::MarketCase;

namespace {

// pinned tolerances
constexpr double kRelTol = 1e-6;      // criteria 1, 3: relative to |J_com| or the reference objective
constexpr double kAbsTol = 1e-6;      // criteria 4, 5, 6, 8, 9: EUR, MW or percentage points
constexpr double kExactTol = 1e-9;    // criterion 7, relative
constexpr double kDualGapTol = 1e-7;  // criterion 10
const std::vector<double> kDeltas{0.25, 0.5, 1.0, 2.0, 4.0};

const char* kPresets[] = {"A", "B", "C", "D"};

struct Verdict {
  bool pass = true;
  std::string detail;
  std::string first_failure;
};

// Thread-safe failure collector.
struct Tally {
  std::mutex mu;
  int checked = 0;
  int failed = 0;
  std::string first;
  void ok() {
    std::lock_guard<std::mutex> g(mu);
    ++checked;
  }
  void bad(const std::string& what) {
    std::lock_guard<std::mutex> g(mu);
    ++checked;
    if (failed++ == 0) first = what;
  }
  void expect(bool cond, const std::string& what) { cond ? ok() : bad(what); }
};

void par_for(int n, const std::function<void(int)>& body) {
  std::atomic<int> next{0};
  const int workers = std::max(1u, std::thread::hardware_concurrency());
  std::vector<std::thread> pool;
  for (int w = 0; w < std::min(workers, n); ++w)
    pool.emplace_back([&] {
      for (int i; (i = next++) < n;) body(i);
    });
  for (auto& t : pool) t.join();
}

MarketCase mixed_case(int seed) {
  return market::generate_case(market::Recipe::preset(kPresets[(seed - 1) % 4]), seed);
}

std::string fmt(double v) {
  char b[48];
  std::snprintf(b, sizeof b, "%.6g", v);
  return b;
}

double dist_volume(const MarketCase& c, const clearing::ClearingResult& r) {
  double v = 0.0;
  for (const auto& d : c.dsos) v += r.upward_volume(c, d.index) + r.downward_volume(c, d.index);
  return v;
}

// ---- 1: idealized <= fragmented ----
Verdict criterion1() {
  Tally t;
  par_for(100, [&](int i) {
    const auto c = mixed_case(i + 1);
    const double jcom = clearing::clear_common(c).objective;
    for (auto k : {PricingKind::none, PricingKind::midpoint, PricingKind::optimal}) {
      const auto pr = clearing::interface_price(c, k);
      const auto frag = fwd::run_fragmented(c, pr);
      const auto ideal = fwd::run_idealized(c, pr);
      const std::string tag = c.case_id + "/" + clearing::to_string(k);
      if (!frag.completed) {
        t.expect(true, tag);
        continue;
      }
      t.expect(ideal.completed && ideal.j_tot <= frag.j_tot + kRelTol * std::abs(jcom) + 1e-9,
               tag + ": idealized " + fmt(ideal.j_tot) + " fragmented " + fmt(frag.j_tot));
    }
  });
  return {t.failed == 0, std::to_string(t.checked) + " instances over 100 cases A-D x 3 pricing rules",
          t.first};
}

// ---- 2: filtering outcomes are grid safe ----
Verdict criterion2() {
  constexpr int kWanted = 500;
  std::vector<int> seeds;
  std::mutex mu;
  Tally t;
  int skipped = 0;
  // Screen seeds in blocks until enough cases satisfy the radial and price-ordering assumptions.
  for (int block = 0; static_cast<int>(seeds.size()) < kWanted; ++block) {
    std::vector<int> ok(100, 0);
    par_for(100, [&](int i) {
      const int seed = 1 + block * 100 + i;
      const auto rep = market::validate_case(mixed_case(seed));
      ok[i] = rep.all_radial() && rep.all_price_ordered();
    });
    for (int i = 0; i < 100 && static_cast<int>(seeds.size()) < kWanted; ++i) {
      if (ok[i]) seeds.push_back(1 + block * 100 + i);
      else ++skipped;
    }
  }
  double worst = 0.0;
  std::atomic<int> raw_unsafe{0};
  par_for(kWanted, [&](int i) {
    const auto c = mixed_case(seeds[i]);
    const PricingKind kinds[] = {PricingKind::none, PricingKind::midpoint, PricingKind::optimal};
    const auto kind = kinds[i % 3];
    const auto pr = clearing::interface_price(c, kind);
    const auto o = fwd::run_bid_filtering(c, pr);
    // forwarding everything unfiltered, for contrast
    if (!fwd::run_sequential(c, pr).safety.safe) ++raw_unsafe;
    {
      std::lock_guard<std::mutex> g(mu);
      worst = std::max({worst, o.safety.max_line_violation, o.safety.max_balance_residual});
    }
    t.expect(o.completed && o.safety.safe, c.case_id + "/" + clearing::to_string(kind) + ": " + o.status +
                                               " line " + fmt(o.safety.max_line_violation));
  });
  return {t.failed == 0,
          std::to_string(t.checked) + " radial price-ordered cases (" + std::to_string(skipped) +
              " screened out), worst violation " + fmt(worst) + " MW; unfiltered forwarding unsafe in " +
              std::to_string(raw_unsafe.load()),
          t.first};
}

// ---- 3: boundary cases of filtering ----
MarketCase unconstrained_dsos(MarketCase c) {
  for (auto& d : c.dsos) {
    std::vector<double> lo(d.network.num_lines(), -net::kUnlimited), hi(d.network.num_lines(), net::kUnlimited);
    d.network = d.network.with_limits(lo, hi);
    d.z_min = -1e4;
    d.z_max = 1e4;
  }
  return c;
}

// Leaf bids on a tight feeder: any full activation beyond Layer 1 overloads it.
MarketCase choked_feeder(int k) {
  auto c = fixtures::m1(0.5 + 0.1 * k);
  c.case_id = "choked" + std::to_string(k);
  c.dsos[0].e = {0.0, 0.0};
  c.bids[fixtures::kDUp].bus = 2;
  c.bids[fixtures::kDUp].qmax = 3.0 + 0.25 * k;
  c.bids[fixtures::kDDown].bus = 2;
  c.bids[fixtures::kDDown].qmax = 3.0 + 0.3 * k;
  c.e0 = {0.0, 4.0 + k};
  c.check();
  return c;
}

Verdict criterion3() {
  Tally t;
  std::atomic<int> all_pass{0}, all_empty{0};
  auto compare = [&](const MarketCase& c, const PricingRule& pr, bool expect_all) {
    const auto l1 = clearing::clear_all_layer1(c, pr);
    for (const auto& r : l1)
      if (!r.optimal()) return;
    bool all = true, none = true;
    for (size_t i = 0; i < c.dsos.size(); ++i) {
      const auto f = fwd::filter_bids(c, c.dsos[i].index, l1[i]);
      all &= f.discarded.empty();
      none &= f.up.empty() && f.down.empty();
    }
    if (expect_all ? !all : !none) {
      t.bad(c.case_id + ": construction did not give the intended filter outcome");
      return;
    }
    const auto f = fwd::run_bid_filtering(c, pr);
    const auto ref = expect_all ? fwd::run_idealized(c, pr) : fwd::run_fragmented(c, pr);
    if (!ref.completed) return;
    ++(expect_all ? all_pass : all_empty);
    const double scale = std::max(1.0, std::abs(ref.j_tot));
    t.expect(f.completed && std::abs(f.j_tot - ref.j_tot) <= kRelTol * scale,
             c.case_id + (expect_all ? ": filtering vs idealized " : ": filtering vs fragmented ") +
                 fmt(f.j_tot) + " vs " + fmt(ref.j_tot));
  };
  par_for(60, [&](int i) {
    const auto c = unconstrained_dsos(mixed_case(1000 + i));
    compare(c, clearing::interface_price(c, i % 2 ? PricingKind::midpoint : PricingKind::none), true);
  });
  par_for(20, [&](int k) {
    const auto c = choked_feeder(k);
    compare(c, clearing::interface_price(c, k % 2 ? PricingKind::midpoint : PricingKind::none), false);
  });
  const bool enough = all_pass >= 30 && all_empty >= 10;
  return {t.failed == 0 && enough,
          std::to_string(all_pass.load()) + " all-forwarded and " + std::to_string(all_empty.load()) +
              " nothing-forwarded cases",
          enough ? t.first : "too few boundary cases exercised"};
}

// ---- 4: aggregation safe, bounded below by the common optimum, tight ----
Verdict criterion4() {
  Tally t;
  par_for(50, [&](int i) {
    const auto c = mixed_case(2000 + i);
    const auto com = clearing::clear_common(c);
    for (double d : kDeltas) {
      for (auto v : {fwd::RsfVariant::primal, fwd::RsfVariant::dual}) {
        fwd::AggregationOptions ao;
        ao.delta_bar = d;
        ao.variant = v;
        const auto o = fwd::run_bid_aggregation(c, ao);
        const std::string tag = c.case_id + "/" + fwd::to_string(v) + "/" + fmt(d);
        t.expect(o.completed && o.safety.safe, tag + " unsafe");
        t.expect(o.j_tot >= com.objective - kAbsTol, tag + ": " + fmt(o.j_tot) + " < J_com " + fmt(com.objective));
      }
      fwd::AggregationOptions ao;
      ao.delta_bar = d;
      for (double z : com.z) ao.extra_points.push_back({z});
      const auto o = fwd::run_bid_aggregation(c, ao);
      t.expect(std::abs(o.j_tot - com.objective) <= kAbsTol,
               c.case_id + "/tight/" + fmt(d) + ": " + fmt(o.j_tot) + " vs " + fmt(com.objective));
    }
  });
  return {t.failed == 0, std::to_string(t.checked) + " checks on 50 cases x 5 step sizes", t.first};
}

// ---- 5: L * delta bound and refinement trend ----
Verdict criterion5() {
  Tally bound, mono;
  std::mutex mu;
  double worst_ratio = 0.0;
  std::map<double, double> eta_sum;
  int cases_with_eta = 0;
  par_for(100, [&](int i) {
    const auto c = mixed_case(3000 + i);
    const double jcom = clearing::clear_common(c).objective;
    const double l = fwd::suboptimality_constant(c);
    std::map<double, double> eta;
    for (double d : kDeltas) {
      fwd::AggregationOptions ao;
      ao.delta_bar = d;
      const auto o = fwd::run_bid_aggregation(c, ao);
      const double gap = o.j_tot - jcom;
      eta[d] = safety::inefficiency(o.j_tot, jcom).eta_pct;
      {
        std::lock_guard<std::mutex> g(mu);
        if (gap > kAbsTol) worst_ratio = std::max(worst_ratio, l * d > 0 ? gap / (l * d) : INFINITY);
      }
      bound.expect(gap <= l * d + kAbsTol,
                   c.case_id + " delta " + fmt(d) + ": gap " + fmt(gap) + " > L*delta " + fmt(l * d));
    }
    for (double d : {1.0, 4.0}) {
      fwd::AggregationOptions ao;
      ao.delta_bar = d;
      double prev = INFINITY;
      for (int r = 0; r <= 3; ++r) {
        ao.refine_rounds = r;
        const double j = fwd::run_bid_aggregation(c, ao).j_tot;
        mono.expect(j <= prev + kAbsTol, c.case_id + " delta " + fmt(d) + " round " + std::to_string(r));
        prev = j;
      }
    }
    std::lock_guard<std::mutex> g(mu);
    if (std::all_of(eta.begin(), eta.end(), [](auto& kv) { return std::isfinite(kv.second); })) {
      ++cases_with_eta;
      for (auto& [d, e] : eta) eta_sum[d] += e;
    }
  });
  // Mean curve over the sweep, largest step first.
  bool trend = true;
  std::string curve;
  double prev = INFINITY;
  for (auto it = eta_sum.rbegin(); it != eta_sum.rend(); ++it) {
    const double m = it->second / std::max(1, cases_with_eta);
    trend &= m <= prev + kAbsTol;
    prev = m;
    curve += (curve.empty() ? "" : " ") + fmt(it->first) + ":" + fmt(m);
  }
  const bool pass = bound.failed == 0 && mono.failed == 0 && trend;
  std::string first = bound.failed ? bound.first + " (worst gap/(L*delta) " + fmt(worst_ratio) + ")"
                                   : mono.failed ? mono.first
                                                 : trend ? "" : "mean eta curve increases";
  return {pass,
          "bound violated in " + std::to_string(bound.failed) + "/" + std::to_string(bound.checked) +
              "; refinement monotone in " + std::to_string(mono.checked - mono.failed) + "/" +
              std::to_string(mono.checked) + "; mean eta by delta " + curve,
          first};
}

// ---- 6: no DSO buys both directions in Layer 2 ----
Verdict criterion6() {
  Tally t;
  int skipped = 0;
  std::mutex mu;
  par_for(200, [&](int i) {
    const auto c = mixed_case(4000 + i);
    if (!market::validate_case(c).all_price_ordered()) {
      std::lock_guard<std::mutex> g(mu);
      ++skipped;
      return;
    }
    for (auto k : {PricingKind::none, PricingKind::midpoint, PricingKind::optimal}) {
      const auto o = fwd::run_sequential(c, clearing::interface_price(c, k));
      if (!o.completed) continue;
      for (const auto& d : c.dsos) {
        const double m = std::min(o.layer2.upward_volume(c, d.index), o.layer2.downward_volume(c, d.index));
        t.expect(m <= kAbsTol, c.case_id + " DSO " + std::to_string(d.index) + ": " + fmt(m) + " MW both ways");
      }
    }
  });
  return {t.failed == 0 && skipped == 0,
          std::to_string(t.checked) + " DSO-level checks on 200 cases x 3 pricing rules",
          skipped ? std::to_string(skipped) + " cases broke the price ordering" : t.first};
}

// ---- 7: RSF market equals enumeration ----
Verdict criterion7() {
  Tally t;
  std::atomic<int> steps_max{0};
  par_for(40, [&](int i) {
    auto rec = market::Recipe::preset(kPresets[i % 4]);
    rec.dsos_min = 1 + i % 3;
    rec.dsos_max = rec.dsos_min;
    const auto c = market::generate_case(rec, 5000 + i);
    for (auto v : {fwd::RsfVariant::primal, fwd::RsfVariant::dual}) {
      std::vector<fwd::Rsf> rsfs;
      for (const auto& d : c.dsos) {
        // at most 8 steps: 7 uniform points and possibly 0
        const auto g = fwd::uniform_grid(d.z_min, d.z_max, (d.z_max - d.z_min) / 6.0);
        rsfs.push_back(v == fwd::RsfVariant::primal ? fwd::build_rsf(c, d.index, g)
                                                    : fwd::build_rsf_dual(c, d.index, g));
        int cur = steps_max;
        while (static_cast<int>(rsfs.back().steps.size()) > cur &&
               !steps_max.compare_exchange_weak(cur, static_cast<int>(rsfs.back().steps.size()))) {
        }
      }
      const double milp = fwd::clear_tso_rsf(c, rsfs).result.objective;
      const double en = fixtures::rsf_enumeration(c, rsfs);
      t.expect(std::abs(milp - en) <= kExactTol * std::max(1.0, std::abs(en)),
               c.case_id + "/" + fwd::to_string(v) + ": " + fmt(milp) + " vs " + fmt(en));
    }
  });
  return {t.failed == 0 && steps_max <= 8,
          std::to_string(t.checked) + " cases with 1-3 DSOs, up to " + std::to_string(steps_max.load()) + " steps",
          t.first};
}

// ---- 8: optimal pricing leaves Layer 2 to the transmission grid ----
Verdict criterion8() {
  Tally t;
  par_for(100, [&](int i) {
    const auto c = market::generate_case(market::Recipe::preset(i % 2 ? "D" : "A"), 6000 + i);
    const auto pr = clearing::interface_price(c, PricingKind::optimal);
    const double jcom = clearing::clear_common(c).objective;
    for (const char* m : {"sequential_raw", "three_layer", "filtering"}) {
      const auto o = std::string(m) == "three_layer" ? fwd::run_three_layer(c, pr)
                     : std::string(m) == "filtering" ? fwd::run_bid_filtering(c, pr)
                                                     : fwd::run_sequential(c, pr);
      const double vol = o.completed ? dist_volume(c, o.layer2) : INFINITY;
      const double eta = safety::inefficiency(o.j_tot, jcom).eta_pct;
      t.expect(o.completed && vol <= kAbsTol && std::abs(eta) <= kAbsTol,
               c.case_id + "/" + m + ": distribution volume " + fmt(vol) + ", eta " + fmt(eta));
    }
  });
  return {t.failed == 0, std::to_string(t.checked) + " runs on 50 A and 50 D cases", t.first};
}

// ---- 9: primal RSF never worse than dual RSF ----
Verdict criterion9() {
  Tally t;
  par_for(50, [&](int i) {
    const auto c = mixed_case(7000 + i);
    const double jcom = clearing::clear_common(c).objective;
    for (double d : kDeltas) {
      fwd::AggregationOptions ao;
      ao.delta_bar = d;
      const double ep = safety::inefficiency(fwd::run_bid_aggregation(c, ao).j_tot, jcom).eta_pct;
      ao.variant = fwd::RsfVariant::dual;
      const double ed = safety::inefficiency(fwd::run_bid_aggregation(c, ao).j_tot, jcom).eta_pct;
      t.expect(ep <= ed + kAbsTol, c.case_id + " delta " + fmt(d) + ": primal " + fmt(ep) + " dual " + fmt(ed));
    }
  });
  return {t.failed == 0, std::to_string(t.checked) + " (case, delta) pairs", t.first};
}

// ---- 10: oracle and duality cross-checks ----
Verdict criterion10() {
  Tally oracle, dual;
  std::atomic<int> feasible{0};
  constexpr double kStep = 0.25;
  par_for(50, [&](int i) {
    const auto c = fixtures::random_micro(100 + i);
    const auto lp = clearing::clear_common(c);
    const auto bf = safety::brute_force_oracle(c, kStep);
    if (lp.optimal() != bf.feasible) {
      oracle.bad(c.case_id + ": feasibility disagrees");
      return;
    }
    if (!bf.feasible) return oracle.ok();
    ++feasible;
    double band = 0.0;
    for (const auto& b : c.bids) band += b.price * kStep;
    oracle.expect(bf.objective >= lp.objective - 1e-7 && bf.objective <= lp.objective + band,
                  c.case_id + ": oracle " + fmt(bf.objective) + " LP " + fmt(lp.objective));
  });
  std::mt19937_64 rng(20240601);
  std::vector<mp::LinearProgram> lps;
  for (int k = 0; k < 1000; ++k) lps.push_back(lptest::random_lp(rng));
  par_for(1000, [&](int k) {
    const auto s = mp::solve_lp(lps[k]);
    if (!s.optimal()) return dual.bad("LP " + std::to_string(k) + " not solved");
    const auto chk = lptest::check_duality(lps[k], s);
    const double gap = std::abs(s.objective - chk.dual_objective) / std::max(1.0, std::abs(s.objective));
    dual.expect(gap <= kDualGapTol && chk.max_sign_violation <= kDualGapTol && chk.max_primal_residual <= kDualGapTol,
                "LP " + std::to_string(k) + ": gap " + fmt(gap));
  });
  return {oracle.failed == 0 && dual.failed == 0 && feasible >= 25,
          std::to_string(oracle.checked) + " micro cases (" + std::to_string(feasible.load()) + " feasible), " +
              std::to_string(dual.checked) + " random LPs",
          oracle.failed ? oracle.first : dual.failed ? dual.first : feasible < 25 ? "too few feasible micro cases" : ""};
}

}  // namespace

int main() {
  const std::vector<std::pair<const char*, Verdict (*)()>> all = {
      {"1 idealized <= fragmented", criterion1},
      {"2 filtering is grid safe", criterion2},
      {"3 filtering boundary cases", criterion3},
      {"4 aggregation safe, bounded below and tight", criterion4},
      {"5 step-size suboptimality bound and trend", criterion5},
      {"6 one direction per DSO in Layer 2", criterion6},
      {"7 RSF market equals enumeration", criterion7},
      {"8 optimal pricing gives the common optimum", criterion8},
      {"9 primal RSF no worse than dual", criterion9},
      {"10 oracle and duality cross-checks", criterion10},
  };
  int failed = 0;
  for (const auto& [name, fn] : all) {
    const auto t0 = std::chrono::steady_clock::now();
    Verdict v;
    try {
      v = fn();
    } catch (const std::exception& e) {
      v = {false, "", std::string("exception: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    std::printf("%s criterion %s: %s [%.1fs]\n", v.pass ? "PASS" : "FAIL", name, v.detail.c_str(), secs);
    if (!v.pass) {
      std::printf("     first failure: %s\n", v.first_failure.c_str());
      ++failed;
    }
    std::fflush(stdout);
  }
  std::printf("%d of %zu criteria passed\n", static_cast<int>(all.size()) - failed, all.size());
  return failed ? 1 : 0;
}
