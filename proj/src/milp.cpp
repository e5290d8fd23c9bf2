// Best-first branch and bound where the only integrality is "exactly one member
// of each group is 1". Branching splits a group's live members in two halves
// (SOS1 dichotomy) and zeroes the upper bounds of the excluded half.

#include <algorithm>
#include <cmath>
#include <queue>
#include <vector>

#include "flexmkt/errors.hpp"
#include "flexmkt/mp_solver.hpp"

namespace flexmkt::mp {
namespace {

struct Node {
  double bound;
  long seq;
  std::vector<std::vector<int>> live;  // per group, members still allowed
};

struct NodeOrder {
  bool operator()(const Node& a, const Node& b) const {
    if (a.bound != b.bound) return a.bound > b.bound;
    return a.seq > b.seq;
  }
};

constexpr double kIntTol = 1e-9;

LinearProgram relaxation(const MixedProgram& mip, const std::vector<std::vector<int>>& live) {
  LinearProgram lp = mip.lp;
  for (size_t g = 0; g < mip.groups.size(); ++g) {
    const auto& grp = mip.groups[g];
    std::vector<Term> terms;
    for (int v : grp.members) {
      terms.push_back({v, 1.0});
      const bool allowed = std::find(live[g].begin(), live[g].end(), v) != live[g].end();
      if (!allowed) lp.set_bounds(v, 0.0, 0.0);
    }
    lp.add_equality("onehot_" + grp.name, std::move(terms), 1.0);
  }
  return lp;
}

// Group index with the most spread-out fractional solution, or -1 if integral.
int branching_group(const MixedProgram& mip, const std::vector<double>& x) {
  int pick = -1;
  double worst = kIntTol;
  for (size_t g = 0; g < mip.groups.size(); ++g) {
    double mx = 0.0;
    for (int v : mip.groups[g].members) mx = std::max(mx, x[v]);
    const double frac = 1.0 - mx;
    if (frac > worst) {
      worst = frac;
      pick = static_cast<int>(g);
    }
  }
  return pick;
}

}  // namespace

Solution solve_milp(const MixedProgram& mip, double abs_gap) {
  mip.validate();
  const int ng = static_cast<int>(mip.groups.size());
  const int nrows = mip.lp.num_constraints();

  std::priority_queue<Node, std::vector<Node>, NodeOrder> open;
  long seq = 0;
  int lp_solves = 0, iterations = 0;

  Node root{-kInf, seq++, {}};
  for (const auto& g : mip.groups) root.live.push_back(g.members);
  open.push(std::move(root));

  double incumbent = kInf;
  std::vector<std::vector<int>> best_live;
  bool saw_unbounded = false;

  while (!open.empty()) {
    Node node = open.top();
    open.pop();
    if (node.bound >= incumbent - abs_gap) continue;

    const Solution rel = solve_lp(relaxation(mip, node.live));
    ++lp_solves;
    iterations += rel.iterations;
    if (rel.status == SolveStatus::infeasible) continue;
    if (rel.status == SolveStatus::unbounded) {
      saw_unbounded = true;
      continue;
    }
    if (rel.objective >= incumbent - abs_gap) continue;

    const int g = branching_group(mip, rel.primal);
    if (g < 0) {
      incumbent = rel.objective;
      best_live = node.live;
      for (int k = 0; k < ng; ++k) {
        int sel = node.live[k].front();
        for (int v : node.live[k])
          if (rel.primal[v] > rel.primal[sel]) sel = v;
        best_live[k] = {sel};
      }
      continue;
    }

    // Split the live members so both halves carry part of the fractional mass.
    const auto& members = node.live[g];
    double total = 0.0;
    for (int v : members) total += rel.primal[v];
    size_t cut = 1;
    double acc = 0.0;
    for (size_t i = 0; i + 1 < members.size(); ++i) {
      acc += rel.primal[members[i]];
      cut = i + 1;
      if (acc >= 0.5 * total) break;
    }
    Node left{rel.objective, seq++, node.live};
    Node right{rel.objective, seq++, node.live};
    left.live[g].assign(members.begin(), members.begin() + cut);
    right.live[g].assign(members.begin() + cut, members.end());
    open.push(std::move(left));
    open.push(std::move(right));
  }

  Solution out;
  out.nodes = lp_solves;
  if (!std::isfinite(incumbent)) {
    out.status = saw_unbounded ? SolveStatus::unbounded : SolveStatus::infeasible;
    out.iterations = iterations;
    return out;
  }

  // Clean re-solve with the selection fixed to 0/1.
  LinearProgram fixed = mip.lp;
  for (int k = 0; k < ng; ++k)
    for (int v : mip.groups[k].members) {
      const double b = v == best_live[k].front() ? 1.0 : 0.0;
      fixed.set_bounds(v, b, b);
    }
  out = solve_lp(fixed);
  out.iterations += iterations;
  out.nodes = lp_solves;
  if (!out.optimal()) throw NumericalError("branch and bound: fixed re-solve lost feasibility");
  out.row_duals.resize(nrows);
  return out;
}

}  // namespace flexmkt::mp
