#include <cmath>
#include <set>
#include <string>

#include "flexmkt/errors.hpp"
#include "flexmkt/mp_solver.hpp"

namespace flexmkt::mp {

const char* to_string(SolveStatus s) {
  switch (s) {
    case SolveStatus::optimal: return "optimal";
    case SolveStatus::infeasible: return "infeasible";
    case SolveStatus::unbounded: return "unbounded";
  }
  return "?";
}

int LinearProgram::add_variable(std::string name, double lower, double upper, double cost) {
  vars_.push_back({std::move(name), lower, upper, cost});
  return static_cast<int>(vars_.size()) - 1;
}

int LinearProgram::add_constraint(std::string name, std::vector<Term> terms, double lower,
                                  double upper) {
  rows_.push_back({std::move(name), std::move(terms), lower, upper});
  return static_cast<int>(rows_.size()) - 1;
}

void LinearProgram::set_cost(int var, double cost) {
  if (var < 0 || var >= num_variables()) throw ContractError("set_cost: bad variable index");
  vars_[var].cost = cost;
}

void LinearProgram::set_bounds(int var, double lower, double upper) {
  if (var < 0 || var >= num_variables()) throw ContractError("set_bounds: bad variable index");
  vars_[var].lower = lower;
  vars_[var].upper = upper;
}

void LinearProgram::set_row_bounds(int row, double lower, double upper) {
  if (row < 0 || row >= num_constraints()) throw ContractError("set_row_bounds: bad row index");
  rows_[row].lower = lower;
  rows_[row].upper = upper;
}

double LinearProgram::evaluate(const std::vector<double>& x) const {
  if (x.size() != vars_.size()) throw ContractError("evaluate: dimension mismatch");
  double v = offset_;
  for (size_t j = 0; j < vars_.size(); ++j) v += vars_[j].cost * x[j];
  return v;
}

void LinearProgram::validate() const {
  const int n = num_variables();
  for (const auto& v : vars_) {
    if (std::isnan(v.lower) || std::isnan(v.upper) || !std::isfinite(v.cost))
      throw ContractError("variable " + v.name + ": NaN bound or non-finite cost");
    if (v.lower > v.upper) throw ContractError("variable " + v.name + ": lower > upper");
    if (v.lower == kInf || v.upper == -kInf)
      throw ContractError("variable " + v.name + ": bound at the wrong infinity");
  }
  for (const auto& r : rows_) {
    if (std::isnan(r.lower) || std::isnan(r.upper) || r.lower > r.upper)
      throw ContractError("constraint " + r.name + ": invalid bounds");
    for (const auto& t : r.terms) {
      if (t.var < 0 || t.var >= n)
        throw ContractError("constraint " + r.name + " references undeclared variable");
      if (!std::isfinite(t.coef)) throw ContractError("constraint " + r.name + ": bad coefficient");
    }
  }
  if (!std::isfinite(offset_)) throw ContractError("objective offset is not finite");
}

void MixedProgram::validate() const {
  lp.validate();
  std::set<int> seen;
  for (const auto& g : groups) {
    if (g.members.empty()) throw ContractError("one-hot group " + g.name + " is empty");
    for (int v : g.members) {
      if (v < 0 || v >= lp.num_variables())
        throw ContractError("one-hot group " + g.name + " references undeclared variable");
      if (!seen.insert(v).second)
        throw ContractError("one-hot groups overlap at " + lp.variables()[v].name);
      const auto& var = lp.variables()[v];
      if (var.lower != 0.0 || var.upper != 1.0)
        throw ContractError("one-hot member " + var.name + " must have bounds [0, 1]");
    }
  }
}

}  // namespace flexmkt::mp
