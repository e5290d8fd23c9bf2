#pragma once

#include <limits>
#include <string>
#include <vector>

namespace flexmkt::mp {

inline constexpr double kInf = std::numeric_limits<double>::infinity();

struct Variable {
  std::string name;
  double lower = 0.0;
  double upper = kInf;
  double cost = 0.0;
};

struct Term {
  int var;
  double coef;
};

/// lower <= sum(coef * x[var]) <= upper. Equality when lower == upper.
struct Constraint {
  std::string name;
  std::vector<Term> terms;
  double lower = -kInf;
  double upper = kInf;
  bool is_equality() const { return lower == upper; }
};

/// Minimization LP with bounded variables and ranged rows.
class LinearProgram {
 public:
  int add_variable(std::string name, double lower = 0.0, double upper = kInf, double cost = 0.0);
  int add_constraint(std::string name, std::vector<Term> terms, double lower, double upper);
  int add_equality(std::string name, std::vector<Term> terms, double rhs) {
    return add_constraint(std::move(name), std::move(terms), rhs, rhs);
  }

  void set_cost(int var, double cost);
  void set_bounds(int var, double lower, double upper);
  void set_row_bounds(int row, double lower, double upper);
  void set_objective_offset(double c) { offset_ = c; }

  const std::vector<Variable>& variables() const { return vars_; }
  const std::vector<Constraint>& constraints() const { return rows_; }
  double objective_offset() const { return offset_; }
  int num_variables() const { return static_cast<int>(vars_.size()); }
  int num_constraints() const { return static_cast<int>(rows_.size()); }

  /// Objective value of a primal point, offset included.
  double evaluate(const std::vector<double>& x) const;

  /// Throws ContractError on NaN data, inverted bounds or dangling indices.
  void validate() const;

 private:
  std::vector<Variable> vars_;
  std::vector<Constraint> rows_;
  double offset_ = 0.0;
};

/// Disjoint set of [0,1] variables of which exactly one takes the value 1.
struct OneHotGroup {
  std::string name;
  std::vector<int> members;
};

struct MixedProgram {
  LinearProgram lp;
  std::vector<OneHotGroup> groups;
  void validate() const;
};

enum class SolveStatus { optimal, infeasible, unbounded };

const char* to_string(SolveStatus s);

struct Solution {
  SolveStatus status = SolveStatus::infeasible;
  std::vector<double> primal;
  // d objective / d (active row bound). Zero for rows that are not binding.
  std::vector<double> row_duals;
  // c_j - a_j^T y
  std::vector<double> reduced_costs;
  double objective = 0.0;
  int iterations = 0;
  int nodes = 0;  // branch-and-bound LP solves; 0 for plain LPs
  bool optimal() const { return status == SolveStatus::optimal; }
};

struct SimplexOptions {
  int refactor_interval = 64;
  int bland_after_degenerate = 50;
  double primal_tol = 1e-9;
  double dual_tol = 1e-9;
  double phase1_tol = 1e-7;
  int max_iterations = 0;  // 0: derived from problem size
};

/// Bounded-variable revised primal simplex. Deterministic for identical input.
/// Throws NumericalError if the basis becomes singular.
Solution solve_lp(const LinearProgram& lp, const SimplexOptions& opt = {});

/// Best-first branch and bound over the one-hot groups.
Solution solve_milp(const MixedProgram& mip, double abs_gap = 1e-9);

/// CPLEX LP text.
std::string export_lp(const LinearProgram& lp);
std::string export_lp(const MixedProgram& mip);

}  // namespace flexmkt::mp
