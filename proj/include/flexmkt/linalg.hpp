#pragma once

#include <Eigen/Dense>

#include "flexmkt/errors.hpp"

namespace flexmkt::linalg {

/// Raised by DenseLu. `pivot()` is the elimination step (= column) that failed.
class SingularMatrixError : public NumericalError {
 public:
  SingularMatrixError(int pivot, const std::string& what) : NumericalError(what), pivot_(pivot) {}
  int pivot() const { return pivot_; }

 private:
  int pivot_;
};

/// Dense LU with partial pivoting. Unlike Eigen::PartialPivLU it refuses
/// near-singular input and reports the elimination step where the pivot
/// vanished, which callers turn into diagnostics.
class DenseLu {
 public:
  /// Throws SingularMatrixError when a pivot magnitude drops below `pivot_tol`
  /// (relative to the largest entry of the input).
  explicit DenseLu(const Eigen::MatrixXd& a, double pivot_tol = 1e-11);

  Eigen::VectorXd solve(const Eigen::VectorXd& b) const;
  Eigen::MatrixXd inverse() const;
  int size() const { return static_cast<int>(lu_.rows()); }

 private:
  Eigen::MatrixXd lu_;
  Eigen::VectorXi perm_;
};

/// Moore-Penrose pseudo-inverse of a full-row-rank matrix, A^T (A A^T)^-1.
/// Throws ModelError if A A^T is singular.
Eigen::MatrixXd pinv_full_row_rank(const Eigen::MatrixXd& a);

}  // namespace flexmkt::linalg
