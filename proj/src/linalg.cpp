#include "flexmkt/linalg.hpp"

#include <cmath>
#include <string>

#include "flexmkt/errors.hpp"

namespace flexmkt::linalg {

DenseLu::DenseLu(const Eigen::MatrixXd& a, double pivot_tol) : lu_(a) {
  if (a.rows() != a.cols()) throw ContractError("DenseLu: matrix is not square");
  const int n = static_cast<int>(a.rows());
  perm_.resize(n);
  for (int i = 0; i < n; ++i) perm_(i) = i;
  const double scale = n > 0 ? std::max(1.0, a.cwiseAbs().maxCoeff()) : 1.0;

  for (int k = 0; k < n; ++k) {
    int piv = k;
    double best = std::abs(lu_(k, k));
    for (int i = k + 1; i < n; ++i) {
      if (std::abs(lu_(i, k)) > best) {
        best = std::abs(lu_(i, k));
        piv = i;
      }
    }
    if (best < pivot_tol * scale) {
      throw SingularMatrixError(k, "singular matrix: pivot " + std::to_string(k) + " has magnitude " +
                           std::to_string(best));
    }
    if (piv != k) {
      lu_.row(k).swap(lu_.row(piv));
      std::swap(perm_(k), perm_(piv));
    }
    const double inv = 1.0 / lu_(k, k);
    for (int i = k + 1; i < n; ++i) {
      const double f = lu_(i, k) * inv;
      lu_(i, k) = f;
      if (f != 0.0) lu_.row(i).tail(n - k - 1).noalias() -= f * lu_.row(k).tail(n - k - 1);
    }
  }
}

Eigen::VectorXd DenseLu::solve(const Eigen::VectorXd& b) const {
  const int n = size();
  if (b.size() != n) throw ContractError("DenseLu::solve: dimension mismatch");
  Eigen::VectorXd y(n);
  for (int i = 0; i < n; ++i) y(i) = b(perm_(i));
  for (int i = 0; i < n; ++i) {
    double s = y(i);
    for (int j = 0; j < i; ++j) s -= lu_(i, j) * y(j);
    y(i) = s;
  }
  for (int i = n - 1; i >= 0; --i) {
    double s = y(i);
    for (int j = i + 1; j < n; ++j) s -= lu_(i, j) * y(j);
    y(i) = s / lu_(i, i);
  }
  return y;
}

Eigen::MatrixXd DenseLu::inverse() const {
  const int n = size();
  Eigen::MatrixXd inv(n, n);
  Eigen::VectorXd e = Eigen::VectorXd::Zero(n);
  for (int j = 0; j < n; ++j) {
    e.setZero();
    e(j) = 1.0;
    inv.col(j) = solve(e);
  }
  return inv;
}

Eigen::MatrixXd pinv_full_row_rank(const Eigen::MatrixXd& a) {
  try {
    DenseLu gram(a * a.transpose());
    return a.transpose() * gram.inverse();
  } catch (const NumericalError& e) {
    throw ModelError(std::string("matrix is not full row rank (") + e.what() + ")");
  }
}

}  // namespace flexmkt::linalg
