#pragma once

#include <Eigen/Dense>

#include "cch/errors.hpp"

namespace cch {

/// Solver policy for symmetric positive definite systems: plain Cholesky,
/// one retry with a jitter of 1e-10 * trace(A)/p on the diagonal, then an
/// error. Never a silent pseudo-solve.
inline Eigen::LLT<Eigen::MatrixXd> llt_with_jitter(const Eigen::MatrixXd& a,
                                                   const char* context) {
  Eigen::LLT<Eigen::MatrixXd> llt(a);
  if (llt.info() == Eigen::Success) return llt;
  const double jitter = 1e-10 * a.trace() / static_cast<double>(a.rows());
  Eigen::MatrixXd aj = a;
  aj.diagonal().array() += jitter;
  llt.compute(aj);
  if (llt.info() == Eigen::Success) return llt;
  throw NumericalError(std::string(context) +
                       ": Cholesky factorization failed even after diagonal jitter; "
                       "matrix is not positive definite");
}

inline Eigen::VectorXd solve_spd(const Eigen::MatrixXd& a, const Eigen::VectorXd& b,
                                 const char* context) {
  return llt_with_jitter(a, context).solve(b);
}

inline Eigen::MatrixXd solve_spd(const Eigen::MatrixXd& a, const Eigen::MatrixXd& b,
                                 const char* context) {
  return llt_with_jitter(a, context).solve(b);
}

}  // namespace cch
