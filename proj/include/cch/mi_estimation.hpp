#pragma once

#include <Eigen/Dense>
#include <vector>

namespace cch {

/// Digamma function for x > 0; upward recurrence into the asymptotic
/// regime, then the standard series. Absolute error well under 1e-10.
double digamma(double x);

/// Mutual information of a bivariate Gaussian pair with correlation rho,
/// -0.5 * log(1 - rho^2), in nats. |rho| >= 1 is an error (infinite MI).
double gaussian_mi(double rho);

enum class MiEstimator { gaussian_closed_form, ksg, ross };

struct MiEstimate {
  double value = 0.0;
  MiEstimator estimator = MiEstimator::ksg;
  int k = 0;
  int n = 0;
};

/// Neighbor-search backend for the nonparametric estimators. `automatic`
/// uses brute force up to 20000 points and a kd-tree beyond; the two paths
/// produce identical counts, hence identical estimates.
enum class NeighborSearch { automatic, brute_force, kd_tree };

/// Kraskov-Stoegbauer-Grassberger estimator (variant 1) of I(X; Y) between
/// continuous samples, rows paired. Each column is standardized first, so
/// the estimate is invariant under per-coordinate affine maps; ties are
/// broken by a deterministic jitter of amplitude 1e-10 times the column
/// standard deviation. A zero-variance column is an error, as is k >= n.
MiEstimate ksg_mi(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, int k = 3,
                  NeighborSearch search = NeighborSearch::automatic);

MiEstimate ksg_mi(const Eigen::VectorXd& x, const Eigen::VectorXd& y, int k = 3,
                  NeighborSearch search = NeighborSearch::automatic);

/// Ross estimator of I(L; Y) between a discrete label and a continuous
/// sample. Every label class must contain more than k members.
MiEstimate ross_mi(const std::vector<long long>& labels, const Eigen::MatrixXd& y,
                   int k = 3);

MiEstimate ross_mi(const std::vector<long long>& labels, const Eigen::VectorXd& y,
                   int k = 3);

}  // namespace cch
