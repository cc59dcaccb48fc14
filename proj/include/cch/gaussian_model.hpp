#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <string>

namespace cch {

/// Correlation structure of the three-view Gaussian model. Each coordinate
/// of the teacher view x1 (dimension p) and of the student view x2
/// (dimension p) has unit variance; sigma12, sigma13, sigma23 are the
/// coordinatewise correlations x1-x2, x1-y, x2-y.
struct CorrelationSpec {
  double sigma12 = 0.0;
  double sigma13 = 0.0;
  double sigma23 = 0.0;
  int p = 1;
};

/// Coefficients of the conditional sampling chain
///   y ~ N(0, 1)
///   x2 | y ~ N(sigma23 * y * 1, phi * I)
///   x1 | x2, y ~ N(a * x2 + b * y * 1, v * I)
/// Feasibility of the spec is exactly v > 0 (given |sigma23| < 1).
struct ConditionalCoefficients {
  double phi = 0.0;  // 1 - sigma23^2
  double a = 0.0;
  double b = 0.0;
  double v = 0.0;
};

ConditionalCoefficients conditional_coefficients(const CorrelationSpec& spec);

/// Diagnostic report produced by validate_feasibility. Never throws; the
/// caller decides whether a failed report is fatal.
struct FeasibilityReport {
  double v = 0.0;
  double phi = 0.0;
  bool correlations_in_range = false;
  bool v_positive = false;
  bool joint_psd = false;
  bool feasible = false;
  std::string message;
};

FeasibilityReport validate_feasibility(const CorrelationSpec& spec);

/// Throws FeasibilityError (naming the offending quantities) unless the
/// spec admits a joint Gaussian distribution.
void require_feasible(const CorrelationSpec& spec);

/// Population second moments implied by a feasible spec, plus the derived
/// quantities every downstream formula needs: the population regression
/// vector w_star = Sigma22^-1 Sigma23 and the residual noise variance
/// noise_var = Sigma33 - w_star' Sigma22 w_star.
struct PopulationModel {
  int p = 0;
  Eigen::MatrixXd sigma11;  // p x p
  Eigen::MatrixXd sigma12;  // p x p, E[x1 x2']
  Eigen::MatrixXd sigma22;  // p x p
  Eigen::VectorXd sigma13;  // p, E[x1 y]
  Eigen::VectorXd sigma23;  // p, E[x2 y]
  double sigma33 = 1.0;     // E[y^2]
  Eigen::VectorXd w_star;
  double noise_var = 0.0;
  CorrelationSpec spec;
};

PopulationModel derive_population_model(const CorrelationSpec& spec);

/// Stacks the blocks into the (2p+1) x (2p+1) covariance of (x1, x2, y).
Eigen::MatrixXd assemble_joint_covariance(const PopulationModel& model);

/// A finite sample of the joint distribution. Regeneration with the same
/// spec, n and seed is bit-identical.
struct Dataset {
  Eigen::MatrixXd x1;  // n x p
  Eigen::MatrixXd x2;  // n x p
  Eigen::VectorXd y;   // n
  std::uint64_t seed = 0;
  CorrelationSpec spec;
};

Dataset sample_dataset(const CorrelationSpec& spec, int n, std::uint64_t seed);

/// Returns a copy of the dataset whose teacher view is degraded by additive
/// Gaussian noise: x1 <- x1 + level * s_j * g, where s_j is the sample
/// standard deviation of coordinate j, so the corruption is scale-invariant.
/// level = 0 returns x1 bit-identical. Requires level in [0, 1].
Dataset apply_teacher_noise(const Dataset& data, double level, std::uint64_t seed);

}  // namespace cch
