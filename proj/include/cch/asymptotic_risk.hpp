#pragma once

#include <Eigen/Dense>
#include <optional>

#include "cch/distilled_regression.hpp"
#include "cch/gaussian_model.hpp"

namespace cch {

/// Inputs of the proportional-asymptotics risk formulas: a population model,
/// an aspect ratio kappa = n / p (fixed as both diverge), a teacher and a
/// distillation weight.
struct AsymptoticContext {
  PopulationModel model;
  double kappa = 2.0;
  TeacherWeights teacher;
  double lambda = 0.0;
};

enum class RiskRegime { under, over };

/// Asymptotic excess risk of the distilled student, decomposed.
/// In the underparameterized regime total = bias_term + variance_term and
/// tau, omega are absent; in the overparameterized regime tau and omega are
/// the effective-regularization root and the variance-inflation factor.
struct RiskBreakdown {
  Eigen::VectorXd w_bar;
  double sigma_bar_sq = 0.0;
  double bias_term = 0.0;
  double variance_term = 0.0;
  double total = 0.0;
  RiskRegime regime = RiskRegime::under;
  std::optional<double> tau;
  std::optional<double> omega;
};

/// Population projection of the effective-label regression,
///   w_bar = Sigma22^-1 (Sigma23 + lambda Sigma12' w1) / (1 + lambda).
Eigen::VectorXd w_bar(const PopulationModel& model, const TeacherWeights& teacher,
                      double lambda);

/// Residual variance of the effective labels around w_bar' x2. Nonnegative
/// for any valid model; a materially negative value raises an error.
double sigma_bar_sq(const PopulationModel& model, const TeacherWeights& teacher,
                    double lambda);

/// Risk formula for kappa > 1 (n exceeds p at the limit).
RiskBreakdown asymptotic_risk_under(const AsymptoticContext& ctx);

/// Risk formula for kappa < 1, built on the effective regularization tau of
/// ridgeless interpolation.
RiskBreakdown asymptotic_risk_over(const AsymptoticContext& ctx);

/// Solves (1/p) tr((Sigma22 + tau I)^-1 Sigma22) = kappa for tau > 0 by
/// bisection; residual below 1e-12. bracket_hi = 0 auto-expands.
double solve_tau(const Eigen::MatrixXd& sigma22, double kappa, double bracket_hi = 0.0);

/// Minimizer of the underparameterized asymptotic risk over teachers, from
/// the stationarity system
///   lambda [S + (Sigma11 - S) / (kappa - 1)] w1
///     = lambda Sigma12 w_star - (Sigma13 - Sigma12 w_star) / (kappa - 1),
/// with S = Sigma12 Sigma22^-1 Sigma12'. Requires kappa > 1 and lambda > 0.
TeacherWeights optimal_teacher_weight(const PopulationModel& model, double kappa,
                                      double lambda);

/// First-order benefit test at lambda -> 0+: distillation lowers the
/// asymptotic risk iff lhs = w1'(Sigma13 - Sigma12 w_star) - noise_var < 0.
/// indeterminate marks the degenerate case of a student view carrying no
/// signal (w_star' Sigma22 w_star = 0), where the criterion is vacuous.
struct SmallLambdaCondition {
  double lhs = 0.0;
  bool beneficial = false;
  bool indeterminate = false;
};

SmallLambdaCondition small_lambda_condition(const PopulationModel& model,
                                            const TeacherWeights& teacher);

/// Population correlations of the three projections: teacher w1'x1,
/// student-optimal w_star'x2 and response y.
struct CchCorrelations {
  double rho_t_s = 0.0;
  double rho_t_y = 0.0;
  double rho_s_y = 0.0;
};

CchCorrelations cch_correlations(const PopulationModel& model,
                                 const TeacherWeights& teacher);

/// Gaussian mutual informations of the same projections and their gap
/// I(t; s) - I(s; y). A positive gap certifies a beneficial teacher at
/// small lambda.
struct CchMiGap {
  double i_ts = 0.0;
  double i_sy = 0.0;
  double gap = 0.0;
};

CchMiGap cch_mi_gap(const PopulationModel& model, const TeacherWeights& teacher);

}  // namespace cch
