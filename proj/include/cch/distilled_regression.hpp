#pragma once

#include <Eigen/Dense>
#include <string>

#include "cch/gaussian_model.hpp"

namespace cch {

enum class TeacherSource { population_optimal, empirical_ls, explicit_weights };

/// A fixed linear teacher t(x1) = w1' x1.
struct TeacherWeights {
  Eigen::VectorXd w1;
  TeacherSource source = TeacherSource::explicit_weights;
};

/// Admissibility of a teacher for a model: its projection variance must not
/// exceed the response variance (w1' Sigma11 w1 <= Sigma33) and it must not
/// anti-correlate with the response (w1' Sigma13 >= 0).
struct TeacherAdmissibility {
  double projection_variance = 0.0;  // w1' Sigma11 w1
  double label_alignment = 0.0;      // w1' Sigma13
  bool admissible = false;
};

TeacherAdmissibility teacher_admissibility(const PopulationModel& model,
                                           const TeacherWeights& teacher);

/// Population least-squares teacher w1 = Sigma11^-1 Sigma13. Always
/// admissible; violated invariants indicate a numerical failure and throw.
TeacherWeights fit_teacher_population(const PopulationModel& model);

/// Ordinary least squares of y on x1. Requires n > p and a full-rank design.
TeacherWeights fit_teacher_empirical(const Dataset& data);

/// Convex combination of ground-truth and teacher labels,
///   y_bar = (y + lambda * X1 w1) / (1 + lambda).
/// lambda = 0 returns y bitwise unchanged, so distillation-free paths are
/// exactly the classical ones.
Eigen::VectorXd effective_labels(const Dataset& data, const TeacherWeights& teacher,
                                 double lambda);

enum class FitRegime { least_squares, min_norm };

struct StudentEstimate {
  Eigen::VectorXd w_hat;
  double lambda = 0.0;
  FitRegime regime = FitRegime::least_squares;
};

/// Value of the two-term distillation objective
///   mean((y - w'x2)^2) + lambda * mean((w1'x1 - w'x2)^2).
double distillation_objective(const Dataset& data, const TeacherWeights& teacher,
                              double lambda, const Eigen::VectorXd& w);

/// Least-squares student on the effective labels; requires n > p.
StudentEstimate fit_student_ls(const Dataset& data, const TeacherWeights& teacher,
                               double lambda);

/// Independent assembly of the same minimizer from the two-term normal
/// equations (1 + lambda) X2'X2 w = X2'(y + lambda X1 w1). Cross-check path.
StudentEstimate fit_student_ls_normal_eq(const Dataset& data,
                                         const TeacherWeights& teacher, double lambda);

/// Minimum-norm interpolator of the effective labels; requires n < p.
StudentEstimate fit_student_minnorm(const Dataset& data, const TeacherWeights& teacher,
                                    double lambda);

/// Population excess risk (w_hat - w_star)' Sigma22 (w_hat - w_star).
double excess_risk_population(const StudentEstimate& student,
                              const PopulationModel& model);

/// Held-out excess risk: mean squared prediction error on a test set minus
/// the irreducible noise variance of the model.
double excess_risk_empirical(const StudentEstimate& student, const Dataset& test,
                             const PopulationModel& model);

/// Raw mean squared prediction error on a test set.
double mean_squared_error(const StudentEstimate& student, const Dataset& test);

}  // namespace cch
