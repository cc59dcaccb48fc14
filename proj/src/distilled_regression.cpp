#include "cch/distilled_regression.hpp"

#include <cmath>
#include <sstream>

#include "cch/errors.hpp"
#include "cch/linalg.hpp"

namespace cch {

namespace {

void check_teacher_shape(const Dataset& data, const TeacherWeights& teacher) {
  if (teacher.w1.size() != data.x1.cols()) {
    std::ostringstream msg;
    msg << "teacher dimension " << teacher.w1.size() << " does not match x1 width "
        << data.x1.cols();
    throw InvalidArgumentError(msg.str());
  }
}

void check_aspect(const Dataset& data, bool want_tall, const char* op) {
  const auto n = data.x2.rows();
  const auto p = data.x2.cols();
  std::ostringstream msg;
  if (n == p) {
    msg << op << ": square design n = p = " << n
        << " is rejected; the interpolation threshold sits between the two regimes";
    throw InvalidArgumentError(msg.str());
  }
  if (want_tall && n < p) {
    msg << op << ": requires n > p, got n = " << n << ", p = " << p
        << " (use the minimum-norm fit)";
    throw InvalidArgumentError(msg.str());
  }
  if (!want_tall && n > p) {
    msg << op << ": requires n < p, got n = " << n << ", p = " << p
        << " (use the least-squares fit)";
    throw InvalidArgumentError(msg.str());
  }
}

}  // namespace

TeacherAdmissibility teacher_admissibility(const PopulationModel& model,
                                           const TeacherWeights& teacher) {
  TeacherAdmissibility adm;
  adm.projection_variance = teacher.w1.dot(model.sigma11 * teacher.w1);
  adm.label_alignment = teacher.w1.dot(model.sigma13);
  const double slack = 1e-9 * std::max(1.0, model.sigma33);
  adm.admissible = adm.projection_variance <= model.sigma33 + slack &&
                   adm.label_alignment >= -slack;
  return adm;
}

TeacherWeights fit_teacher_population(const PopulationModel& model) {
  TeacherWeights teacher;
  teacher.source = TeacherSource::population_optimal;
  teacher.w1 = solve_spd(model.sigma11, model.sigma13, "fit_teacher_population");
  const TeacherAdmissibility adm = teacher_admissibility(model, teacher);
  if (!adm.admissible) {
    std::ostringstream msg;
    msg << "fit_teacher_population: solve produced an inadmissible teacher"
        << " (projection variance " << adm.projection_variance << ", alignment "
        << adm.label_alignment << "); the model matrices are likely corrupt";
    throw NumericalError(msg.str());
  }
  return teacher;
}

TeacherWeights fit_teacher_empirical(const Dataset& data) {
  const auto n = data.x1.rows();
  const auto p = data.x1.cols();
  if (n <= p) {
    std::ostringstream msg;
    msg << "fit_teacher_empirical: requires n > p, got n = " << n << ", p = " << p;
    throw InvalidArgumentError(msg.str());
  }
  const Eigen::MatrixXd gram = data.x1.transpose() * data.x1;
  TeacherWeights teacher;
  teacher.source = TeacherSource::empirical_ls;
  teacher.w1 = solve_spd(gram, (data.x1.transpose() * data.y).eval(),
                         "fit_teacher_empirical");
  return teacher;
}

Eigen::VectorXd effective_labels(const Dataset& data, const TeacherWeights& teacher,
                                 double lambda) {
  if (lambda < 0.0) throw InvalidArgumentError("effective_labels: lambda must be >= 0");
  if (lambda == 0.0) return data.y;  // exact passthrough by contract
  check_teacher_shape(data, teacher);
  return (data.y + lambda * (data.x1 * teacher.w1)) / (1.0 + lambda);
}

double distillation_objective(const Dataset& data, const TeacherWeights& teacher,
                              double lambda, const Eigen::VectorXd& w) {
  check_teacher_shape(data, teacher);
  const Eigen::VectorXd student_pred = data.x2 * w;
  const double fit = (data.y - student_pred).squaredNorm();
  const double match = (data.x1 * teacher.w1 - student_pred).squaredNorm();
  return (fit + lambda * match) / static_cast<double>(data.y.size());
}

StudentEstimate fit_student_ls(const Dataset& data, const TeacherWeights& teacher,
                               double lambda) {
  check_aspect(data, true, "fit_student_ls");
  const Eigen::VectorXd labels = effective_labels(data, teacher, lambda);
  const Eigen::MatrixXd gram = data.x2.transpose() * data.x2;
  StudentEstimate est;
  est.lambda = lambda;
  est.regime = FitRegime::least_squares;
  est.w_hat = solve_spd(gram, (data.x2.transpose() * labels).eval(), "fit_student_ls");
  return est;
}

StudentEstimate fit_student_ls_normal_eq(const Dataset& data,
                                         const TeacherWeights& teacher, double lambda) {
  check_aspect(data, true, "fit_student_ls");
  if (lambda < 0.0) throw InvalidArgumentError("fit_student_ls: lambda must be >= 0");
  check_teacher_shape(data, teacher);
  // Assembles (1 + lambda) X2'X2 w = X2'y + lambda X2'(X1 w1) directly, with
  // none of the intermediates of the effective-label path.
  const Eigen::MatrixXd lhs = (1.0 + lambda) * (data.x2.transpose() * data.x2);
  const Eigen::VectorXd rhs =
      data.x2.transpose() * data.y +
      lambda * (data.x2.transpose() * (data.x1 * teacher.w1));
  StudentEstimate est;
  est.lambda = lambda;
  est.regime = FitRegime::least_squares;
  est.w_hat = solve_spd(lhs, rhs, "fit_student_ls");
  return est;
}

StudentEstimate fit_student_minnorm(const Dataset& data, const TeacherWeights& teacher,
                                    double lambda) {
  check_aspect(data, false, "fit_student_minnorm");
  const Eigen::VectorXd labels = effective_labels(data, teacher, lambda);
  // w = X2'(X2 X2')^-1 y_bar; the n x n kernel Gram is the small matrix here.
  const Eigen::MatrixXd kernel = data.x2 * data.x2.transpose();
  const Eigen::VectorXd alpha = solve_spd(kernel, labels, "fit_student_minnorm");
  StudentEstimate est;
  est.lambda = lambda;
  est.regime = FitRegime::min_norm;
  est.w_hat = data.x2.transpose() * alpha;
  return est;
}

double excess_risk_population(const StudentEstimate& student,
                              const PopulationModel& model) {
  if (student.w_hat.size() != model.p) {
    throw InvalidArgumentError("excess_risk_population: estimate dimension mismatch");
  }
  const Eigen::VectorXd delta = student.w_hat - model.w_star;
  return delta.dot(model.sigma22 * delta);
}

double excess_risk_empirical(const StudentEstimate& student, const Dataset& test,
                             const PopulationModel& model) {
  return mean_squared_error(student, test) - model.noise_var;
}

double mean_squared_error(const StudentEstimate& student, const Dataset& test) {
  if (student.w_hat.size() != test.x2.cols()) {
    throw InvalidArgumentError("mean_squared_error: estimate dimension mismatch");
  }
  return (test.y - test.x2 * student.w_hat).squaredNorm() /
         static_cast<double>(test.y.size());
}

}  // namespace cch
