#include "cch/asymptotic_risk.hpp"

#include <cmath>
#include <sstream>

#include "cch/errors.hpp"
#include "cch/linalg.hpp"
#include "cch/mi_estimation.hpp"

namespace cch {

namespace {

void check_teacher_dim(const PopulationModel& model, const TeacherWeights& teacher,
                       const char* op) {
  if (teacher.w1.size() != model.p) {
    std::ostringstream msg;
    msg << op << ": teacher dimension " << teacher.w1.size()
        << " does not match model dimension " << model.p;
    throw InvalidArgumentError(msg.str());
  }
}

// Recurring quadratic forms of the risk formulas. With d = Sigma13 -
// Sigma12 w_star (the component of the teacher-response covariance not
// explained through the student view):
//   cross  = w1' d
//   excess = w1' (Sigma11 - Sigma12 Sigma22^-1 Sigma12') w1
struct TeacherForms {
  double cross = 0.0;
  double excess = 0.0;
  Eigen::VectorXd s22inv_s12t_w1;  // Sigma22^-1 Sigma12' w1
};

TeacherForms teacher_forms(const PopulationModel& model, const TeacherWeights& teacher) {
  TeacherForms f;
  const Eigen::VectorXd s12t_w1 = model.sigma12.transpose() * teacher.w1;
  f.s22inv_s12t_w1 = solve_spd(model.sigma22, s12t_w1, "asymptotic_risk");
  f.cross = teacher.w1.dot(model.sigma13) - s12t_w1.dot(model.w_star);
  f.excess = teacher.w1.dot(model.sigma11 * teacher.w1) - s12t_w1.dot(f.s22inv_s12t_w1);
  return f;
}

}  // namespace

Eigen::VectorXd w_bar(const PopulationModel& model, const TeacherWeights& teacher,
                      double lambda) {
  if (lambda < 0.0) throw InvalidArgumentError("w_bar: lambda must be >= 0");
  check_teacher_dim(model, teacher, "w_bar");
  const Eigen::VectorXd rhs =
      model.sigma23 + lambda * (model.sigma12.transpose() * teacher.w1);
  return solve_spd(model.sigma22, rhs, "w_bar") / (1.0 + lambda);
}

double sigma_bar_sq(const PopulationModel& model, const TeacherWeights& teacher,
                    double lambda) {
  if (lambda < 0.0) throw InvalidArgumentError("sigma_bar_sq: lambda must be >= 0");
  check_teacher_dim(model, teacher, "sigma_bar_sq");
  const double t11 = teacher.w1.dot(model.sigma11 * teacher.w1);
  const double second_moment =
      (model.sigma33 + 2.0 * lambda * teacher.w1.dot(model.sigma13) +
       lambda * lambda * t11) /
      ((1.0 + lambda) * (1.0 + lambda));
  const Eigen::VectorXd wb = w_bar(model, teacher, lambda);
  const double value = second_moment - wb.dot(model.sigma22 * wb);
  if (value < -1e-10 * std::max(1.0, model.sigma33)) {
    std::ostringstream msg;
    msg << "sigma_bar_sq: residual variance came out negative (" << value
        << "); the model covariance is inconsistent";
    throw NumericalError(msg.str());
  }
  return std::max(value, 0.0);
}

RiskBreakdown asymptotic_risk_under(const AsymptoticContext& ctx) {
  if (ctx.kappa <= 1.0) {
    throw InvalidArgumentError("asymptotic_risk_under: requires kappa > 1");
  }
  if (ctx.lambda < 0.0) {
    throw InvalidArgumentError("asymptotic_risk_under: lambda must be >= 0");
  }
  check_teacher_dim(ctx.model, ctx.teacher, "asymptotic_risk_under");
  const PopulationModel& m = ctx.model;
  const double lam = ctx.lambda;
  const TeacherForms f = teacher_forms(m, ctx.teacher);

  RiskBreakdown rb;
  rb.regime = RiskRegime::under;
  rb.w_bar = w_bar(m, ctx.teacher, lam);
  rb.sigma_bar_sq = sigma_bar_sq(m, ctx.teacher, lam);

  // Bias: the population shift of the effective-label regression away from
  // w_star, measured in the Sigma22 metric.
  const Eigen::VectorXd shift = f.s22inv_s12t_w1 - m.w_star;
  const double scale = lam / (1.0 + lam);
  rb.bias_term = scale * scale * shift.dot(m.sigma22 * shift);

  // Variance: sigma_bar^2 / (kappa - 1), expanded in the same three
  // quadratic forms used everywhere else.
  rb.variance_term =
      (m.noise_var + 2.0 * lam * f.cross + lam * lam * f.excess) /
      ((ctx.kappa - 1.0) * (1.0 + lam) * (1.0 + lam));
  rb.total = rb.bias_term + rb.variance_term;
  return rb;
}

double solve_tau(const Eigen::MatrixXd& sigma22, double kappa, double bracket_hi) {
  if (!(kappa > 0.0 && kappa < 1.0)) {
    throw InvalidArgumentError("solve_tau: requires kappa in (0, 1)");
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(sigma22);
  if (es.info() != Eigen::Success) {
    throw NumericalError("solve_tau: eigendecomposition of Sigma22 failed");
  }
  const Eigen::VectorXd d = es.eigenvalues();
  if (d.minCoeff() <= 0.0) {
    throw InvalidArgumentError("solve_tau: Sigma22 must be positive definite");
  }
  const double p = static_cast<double>(d.size());
  const auto trace_fraction = [&](double tau) {
    double s = 0.0;
    for (int i = 0; i < d.size(); ++i) s += d(i) / (d(i) + tau);
    return s / p;
  };
  // trace_fraction decreases from 1 at tau = 0 toward 0, so a root exists
  // for every kappa in (0, 1); expand the bracket until it straddles kappa.
  double lo = 0.0;
  double hi = bracket_hi > 0.0 ? bracket_hi : d.maxCoeff() * (1.0 - kappa) / kappa + 1.0;
  while (trace_fraction(hi) > kappa) hi *= 2.0;
  double mid = 0.5 * (lo + hi);
  for (int iter = 0; iter < 200; ++iter) {
    mid = 0.5 * (lo + hi);
    const double val = trace_fraction(mid);
    if (std::abs(val - kappa) < 1e-13) break;
    if (val > kappa) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  if (std::abs(trace_fraction(mid) - kappa) >= 1e-12) {
    throw NumericalError("solve_tau: bisection failed to reach the residual target");
  }
  return mid;
}

RiskBreakdown asymptotic_risk_over(const AsymptoticContext& ctx) {
  if (!(ctx.kappa > 0.0 && ctx.kappa < 1.0)) {
    throw InvalidArgumentError("asymptotic_risk_over: requires kappa in (0, 1)");
  }
  if (ctx.lambda < 0.0) {
    throw InvalidArgumentError("asymptotic_risk_over: lambda must be >= 0");
  }
  check_teacher_dim(ctx.model, ctx.teacher, "asymptotic_risk_over");
  const PopulationModel& m = ctx.model;

  RiskBreakdown rb;
  rb.regime = RiskRegime::over;
  rb.w_bar = w_bar(m, ctx.teacher, ctx.lambda);
  rb.sigma_bar_sq = sigma_bar_sq(m, ctx.teacher, ctx.lambda);
  const double sigma_sq = m.noise_var;
  if (sigma_sq <= 0.0) {
    throw NumericalError("asymptotic_risk_over: model noise variance must be positive");
  }
  const double ratio = std::sqrt(rb.sigma_bar_sq / sigma_sq);  // sigma_bar / sigma

  const double tau = solve_tau(m.sigma22, ctx.kappa);
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(m.sigma22);
  const Eigen::VectorXd d = es.eigenvalues();
  const Eigen::MatrixXd u = es.eigenvectors();
  const double n_limit = ctx.kappa * static_cast<double>(m.p);
  double omega = 0.0;
  for (int i = 0; i < d.size(); ++i) {
    omega += d(i) * d(i) / ((d(i) + tau) * (d(i) + tau));
  }
  omega /= n_limit;
  if (!(omega > 0.0 && omega < 1.0)) {
    std::ostringstream msg;
    msg << "asymptotic_risk_over: variance-inflation factor omega = " << omega
        << " left (0, 1); the formula has no finite value";
    throw NumericalError(msg.str());
  }
  rb.tau = tau;
  rb.omega = omega;

  // The surrogate regression vector of the interpolator, rescaled so its
  // residual variance matches sigma: w_s = w_bar * sigma / sigma_bar.
  if (!(ratio > 0.0)) {
    throw NumericalError("asymptotic_risk_over: degenerate effective labels");
  }
  const Eigen::VectorXd ws = rb.w_bar / ratio;

  // All four terms are diagonal sums in the Sigma22 eigenbasis.
  const Eigen::VectorXd ws_e = u.transpose() * ws;
  const Eigen::VectorXd wstar_e = u.transpose() * m.w_star;
  const Eigen::VectorXd delta_e = ws_e - wstar_e;
  const double r2 = ratio * ratio;

  double bias_shift = 0.0;     // (sb/s)^2 * delta' S^3 (S + tau)^-2 delta
  double ws_filter = 0.0;      // S (S + tau)^-2 quadratic form of w_s
  double cross_term = 0.0;     // mixed w_star / delta term
  double wstar_term = 0.0;     // pure w_star term
  for (int i = 0; i < d.size(); ++i) {
    const double di = d(i);
    const double g = di + tau;
    bias_shift += di * di * di / (g * g) * delta_e(i) * delta_e(i);
    ws_filter += di / (g * g) * ws_e(i) * ws_e(i);
    const double shrink = g - ratio * di;  // (S + tau I - (sb/s) S) eigenvalue
    cross_term += di * di / (g * g) * shrink * wstar_e(i) * delta_e(i);
    wstar_term += shrink * shrink / (g * g) * di * wstar_e(i) * wstar_e(i);
  }

  const double variance =
      r2 * omega * (sigma_sq + tau * tau * ws_filter) / (1.0 - omega);
  const double bias = r2 * bias_shift - 2.0 * ratio * cross_term + wstar_term;
  rb.variance_term = variance;
  rb.bias_term = bias;
  rb.total = bias + variance;
  return rb;
}

TeacherWeights optimal_teacher_weight(const PopulationModel& model, double kappa,
                                      double lambda) {
  if (kappa <= 1.0) {
    throw InvalidArgumentError("optimal_teacher_weight: requires kappa > 1");
  }
  if (lambda <= 0.0) {
    throw InvalidArgumentError("optimal_teacher_weight: requires lambda > 0");
  }
  const Eigen::MatrixXd s12t = model.sigma12.transpose();
  const Eigen::MatrixXd explained =
      model.sigma12 * solve_spd(model.sigma22, s12t, "optimal_teacher_weight");
  const Eigen::MatrixXd residual = model.sigma11 - explained;
  const Eigen::VectorXd d = model.sigma13 - model.sigma12 * model.w_star;

  const Eigen::MatrixXd lhs = lambda * (explained + residual / (kappa - 1.0));
  const Eigen::VectorXd rhs = lambda * (model.sigma12 * model.w_star) - d / (kappa - 1.0);

  Eigen::LDLT<Eigen::MatrixXd> ldlt(lhs);
  if (ldlt.info() != Eigen::Success) {
    throw NumericalError("optimal_teacher_weight: stationarity system is singular");
  }
  TeacherWeights teacher;
  teacher.source = TeacherSource::population_optimal;
  teacher.w1 = ldlt.solve(rhs);
  return teacher;
}

SmallLambdaCondition small_lambda_condition(const PopulationModel& model,
                                            const TeacherWeights& teacher) {
  check_teacher_dim(model, teacher, "small_lambda_condition");
  SmallLambdaCondition cond;
  const Eigen::VectorXd d = model.sigma13 - model.sigma12 * model.w_star;
  cond.lhs = teacher.w1.dot(d) - model.noise_var;
  cond.beneficial = cond.lhs < 0.0;
  const double student_signal = model.w_star.dot(model.sigma22 * model.w_star);
  cond.indeterminate = student_signal <= 1e-14 * std::max(1.0, model.sigma33);
  return cond;
}

CchCorrelations cch_correlations(const PopulationModel& model,
                                 const TeacherWeights& teacher) {
  check_teacher_dim(model, teacher, "cch_correlations");
  const double teacher_var = teacher.w1.dot(model.sigma11 * teacher.w1);
  const double student_var = model.w_star.dot(model.sigma22 * model.w_star);
  if (!(teacher_var > 0.0)) {
    throw InvalidArgumentError(
        "cch_correlations: teacher projection has zero variance");
  }
  if (!(student_var > 0.0)) {
    throw InvalidArgumentError(
        "cch_correlations: student projection has zero variance; correlations "
        "with the student view are indeterminate");
  }
  const double sd_t = std::sqrt(teacher_var);
  const double sd_s = std::sqrt(student_var);
  const double sd_y = std::sqrt(model.sigma33);
  CchCorrelations rho;
  rho.rho_t_s = teacher.w1.dot(model.sigma12 * model.w_star) / (sd_t * sd_s);
  rho.rho_t_y = teacher.w1.dot(model.sigma13) / (sd_t * sd_y);
  rho.rho_s_y = model.w_star.dot(model.sigma23) / (sd_s * sd_y);
  return rho;
}

CchMiGap cch_mi_gap(const PopulationModel& model, const TeacherWeights& teacher) {
  const CchCorrelations rho = cch_correlations(model, teacher);
  CchMiGap gap;
  gap.i_ts = gaussian_mi(rho.rho_t_s);
  gap.i_sy = gaussian_mi(rho.rho_s_y);
  gap.gap = gap.i_ts - gap.i_sy;
  return gap;
}

}  // namespace cch
