#include "cch/validation.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <ostream>
#include <sstream>
#include <vector>

#include "cch/asymptotic_risk.hpp"
#include "cch/distilled_regression.hpp"
#include "cch/gaussian_model.hpp"
#include "cch/kd_losses.hpp"
#include "cch/mi_estimation.hpp"
#include "cch/rng.hpp"
#include "cch/sweep.hpp"

namespace cch {

namespace {

constexpr std::uint64_t kCheckSeedBase = 0x0acc;

double now_seconds() {
  return std::chrono::duration<double>(
             std::chrono::steady_clock::now().time_since_epoch())
      .count();
}

std::string fmt(double v) {
  std::ostringstream out;
  out.precision(6);
  out << v;
  return out.str();
}

// ---------------------------------------------------------------------------
// 1. Sampled covariance against the closed-form blocks.

CheckResult check_covariance_oracle() {
  CheckResult result{"covariance oracle", true, "", 0.0};
  std::ostringstream detail;
  const std::vector<CorrelationSpec> specs = {{0.5, 0.9, 0.4, 2}, {0.3, 0.9, 0.4, 5}};
  const int n = 1000000;
  double worst = 0.0;
  for (std::size_t si = 0; si < specs.size(); ++si) {
    const CorrelationSpec& spec = specs[si];
    const PopulationModel model = derive_population_model(spec);
    const Eigen::MatrixXd target = assemble_joint_covariance(model);
    const Dataset data =
        sample_dataset(spec, n, derive_key({kCheckSeedBase, 1, si}));
    const int d = 2 * spec.p + 1;
    Eigen::VectorXd z(d);
    Eigen::VectorXd mean = Eigen::VectorXd::Zero(d);
    Eigen::MatrixXd second = Eigen::MatrixXd::Zero(d, d);
    for (int i = 0; i < n; ++i) {
      z.head(spec.p) = data.x1.row(i);
      z.segment(spec.p, spec.p) = data.x2.row(i);
      z(d - 1) = data.y(i);
      mean += z;
      second.selfadjointView<Eigen::Lower>().rankUpdate(z);
    }
    mean /= n;
    Eigen::MatrixXd cov = Eigen::MatrixXd(second.selfadjointView<Eigen::Lower>()) / n -
                          mean * mean.transpose();
    const double err = (cov - target).cwiseAbs().maxCoeff();
    worst = std::max(worst, err);
    if (err > 0.01) result.pass = false;
  }
  detail << "max entrywise deviation " << fmt(worst) << " (tolerance 0.01)";
  result.detail = detail.str();
  return result;
}

// ---------------------------------------------------------------------------
// 2. Distillation-free risk against noise_var / (kappa - 1).

CheckResult check_baseline_risk() {
  CheckResult result{"baseline risk", true, "", 0.0};
  const CorrelationSpec spec{0.5, 0.9, 0.4, 100};
  const PopulationModel model = derive_population_model(spec);
  const TeacherWeights teacher = fit_teacher_population(model);
  const int n = 10000;
  const double kappa = static_cast<double>(n) / spec.p;
  const double predicted = model.noise_var / (kappa - 1.0);

  double mean_risk = 0.0;
  const int n_seeds = 10;
  for (int s = 0; s < n_seeds; ++s) {
    const Dataset train = sample_dataset(spec, n, derive_key({kCheckSeedBase, 2, 1u * s}));
    const StudentEstimate student = fit_student_ls(train, teacher, 0.0);
    mean_risk += excess_risk_population(student, model);
  }
  mean_risk /= n_seeds;

  const AsymptoticContext ctx{model, kappa, teacher, 0.0};
  const RiskBreakdown rb = asymptotic_risk_under(ctx);
  const double formula_gap = std::abs(rb.total - predicted) / predicted;
  const double rel = std::abs(mean_risk - predicted) / predicted;
  result.pass = rel <= 0.10 && formula_gap <= 1e-12;
  std::ostringstream detail;
  detail << "mean Monte-Carlo risk " << fmt(mean_risk) << " vs noise_var/(kappa-1) "
         << fmt(predicted) << ", relative gap " << fmt(rel) << " (tolerance 0.10)";
  result.detail = detail.str();
  return result;
}

// ---------------------------------------------------------------------------
// 3. Risk formula against Monte-Carlo across a (sigma12, lambda) grid.

CheckResult check_asymptotic_agreement(int n_seeds) {
  CheckResult result{"asymptotic risk agreement", true, "", 0.0};
  const int n = 10000;
  const int p = 100;
  const double kappa = static_cast<double>(n) / p;
  std::ostringstream detail;
  double worst_ratio = 0.0;
  for (double sigma12 : {0.2, 0.5, 0.7}) {
    for (double lambda : {0.2, 0.5}) {
      const CorrelationSpec spec{sigma12, 0.9, 0.4, p};
      const PopulationModel model = derive_population_model(spec);
      const TeacherWeights teacher = fit_teacher_population(model);
      const AsymptoticContext ctx{model, kappa, teacher, lambda};
      const double predicted = asymptotic_risk_under(ctx).total;

      std::vector<double> risks(n_seeds);
      double mean = 0.0;
      for (int s = 0; s < n_seeds; ++s) {
        const Dataset train = sample_dataset(
            spec, n,
            derive_key({kCheckSeedBase, 3, static_cast<std::uint64_t>(s),
                        static_cast<std::uint64_t>(sigma12 * 100),
                        static_cast<std::uint64_t>(lambda * 100)}));
        const StudentEstimate student = fit_student_ls(train, teacher, lambda);
        risks[s] = excess_risk_population(student, model);
        mean += risks[s];
      }
      mean /= n_seeds;
      double var = 0.0;
      for (double r : risks) var += (r - mean) * (r - mean);
      const double se = std::sqrt(var / (n_seeds - 1.0) / n_seeds);
      const double tolerance = std::max(0.10 * predicted, 3.0 * se);
      const double gap = std::abs(mean - predicted);
      worst_ratio = std::max(worst_ratio, gap / tolerance);
      if (gap > tolerance) {
        result.pass = false;
        detail << "[sigma12=" << sigma12 << " lambda=" << lambda << " gap "
               << fmt(gap) << " > tol " << fmt(tolerance) << "] ";
      }
    }
  }
  detail << "worst gap/tolerance ratio " << fmt(worst_ratio) << " over 6 grid points, "
         << n_seeds << " seeds each";
  result.detail = detail.str();
  return result;
}

// ---------------------------------------------------------------------------
// 4. Benefit-criterion grid: a positive MI gap must certify a beneficial
// teacher, and the analytic slope sign must match finite differences.

struct BenefitGridPoint {
  PopulationModel model;
  TeacherWeights teacher;
  double kappa = 0.0;
};

std::vector<BenefitGridPoint> benefit_grid(int count) {
  RandomStream stream(derive_key({kCheckSeedBase, 4, 20240817}));
  const double kappas[] = {2.0, 10.0, 100.0};
  std::vector<BenefitGridPoint> grid;
  while (static_cast<int>(grid.size()) < count) {
    CorrelationSpec spec;
    spec.sigma12 = 0.05 + 0.85 * stream.next_unit_halfopen();
    spec.sigma13 = 0.05 + 0.85 * stream.next_unit_halfopen();
    spec.sigma23 = 0.15 + 0.70 * stream.next_unit_halfopen();
    spec.p = 2 + static_cast<int>(stream.next_unit_halfopen() * 29.0);
    if (conditional_coefficients(spec).v <= 1e-3) continue;

    BenefitGridPoint point;
    point.model = derive_population_model(spec);
    point.kappa = kappas[(grid.size() / 3) % 3];

    const int variant = static_cast<int>(grid.size()) % 3;
    if (variant == 0) {
      point.teacher = fit_teacher_population(point.model);
    } else if (variant == 1) {
      point.teacher = fit_teacher_population(point.model);
      point.teacher.w1 *= 0.6;
      point.teacher.source = TeacherSource::explicit_weights;
    } else {
      Eigen::VectorXd g(spec.p);
      for (int i = 0; i < spec.p; ++i) g(i) = stream.next_gaussian();
      const double quad = g.dot(point.model.sigma11 * g);
      const double target = (0.1 + 0.8 * stream.next_unit_halfopen()) *
                            point.model.sigma33;
      Eigen::VectorXd w = g * std::sqrt(target / quad);
      if (w.dot(point.model.sigma13) < 0.0) w = -w;
      point.teacher = TeacherWeights{w, TeacherSource::explicit_weights};
    }
    grid.push_back(std::move(point));
  }
  return grid;
}

CheckResult check_benefit_grid() {
  CheckResult result{"mi-gap benefit grid", true, "", 0.0};
  const auto grid = benefit_grid(20);
  int implication_failures = 0;
  int slope_failures = 0;
  double min_abs_lhs = 1e300;
  for (const auto& point : grid) {
    const CchMiGap gap = cch_mi_gap(point.model, point.teacher);
    const SmallLambdaCondition cond = small_lambda_condition(point.model, point.teacher);
    min_abs_lhs = std::min(min_abs_lhs, std::abs(cond.lhs));
    if (gap.gap > 0.0 && !(cond.lhs < 0.0)) ++implication_failures;

    AsymptoticContext ctx{point.model, point.kappa, point.teacher, 0.0};
    const double r0 = asymptotic_risk_under(ctx).total;
    ctx.lambda = 2e-5;
    const double r1 = asymptotic_risk_under(ctx).total;
    const double slope_fd = (r1 - r0) / 2e-5;  // centered at lambda = 1e-5
    if ((slope_fd < 0.0) != (cond.lhs < 0.0)) ++slope_failures;
  }
  result.pass = implication_failures == 0 && slope_failures == 0;
  std::ostringstream detail;
  detail << "20 fixed-seed points: " << implication_failures
         << " implication violations, " << slope_failures
         << " slope sign mismatches, min |lhs| " << fmt(min_abs_lhs);
  result.detail = detail.str();
  return result;
}

// ---------------------------------------------------------------------------
// 5 / 6 / 11. Sweep-level checks.

double mean_column_at(const std::vector<SweepRecord>& records, double grid_value,
                      const std::string& column) {
  double sum = 0.0;
  int count = 0;
  for (const auto& r : records) {
    if (r.grid_value == grid_value) {
      sum += sweep_column_value(r, column);
      ++count;
    }
  }
  return sum / count;
}

std::vector<double> distinct_grid(const std::vector<SweepRecord>& records) {
  std::vector<double> grid;
  for (const auto& r : records) {
    if (grid.empty() || grid.back() != r.grid_value) grid.push_back(r.grid_value);
  }
  return grid;
}

// Midpoints of cells where the curve changes strict sign.
std::vector<double> sign_changes(const std::vector<double>& grid,
                                 const std::vector<double>& values) {
  std::vector<double> crossings;
  for (std::size_t i = 0; i + 1 < values.size(); ++i) {
    if ((values[i] < 0.0 && values[i + 1] > 0.0) ||
        (values[i] > 0.0 && values[i + 1] < 0.0)) {
      crossings.push_back(0.5 * (grid[i] + grid[i + 1]));
    }
  }
  return crossings;
}

CheckResult check_sigma12_sweep(const std::vector<SweepRecord>& records) {
  CheckResult result{"sigma12 sweep", true, "", 0.0};
  std::ostringstream detail;

  const std::vector<double> grid = distinct_grid(records);
  if (records.size() != 80 || grid.size() != 8) {
    result.pass = false;
    detail << "expected 80 records over 8 grid points, got " << records.size()
           << " over " << grid.size() << "; ";
  }
  const std::string csv = records_to_csv(records);
  const long lines = std::count(csv.begin(), csv.end(), '\n');
  if (lines != 81) {
    result.pass = false;
    detail << "CSV line count " << lines << " != 81; ";
  }

  std::vector<double> benefit, gap;
  for (double g : grid) {
    benefit.push_back(mean_column_at(records, g, "mse_no_kd") -
                      mean_column_at(records, g, "mse_kd"));
    gap.push_back(mean_column_at(records, g, "mi_gap"));
  }

  const double benefit_high = benefit.back();
  const double benefit_low = benefit.front();
  if (!(benefit_high > 0.0)) {
    result.pass = false;
    detail << "no distillation benefit at sigma12 = " << grid.back() << "; ";
  }
  if (!(benefit_low <= 0.0)) {
    result.pass = false;
    detail << "unexpected benefit " << fmt(benefit_low) << " at sigma12 = "
           << grid.front() << "; ";
  }

  const std::vector<double> mse_cross = sign_changes(grid, benefit);
  const std::vector<double> gap_cross = sign_changes(grid, gap);
  const double step = grid[1] - grid[0];
  if (gap_cross.size() != 1 || mse_cross.empty()) {
    result.pass = false;
    detail << "expected one crossing per curve, got " << mse_cross.size()
           << " (mse) and " << gap_cross.size() << " (mi gap); ";
  } else {
    double nearest = 1e300;
    for (double c : mse_cross) nearest = std::min(nearest, std::abs(c - gap_cross[0]));
    if (nearest > step + 1e-9) {
      result.pass = false;
      detail << "mse crossing sits " << fmt(nearest) << " from the mi-gap crossing "
             << "(allowed " << fmt(step) << "); ";
    } else {
      detail << "benefit " << fmt(benefit_low) << " at " << grid.front() << ", "
             << fmt(benefit_high) << " at " << grid.back() << "; crossings "
             << fmt(mse_cross[0]) << " (mse) vs " << fmt(gap_cross[0])
             << " (mi gap); ";
    }
  }
  result.detail = detail.str();
  return result;
}

CheckResult check_noise_sweep(int n_threads) {
  CheckResult result{"noise sweep", true, "", 0.0};
  SweepConfig config = default_config(SweepVariable::noise_level);
  config.spec_base.sigma12 = 0.7;
  const std::vector<SweepRecord> records = run_noise_sweep(config, n_threads);

  const std::vector<double> grid = distinct_grid(records);
  std::vector<double> benefit, gap;
  for (double g : grid) {
    benefit.push_back(mean_column_at(records, g, "mse_no_kd") -
                      mean_column_at(records, g, "mse_kd"));
    gap.push_back(mean_column_at(records, g, "mi_gap"));
  }

  // Sign agreement at every grid point, with at most one exception and only
  // next to a crossover of either curve.
  std::vector<std::size_t> disagreements;
  for (std::size_t i = 0; i < grid.size(); ++i) {
    if ((benefit[i] > 0.0) != (gap[i] > 0.0)) disagreements.push_back(i);
  }
  std::ostringstream detail;
  if (disagreements.size() > 1) {
    result.pass = false;
    detail << disagreements.size() << " sign disagreements; ";
  } else if (disagreements.size() == 1) {
    const std::size_t i = disagreements[0];
    const auto near_crossing = [&](const std::vector<double>& curve) {
      for (std::size_t j = 0; j + 1 < curve.size(); ++j) {
        if ((curve[j] > 0.0) != (curve[j + 1] > 0.0)) {
          if (i == j || i == j + 1) return true;
        }
      }
      return false;
    };
    if (!near_crossing(benefit) && !near_crossing(gap)) {
      result.pass = false;
      detail << "sign disagreement at noise level " << grid[i]
             << " away from any crossover; ";
    }
  }
  detail << "benefit range [" << fmt(*std::min_element(benefit.begin(), benefit.end()))
         << ", " << fmt(*std::max_element(benefit.begin(), benefit.end()))
         << "], mi gap range [" << fmt(gap.back()) << ", " << fmt(gap.front())
         << "], " << disagreements.size() << " disagreement(s)";
  result.detail = detail.str();
  return result;
}

CheckResult check_determinism(const std::string& reference_csv,
                              const SweepConfig& config) {
  CheckResult result{"determinism", true, "", 0.0};
  const std::vector<SweepRecord> rerun = run_sweep(config, 1);
  const std::string csv = records_to_csv(rerun);
  result.pass = csv == reference_csv;
  result.detail = result.pass
                      ? "single-thread rerun reproduced the multi-thread CSV byte for byte"
                      : "CSV bytes differ between thread counts";
  return result;
}

// ---------------------------------------------------------------------------
// 7. Optimal teacher identities.

CheckResult check_optimal_teacher() {
  CheckResult result{"optimal teacher", true, "", 0.0};
  std::ostringstream detail;

  // Conditional-independence instance: sigma13 = sigma12 * sigma23 makes the
  // optimizer lambda-free with a closed form.
  {
    const CorrelationSpec spec{0.6, 0.3, 0.5, 50};
    const PopulationModel model = derive_population_model(spec);
    const double kappa = 40.0;
    const TeacherWeights w_a = optimal_teacher_weight(model, kappa, 0.1);
    const TeacherWeights w_b = optimal_teacher_weight(model, kappa, 0.5);
    const TeacherWeights w_c = optimal_teacher_weight(model, kappa, 2.0);
    const double spread = std::max((w_a.w1 - w_b.w1).cwiseAbs().maxCoeff(),
                                   (w_b.w1 - w_c.w1).cwiseAbs().maxCoeff());

    const Eigen::MatrixXd s22inv_s12t =
        model.sigma22.llt().solve(model.sigma12.transpose());
    const Eigen::MatrixXd explained = model.sigma12 * s22inv_s12t;
    const Eigen::VectorXd closed =
        (kappa - 1.0) *
        (model.sigma11 + (kappa - 2.0) * explained)
            .llt()
            .solve((model.sigma12 * model.w_star).eval());
    const double closed_gap = (w_b.w1 - closed).cwiseAbs().maxCoeff();
    if (spread > 1e-8 || closed_gap > 1e-8) {
      result.pass = false;
      detail << "CI case: lambda spread " << fmt(spread) << ", closed-form gap "
             << fmt(closed_gap) << " (tolerance 1e-8); ";
    } else {
      detail << "CI lambda spread " << fmt(spread) << ", closed-form gap "
             << fmt(closed_gap) << "; ";
    }
  }

  // General instance: the returned teacher must be a stationary point of the
  // risk in every coordinate.
  {
    const CorrelationSpec spec{0.5, 0.9, 0.4, 20};
    const PopulationModel model = derive_population_model(spec);
    const double kappa = 50.0;
    const double lambda = 0.5;
    const TeacherWeights opt = optimal_teacher_weight(model, kappa, lambda);
    const double h = 1e-5;
    double grad_max = 0.0;
    for (int j = 0; j < spec.p; ++j) {
      TeacherWeights plus = opt, minus = opt;
      plus.w1(j) += h;
      minus.w1(j) -= h;
      const AsymptoticContext cp{model, kappa, plus, lambda};
      const AsymptoticContext cm{model, kappa, minus, lambda};
      const double grad = (asymptotic_risk_under(cp).total -
                           asymptotic_risk_under(cm).total) /
                          (2.0 * h);
      grad_max = std::max(grad_max, std::abs(grad));
    }
    if (grad_max > 1e-6) {
      result.pass = false;
      detail << "stationarity violated: FD gradient max " << fmt(grad_max)
             << " > 1e-6; ";
    } else {
      detail << "FD gradient max " << fmt(grad_max) << "; ";
    }
  }

  // Degenerate instance: no teacher-side correlation leaves nothing to teach.
  {
    const CorrelationSpec spec{0.0, 0.0, 0.5, 10};
    const PopulationModel model = derive_population_model(spec);
    const TeacherWeights opt = optimal_teacher_weight(model, 5.0, 0.7);
    const double norm = opt.w1.cwiseAbs().maxCoeff();
    if (norm > 1e-12) {
      result.pass = false;
      detail << "uninformative views produced nonzero teacher " << fmt(norm);
    } else {
      detail << "uninformative views give the zero teacher";
    }
  }
  result.detail = detail.str();
  return result;
}

// ---------------------------------------------------------------------------
// 8. Overparameterized regime.

CheckResult check_overparameterized(int n_seeds) {
  CheckResult result{"overparameterized risk", true, "", 0.0};
  std::ostringstream detail;

  const double tau = solve_tau(Eigen::MatrixXd::Identity(400, 400), 0.5);
  if (std::abs(tau - 1.0) > 1e-10) {
    result.pass = false;
    detail << "isotropic tau " << fmt(tau) << " != 1 beyond 1e-10; ";
  }

  // Pure interpolation of noise: kappa = 0.5, isotropic student view with no
  // signal, lambda = 0.
  {
    const CorrelationSpec spec{0.0, 0.0, 0.0, 400};
    const PopulationModel model = derive_population_model(spec);
    const TeacherWeights teacher{Eigen::VectorXd::Zero(400),
                                 TeacherSource::explicit_weights};
    const AsymptoticContext ctx{model, 0.5, teacher, 0.0};
    const RiskBreakdown rb = asymptotic_risk_over(ctx);
    double mc = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
      const Dataset train = sample_dataset(spec, 200, derive_key({kCheckSeedBase, 8, 1u * s}));
      const StudentEstimate student = fit_student_minnorm(train, teacher, 0.0);
      mc += excess_risk_population(student, model);
    }
    mc /= n_seeds;
    const double rel = std::abs(mc - rb.total) / rb.total;
    if (rel > 0.10) {
      result.pass = false;
      detail << "noise-only case: MC " << fmt(mc) << " vs formula " << fmt(rb.total)
             << ", rel " << fmt(rel) << " > 0.10; ";
    } else {
      detail << "noise-only rel gap " << fmt(rel) << " (omega " << fmt(*rb.omega)
             << "); ";
    }
  }

  // Isotropic student view with distillation active.
  {
    const CorrelationSpec spec{0.5, 0.5, 0.0, 400};
    const PopulationModel model = derive_population_model(spec);
    const TeacherWeights teacher = fit_teacher_population(model);
    const double lambda = 0.3;
    const AsymptoticContext ctx{model, 0.5, teacher, lambda};
    const RiskBreakdown rb = asymptotic_risk_over(ctx);
    double mc = 0.0;
    for (int s = 0; s < n_seeds; ++s) {
      const Dataset train = sample_dataset(spec, 200, derive_key({kCheckSeedBase, 8, 100u + s}));
      const StudentEstimate student = fit_student_minnorm(train, teacher, lambda);
      mc += excess_risk_population(student, model);
    }
    mc /= n_seeds;
    const double rel = std::abs(mc - rb.total) / rb.total;
    if (rel > 0.10) {
      result.pass = false;
      detail << "distilled case: MC " << fmt(mc) << " vs formula " << fmt(rb.total)
             << ", rel " << fmt(rel) << " > 0.10";
    } else {
      detail << "distilled rel gap " << fmt(rel) << " (tau " << fmt(*rb.tau) << ")";
    }
  }
  result.detail = detail.str();
  return result;
}

// ---------------------------------------------------------------------------
// 9. Nonparametric MI estimators.

CheckResult check_nonparametric_mi() {
  CheckResult result{"nonparametric mi", true, "", 0.0};
  std::ostringstream detail;
  const int n = 5000;
  const int k = 3;
  double worst_bias = 0.0;
  for (double rho : {0.2, 0.4, 0.6, 0.8}) {
    const double truth = gaussian_mi(rho);
    double mean = 0.0;
    for (int s = 0; s < 10; ++s) {
      RandomStream stream(
          derive_key({kCheckSeedBase, 9, static_cast<std::uint64_t>(rho * 10),
                      static_cast<std::uint64_t>(s)}));
      Eigen::VectorXd x(n), y(n);
      for (int i = 0; i < n; ++i) {
        const double g1 = stream.next_gaussian();
        const double g2 = stream.next_gaussian();
        x(i) = g1;
        y(i) = rho * g1 + std::sqrt(1.0 - rho * rho) * g2;
      }
      mean += ksg_mi(x, y, k).value;
    }
    mean /= 10.0;
    const double bias = std::abs(mean - truth);
    worst_bias = std::max(worst_bias, bias);
    if (bias > 0.02) {
      result.pass = false;
      detail << "KSG mean off by " << fmt(bias) << " at rho " << rho << "; ";
    }
  }
  detail << "KSG worst mean bias " << fmt(worst_bias) << " (tolerance 0.02); ";

  // Independent pair: one fixed draw must stay inside 0.03.
  {
    RandomStream stream(derive_key({kCheckSeedBase, 9, 777}));
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) x(i) = stream.next_gaussian();
    for (int i = 0; i < n; ++i) y(i) = stream.next_gaussian();
    const double est = ksg_mi(x, y, k).value;
    if (std::abs(est) >= 0.03) {
      result.pass = false;
      detail << "KSG independence estimate " << fmt(est) << " >= 0.03; ";
    } else {
      detail << "KSG independence " << fmt(est) << "; ";
    }
  }

  // Ross: separated two-class mixture carries exactly ln 2 nats.
  {
    const int m = 4000;
    RandomStream stream(derive_key({kCheckSeedBase, 9, 778}));
    std::vector<long long> labels(m);
    Eigen::VectorXd y(m);
    for (int i = 0; i < m; ++i) {
      labels[i] = i % 2;
      y(i) = stream.next_gaussian() + 10.0 * labels[i];
    }
    const double est = ross_mi(labels, y, k).value;
    const double gap = std::abs(est - std::log(2.0));
    if (gap > 0.05) {
      result.pass = false;
      detail << "Ross separated-class estimate off by " << fmt(gap) << "; ";
    } else {
      detail << "Ross ln2 gap " << fmt(gap) << "; ";
    }

    for (int i = 0; i < m; ++i) y(i) = stream.next_gaussian();
    const double indep = ross_mi(labels, y, k).value;
    if (std::abs(indep) >= 0.03) {
      result.pass = false;
      detail << "Ross independence estimate " << fmt(indep) << " >= 0.03";
    } else {
      detail << "Ross independence " << fmt(indep);
    }
  }
  result.detail = detail.str();
  return result;
}

// ---------------------------------------------------------------------------
// 10. Distillation loss gradient.

CheckResult check_loss_gradient() {
  CheckResult result{"distillation loss gradient", true, "", 0.0};
  std::ostringstream detail;
  RandomStream stream(derive_key({kCheckSeedBase, 10}));
  double worst_rel = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const int classes = 2 + static_cast<int>(stream.next_unit_halfopen() * 9.0);
    Eigen::VectorXd student(classes), teacher(classes);
    for (int i = 0; i < classes; ++i) student(i) = 3.0 * stream.next_gaussian();
    for (int i = 0; i < classes; ++i) teacher(i) = 3.0 * stream.next_gaussian();
    DistillationConfig config;
    config.temperature = 0.5 + 4.5 * stream.next_unit_halfopen();
    config.weight = stream.next_unit_halfopen();
    const int label = static_cast<int>(stream.next_unit_halfopen() * classes);

    const Eigen::VectorXd analytic = kd_loss_gradient(student, teacher, label, config);
    Eigen::VectorXd fd(classes);
    const double h = 1e-6;
    for (int j = 0; j < classes; ++j) {
      Eigen::VectorXd plus = student, minus = student;
      plus(j) += h;
      minus(j) -= h;
      fd(j) = (kd_loss(plus, teacher, label, config) -
               kd_loss(minus, teacher, label, config)) /
              (2.0 * h);
    }
    const double rel = (fd - analytic).cwiseAbs().maxCoeff() /
                       std::max(analytic.cwiseAbs().maxCoeff(), 1e-8);
    worst_rel = std::max(worst_rel, rel);
  }
  if (worst_rel > 1e-5) result.pass = false;
  detail << "worst FD relative error " << fmt(worst_rel) << " over 100 trials; ";

  // Identities: matched logits at weight 1 give zero loss and gradient, and
  // every gradient sums to zero.
  {
    Eigen::VectorXd logits(4);
    logits << 1.0, -2.0, 0.5, 3.0;
    const DistillationConfig config{2.5, 1.0};
    const double loss = kd_loss(logits, logits, 2, config);
    const Eigen::VectorXd grad = kd_loss_gradient(logits, logits, 2, config);
    RandomStream gs(derive_key({kCheckSeedBase, 10, 1}));
    double worst_sum = 0.0;
    for (int trial = 0; trial < 20; ++trial) {
      Eigen::VectorXd s(5), t(5);
      for (int i = 0; i < 5; ++i) s(i) = 2.0 * gs.next_gaussian();
      for (int i = 0; i < 5; ++i) t(i) = 2.0 * gs.next_gaussian();
      const DistillationConfig c{1.7, 0.4};
      worst_sum = std::max(worst_sum,
                           std::abs(kd_loss_gradient(s, t, 0, c).sum()));
    }
    if (std::abs(loss) > 1e-10 || grad.cwiseAbs().maxCoeff() > 1e-10 ||
        worst_sum > 1e-10) {
      result.pass = false;
      detail << "identity violations: matched loss " << fmt(std::abs(loss))
             << ", matched gradient " << fmt(grad.cwiseAbs().maxCoeff())
             << ", gradient sum " << fmt(worst_sum);
    } else {
      detail << "matched-logit and zero-sum identities hold to 1e-10";
    }
  }
  result.detail = detail.str();
  return result;
}

template <typename Fn>
CheckResult timed(Fn&& fn, double budget_seconds, std::ostream* progress) {
  const double start = now_seconds();
  CheckResult result = fn();
  result.seconds = now_seconds() - start;
  if (budget_seconds > 0.0 && result.seconds > budget_seconds) {
    result.pass = false;
    result.detail += " [exceeded " + fmt(budget_seconds) + "s budget at " +
                     fmt(result.seconds) + "s]";
  }
  if (progress) {
    *progress << (result.pass ? "PASS" : "FAIL") << "  " << result.name << " ("
              << fmt(result.seconds) << "s): " << result.detail << "\n"
              << std::flush;
  }
  return result;
}

}  // namespace

std::vector<CheckResult> run_acceptance_checks(std::ostream* progress) {
  std::vector<CheckResult> results;
  results.push_back(timed(check_covariance_oracle, 60.0, progress));
  results.push_back(timed(check_baseline_risk, 120.0, progress));
  results.push_back(
      timed([] { return check_asymptotic_agreement(20); }, 600.0, progress));
  results.push_back(timed(check_benefit_grid, 0.0, progress));

  const SweepConfig fig_config = default_config(SweepVariable::sigma12);
  std::vector<SweepRecord> fig_records;
  results.push_back(timed(
      [&] {
        fig_records = run_sigma12_sweep(fig_config, 4);
        return check_sigma12_sweep(fig_records);
      },
      900.0, progress));
  results.push_back(timed([] { return check_noise_sweep(4); }, 600.0, progress));
  results.push_back(timed(check_optimal_teacher, 0.0, progress));
  results.push_back(timed([] { return check_overparameterized(20); }, 0.0, progress));
  results.push_back(timed(check_nonparametric_mi, 0.0, progress));
  results.push_back(timed(check_loss_gradient, 0.0, progress));
  results.push_back(timed(
      [&] {
        return check_determinism(records_to_csv(fig_records), fig_config);
      },
      0.0, progress));
  return results;
}

std::vector<CheckResult> run_validation_checks(bool quick, std::ostream* progress) {
  std::vector<CheckResult> results;
  results.push_back(timed(check_baseline_risk, 0.0, progress));
  results.push_back(timed(
      [&] { return check_asymptotic_agreement(quick ? 5 : 20); }, 0.0, progress));
  results.push_back(timed(check_benefit_grid, 0.0, progress));
  results.push_back(timed(check_optimal_teacher, 0.0, progress));
  if (!quick) {
    results.push_back(
        timed([] { return check_overparameterized(20); }, 0.0, progress));
  }
  return results;
}

bool all_passed(const std::vector<CheckResult>& results) {
  for (const auto& r : results) {
    if (!r.pass) return false;
  }
  return true;
}

}  // namespace cch
