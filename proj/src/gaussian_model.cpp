#include "cch/gaussian_model.hpp"

#include <cmath>
#include <sstream>

#include "cch/errors.hpp"
#include "cch/linalg.hpp"
#include "cch/rng.hpp"

namespace cch {

namespace {

bool correlations_in_open_unit_interval(const CorrelationSpec& spec) {
  return std::abs(spec.sigma12) < 1.0 && std::abs(spec.sigma13) < 1.0 &&
         std::abs(spec.sigma23) < 1.0;
}

// Covariance blocks implied by the correlation triple. Each p x p block is
// alpha * I + beta * J with J the all-ones matrix; the scalars follow from
// integrating out the conditional sampling chain:
//   Sigma11 = (1 - sigma13^2) I + sigma13^2 J
//   Sigma12 = (sigma12 - sigma13 sigma23) I + sigma13 sigma23 J
//   Sigma22 = (1 - sigma23^2) I + sigma23^2 J
// Computable for any triple; positive semidefinite exactly when the spec is
// feasible.
struct Blocks {
  Eigen::MatrixXd s11, s12, s22;
  Eigen::VectorXd s13, s23;
};

Blocks implied_blocks(const CorrelationSpec& spec) {
  const int p = spec.p;
  const Eigen::MatrixXd eye = Eigen::MatrixXd::Identity(p, p);
  const Eigen::MatrixXd ones = Eigen::MatrixXd::Ones(p, p);
  Blocks b;
  b.s11 = (1.0 - spec.sigma13 * spec.sigma13) * eye + spec.sigma13 * spec.sigma13 * ones;
  b.s12 = (spec.sigma12 - spec.sigma13 * spec.sigma23) * eye +
          spec.sigma13 * spec.sigma23 * ones;
  b.s22 = (1.0 - spec.sigma23 * spec.sigma23) * eye + spec.sigma23 * spec.sigma23 * ones;
  b.s13 = Eigen::VectorXd::Constant(p, spec.sigma13);
  b.s23 = Eigen::VectorXd::Constant(p, spec.sigma23);
  return b;
}

Eigen::MatrixXd assemble_joint(const Blocks& b, int p) {
  Eigen::MatrixXd joint(2 * p + 1, 2 * p + 1);
  joint.topLeftCorner(p, p) = b.s11;
  joint.block(0, p, p, p) = b.s12;
  joint.block(p, 0, p, p) = b.s12.transpose();
  joint.block(p, p, p, p) = b.s22;
  joint.block(0, 2 * p, p, 1) = b.s13;
  joint.block(2 * p, 0, 1, p) = b.s13.transpose();
  joint.block(p, 2 * p, p, 1) = b.s23;
  joint.block(2 * p, p, 1, p) = b.s23.transpose();
  joint(2 * p, 2 * p) = 1.0;
  return joint;
}

}  // namespace

ConditionalCoefficients conditional_coefficients(const CorrelationSpec& spec) {
  ConditionalCoefficients c;
  c.phi = 1.0 - spec.sigma23 * spec.sigma23;
  if (c.phi <= 0.0) {
    c.a = c.b = 0.0;
    c.v = -1.0;
    return c;
  }
  c.a = (spec.sigma12 - spec.sigma13 * spec.sigma23) / c.phi;
  c.b = (spec.sigma13 - spec.sigma12 * spec.sigma23) / c.phi;
  // Unit variance of each x1 coordinate forces a^2 + b^2 + 2ab sigma23 + v = 1.
  c.v = 1.0 - (spec.sigma12 * spec.sigma12 + spec.sigma13 * spec.sigma13 -
               2.0 * spec.sigma12 * spec.sigma13 * spec.sigma23) /
                  c.phi;
  return c;
}

FeasibilityReport validate_feasibility(const CorrelationSpec& spec) {
  FeasibilityReport report;
  std::ostringstream msg;
  if (spec.p < 1) {
    report.message = "dimension p must be a positive integer";
    return report;
  }
  report.correlations_in_range = correlations_in_open_unit_interval(spec);
  const ConditionalCoefficients c = conditional_coefficients(spec);
  report.phi = c.phi;
  report.v = c.v;
  report.v_positive = report.correlations_in_range && c.v > 0.0;

  // Independent confirmation: Cholesky of the assembled joint covariance,
  // under the standard jitter retry policy. Must agree with the v > 0 test.
  const Blocks blocks = implied_blocks(spec);
  const Eigen::MatrixXd joint = assemble_joint(blocks, spec.p);
  Eigen::LLT<Eigen::MatrixXd> llt(joint);
  if (llt.info() != Eigen::Success) {
    Eigen::MatrixXd jj = joint;
    jj.diagonal().array() += 1e-10 * joint.trace() / static_cast<double>(joint.rows());
    llt.compute(jj);
  }
  report.joint_psd = llt.info() == Eigen::Success;

  report.feasible = report.correlations_in_range && report.v_positive;
  if (report.feasible) {
    msg << "feasible: residual teacher variance v = " << report.v
        << ", student conditional variance phi = " << report.phi;
  } else if (!report.correlations_in_range) {
    msg << "infeasible: correlations must lie strictly inside (-1, 1), got"
        << " sigma12 = " << spec.sigma12 << ", sigma13 = " << spec.sigma13
        << ", sigma23 = " << spec.sigma23;
  } else {
    msg << "infeasible: residual teacher variance v = " << report.v
        << " is not positive for sigma12 = " << spec.sigma12
        << ", sigma13 = " << spec.sigma13 << ", sigma23 = " << spec.sigma23;
  }
  report.message = msg.str();
  return report;
}

void require_feasible(const CorrelationSpec& spec) {
  const FeasibilityReport report = validate_feasibility(spec);
  if (!report.feasible) throw FeasibilityError(report.message);
}

PopulationModel derive_population_model(const CorrelationSpec& spec) {
  require_feasible(spec);
  const Blocks blocks = implied_blocks(spec);
  PopulationModel model;
  model.p = spec.p;
  model.sigma11 = blocks.s11;
  model.sigma12 = blocks.s12;
  model.sigma22 = blocks.s22;
  model.sigma13 = blocks.s13;
  model.sigma23 = blocks.s23;
  model.sigma33 = 1.0;
  model.spec = spec;
  model.w_star = solve_spd(model.sigma22, model.sigma23, "derive_population_model");
  model.noise_var = model.sigma33 - model.w_star.dot(model.sigma22 * model.w_star);
  return model;
}

Eigen::MatrixXd assemble_joint_covariance(const PopulationModel& model) {
  Blocks b{model.sigma11, model.sigma12, model.sigma22, model.sigma13, model.sigma23};
  return assemble_joint(b, model.p);
}

Dataset sample_dataset(const CorrelationSpec& spec, int n, std::uint64_t seed) {
  require_feasible(spec);
  if (n < 1) throw InvalidArgumentError("sample_dataset: n must be positive");
  const ConditionalCoefficients c = conditional_coefficients(spec);
  const double sd_x2 = std::sqrt(c.phi);
  const double sd_x1 = std::sqrt(c.v);
  const int p = spec.p;

  Dataset data;
  data.seed = seed;
  data.spec = spec;
  data.y.resize(n);
  data.x1.resize(n, p);
  data.x2.resize(n, p);

  // One stream per stage. Fill order (rows, then columns within a row) is
  // part of the regeneration contract.
  RandomStream sy = RandomStream::from_ids({seed, stream_tag::labels});
  RandomStream sx2 = RandomStream::from_ids({seed, stream_tag::student_noise});
  RandomStream sx1 = RandomStream::from_ids({seed, stream_tag::teacher_noise});

  for (int i = 0; i < n; ++i) data.y(i) = sy.next_gaussian();
  for (int i = 0; i < n; ++i) {
    const double mean = spec.sigma23 * data.y(i);
    for (int j = 0; j < p; ++j) data.x2(i, j) = mean + sd_x2 * sx2.next_gaussian();
  }
  for (int i = 0; i < n; ++i) {
    const double drift = c.b * data.y(i);
    for (int j = 0; j < p; ++j) {
      data.x1(i, j) = c.a * data.x2(i, j) + drift + sd_x1 * sx1.next_gaussian();
    }
  }
  return data;
}

Dataset apply_teacher_noise(const Dataset& data, double level, std::uint64_t seed) {
  if (!(level >= 0.0 && level <= 1.0)) {
    throw InvalidArgumentError("apply_teacher_noise: level must lie in [0, 1]");
  }
  Dataset out = data;
  if (level == 0.0) return out;  // bit-identical by contract
  RandomStream stream = RandomStream::from_ids({seed, stream_tag::injected_noise});
  const int n = static_cast<int>(out.x1.rows());
  const int p = static_cast<int>(out.x1.cols());
  // The noise standard deviation is level times the per-coordinate sample
  // std, so the corruption is invariant under rescaling a coordinate.
  Eigen::VectorXd sd(p);
  for (int j = 0; j < p; ++j) {
    const double mean = out.x1.col(j).mean();
    sd(j) = std::sqrt((out.x1.col(j).array() - mean).square().sum() / n);
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < p; ++j) out.x1(i, j) += level * sd(j) * stream.next_gaussian();
  }
  return out;
}

}  // namespace cch
