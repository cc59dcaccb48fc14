#include "cch/kd_losses.hpp"

#include <cmath>
#include <sstream>

#include "cch/errors.hpp"

namespace cch {

namespace {

// Probabilities are floored at 1e-30 inside the logs so that a saturated
// softmax cannot produce infinities; the floor never moves a tested value.
constexpr double kLogFloor = 1e-30;

void check_logits(const Eigen::VectorXd& logits, const char* name) {
  if (logits.size() < 2) {
    std::ostringstream msg;
    msg << name << ": needs at least two classes, got " << logits.size();
    throw InvalidArgumentError(msg.str());
  }
  if (!logits.allFinite()) {
    std::ostringstream msg;
    msg << name << ": logits contain non-finite values";
    throw InvalidArgumentError(msg.str());
  }
}

void check_config(const DistillationConfig& config) {
  if (!(config.temperature > 0.0)) {
    throw InvalidArgumentError("distillation temperature must be positive");
  }
  if (!(config.weight >= 0.0 && config.weight <= 1.0)) {
    throw InvalidArgumentError("distillation weight must lie in [0, 1]");
  }
}

void check_label(const Eigen::VectorXd& logits, int label) {
  if (label < 0 || label >= logits.size()) {
    std::ostringstream msg;
    msg << "label " << label << " out of range for " << logits.size() << " classes";
    throw InvalidArgumentError(msg.str());
  }
}

double safe_log(double p) { return std::log(std::max(p, kLogFloor)); }

}  // namespace

Eigen::VectorXd softened_softmax(const Eigen::VectorXd& logits, double temperature) {
  check_logits(logits, "softened_softmax");
  if (!(temperature > 0.0)) {
    throw InvalidArgumentError("softened_softmax: temperature must be positive");
  }
  const Eigen::ArrayXd scaled = logits.array() / temperature;
  const Eigen::ArrayXd shifted = scaled - scaled.maxCoeff();
  const Eigen::ArrayXd expd = shifted.exp();
  return (expd / expd.sum()).matrix();
}

double kd_loss(const Eigen::VectorXd& student_logits,
               const Eigen::VectorXd& teacher_logits, int label,
               const DistillationConfig& config) {
  check_logits(student_logits, "kd_loss: student");
  check_logits(teacher_logits, "kd_loss: teacher");
  if (student_logits.size() != teacher_logits.size()) {
    throw InvalidArgumentError("kd_loss: student and teacher class counts differ");
  }
  check_config(config);
  check_label(student_logits, label);

  const Eigen::VectorXd p_student = softened_softmax(student_logits, 1.0);
  const double ce = -safe_log(p_student(label));

  const double t = config.temperature;
  const Eigen::VectorXd q_teacher = softened_softmax(teacher_logits, t);
  const Eigen::VectorXd q_student = softened_softmax(student_logits, t);
  double kl = 0.0;
  for (Eigen::Index i = 0; i < q_teacher.size(); ++i) {
    kl += q_teacher(i) * (safe_log(q_teacher(i)) - safe_log(q_student(i)));
  }
  return (1.0 - config.weight) * ce + config.weight * t * t * kl;
}

Eigen::VectorXd kd_loss_gradient(const Eigen::VectorXd& student_logits,
                                 const Eigen::VectorXd& teacher_logits, int label,
                                 const DistillationConfig& config) {
  check_logits(student_logits, "kd_loss_gradient: student");
  check_logits(teacher_logits, "kd_loss_gradient: teacher");
  if (student_logits.size() != teacher_logits.size()) {
    throw InvalidArgumentError(
        "kd_loss_gradient: student and teacher class counts differ");
  }
  check_config(config);
  check_label(student_logits, label);

  const double t = config.temperature;
  Eigen::VectorXd grad =
      (1.0 - config.weight) * softened_softmax(student_logits, 1.0);
  grad(label) -= 1.0 - config.weight;
  grad += config.weight * t *
          (softened_softmax(student_logits, t) - softened_softmax(teacher_logits, t));
  return grad;
}

}  // namespace cch
