#pragma once

#include <Eigen/Dense>

namespace cch {

/// Temperature / interpolation-weight pair of the distillation objective.
struct DistillationConfig {
  double temperature = 1.0;  // > 0
  double weight = 0.5;       // in [0, 1]
};

/// Softmax of logits / temperature, computed with max subtraction. Entries
/// sum to one; equal logits give the uniform distribution exactly.
Eigen::VectorXd softened_softmax(const Eigen::VectorXd& logits, double temperature);

/// Classification distillation loss
///   (1 - weight) * CE(label, softmax(student)) +
///   weight * T^2 * KL(softmax(teacher / T) || softmax(student / T)),
/// natural logarithms throughout. The T^2 factor keeps the gradient scale
/// of the two terms comparable as the temperature grows.
double kd_loss(const Eigen::VectorXd& student_logits,
               const Eigen::VectorXd& teacher_logits, int label,
               const DistillationConfig& config);

/// Gradient of kd_loss with respect to the student logits,
///   (1 - weight) (softmax(student) - e_label) +
///   weight * T * (softmax(student / T) - softmax(teacher / T)).
/// Components sum to zero.
Eigen::VectorXd kd_loss_gradient(const Eigen::VectorXd& student_logits,
                                 const Eigen::VectorXd& teacher_logits, int label,
                                 const DistillationConfig& config);

}  // namespace cch
