#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>

#include "cch/errors.hpp"
#include "cch/kd_losses.hpp"
#include "cch/rng.hpp"

using namespace cch;

namespace {

Eigen::VectorXd random_logits(int k, RandomStream& rng) {
  Eigen::VectorXd v(k);
  for (int i = 0; i < k; ++i) v(i) = 4.0 * rng.next_gaussian();
  return v;
}

// Scalar reference softmax, written without shared code.
Eigen::VectorXd naive_softmax(const Eigen::VectorXd& logits, double t) {
  Eigen::VectorXd out(logits.size());
  double z = 0.0;
  for (int i = 0; i < logits.size(); ++i) z += std::exp(logits(i) / t);
  for (int i = 0; i < logits.size(); ++i) out(i) = std::exp(logits(i) / t) / z;
  return out;
}

}  // namespace

TEST_CASE("softened softmax is a probability vector") {
  RandomStream rng(4040);
  for (int t = 0; t < 50; ++t) {
    const Eigen::VectorXd logits = random_logits(5, rng);
    const double temp = 0.2 + 5.0 * rng.next_unit_halfopen();
    const Eigen::VectorXd p = softened_softmax(logits, temp);
    CHECK(p.minCoeff() > 0.0);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));
    CHECK((p - naive_softmax(logits, temp)).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("equal logits give the exact uniform distribution") {
  const Eigen::VectorXd zeros = Eigen::VectorXd::Zero(4);
  const Eigen::VectorXd p = softened_softmax(zeros, 1.0);
  for (int i = 0; i < 4; ++i) CHECK(p(i) == 0.25);
}

TEST_CASE("extreme temperature flattens any logits") {
  Eigen::VectorXd logits(3);
  logits << 3.0, -1.0, 2.0;
  const Eigen::VectorXd p = softened_softmax(logits, 1e6);
  CHECK((p - Eigen::VectorXd::Constant(3, 1.0 / 3.0)).cwiseAbs().maxCoeff() < 1e-4);
}

TEST_CASE("softmax rejects malformed inputs") {
  Eigen::VectorXd one(1);
  one << 1.0;
  CHECK_THROWS_AS(softened_softmax(one, 1.0), InvalidArgumentError);
  Eigen::VectorXd two(2);
  two << 1.0, 2.0;
  CHECK_THROWS_AS(softened_softmax(two, 0.0), InvalidArgumentError);
  CHECK_THROWS_AS(softened_softmax(two, -1.0), InvalidArgumentError);
  two(0) = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(softened_softmax(two, 1.0), InvalidArgumentError);
}

TEST_CASE("distillation loss reproduces an independent scalar computation") {
  Eigen::VectorXd student(3), teacher(3);
  student << 1.0, 2.0, 0.0;
  teacher << 2.0, 1.0, 0.0;
  const int label = 1;
  const DistillationConfig config{3.0, 0.5};

  // Reference computation with bare scalars.
  const Eigen::VectorXd p1 = naive_softmax(student, 1.0);
  const double ce = -std::log(p1(label));
  const Eigen::VectorXd pt = naive_softmax(teacher, 3.0);
  const Eigen::VectorXd ps = naive_softmax(student, 3.0);
  double kl = 0.0;
  for (int i = 0; i < 3; ++i) kl += pt(i) * std::log(pt(i) / ps(i));
  const double expected = 0.5 * ce + 0.5 * 9.0 * kl;

  CHECK(kd_loss(student, teacher, label, config) ==
        doctest::Approx(expected).epsilon(1e-12));
}

TEST_CASE("weight endpoints isolate the two terms") {
  RandomStream rng(5050);
  const Eigen::VectorXd student = random_logits(6, rng);
  const Eigen::VectorXd teacher = random_logits(6, rng);

  SUBCASE("weight 0 is the plain cross entropy") {
    const double loss = kd_loss(student, teacher, 2, {2.5, 0.0});
    const double ce = -std::log(naive_softmax(student, 1.0)(2));
    CHECK(loss == doctest::Approx(ce).epsilon(1e-12));
  }
  SUBCASE("weight 1 scales the divergence by the squared temperature") {
    const double t = 3.0;
    const Eigen::VectorXd pt = naive_softmax(teacher, t);
    const Eigen::VectorXd ps = naive_softmax(student, t);
    double kl = 0.0;
    for (int i = 0; i < 6; ++i) kl += pt(i) * std::log(pt(i) / ps(i));
    CHECK(kd_loss(student, teacher, 0, {t, 1.0}) ==
          doctest::Approx(t * t * kl).epsilon(1e-12));
  }
  SUBCASE("matched logits make the divergence term vanish") {
    CHECK(kd_loss(student, student, 0, {4.0, 1.0}) ==
          doctest::Approx(0.0).epsilon(1e-10));
    const Eigen::VectorXd grad = kd_loss_gradient(student, student, 0, {4.0, 1.0});
    CHECK(grad.cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("loss is invariant to a common logit shift") {
  RandomStream rng(6060);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd student = random_logits(5, rng);
    const Eigen::VectorXd teacher = random_logits(5, rng);
    const DistillationConfig config{2.0, 0.7};
    const double base = kd_loss(student, teacher, 1, config);
    const Eigen::VectorXd shifted_s =
        student + Eigen::VectorXd::Constant(5, 3.7);
    const Eigen::VectorXd shifted_t =
        teacher + Eigen::VectorXd::Constant(5, -1.2);
    CHECK(std::abs(kd_loss(shifted_s, shifted_t, 1, config) - base) < 1e-10);
  }
}

TEST_CASE("divergence term is never negative") {
  RandomStream rng(7070);
  for (int t = 0; t < 1000; ++t) {
    const Eigen::VectorXd student = random_logits(4, rng);
    const Eigen::VectorXd teacher = random_logits(4, rng);
    const double temp = 0.5 + 4.0 * rng.next_unit_halfopen();
    const double kl_scaled = kd_loss(student, teacher, 0, {temp, 1.0});
    CHECK(kl_scaled >= -1e-12);
  }
}

TEST_CASE("gradient components sum to zero") {
  RandomStream rng(8080);
  for (int t = 0; t < 20; ++t) {
    const Eigen::VectorXd student = random_logits(5, rng);
    const Eigen::VectorXd teacher = random_logits(5, rng);
    const Eigen::VectorXd grad = kd_loss_gradient(student, teacher, 3, {3.0, 0.4});
    CHECK(std::abs(grad.sum()) < 1e-10);
  }
}

TEST_CASE("gradient matches finite differences of the loss") {
  RandomStream rng(9090);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    const int k = 3 + static_cast<int>(rng.next_unit_halfopen() * 5);
    const Eigen::VectorXd student = random_logits(k, rng);
    const Eigen::VectorXd teacher = random_logits(k, rng);
    const int label = static_cast<int>(rng.next_unit_halfopen() * k);
    const DistillationConfig config{0.5 + 4.0 * rng.next_unit_halfopen(),
                                    rng.next_unit_halfopen()};
    const Eigen::VectorXd analytic = kd_loss_gradient(student, teacher, label, config);
    Eigen::VectorXd numeric(k);
    for (int i = 0; i < k; ++i) {
      Eigen::VectorXd up = student, down = student;
      up(i) += h;
      down(i) -= h;
      numeric(i) =
          (kd_loss(up, teacher, label, config) - kd_loss(down, teacher, label, config)) /
          (2.0 * h);
    }
    const double denom = std::max(analytic.cwiseAbs().maxCoeff(), 1e-8);
    CHECK((analytic - numeric).cwiseAbs().maxCoeff() / denom < 1e-5);
  }
}

TEST_CASE("loss guards label range and weight range") {
  Eigen::VectorXd s(3), t(3);
  s << 1.0, 0.0, -1.0;
  t << 0.0, 0.5, 0.0;
  CHECK_THROWS_AS(kd_loss(s, t, 3, {1.0, 0.5}), InvalidArgumentError);
  CHECK_THROWS_AS(kd_loss(s, t, -1, {1.0, 0.5}), InvalidArgumentError);
  CHECK_THROWS_AS(kd_loss(s, t, 0, {1.0, 1.5}), InvalidArgumentError);
  CHECK_THROWS_AS(kd_loss(s, t, 0, {1.0, -0.5}), InvalidArgumentError);
  CHECK_THROWS_AS(kd_loss_gradient(s, t, 3, {1.0, 0.5}), InvalidArgumentError);
}
