#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <Eigen/Dense>
#include <cmath>
#include <limits>
#include <vector>

#include "cch/errors.hpp"
#include "cch/gaussian_model.hpp"
#include "cch/mi_estimation.hpp"
#include "cch/rng.hpp"

using namespace cch;

namespace {

// Independent oracle: 2-d Simpson quadrature of the mutual-information
// integral of a standard bivariate Gaussian with correlation rho.
double quadrature_gaussian_mi(double rho) {
  const int m = 400;  // intervals per axis, even
  const double lo = -8.0, hi = 8.0;
  const double h = (hi - lo) / m;
  const double det = 1.0 - rho * rho;
  const auto weight = [m](int i) {
    if (i == 0 || i == m) return 1.0;
    return (i % 2 == 1) ? 4.0 : 2.0;
  };
  double sum = 0.0;
  for (int i = 0; i <= m; ++i) {
    const double x = lo + i * h;
    for (int j = 0; j <= m; ++j) {
      const double y = lo + j * h;
      const double quad = (x * x - 2.0 * rho * x * y + y * y) / (2.0 * det);
      const double log_joint = -std::log(2.0 * M_PI * std::sqrt(det)) - quad;
      const double log_marg =
          -std::log(2.0 * M_PI) - 0.5 * (x * x + y * y);
      sum += weight(i) * weight(j) * std::exp(log_joint) * (log_joint - log_marg);
    }
  }
  return sum * h * h / 9.0;
}

Eigen::VectorXd gaussian_vector(int n, RandomStream& rng) {
  Eigen::VectorXd v(n);
  for (int i = 0; i < n; ++i) v(i) = rng.next_gaussian();
  return v;
}

}  // namespace

TEST_CASE("digamma reference values and recurrence") {
  CHECK(digamma(1.0) == doctest::Approx(-0.57721566490153286).epsilon(1e-12));
  CHECK(digamma(0.5) == doctest::Approx(-1.9635100260214235).epsilon(1e-12));
  CHECK(digamma(3.0) == doctest::Approx(0.9227843350984671).epsilon(1e-12));
  CHECK(digamma(2.0) == doctest::Approx(1.0 - 0.57721566490153286).epsilon(1e-12));

  for (const double x : {0.5, 1.0, 3.7}) {
    CHECK(std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) < 1e-10);
  }
  for (int i = 0; i < 100; ++i) {
    const double x = std::pow(10.0, -3.0 + 6.0 * i / 99.0);
    CHECK(std::abs(digamma(x + 1.0) - digamma(x) - 1.0 / x) < 1e-10);
  }
  CHECK_THROWS_AS(digamma(0.0), InvalidArgumentError);
  CHECK_THROWS_AS(digamma(-1.5), InvalidArgumentError);
}

TEST_CASE("closed-form Gaussian information") {
  CHECK(gaussian_mi(0.0) == 0.0);
  CHECK(gaussian_mi(0.6) == gaussian_mi(-0.6));
  CHECK(gaussian_mi(0.6) == doctest::Approx(quadrature_gaussian_mi(0.6)).epsilon(1e-5));
  CHECK(gaussian_mi(0.3) == doctest::Approx(quadrature_gaussian_mi(0.3)).epsilon(1e-5));
  CHECK(gaussian_mi(0.6) == doctest::Approx(0.22314355131420976).epsilon(1e-12));
  CHECK_THROWS_AS(gaussian_mi(1.0), InvalidArgumentError);
  CHECK_THROWS_AS(gaussian_mi(-1.0), InvalidArgumentError);
  CHECK_THROWS_AS(gaussian_mi(std::numeric_limits<double>::quiet_NaN()),
                  InvalidArgumentError);
}

TEST_CASE("neighbor estimator is unbiased on independent pairs") {
  const int n = 5000;
  double total = 0.0;
  for (int s = 0; s < 5; ++s) {
    RandomStream rng(derive_key({808, static_cast<std::uint64_t>(s)}));
    const Eigen::VectorXd x = gaussian_vector(n, rng);
    const Eigen::VectorXd y = gaussian_vector(n, rng);
    const MiEstimate est = ksg_mi(x, y, 3);
    CHECK(std::abs(est.value) < 0.06);
    CHECK(est.estimator == MiEstimator::ksg);
    CHECK(est.k == 3);
    CHECK(est.n == n);
    total += est.value;
  }
  CHECK(std::abs(total / 5.0) < 0.02);
}

TEST_CASE("neighbor estimator recovers a known Gaussian dependence") {
  const double rho = 0.6;
  const double truth = gaussian_mi(rho);
  const int n = 5000;
  double total = 0.0;
  for (int s = 0; s < 10; ++s) {
    RandomStream rng(derive_key({31337, static_cast<std::uint64_t>(s)}));
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) {
      const double g1 = rng.next_gaussian();
      const double g2 = rng.next_gaussian();
      x(i) = g1;
      y(i) = rho * g1 + std::sqrt(1.0 - rho * rho) * g2;
    }
    const double est = ksg_mi(x, y, 3).value;
    CHECK(std::abs(est - truth) < 0.05);
    total += est;
  }
  CHECK(std::abs(total / 10.0 - truth) < 0.02);
}

TEST_CASE("neighbor estimator matches the closed form on model projections") {
  CorrelationSpec spec{0.5, 0.9, 0.4, 100};
  const PopulationModel model = derive_population_model(spec);
  const Dataset data = sample_dataset(spec, 10000, 404);
  // Teacher projection against the optimal student projection; the pair is
  // bivariate Gaussian, with correlation rho_t_s of the population model.
  const Eigen::VectorXd sigma13 = model.sigma13;
  const Eigen::VectorXd w1 = model.sigma11.ldlt().solve(sigma13);
  const Eigen::VectorXd t = data.x1 * w1;
  const Eigen::VectorXd s = data.x2 * model.w_star;
  const double cov = w1.dot(model.sigma12 * model.w_star);
  const double rho = cov / std::sqrt(w1.dot(model.sigma11 * w1) *
                                     model.w_star.dot(model.sigma22 * model.w_star));
  CHECK(std::abs(ksg_mi(t, s, 3).value - gaussian_mi(rho)) < 0.05);
}

TEST_CASE("estimate is invariant under affine maps of a marginal") {
  RandomStream rng(909);
  const int n = 3000;
  Eigen::VectorXd x(n), y(n);
  for (int i = 0; i < n; ++i) {
    const double g1 = rng.next_gaussian();
    x(i) = g1;
    y(i) = 0.5 * g1 + rng.next_gaussian();
  }
  const double base = ksg_mi(x, y, 3).value;
  const Eigen::VectorXd mapped = (7.3 * x.array() - 2.0).matrix();
  CHECK(std::abs(ksg_mi(mapped, y, 3).value - base) < 1e-3);
}

TEST_CASE("brute-force and tree backends agree bitwise") {
  RandomStream rng(515);
  const int n = 3000;
  SUBCASE("scalar marginals") {
    Eigen::VectorXd x(n), y(n);
    for (int i = 0; i < n; ++i) {
      x(i) = rng.next_gaussian();
      y(i) = 0.4 * x(i) + rng.next_gaussian();
    }
    const double brute = ksg_mi(x, y, 3, NeighborSearch::brute_force).value;
    const double tree = ksg_mi(x, y, 3, NeighborSearch::kd_tree).value;
    CHECK(brute == tree);
  }
  SUBCASE("two-column marginal") {
    Eigen::MatrixXd x(n, 2);
    Eigen::MatrixXd y(n, 1);
    for (int i = 0; i < n; ++i) {
      x(i, 0) = rng.next_gaussian();
      x(i, 1) = rng.next_gaussian();
      y(i, 0) = 0.5 * (x(i, 0) + x(i, 1)) + rng.next_gaussian();
    }
    const double brute = ksg_mi(x, y, 4, NeighborSearch::brute_force).value;
    const double tree = ksg_mi(x, y, 4, NeighborSearch::kd_tree).value;
    CHECK(brute == tree);
  }
}

TEST_CASE("vector and single-column matrix overloads coincide") {
  RandomStream rng(626);
  const int n = 500;
  const Eigen::VectorXd x = gaussian_vector(n, rng);
  const Eigen::VectorXd y = gaussian_vector(n, rng);
  const double a = ksg_mi(x, y, 3).value;
  const double b = ksg_mi(Eigen::MatrixXd(x), Eigen::MatrixXd(y), 3).value;
  CHECK(a == b);
}

TEST_CASE("neighbor estimator rejects malformed inputs") {
  RandomStream rng(111);
  const Eigen::VectorXd x = gaussian_vector(20, rng);
  const Eigen::VectorXd y = gaussian_vector(20, rng);
  CHECK_THROWS_AS(ksg_mi(x, y, 20), InvalidArgumentError);
  CHECK_THROWS_AS(ksg_mi(x, y, 0), InvalidArgumentError);
  CHECK_THROWS_AS(ksg_mi(x, gaussian_vector(19, rng), 3), InvalidArgumentError);
  const Eigen::VectorXd flat = Eigen::VectorXd::Constant(20, 2.5);
  CHECK_THROWS_AS(ksg_mi(flat, y, 3), InvalidArgumentError);
}

TEST_CASE("discrete-continuous estimator on reference mixtures") {
  SUBCASE("independent label carries no information") {
    RandomStream rng(717);
    const int n = 4000;
    std::vector<long long> labels(n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      labels[i] = (rng.next_u64() & 1) ? 1 : 0;
      y(i) = rng.next_gaussian();
    }
    const MiEstimate est = ross_mi(labels, y, 3);
    CHECK(std::abs(est.value) < 0.03);
    CHECK(est.estimator == MiEstimator::ross);
  }
  SUBCASE("well-separated binary classes saturate at log 2") {
    RandomStream rng(718);
    const int n = 4000;
    std::vector<long long> labels(n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      labels[i] = (rng.next_u64() & 1) ? 1 : -1;
      y(i) = 10.0 * labels[i] + rng.next_gaussian();
    }
    CHECK(std::abs(ross_mi(labels, y, 3).value - std::log(2.0)) < 0.05);
  }
  SUBCASE("three separated classes saturate at log 3") {
    RandomStream rng(719);
    const int n = 3000;
    std::vector<long long> labels(n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      labels[i] = static_cast<long long>(rng.next_u64() % 3);
      y(i) = 10.0 * labels[i] + rng.next_gaussian();
    }
    const double est = ross_mi(labels, y, 3).value;
    CHECK(est < std::log(3.0) + 0.05);
    CHECK(est > std::log(3.0) - 0.05);
  }
  SUBCASE("a class with too few members is an error") {
    RandomStream rng(720);
    std::vector<long long> labels(100, 0);
    labels[0] = labels[1] = labels[2] = 7;
    const Eigen::VectorXd y = gaussian_vector(100, rng);
    CHECK_THROWS_AS(ross_mi(labels, y, 3), InvalidArgumentError);
  }
  SUBCASE("vector and matrix overloads coincide") {
    RandomStream rng(721);
    const int n = 400;
    std::vector<long long> labels(n);
    Eigen::VectorXd y(n);
    for (int i = 0; i < n; ++i) {
      labels[i] = (rng.next_u64() & 1) ? 1 : 0;
      y(i) = 0.5 * labels[i] + rng.next_gaussian();
    }
    CHECK(ross_mi(labels, y, 3).value == ross_mi(labels, Eigen::MatrixXd(y), 3).value);
  }
}
