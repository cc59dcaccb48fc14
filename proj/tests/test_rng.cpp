#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "cch/rng.hpp"

using namespace cch;

TEST_CASE("identical keys reproduce identical streams") {
  RandomStream a(42), b(42);
  for (int i = 0; i < 1000; ++i) CHECK(a.next_u64() == b.next_u64());
  RandomStream c(42), d(42);
  for (int i = 0; i < 1000; ++i) CHECK(c.next_gaussian() == d.next_gaussian());
}

TEST_CASE("derive_key separates ids and is order-sensitive") {
  CHECK(derive_key({1, 2}) != derive_key({2, 1}));
  CHECK(derive_key({1, 2}) != derive_key({1, 3}));
  CHECK(derive_key({1}) != derive_key({1, 0}));
  std::set<std::uint64_t> keys;
  for (std::uint64_t a = 0; a < 50; ++a) {
    for (std::uint64_t b = 0; b < 50; ++b) keys.insert(derive_key({a, b}));
  }
  CHECK(keys.size() == 2500);
}

TEST_CASE("unit draws respect their interval contracts") {
  RandomStream s(7);
  for (int i = 0; i < 100000; ++i) {
    const double u = s.next_unit();
    CHECK(u > 0.0);
    CHECK(u <= 1.0);
    const double v = s.next_unit_halfopen();
    CHECK(v >= 0.0);
    CHECK(v < 1.0);
  }
}

TEST_CASE("gaussian draws have standard moments") {
  RandomStream s(123);
  const int n = 1000000;
  double sum = 0.0, sum_sq = 0.0, sum_cube = 0.0;
  for (int i = 0; i < n; ++i) {
    const double g = s.next_gaussian();
    sum += g;
    sum_sq += g * g;
    sum_cube += g * g * g;
  }
  const double mean = sum / n;
  const double var = sum_sq / n - mean * mean;
  CHECK(std::abs(mean) < 0.005);
  CHECK(std::abs(var - 1.0) < 0.01);
  CHECK(std::abs(sum_cube / n) < 0.02);
}

TEST_CASE("distinct stage tags give unrelated streams") {
  RandomStream a(derive_key({9, stream_tag::labels}));
  RandomStream b(derive_key({9, stream_tag::student_noise}));
  int matches = 0;
  for (int i = 0; i < 1000; ++i) {
    if (a.next_u64() == b.next_u64()) ++matches;
  }
  CHECK(matches == 0);
}
