#include <doctest.h>

#include <cmath>
#include <vector>

#include <softseq/numeric.hpp>
#include <softseq/random.hpp>

#include "helpers.hpp"
#include "oracle.hpp"

using namespace softseq;

TEST_SUITE("numeric") {

TEST_CASE("log_add basics") {
  CHECK(log_add(kNegInf, kNegInf) == kNegInf);
  CHECK(log_add(kNegInf, 2.5) == 2.5);
  CHECK(log_add(-1.0, kNegInf) == -1.0);
  CHECK(testutil::near(log_add(std::log(2.0), std::log(3.0)), std::log(5.0), 1e-15));
  // Symmetric and overflow-safe far from zero.
  CHECK(log_add(1000.0, 1000.0) == doctest::Approx(1000.0 + std::log(2.0)));
  CHECK(log_add(-1000.0, -1001.0) == log_add(-1001.0, -1000.0));
}

TEST_CASE("log_sum_exp matches the oracle and handles -inf") {
  CHECK(log_sum_exp(std::vector<double>{}) == kNegInf);
  CHECK(log_sum_exp(std::vector<double>{kNegInf, kNegInf}) == kNegInf);
  CHECK(log_sum_exp(std::vector<double>{3.0}) == 3.0);
  RandomStream rng(7);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<double> v(17);
    for (double& x : v) x = 20.0 * rng.next_gaussian();
    v[static_cast<std::size_t>(rng.next_u64() % v.size())] = kNegInf;
    CHECK(testutil::near(log_sum_exp(v), oracle::log_sum_exp(v), 1e-12));
  }
  // Max-shift keeps huge inputs finite.
  CHECK(log_sum_exp(std::vector<double>{1e300, 1e300}) ==
        doctest::Approx(1e300).epsilon(1e-12));
}

TEST_CASE("center_finite subtracts the finite mean only") {
  const std::vector<double> v{2.0, kNegInf, 4.0};
  const std::vector<double> c = center_finite(v);
  CHECK(c[0] == -1.0);
  CHECK(c[1] == kNegInf);
  CHECK(c[2] == 1.0);
  const std::vector<double> none{kNegInf, kNegInf};
  CHECK(center_finite(none) == none);
}

TEST_CASE("linf_diff treats matching -inf as equal") {
  const std::vector<double> a{1.0, kNegInf, 3.0};
  const std::vector<double> b{1.5, kNegInf, 3.0};
  CHECK(linf_diff(a, b) == 0.5);
  const std::vector<double> c{1.0, 2.0, 3.0};
  CHECK(linf_diff(a, c) == kPosInf);
  CHECK(linf_diff(a, a) == 0.0);
}

}  // TEST_SUITE

TEST_SUITE("random") {

TEST_CASE("streams are deterministic functions of seed and stream id") {
  RandomStream a(42, 1);
  RandomStream b(42, 1);
  for (int i = 0; i < 100; ++i) CHECK(a.next_u64() == b.next_u64());
  RandomStream c(42, 2);
  RandomStream d(43, 1);
  int differ_c = 0;
  int differ_d = 0;
  for (int i = 0; i < 100; ++i) {
    const std::uint64_t base = b.next_u64();
    differ_c += base != c.next_u64();
    differ_d += base != d.next_u64();
  }
  CHECK(differ_c > 90);
  CHECK(differ_d > 90);
}

TEST_CASE("split lanes are reproducible and mutually distinct") {
  const RandomStream base(9, 3);
  RandomStream lane0 = base.split(0);
  RandomStream lane0b = base.split(0);
  RandomStream lane1 = base.split(1);
  int same = 0;
  for (int i = 0; i < 64; ++i) {
    const std::uint64_t x = lane0.next_u64();
    CHECK(x == lane0b.next_u64());
    same += x == lane1.next_u64();
  }
  CHECK(same == 0);
}

TEST_CASE("splitting does not disturb the parent stream") {
  RandomStream a(5);
  RandomStream b(5);
  (void)b.split(17);
  for (int i = 0; i < 16; ++i) CHECK(a.next_u64() == b.next_u64());
}

TEST_CASE("next_unit lands in [0, 1) with a sane mean") {
  RandomStream rng(123);
  double sum = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double u = rng.next_unit();
    CHECK(u >= 0.0);
    CHECK(u < 1.0);
    sum += u;
  }
  CHECK(std::fabs(sum / n - 0.5) < 0.01);
}

TEST_CASE("next_gaussian has roughly standard moments") {
  RandomStream rng(321);
  double sum = 0.0;
  double sumsq = 0.0;
  const int n = 20000;
  for (int i = 0; i < n; ++i) {
    const double g = rng.next_gaussian();
    sum += g;
    sumsq += g * g;
  }
  const double mean = sum / n;
  const double var = sumsq / n - mean * mean;
  CHECK(std::fabs(mean) < 0.03);
  CHECK(std::fabs(var - 1.0) < 0.05);
}

}  // TEST_SUITE
