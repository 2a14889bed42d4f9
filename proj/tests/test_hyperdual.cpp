#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <vector>

#include "dtctrl/hyperdual.hpp"
#include "support/test_util.hpp"

using namespace dtctrl;
using testutil::Rng;

namespace {

void check_hd(const HyperDual& h, double v, double d1, double d2, double d12) {
  CHECK(h.v == v);
  CHECK(h.d1 == d1);
  CHECK(h.d2 == d2);
  CHECK(h.d12 == d12);
}

}  // namespace

TEST_CASE("lift_const zeroes every derivative slot") {
  check_hd(lift_const(3.0), 3.0, 0, 0, 0);
  check_hd(lift_const(0.0), 0.0, 0, 0, 0);
  check_hd(lift_const(-1.5), -1.5, 0, 0, 0);
}

TEST_CASE("seed slots") {
  check_hd(seed(2.0, Slot::First), 2.0, 1, 0, 0);
  check_hd(seed(2.0, Slot::Second), 2.0, 0, 1, 0);
  check_hd(seed(2.0, Slot::Both), 2.0, 1, 1, 0);
}

TEST_CASE("a^2 at a seeded in both slots carries the full Taylor data") {
  const HyperDual a = seed(3.0, Slot::Both);
  check_hd(a * a, 9.0, 6.0, 6.0, 2.0);
}

TEST_CASE("product rule across slots") {
  check_hd(seed(2.0, Slot::First) * seed(5.0, Slot::Second), 10.0, 5.0, 2.0, 1.0);
}

TEST_CASE("pow_int matches finite differences of a^2 at 4") {
  const HyperDual p = pow_int(seed(4.0, Slot::Both), 2);
  check_hd(p, 16.0, 8.0, 8.0, 2.0);
  const double fd = testutil::richardson([](double h) { return (4.0 + h) * (4.0 + h); }, 1e-5);
  CHECK(p.d1 == doctest::Approx(fd).epsilon(1e-9));
}

TEST_CASE("reciprocal matches finite differences of 1/a at 2") {
  const HyperDual r = lift_const(1.0) / seed(2.0, Slot::First);
  check_hd(r, 0.5, -0.25, 0.0, 0.0);
  const double fd = testutil::richardson([](double h) { return 1.0 / (2.0 + h); }, 1e-5);
  CHECK(r.d1 == doctest::Approx(fd).epsilon(1e-8));
}

TEST_CASE("division by zero is refused") {
  CHECK_THROWS_AS(lift_const(1.0) / lift_const(0.0), DivisionByZero);
  CHECK_THROWS_AS(pow_int(lift_const(0.0), -1), DivisionByZero);
}

TEST_CASE("1000 random polynomials: d1, d2, d12 match Richardson differences") {
  Rng rng(2024);
  int checked = 0;
  for (int trial = 0; trial < 1000; ++trial) {
    const int deg = rng.integer(1, 4);
    std::vector<double> coeff;
    for (int i = 0; i <= deg; ++i) {
      for (int j = 0; i + j <= deg; ++j) coeff.push_back(rng.uniform(-2.0, 2.0));
    }
    const double a0 = rng.uniform(-1.5, 1.5);
    const double b0 = rng.uniform(-1.5, 1.5);

    auto eval_d = [&](double a, double b) {
      double acc = 0.0;
      std::size_t c = 0;
      for (int i = 0; i <= deg; ++i) {
        for (int j = 0; i + j <= deg; ++j) acc += coeff[c++] * std::pow(a, i) * std::pow(b, j);
      }
      return acc;
    };
    auto eval_hd = [&](HyperDual a, HyperDual b) {
      HyperDual acc(0.0);
      std::size_t c = 0;
      for (int i = 0; i <= deg; ++i) {
        for (int j = 0; i + j <= deg; ++j) {
          acc += lift_const(coeff[c++]) * pow_int(a, i) * pow_int(b, j);
        }
      }
      return acc;
    };

    const HyperDual h = eval_hd(seed(a0, Slot::First), seed(b0, Slot::Second));
    const double fd1 = testutil::richardson([&](double t) { return eval_d(a0 + t, b0); }, 1e-5);
    const double fd2 = testutil::richardson([&](double t) { return eval_d(a0, b0 + t); }, 1e-5);
    auto cross = [&](double hh) {
      return (eval_d(a0 + hh, b0 + hh) - eval_d(a0 + hh, b0 - hh) - eval_d(a0 - hh, b0 + hh) +
              eval_d(a0 - hh, b0 - hh)) /
             (4.0 * hh * hh);
    };
    // second differences divide by h^2, so the step sits above the roundoff floor
    const double fd12 = (4.0 * cross(1e-3 / 2) - cross(1e-3)) / 3.0;

    const double tol = 1e-6;
    CHECK(std::abs(h.d1 - fd1) <= tol * std::max(1.0, std::abs(fd1)));
    CHECK(std::abs(h.d2 - fd2) <= tol * std::max(1.0, std::abs(fd2)));
    CHECK(std::abs(h.d12 - fd12) <= tol * std::max(1.0, std::abs(fd12)));
    ++checked;
  }
  CHECK(checked == 1000);
}

TEST_CASE("chain consistency: both-slot seeding reproduces analytic second derivatives of x^k") {
  for (int k = 0; k <= 6; ++k) {
    for (double x : {-1.7, -0.4, 0.9, 2.3}) {
      const HyperDual h = pow_int(seed(x, Slot::Both), k);
      const double d1 = k > 0 ? k * std::pow(x, k - 1) : 0.0;
      const double d2 = k > 1 ? k * (k - 1) * std::pow(x, k - 2) : 0.0;
      CHECK(h.v == doctest::Approx(std::pow(x, k)).epsilon(1e-14));
      CHECK(h.d1 == doctest::Approx(d1).epsilon(1e-13));
      CHECK(h.d12 == doctest::Approx(d2).epsilon(1e-13));
    }
  }
}
