#pragma once

#include <Eigen/Dense>
#include <cmath>
#include <cstdint>
#include <functional>
#include <string>

#include "dtctrl/system.hpp"

namespace dtctrl::testutil {

// Small deterministic RNG so every property test is reproducible.
class Rng {
 public:
  explicit Rng(std::uint64_t seed) : state_(seed ? seed : 0x853C49E6748FEA9Bull) {}

  std::uint64_t next() {
    state_ ^= state_ >> 12;
    state_ ^= state_ << 25;
    state_ ^= state_ >> 27;
    return state_ * 0x2545F4914F6CDD1Dull;
  }

  double uniform() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }
  double uniform(double lo, double hi) { return lo + uniform() * (hi - lo); }
  int integer(int lo, int hi) {  // inclusive
    return lo + static_cast<int>(next() % static_cast<std::uint64_t>(hi - lo + 1));
  }
  double nonzero(double lo, double hi, double min_abs) {
    double v = 0.0;
    do {
      v = uniform(lo, hi);
    } while (std::abs(v) < min_abs);
    return v;
  }
  Eigen::VectorXd vector(int n, double lo, double hi) {
    Eigen::VectorXd v(n);
    for (int i = 0; i < n; ++i) v(i) = uniform(lo, hi);
    return v;
  }

 private:
  std::uint64_t state_;
};

inline double richardson(const std::function<double(double)>& g, double h) {
  auto central = [&](double hh) { return (g(hh) - g(-hh)) / (2.0 * hh); };
  return (4.0 * central(h / 2.0) - central(h)) / 3.0;
}

inline Eigen::VectorXd richardson_vec(const std::function<Eigen::VectorXd(double)>& g, double h) {
  auto central = [&](double hh) { return ((g(hh) - g(-hh)) / (2.0 * hh)).eval(); };
  return (4.0 * central(h / 2.0) - central(h)) / 3.0;
}

// Mildly nonlinear invertible polynomial system as DSL text: a well-conditioned
// affine core plus small quadratic coupling, so (A4) holds on the test region
// and Newton inversion converges from the image-point hint.
inline std::string random_polynomial_system(Rng& rng, int n, int m) {
  Eigen::MatrixXd A = Eigen::MatrixXd::Identity(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < n; ++j) A(i, j) += 0.3 * rng.uniform(-1.0, 1.0);
  }
  Eigen::MatrixXd B(n, m);
  for (int i = 0; i < n; ++i) {
    for (int r = 0; r < m; ++r) B(i, r) = rng.uniform(-1.0, 1.0);
  }

  std::string text = "dims " + std::to_string(n) + " " + std::to_string(m) + "\n";
  char buf[64];
  for (int i = 0; i < n; ++i) {
    std::string line = "f" + std::to_string(i + 1) + " = 0";
    for (int j = 0; j < n; ++j) {
      std::snprintf(buf, sizeof(buf), " + (%.17g)*x%d", A(i, j), j + 1);
      line += buf;
    }
    for (int r = 0; r < m; ++r) {
      std::snprintf(buf, sizeof(buf), " + (%.17g)*u%d", B(i, r), r + 1);
      line += buf;
    }
    const int a = rng.integer(1, n), b = rng.integer(1, n);
    std::snprintf(buf, sizeof(buf), " + (%.17g)*x%d*x%d", 0.1 * rng.uniform(-1.0, 1.0), a, b);
    line += buf;
    const int r = rng.integer(1, m);
    std::snprintf(buf, sizeof(buf), " + (%.17g)*u%d^2", 0.1 * rng.uniform(-1.0, 1.0), r);
    line += buf;
    text += line + "\n";
  }
  return text;
}

inline DiscreteSystem make_random_system(Rng& rng, int n, int m) {
  return DiscreteSystem::from_file(parse_system_file(random_polynomial_system(rng, n, m)),
                                   "random-poly");
}

}  // namespace dtctrl::testutil
