#pragma once

#include <cmath>
#include <cstdlib>

#include "dtctrl/errors.hpp"

namespace dtctrl {

/// Second-order forward-mode scalar. Carries a value, two independent
/// first-derivative slots and the mixed second derivative, so one pass through
/// an expression yields f, df/da, df/db and d2f/dadb exactly (truncated Taylor
/// algebra, no step size involved).
struct HyperDual {
  double v = 0.0;    ///< value
  double d1 = 0.0;   ///< d/da coefficient
  double d2 = 0.0;   ///< d/db coefficient
  double d12 = 0.0;  ///< d2/dadb coefficient

  constexpr HyperDual() = default;
  constexpr HyperDual(double value) : v(value) {}  // lift of a constant
  constexpr HyperDual(double value, double da, double db, double dab)
      : v(value), d1(da), d2(db), d12(dab) {}
};

enum class Slot { First, Second, Both };

// Division guards literal zero only; the expression DSL rules out the
// branch-cut cases that would need anything smarter.
inline constexpr double kDivisionEpsilon = 1e-300;

constexpr HyperDual lift_const(double c) { return HyperDual(c); }

constexpr HyperDual seed(double c, Slot slot) {
  HyperDual h(c);
  if (slot == Slot::First || slot == Slot::Both) h.d1 = 1.0;
  if (slot == Slot::Second || slot == Slot::Both) h.d2 = 1.0;
  return h;
}

constexpr HyperDual operator+(const HyperDual& f, const HyperDual& g) {
  return {f.v + g.v, f.d1 + g.d1, f.d2 + g.d2, f.d12 + g.d12};
}

constexpr HyperDual operator-(const HyperDual& f, const HyperDual& g) {
  return {f.v - g.v, f.d1 - g.d1, f.d2 - g.d2, f.d12 - g.d12};
}

constexpr HyperDual operator-(const HyperDual& f) { return {-f.v, -f.d1, -f.d2, -f.d12}; }

constexpr HyperDual operator*(const HyperDual& f, const HyperDual& g) {
  return {f.v * g.v,
          f.d1 * g.v + f.v * g.d1,
          f.d2 * g.v + f.v * g.d2,
          f.d12 * g.v + f.d1 * g.d2 + f.d2 * g.d1 + f.v * g.d12};
}

inline HyperDual inverse(const HyperDual& g) {
  if (std::abs(g.v) < kDivisionEpsilon) throw DivisionByZero("hyperdual division by zero");
  const double iv = 1.0 / g.v;
  const double iv2 = iv * iv;
  const double iv3 = iv2 * iv;
  return {iv, -g.d1 * iv2, -g.d2 * iv2, -g.d12 * iv2 + 2.0 * g.d1 * g.d2 * iv3};
}

inline HyperDual operator/(const HyperDual& f, const HyperDual& g) { return f * inverse(g); }

constexpr HyperDual& operator+=(HyperDual& f, const HyperDual& g) { return f = f + g; }
constexpr HyperDual& operator-=(HyperDual& f, const HyperDual& g) { return f = f - g; }
constexpr HyperDual& operator*=(HyperDual& f, const HyperDual& g) { return f = f * g; }
inline HyperDual& operator/=(HyperDual& f, const HyperDual& g) { return f = f / g; }

/// Integer power by repeated multiplication; negative exponents go through the
/// reciprocal.
inline HyperDual pow_int(const HyperDual& base, int exponent) {
  if (exponent < 0) return inverse(pow_int(base, -exponent));
  HyperDual acc(1.0);
  HyperDual b = base;
  int e = exponent;
  while (e > 0) {
    if (e & 1) acc = acc * b;
    e >>= 1;
    if (e > 0) b = b * b;
  }
  return acc;
}

inline bool is_finite(const HyperDual& h) {
  return std::isfinite(h.v) && std::isfinite(h.d1) && std::isfinite(h.d2) && std::isfinite(h.d12);
}

}  // namespace dtctrl
