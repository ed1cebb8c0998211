#pragma once

#include "escat/common.hpp"

namespace escat {

// chi(t): 1 for t <= 1, 0 for t >= 2, quintic smoothstep in between
// (two continuous derivatives).
inline Real chi(Real t) {
  if (t <= 1.0) return 1.0;
  if (t >= 2.0) return 0.0;
  const Real s = t - 1.0;
  return 1.0 - s * s * s * (10.0 - 15.0 * s + 6.0 * s * s);
}

inline Real chi_prime(Real t) {
  if (t <= 1.0 || t >= 2.0) return 0.0;
  const Real s = t - 1.0;
  return -s * s * (30.0 - 60.0 * s + 30.0 * s * s);
}

// eta = 1 - chi(2r/r0): vanishes below r0/2, equals 1 above r0.
inline Real eta(Real r, Real r0) { return 1.0 - chi(2.0 * r / r0); }

// eta_lambda = 1 - chi(2r/r_lambda).
inline Real eta_lambda(Real r, Real r_lambda) {
  return 1.0 - chi(2.0 * r / r_lambda);
}

// chi_n = chi(r/2^n), bar_chi_n = 1 - chi_n: supported in r >= 2^n,
// equal to 1 for r >= 2^{n+1}.
inline Real bar_chi(Real r, Real Rn) { return 1.0 - chi(r / Rn); }
inline Real bar_chi_prime(Real r, Real Rn) { return -chi_prime(r / Rn) / Rn; }

}  // namespace escat
