#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstdint>
#include <functional>
#include <numeric>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

namespace escat {

using Real = double;
using Complex = std::complex<double>;

inline constexpr Real pi = 3.14159265358979323846;

// Square root with branch cut on (-inf,0]: Re sqrt(w) > 0 off the cut.
// std::sqrt already uses this branch; kept as a named function so the
// convention is visible at call sites.
inline Complex sqrt_principal(Complex w) { return std::sqrt(w); }

struct DomainError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct SpectralError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ResolutionError : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ShapeError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

inline std::vector<Real> linspace(Real a, Real b, std::size_t n) {
  if (n < 2) throw ShapeError("linspace: need n >= 2");
  std::vector<Real> x(n);
  const Real h = (b - a) / Real(n - 1);
  for (std::size_t i = 0; i < n; ++i) x[i] = a + h * Real(i);
  x.back() = b;
  return x;
}

inline std::vector<Real> logspace(Real a, Real b, std::size_t n) {
  if (a <= 0 || b <= a) throw ShapeError("logspace: need 0 < a < b");
  auto t = linspace(std::log(a), std::log(b), n);
  for (auto& v : t) v = std::exp(v);
  return t;
}

// Trapezoid rule on a uniform grid.
template <class T>
T trapz(std::span<const T> y, Real h) {
  if (y.size() < 2) return T{};
  T s = (y.front() + y.back()) / Real(2);
  for (std::size_t i = 1; i + 1 < y.size(); ++i) s += y[i];
  return s * h;
}

template <class T>
T trapz(const std::vector<T>& y, Real h) {
  return trapz(std::span<const T>(y), h);
}

// Cumulative trapezoid; out[0] = 0.
template <class T>
std::vector<T> cumtrapz(std::span<const T> y, Real h) {
  std::vector<T> out(y.size(), T{});
  for (std::size_t i = 1; i < y.size(); ++i)
    out[i] = out[i - 1] + (y[i - 1] + y[i]) * (h / 2);
  return out;
}

template <class T>
std::vector<T> cumtrapz(const std::vector<T>& y, Real h) {
  return cumtrapz(std::span<const T>(y), h);
}

struct LineFit {
  Real slope = 0;
  Real intercept = 0;
  Real r2 = 0;  // coefficient of determination
  std::size_t n = 0;
};

inline LineFit least_squares(std::span<const Real> x, std::span<const Real> y) {
  LineFit fit;
  fit.n = x.size();
  if (x.size() != y.size() || x.size() < 2)
    throw ShapeError("least_squares: need matching sizes >= 2");
  const Real n = Real(x.size());
  Real sx = 0, sy = 0, sxx = 0, sxy = 0, syy = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    sx += x[i];
    sy += y[i];
    sxx += x[i] * x[i];
    sxy += x[i] * y[i];
    syy += y[i] * y[i];
  }
  const Real denom = n * sxx - sx * sx;
  if (std::abs(denom) < 1e-300) throw ShapeError("least_squares: degenerate x");
  fit.slope = (n * sxy - sx * sy) / denom;
  fit.intercept = (sy - fit.slope * sx) / n;
  Real ss_res = 0;
  const Real ybar = sy / n;
  Real ss_tot = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const Real r = y[i] - (fit.slope * x[i] + fit.intercept);
    ss_res += r * r;
    ss_tot += (y[i] - ybar) * (y[i] - ybar);
  }
  fit.r2 = ss_tot > 0 ? 1.0 - ss_res / ss_tot : 1.0;
  return fit;
}

// Fits |values| ~ C * r^{-p} on log-log axes and returns p (positive for
// decaying data). Entries below `floor` are dropped.
struct ExponentFit {
  Real exponent = 0;
  Real r2 = 0;
  bool reliable = false;   // r2 >= 0.9 and >= 4 samples
  bool all_zero = false;   // every sample below floor
  std::size_t used = 0;    // samples entering the fit
};

inline ExponentFit fit_decay_exponent(std::span<const Real> r,
                                      std::span<const Real> values,
                                      Real floor = 1e-12) {
  std::vector<Real> lx, ly;
  for (std::size_t i = 0; i < r.size(); ++i) {
    if (values[i] > floor) {
      lx.push_back(std::log(r[i]));
      ly.push_back(std::log(values[i]));
    }
  }
  ExponentFit out;
  out.used = lx.size();
  if (lx.empty()) {
    out.all_zero = true;
    return out;
  }
  if (lx.size() < 2) return out;
  const auto fit = least_squares(lx, ly);
  out.exponent = -fit.slope;
  out.r2 = fit.r2;
  out.reliable = fit.r2 >= 0.9 && lx.size() >= 4;
  return out;
}

// FNV-1a, used to stamp result files with a config hash.
inline std::uint64_t fnv1a(const std::string& s) {
  std::uint64_t h = 1469598103934665603ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 1099511628211ull;
  }
  return h;
}

inline Real sq(Real x) { return x * x; }

}  // namespace escat
