#pragma once

#include <map>
#include <memory>

#include "escat/common.hpp"

namespace escat {

// Warp profiles f(r) with two derivatives. Named profiles carry analytic
// derivatives; tabulated ones fall back to a cubic spline.
class WarpProfile {
 public:
  virtual ~WarpProfile() = default;
  virtual Real f(Real r) const = 0;
  virtual Real df(Real r) const = 0;
  virtual Real d2f(Real r) const = 0;
  virtual std::string name() const = 0;
};

class LinearWarp final : public WarpProfile {
 public:
  Real f(Real r) const override { return r; }
  Real df(Real) const override { return 1.0; }
  Real d2f(Real) const override { return 0.0; }
  std::string name() const override { return "r"; }
};

class ExpWarp final : public WarpProfile {
 public:
  Real f(Real r) const override { return std::exp(r); }
  Real df(Real r) const override { return std::exp(r); }
  Real d2f(Real r) const override { return std::exp(r); }
  std::string name() const override { return "exp_r"; }
};

class ConstWarp final : public WarpProfile {
 public:
  explicit ConstWarp(Real c = 1.0) : c_(c) {
    if (c <= 0) throw DomainError("const warp must be positive");
  }
  Real f(Real) const override { return c_; }
  Real df(Real) const override { return 0.0; }
  Real d2f(Real) const override { return 0.0; }
  std::string name() const override { return "const"; }

 private:
  Real c_;
};

// f(x) = sqrt(a^2 + x^2); used by the two-ended tube models.
class SqrtQuadWarp final : public WarpProfile {
 public:
  explicit SqrtQuadWarp(Real a) : a2_(a * a) {
    if (a <= 0) throw DomainError("sqrt_a2px2 warp needs a > 0");
  }
  Real f(Real x) const override { return std::sqrt(a2_ + x * x); }
  Real df(Real x) const override { return x / f(x); }
  Real d2f(Real x) const override {
    const Real F = f(x);
    return a2_ / (F * F * F);
  }
  std::string name() const override { return "sqrt_a2px2"; }

 private:
  Real a2_;
};

// Natural cubic spline through user-supplied samples.
class TableWarp final : public WarpProfile {
 public:
  TableWarp(std::vector<Real> r, std::vector<Real> fv)
      : r_(std::move(r)), f_(std::move(fv)) {
    if (r_.size() != f_.size() || r_.size() < 4)
      throw ShapeError("custom_table warp needs >= 4 samples");
    for (std::size_t i = 1; i < r_.size(); ++i)
      if (r_[i] <= r_[i - 1]) throw DomainError("table abscissae not increasing");
    for (Real v : f_)
      if (v <= 0) throw DomainError("table warp must be positive");
    build();
  }
  Real f(Real r) const override { return eval(r, 0); }
  Real df(Real r) const override { return eval(r, 1); }
  Real d2f(Real r) const override { return eval(r, 2); }
  std::string name() const override { return "custom_table"; }

 private:
  void build() {
    const std::size_t n = r_.size();
    m_.assign(n, 0.0);
    std::vector<Real> a(n, 0), b(n, 0), c(n, 0), d(n, 0);
    for (std::size_t i = 1; i + 1 < n; ++i) {
      const Real h0 = r_[i] - r_[i - 1], h1 = r_[i + 1] - r_[i];
      a[i] = h0 / 6;
      b[i] = (h0 + h1) / 3;
      c[i] = h1 / 6;
      d[i] = (f_[i + 1] - f_[i]) / h1 - (f_[i] - f_[i - 1]) / h0;
    }
    b[0] = b[n - 1] = 1.0;
    for (std::size_t i = 1; i < n; ++i) {
      const Real w = a[i] / b[i - 1];
      b[i] -= w * c[i - 1];
      d[i] -= w * d[i - 1];
    }
    m_[n - 1] = d[n - 1] / b[n - 1];
    for (std::size_t i = n - 1; i-- > 0;)
      m_[i] = (d[i] - c[i] * m_[i + 1]) / b[i];
  }
  Real eval(Real r, int deriv) const {
    auto it = std::upper_bound(r_.begin(), r_.end(), r);
    std::size_t i = std::clamp<std::ptrdiff_t>(it - r_.begin() - 1, 0,
                                               std::ptrdiff_t(r_.size()) - 2);
    const Real h = r_[i + 1] - r_[i];
    const Real A = (r_[i + 1] - r) / h, B = (r - r_[i]) / h;
    switch (deriv) {
      case 0:
        return A * f_[i] + B * f_[i + 1] +
               ((A * A * A - A) * m_[i] + (B * B * B - B) * m_[i + 1]) *
                   (h * h) / 6;
      case 1:
        return (f_[i + 1] - f_[i]) / h -
               (3 * A * A - 1) * h * m_[i] / 6 + (3 * B * B - 1) * h * m_[i + 1] / 6;
      default:
        return A * m_[i] + B * m_[i + 1];
    }
  }
  std::vector<Real> r_, f_, m_;
};

// Potentials V(x) (or V(r) on a single end). All shipped potentials are
// angular-independent; angular-dependent V requires the 2D path.
class Potential {
 public:
  virtual ~Potential() = default;
  virtual Real v(Real x) const = 0;
  virtual Real dv(Real x) const = 0;
  // Long-range part, folded into q1; the remainder goes to q2.
  virtual Real v_longrange(Real x) const { return 0.0; }
  virtual Real dv_longrange(Real x) const { return 0.0; }
  virtual std::string name() const = 0;
};

class ZeroPotential final : public Potential {
 public:
  Real v(Real) const override { return 0.0; }
  Real dv(Real) const override { return 0.0; }
  std::string name() const override { return "zero"; }
};

class SquareWell final : public Potential {
 public:
  SquareWell(Real depth, Real half_width) : v0_(depth), a_(half_width) {}
  Real v(Real x) const override { return std::abs(x) <= a_ ? v0_ : 0.0; }
  Real dv(Real) const override { return 0.0; }
  std::string name() const override { return "square_well"; }
  Real depth() const { return v0_; }
  Real half_width() const { return a_; }

 private:
  Real v0_, a_;
};

class GaussianBump final : public Potential {
 public:
  GaussianBump(Real height, Real center, Real width)
      : h_(height), c_(center), w_(width) {}
  Real v(Real x) const override {
    return h_ * std::exp(-sq(x - c_) / (2 * w_ * w_));
  }
  Real dv(Real x) const override { return -v(x) * (x - c_) / (w_ * w_); }
  std::string name() const override { return "gaussian_bump"; }

 private:
  Real h_, c_, w_;
};

class ExpDecayPotential final : public Potential {
 public:
  ExpDecayPotential(Real amp, Real rate) : a_(amp), k_(rate) {}
  Real v(Real x) const override { return a_ * std::exp(-k_ * std::abs(x)); }
  Real dv(Real x) const override {
    return -k_ * (x >= 0 ? 1.0 : -1.0) * v(x);
  }
  std::string name() const override { return "exp_decay"; }

 private:
  Real a_, k_;
};

// Long-range power tail a/(1+x^2)^{p/2}; declared long-range, so it joins q1.
class LongRangePotential final : public Potential {
 public:
  LongRangePotential(Real amp, Real power) : a_(amp), p_(power) {}
  Real v(Real x) const override {
    return a_ * std::pow(1.0 + x * x, -p_ / 2);
  }
  Real dv(Real x) const override {
    return -a_ * p_ * x * std::pow(1.0 + x * x, -p_ / 2 - 1);
  }
  Real v_longrange(Real x) const override { return v(x); }
  Real dv_longrange(Real x) const override { return dv(x); }
  std::string name() const override { return "long_range"; }

 private:
  Real a_, p_;
};

}  // namespace escat
