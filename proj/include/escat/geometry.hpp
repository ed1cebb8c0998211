#pragma once

#include <memory>
#include <optional>

#include "escat/common.hpp"
#include "escat/cutoffs.hpp"
#include "escat/profiles.hpp"

namespace escat {

enum class ChartKind { warped, parabolic };
enum class AngularKind { none, circle, interval };
enum class Coupling { single_end_dirichlet, two_end_line };

struct EndChart {
  ChartKind kind = ChartKind::warped;
  int dim = 2;                       // manifold dimension d
  std::shared_ptr<WarpProfile> warp; // warped charts
  Real kappa = 0.5;                  // parabolic charts
  Real r0 = 1.0;
  Real rmax = 64.0;
  AngularKind angular = AngularKind::circle;
};

struct ManifoldModel {
  std::vector<EndChart> ends;
  Coupling coupling = Coupling::single_end_dirichlet;
  Real smoothing_width = 1.0;  // w in r(x) = sqrt(x^2 + w^2) on line models
  std::shared_ptr<Potential> potential = std::make_shared<ZeroPotential>();
  std::string name = "model";

  const EndChart& end(std::size_t i = 0) const { return ends.at(i); }
  Real r0() const { return ends.at(0).r0; }
  Real rmax() const { return ends.at(0).rmax; }
  int dim() const { return ends.at(0).dim; }

  bool is_line() const { return coupling == Coupling::two_end_line; }
  bool is_parabolic() const {
    return ends.at(0).kind == ChartKind::parabolic;
  }

  void validate() const {
    if (ends.empty()) throw ShapeError("model has no ends");
    for (const auto& e : ends) {
      if (e.r0 < 1.0) throw DomainError("r0 must be >= 1");
      if (e.rmax <= e.r0) throw DomainError("Rmax must exceed r0");
      if (e.kind == ChartKind::warped) {
        if (!e.warp) throw ShapeError("warped end needs a warp profile");
        if (e.dim < 1) throw DomainError("dimension must be >= 1");
        if (e.dim == 1 && e.angular != AngularKind::none)
          throw ShapeError("d = 1 chart cannot carry an angular space");
        if (e.dim >= 2 && e.angular == AngularKind::none)
          throw ShapeError("d >= 2 chart needs an angular space");
        if (e.dim > 2)
          throw ShapeError("only 1-dimensional angular spaces are supported");
      } else {
        if (e.kappa <= 0.0 || e.kappa >= 1.0)
          throw DomainError("parabolic exponent must lie in (0,1)");
      }
    }
    if (coupling == Coupling::two_end_line) {
      if (ends.size() != 2) throw ShapeError("two_end_line needs 2 ends");
      if (ends[0].angular != ends[1].angular ||
          ends[0].dim != ends[1].dim)
        throw ShapeError("two_end_line ends must have matching angular spaces");
      if (ends[0].kind != ChartKind::warped)
        throw ShapeError("two_end_line supports warped ends only");
    }
    if (is_parabolic() && ends.size() != 1)
      throw ShapeError("parabolic models have a single end");
  }
};

// ---------------------------------------------------------------------------
// Parabolic chart geometry: coordinates (r, theta) with theta = x y^{-kappa},
// r^2 = kappa x^2 + y^2 on the Euclidean plane.

struct ParabolicPoint {
  Real r = 0, theta = 0;
  Real y = 0, x = 0;
  Real Nr = 0, Nt = 0;        // inverse-metric entries |dr|^2, |dtheta|^2
  Real dNr_dr = 0, dNr_dt = 0;
  Real dNt_dr = 0, dNt_dt = 0;
};

namespace detail {

inline Real parabolic_solve_y(Real kappa, Real r, Real theta) {
  // y^2 + kappa theta^2 y^{2 kappa} = r^2, monotone in y
  Real y = r;
  for (int it = 0; it < 60; ++it) {
    const Real ypow = std::pow(y, 2 * kappa);
    const Real F = y * y + kappa * theta * theta * ypow - r * r;
    const Real dF = 2 * y + 2 * kappa * kappa * theta * theta * ypow / y;
    const Real step = F / dF;
    y -= step;
    if (y <= 0) y = r * 1e-8;
    if (std::abs(step) < 1e-15 * r) break;
  }
  return y;
}

}  // namespace detail

inline ParabolicPoint parabolic_point(const EndChart& chart, Real r,
                                      Real theta) {
  if (chart.kind != ChartKind::parabolic)
    throw DomainError("parabolic_point: not a parabolic chart");
  if (theta <= -1.0 || theta >= 1.0)
    throw DomainError("parabolic chart: theta outside (-1,1)");
  if (r <= 0) throw DomainError("parabolic chart: r must be positive");
  const Real k = chart.kappa;
  ParabolicPoint p;
  p.r = r;
  p.theta = theta;
  p.y = detail::parabolic_solve_y(k, r, theta);
  p.x = theta * std::pow(p.y, k);
  const Real y2k = std::pow(p.y, 2 * k);
  const Real c = k - k * k;
  p.Nr = 1.0 - c * theta * theta * y2k / (r * r);
  p.Nt = std::pow(p.y, -2 * k) + k * k * theta * theta / (p.y * p.y);
  p.dNr_dr = 2.0 * (1.0 - k / p.Nr) * c * theta * theta * y2k / (r * r * r);
  p.dNr_dt = -2.0 * (1.0 - k * k * theta * theta / (p.y * p.y * p.Nt)) * c *
             theta * y2k / (r * r);
  p.dNt_dr = -(2 * k / (r * p.Nr)) *
             (std::pow(p.y, -2 * k) + k * theta * theta / (p.y * p.y));
  p.dNt_dt = (2 * k * k * theta / (p.y * p.y * p.Nt)) *
                 (std::pow(p.y, -2 * k) + k * theta * theta / (p.y * p.y)) +
             2 * k * k * theta / (p.y * p.y);
  return p;
}

// Laplacian of r on the parabolic chart (r >= r0/2; no cutoff factors).
inline Real parabolic_delta_r(const EndChart& chart, Real r, Real theta) {
  const auto p = parabolic_point(chart, r, theta);
  return 0.5 * p.dNr_dr - 0.5 * p.Nr * p.dNt_dr / p.Nt;
}

// W_r + W_theta of the flat-measure conjugation |g|^{1/4} Delta |g|^{-1/4};
// second derivatives of N by central differences of the analytic first ones.
struct ParabolicConjugation {
  Real Wr = 0, Wt = 0;
};

inline ParabolicConjugation parabolic_conjugation(const EndChart& chart, Real r,
                                                  Real theta) {
  const Real hr = 1e-5 * std::max(1.0, r);
  const Real ht = std::min(1e-5, 0.45 * (1.0 - std::abs(theta)) + 1e-9);
  const auto pm = parabolic_point(chart, r - hr, theta);
  const auto pp = parabolic_point(chart, r + hr, theta);
  const auto p0 = parabolic_point(chart, r, theta);
  const auto qm = parabolic_point(chart, r, theta - ht);
  const auto qp = parabolic_point(chart, r, theta + ht);

  auto dlng_dr = [](const ParabolicPoint& p) {
    return -(p.dNr_dr / p.Nr + p.dNt_dr / p.Nt);
  };
  auto dlng_dt = [](const ParabolicPoint& p) {
    return -(p.dNr_dt / p.Nr + p.dNt_dt / p.Nt);
  };

  ParabolicConjugation w;
  const Real fr0 = dlng_dr(p0);
  const Real d_Nr_fr = (pp.Nr * dlng_dr(pp) - pm.Nr * dlng_dr(pm)) / (2 * hr);
  w.Wr = -p0.Nr * fr0 * fr0 / 16.0 - d_Nr_fr / 4.0;
  const Real ft0 = dlng_dt(p0);
  const Real d_Nt_ft = (qp.Nt * dlng_dt(qp) - qm.Nt * dlng_dt(qm)) / (2 * ht);
  w.Wt = -p0.Nt * ft0 * ft0 / 16.0 - d_Nt_ft / 4.0;
  return w;
}

// ---------------------------------------------------------------------------
// eval_metric: pointwise metric data in the chart's natural coordinates.

struct MetricData {
  Real g11 = 1, g22 = 0;        // (r,r)/(x,x) and angular components
  Real dr_sq = 1;               // |dr|^2
  Real hess_rr = 0, hess_ra = 0, hess_aa = 0;  // (grad^2 r) components
  Real delta_r = 0;             // Laplacian of r
  Real div_omega_tilde = 0;     // divergence of the normalized flow field
  Real ell_11 = 0, ell_22 = 0;  // spherical tensor (lowered components)
  // parabolic extras
  Real Nr = 1, Nt = 0, Wr = 0, Wt = 0;
};

// Line-model radius function and warp factor (composed with the smoothed
// radius so the profile is smooth and even on the whole line).
struct LineGeometry {
  Real w = 1.0;
  std::shared_ptr<WarpProfile> warp;
  int dim = 2;

  Real r(Real x) const { return std::sqrt(x * x + w * w); }
  Real rp(Real x) const { return x / r(x); }
  Real rpp(Real x) const { const Real R = r(x); return w * w / (R * R * R); }
  Real rppp(Real x) const {
    const Real R = r(x);
    return -3.0 * w * w * x / (R * R * R * R * R);
  }
  Real f(Real x) const { return dim >= 2 ? warp->f(r(x)) : 1.0; }
  Real df(Real x) const { return dim >= 2 ? warp->df(r(x)) * rp(x) : 0.0; }
  Real d2f(Real x) const {
    if (dim < 2) return 0.0;
    return warp->d2f(r(x)) * sq(rp(x)) + warp->df(r(x)) * rpp(x);
  }
};

inline LineGeometry line_geometry(const ManifoldModel& model) {
  if (!model.is_line()) throw ShapeError("model is not a two_end_line model");
  LineGeometry lg;
  lg.w = model.smoothing_width;
  lg.warp = model.end(0).warp;
  lg.dim = model.end(0).dim;
  return lg;
}

inline MetricData eval_metric_warped(const EndChart& chart, Real r) {
  if (r < chart.r0 * 0.4 || r > chart.rmax * 1.000001)
    throw DomainError("eval_metric: point outside chart domain");
  MetricData m;
  const Real f = chart.dim >= 2 ? chart.warp->f(r) : 1.0;
  const Real fp = chart.dim >= 2 ? chart.warp->df(r) : 0.0;
  if (f <= 0) throw DomainError("warp profile must be positive");
  m.g11 = 1;
  m.g22 = f * f;
  m.dr_sq = 1;
  m.hess_aa = f * fp;
  m.delta_r = (chart.dim - 1) * fp / f;
  const Real et = eta(r, chart.r0);
  const Real etp = -chi_prime(2 * r / chart.r0) * 2 / chart.r0;
  m.div_omega_tilde = et * m.delta_r + etp;
  m.ell_11 = (1.0 - et);
  m.ell_22 = f * f;
  return m;
}

inline MetricData eval_metric_line(const ManifoldModel& model, Real x) {
  const auto lg = line_geometry(model);
  MetricData m;
  const Real f = lg.f(x), fp = lg.df(x);
  m.g11 = 1;
  m.g22 = f * f;
  m.dr_sq = sq(lg.rp(x));
  m.hess_rr = lg.rpp(x);
  m.hess_aa = f * fp * lg.rp(x);
  m.delta_r = lg.rpp(x) + (lg.dim - 1) * fp * lg.rp(x) / f;
  const Real r = lg.r(x);
  const Real et = eta(r, model.r0());
  // omega_tilde = (eta/r') d_x ; divergence against the volume weight f^{d-1}
  const Real h = 1e-6 * std::max(1.0, std::abs(x));
  auto v = [&](Real s) {
    const Real e = eta(lg.r(s), model.r0());
    if (e < 1e-14) return 0.0;
    return e / lg.rp(s) * std::pow(lg.f(s), lg.dim - 1);
  };
  m.div_omega_tilde =
      (v(x + h) - v(x - h)) / (2 * h) / std::pow(f, lg.dim - 1);
  m.ell_11 = 1.0 - et;
  m.ell_22 = f * f;
  return m;
}

inline MetricData eval_metric_parabolic(const EndChart& chart, Real r,
                                        Real theta) {
  if (r < chart.r0 * 0.4 || r > chart.rmax * 1.000001)
    throw DomainError("eval_metric: point outside chart domain");
  const auto p = parabolic_point(chart, r, theta);
  MetricData m;
  m.g11 = 1.0 / p.Nr;
  m.g22 = 1.0 / p.Nt;
  m.dr_sq = p.Nr;
  m.Nr = p.Nr;
  m.Nt = p.Nt;
  m.hess_rr = 0.5 * p.dNr_dr / p.Nr;
  m.hess_ra = 0.5 * p.dNr_dt / p.Nr;
  m.hess_aa = -0.5 * p.Nr * p.dNt_dr / (p.Nt * p.Nt);
  m.delta_r = 0.5 * p.dNr_dr - 0.5 * p.Nr * p.dNt_dr / p.Nt;
  const Real et = eta(r, chart.r0);
  const Real etp = -chi_prime(2 * r / chart.r0) * 2 / chart.r0;
  // div(eta_tilde grad r) with eta_tilde = eta/N_r; radial flow in (r,theta)
  m.div_omega_tilde =
      et * (-0.5) * (p.dNr_dr / p.Nr + p.dNt_dr / p.Nt) + etp;
  m.ell_11 = (1.0 - et) / p.Nr;
  m.ell_22 = 1.0 / p.Nt;
  const auto w = parabolic_conjugation(chart, r, theta);
  m.Wr = w.Wr;
  m.Wt = w.Wt;
  return m;
}

// ---------------------------------------------------------------------------
// Effective potential q = V + (eta_tilde/8)[(Delta r)^2 + 2 grad^r Delta r]
// and its declared splitting q = q1 + q2.

struct EffectivePotential {
  Real q = 0, q1 = 0, q2 = 0;
  bool fd_fallback = false;
};

namespace detail {

// Numerical radial derivative of Delta r for charts without a closed form.
template <class F>
Real ddr(F&& g, Real r, Real scale = 1.0) {
  const Real h = 1e-5 * std::max(1.0, std::abs(r)) * scale;
  return (g(r + h) - g(r - h)) / (2 * h);
}

}  // namespace detail

inline EffectivePotential effective_potential_warped(const EndChart& chart,
                                                     const Potential& V,
                                                     Real r) {
  if (r < chart.r0 * 0.45)
    throw DomainError("effective_potential: r below r0/2");
  EffectivePotential out;
  const Real et = eta(r, chart.r0);  // eta_tilde = eta when |dr| = 1
  const int d = chart.dim;
  Real curv = 0;
  if (d >= 2) {
    const Real f = chart.warp->f(r), fp = chart.warp->df(r),
               fpp = chart.warp->d2f(r);
    const Real dr = (d - 1) * fp / f;
    const Real ddr = (d - 1) * (fpp / f - sq(fp / f));
    curv = (et / 8.0) * (dr * dr + 2.0 * ddr);
  }
  out.q = V.v(r) + curv;
  out.q1 = curv + V.v_longrange(r);
  out.q2 = out.q - out.q1;
  return out;
}

inline EffectivePotential effective_potential_line(const ManifoldModel& model,
                                                   Real x) {
  const auto lg = line_geometry(model);
  EffectivePotential out;
  const Real r = lg.r(x);
  const Real et = eta(r, model.r0());
  const Real eta_tilde = et / sq(lg.rp(x));
  auto delta_r = [&](Real s) {
    return lg.rpp(s) + (lg.dim - 1) * lg.df(s) * lg.rp(s) / lg.f(s);
  };
  const Real dr = delta_r(x);
  const Real ddr = lg.rp(x) * detail::ddr(delta_r, x);
  const Real curv = (eta_tilde / 8.0) * (dr * dr + 2.0 * ddr);
  out.q = model.potential->v(x) + curv;
  out.q1 = curv + model.potential->v_longrange(x);
  out.q2 = out.q - out.q1;
  return out;
}

inline EffectivePotential effective_potential_parabolic(const EndChart& chart,
                                                        Real r, Real theta) {
  if (r < chart.r0 * 0.45)
    throw DomainError("effective_potential: r below r0/2");
  EffectivePotential out;
  const auto p = parabolic_point(chart, r, theta);
  const Real et = eta(r, chart.r0);
  const Real eta_tilde = et / p.Nr;
  auto delta_r = [&](Real s) { return parabolic_delta_r(chart, s, theta); };
  const Real dr = delta_r(r);
  const Real ddr = p.Nr * detail::ddr(delta_r, r);
  out.q = (eta_tilde / 8.0) * (dr * dr + 2.0 * ddr);
  out.q1 = out.q;  // V = 0 and the curvature part is smooth
  out.q2 = 0.0;
  return out;
}

// The half-density (Liouville) potential (f^{(d-1)/2})'' / (2 f^{(d-1)/2});
// equals q - V on warped charts where |dr| = 1 and eta = 1. The mode
// Hamiltonians use this exact form with no cutoff.
inline Real liouville_half_density_potential(int d, Real f, Real fp, Real fpp) {
  if (d < 2) return 0.0;
  const Real p = 0.5 * (d - 1);
  const Real W = p * fpp / f + p * (p - 1.0) * sq(fp / f);
  return 0.5 * W;
}

// ---------------------------------------------------------------------------
// q1 sampled along the radial coordinate of a model (x on line models),
// shared by phases, solver and transforms.

inline Real q1_at(const ManifoldModel& model, Real x) {
  if (model.is_line()) return effective_potential_line(model, x).q1;
  if (model.is_parabolic()) {
    // transforms use the theta = 0 axis value; q1 is theta-dependent only
    // at order r^{2 kappa - 4}
    return effective_potential_parabolic(model.end(), std::abs(x), 0.0).q1;
  }
  return effective_potential_warped(model.end(), *model.potential, std::abs(x))
      .q1;
}

inline Real q1_parabolic_at(const ManifoldModel& model, Real r, Real theta) {
  return effective_potential_parabolic(model.end(), r, theta).q1;
}

// ---------------------------------------------------------------------------
// Critical energy: limsup of q1 at infinity, estimated from dyadic shell
// suprema with Aitken extrapolation when the tail is still moving.

struct CriticalEnergy {
  Real lambda0 = 0;
  bool extrapolated = false;
  bool unreliable = false;
};

inline CriticalEnergy critical_energy(const ManifoldModel& model) {
  const Real r0 = model.r0(), rmax = model.rmax();
  std::vector<Real> shell_sup;
  Real lo = rmax / 2;
  // walk dyadic shells inward while they fit
  std::vector<std::pair<Real, Real>> shells;
  while (lo >= std::max(r0, 1.0) && shells.size() < 6) {
    shells.insert(shells.begin(), {lo, 2 * lo});
    lo /= 2;
  }
  if (shells.empty()) throw DomainError("critical_energy: Rmax too small");
  for (auto [a, b] : shells) {
    Real s = -std::numeric_limits<Real>::infinity();
    for (Real u : linspace(a, b, 65)) {
      const Real x = model.is_line() ? u : u;  // sample outward coordinate
      s = std::max(s, q1_at(model, x));
      if (model.is_line()) s = std::max(s, q1_at(model, -x));
    }
    shell_sup.push_back(s);
  }
  CriticalEnergy ce;
  const std::size_t n = shell_sup.size();
  ce.lambda0 = shell_sup.back();
  if (n >= 3) {
    const Real s1 = shell_sup[n - 3], s2 = shell_sup[n - 2],
               s3 = shell_sup[n - 1];
    const Real den = s3 + s1 - 2 * s2;
    const Real scale = std::max({std::abs(s1), std::abs(s3), 1e-12});
    if (std::abs(den) > 1e-10 * scale) {
      const Real aitken = (s3 * s1 - s2 * s2) / den;
      // accept only a contracting tail
      if (std::abs(s3 - aitken) < std::abs(s2 - aitken)) {
        ce.lambda0 = aitken;
        ce.extrapolated = true;
      }
    }
    if (std::abs(ce.lambda0) < 1e-12) ce.lambda0 = 0.0;
  }
  if (n >= 2) {
    const Real diff = std::abs(shell_sup[n - 1] - shell_sup[n - 2]);
    const Real scale =
        std::max({std::abs(shell_sup[n - 1]), std::abs(shell_sup[n - 2])});
    ce.unreliable = scale > 1e-9 && diff > 0.1 * scale && diff > 1e-6;
  }
  return ce;
}

// Smallest radius beyond which lambda + lambda0 - 2 q1 >= 0 holds, doubled;
// never below r0 and constant in lambda once it saturates there.
inline Real r_lambda(const ManifoldModel& model, Real lambda, Real lambda0) {
  const Real r0 = model.r0(), rmax = model.rmax();
  Real rstar = r0 / 2;
  for (Real r : logspace(r0 / 2, rmax, 257)) {
    Real worst = lambda + lambda0 - 2 * q1_at(model, r);
    if (model.is_line())
      worst = std::min(worst, lambda + lambda0 - 2 * q1_at(model, -r));
    if (worst < 0) rstar = r;
  }
  return std::max(r0, 2 * rstar);
}

// ---------------------------------------------------------------------------
// Asymptotic complex phases b and a (at a point of the radial coordinate;
// mode-independent, built from q1).

struct PhasePair {
  Complex b, b_tilde;
  Complex a, a_tilde;
};

// sign = +1 for a_+ (outgoing), -1 for a_- (incoming).
inline PhasePair phases_at(const ManifoldModel& model, Complex z, Real lambda0,
                           Real x, Real rlam, int sign) {
  const Real lambda = z.real();
  if (lambda <= lambda0)
    throw SpectralError("phase: spectral parameter below critical energy");
  PhasePair ph;
  Real r = std::abs(x), drs = 1.0;
  // grad^r = g^{ij} (d_i r) d_j : the coefficient on the radial coordinate
  Real grad_r_coef = 1.0;
  if (model.is_line()) {
    const auto lg = line_geometry(model);
    r = lg.r(x);
    drs = sq(lg.rp(x));
    grad_r_coef = lg.rp(x);  // signed: points outward on both ends
  } else if (model.is_parabolic()) {
    drs = parabolic_point(model.end(), r, 0.0).Nr;
    grad_r_coef = drs;
  }
  const Real eta_r = eta(r, model.r0());
  const Real el = eta_lambda(r, rlam);
  const Real q1 = q1_at(model, x);
  const Complex root = sqrt_principal(2.0 * (z - q1));
  ph.b = el * std::sqrt(drs) * root;
  ph.b_tilde = eta_r * el * root / std::sqrt(drs);
  const Real h = 1e-5 * std::max(1.0, r);
  const Real dq1 = (q1_at(model, x + h) - q1_at(model, x - h)) / (2 * h);
  const Real grad_r_q1 = grad_r_coef * dq1;
  // p^r q11 = -i grad^r q1; a = b +/- (1/4) eta_lambda (p^r q11)/(z - q1)
  const Complex corr =
      Complex(0, -0.25) * el * grad_r_q1 / (z - q1);
  ph.a = ph.b + (sign > 0 ? corr : -corr);
  ph.a_tilde = eta_r * ph.a / drs;
  return ph;
}

}  // namespace escat
