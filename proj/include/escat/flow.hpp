#pragma once

#include <array>
#include <boost/numeric/odeint.hpp>

#include "escat/geometry.hpp"

namespace escat {

// Orbit of the normalized gradient flow d y/dt = eta_tilde g^{ij} d_j r,
// with the half-density weight and (optionally) the phase integral of
// b_tilde accumulated along the way. Warped and line charts integrate in
// their radial coordinate (the angular coordinate is constant along
// orbits); the parabolic chart integrates in the ambient plane.
struct FlowOrbit {
  std::vector<Real> t;
  std::vector<std::array<Real, 2>> pos;  // chart/plane coordinates
  std::vector<Real> radius;
  std::vector<Real> half_density_log;  // int (1/2) div omega_tilde
  std::vector<Real> phase_integral;    // int b_tilde ds (lambda given)
  bool truncated = false;              // backward hitting time reached
};

namespace detail {

using FlowState = std::array<Real, 4>;

struct FlowField {
  const ManifoldModel* model;
  std::optional<Real> lambda;
  Real lambda0 = 0, rlam = 0;

  Real btilde(Real x) const {
    if (!lambda) return 0.0;
    return phases_at(*model, *lambda, lambda0, x, rlam, +1).b_tilde.real();
  }

  void operator()(const FlowState& s, FlowState& dsdt, Real) const {
    const auto& M = *model;
    if (M.is_parabolic()) {
      const auto& e = M.end();
      const Real k = e.kappa;
      const Real x = s[0], y = s[1];
      const Real r = std::sqrt(k * x * x + y * y);
      const Real drs = (k * k * x * x + y * y) / (r * r);
      const Real et = eta(r, e.r0);
      const Real w = et / drs;
      dsdt[0] = w * k * x / r;
      dsdt[1] = w * y / r;
      const Real theta = x * std::pow(y, -k);
      const auto md = eval_metric_parabolic(e, r, theta);
      dsdt[2] = 0.5 * md.div_omega_tilde;
      if (lambda) {
        const auto ph =
            phases_at(M, *lambda, lambda0,
                      r, rlam, +1);
        dsdt[3] = ph.b_tilde.real();
      } else {
        dsdt[3] = 0.0;
      }
      return;
    }
    const Real x = s[0];
    Real speed, div;
    if (M.is_line()) {
      const auto lg = line_geometry(M);
      const Real e = eta(lg.r(x), M.r0());
      speed = e < 1e-14 ? 0.0 : e / lg.rp(x);
      div = eval_metric_line(M, x).div_omega_tilde;
    } else {
      speed = eta(x, M.r0());
      div = eval_metric_warped(M.end(), std::max(x, 0.41 * M.r0()))
                .div_omega_tilde;
    }
    dsdt[0] = speed;
    dsdt[1] = 0.0;
    dsdt[2] = 0.5 * div;
    dsdt[3] = lambda ? btilde(x) : 0.0;
  }
};

}  // namespace detail

inline Real orbit_radius(const ManifoldModel& model,
                         const std::array<Real, 2>& pos) {
  if (model.is_parabolic()) {
    const Real k = model.end().kappa;
    return std::sqrt(k * pos[0] * pos[0] + pos[1] * pos[1]);
  }
  if (model.is_line()) return line_geometry(model).r(pos[0]);
  return pos[0];
}

// start: (r, sigma) for warped, (x, sigma) for line, (r, theta) for
// parabolic charts. Negative t_end integrates the reversed flow and stops
// at the backward hitting (cutoff) region.
inline FlowOrbit integrate_flow(const ManifoldModel& model,
                                std::array<Real, 2> start, Real t_end,
                                Real tol = 1e-8,
                                std::optional<Real> lambda = {}) {
  namespace od = boost::numeric::odeint;
  detail::FlowField field{&model, lambda};
  if (lambda) {
    field.lambda0 = critical_energy(model).lambda0;
    field.rlam = r_lambda(model, *lambda, field.lambda0);
  }

  detail::FlowState s{};
  if (model.is_parabolic()) {
    const auto p = parabolic_point(model.end(), start[0], start[1]);
    s = {p.x, p.y, 0.0, 0.0};
  } else {
    s = {start[0], 0.0, 0.0, 0.0};
    if (!model.is_line() && start[0] < model.r0() * 0.5)
      throw DomainError("integrate_flow: start below the cutoff region");
  }
  const Real sigma = model.is_parabolic() ? 0.0 : start[1];

  FlowOrbit orbit;
  auto record = [&](const detail::FlowState& st, Real t) {
    orbit.t.push_back(t);
    std::array<Real, 2> pos;
    if (model.is_parabolic())
      pos = {st[0], st[1]};
    else
      pos = {st[0], sigma};
    orbit.pos.push_back(pos);
    orbit.radius.push_back(orbit_radius(model, pos));
    orbit.half_density_log.push_back(st[2]);
    orbit.phase_integral.push_back(st[3]);
  };

  const int dir = t_end >= 0 ? +1 : -1;
  Real t = 0, dt = dir * 0.01 * std::max(1.0, std::abs(t_end));
  auto stepper = od::make_controlled(tol, tol,
                                     od::runge_kutta_dopri5<detail::FlowState>());
  record(s, t);
  int guard = 0;
  while (dir * (t_end - t) > 1e-12 && ++guard < 2000000) {
    if (dir * (t + dt) > dir * t_end) dt = t_end - t;
    detail::FlowState trial = s;
    Real t_trial = t, dt_trial = dt;
    const auto res = stepper.try_step(field, trial, t_trial, dt_trial);
    if (res == od::fail) {
      dt = dt_trial;
      continue;
    }
    s = trial;
    t = t_trial;
    dt = dt_trial;
    record(s, t);
    const Real r_now = orbit.radius.back();
    if (dir < 0 && (r_now <= model.r0() * 0.55 ||
                    eta(r_now, model.r0()) < 0.02)) {
      orbit.truncated = true;  // backward hitting region reached
      break;
    }
  }
  return orbit;
}

// ---------------------------------------------------------------------------
// Push-forward bound: transports sphere-tangent vectors backward along the
// flow via finite differences of neighboring orbits and fits the exponent in
// |w(t)|^2_ell <= C [(r+t)/r]^sigma.

struct PushforwardCheck {
  Real fitted_exponent = 0;
  Real worst_constant = 0;
  bool truncated = false;
};

inline PushforwardCheck pushforward_bound_check(const ManifoldModel& model,
                                                Real R, Real t_min) {
  if (t_min >= 0) throw DomainError("pushforward check transports backward");
  std::vector<Real> angular;
  if (model.is_parabolic())
    angular = {-0.6, -0.2, 0.0, 0.3, 0.7};
  else
    angular = {0.0};

  std::vector<Real> lx, ly;
  PushforwardCheck out;
  Real delta = model.is_parabolic() ? 1e-4 : 1e-4;
  for (Real ang : angular) {
    const auto base = integrate_flow(model, {R, ang}, t_min, 1e-10);
    const auto nb = integrate_flow(model, {R, ang + delta}, t_min, 1e-10);
    out.truncated = out.truncated || base.truncated || nb.truncated;
    // ell-normalization of d_theta at the start
    Real ell_tt0;
    if (model.is_parabolic()) {
      const auto p = parabolic_point(model.end(), R, ang);
      ell_tt0 = 1.0 / p.Nt;  // lowered theta-theta component
    } else if (model.is_line()) {
      ell_tt0 = sq(line_geometry(model).f(base.pos[0][0]));
    } else {
      ell_tt0 = sq(model.end().warp->f(R));
    }
    const std::size_t n = std::min(base.t.size(), nb.t.size());
    for (std::size_t i = 1; i < n; ++i) {
      if (base.truncated && i + 1 == n) break;
      const Real rt = base.radius[i];
      if (rt <= model.r0()) break;
      Real norm_sq;
      if (model.is_parabolic()) {
        // finite-difference Jacobian in plane coordinates
        const Real wx = (nb.pos[i][0] - base.pos[i][0]) / delta;
        const Real wy = (nb.pos[i][1] - base.pos[i][1]) / delta;
        const auto& e = model.end();
        const Real k = e.kappa;
        const Real x = base.pos[i][0], y = base.pos[i][1];
        const Real r_here = std::sqrt(k * x * x + y * y);
        const Real drx = k * x / r_here, dry = y / r_here;
        const Real drs = drx * drx + dry * dry;
        const Real et = eta(r_here, e.r0);
        const Real dr_w = drx * wx + dry * wy;
        norm_sq = (wx * wx + wy * wy) - (et / drs) * dr_w * dr_w;
      } else if (model.is_line()) {
        const Real wr = (nb.pos[i][0] - base.pos[i][0]) / delta;
        const auto md = eval_metric_line(model, base.pos[i][0]);
        norm_sq = md.ell_11 * wr * wr + md.ell_22;
      } else {
        const Real wr = (nb.pos[i][0] - base.pos[i][0]) / delta;
        const auto md = eval_metric_warped(model.end(), base.pos[i][0]);
        norm_sq = md.ell_11 * wr * wr + md.ell_22;
      }
      const Real F = norm_sq / ell_tt0;  // |w|^2_ell for a unit start vector
      lx.push_back(std::log((R + base.t[i]) / R));
      ly.push_back(std::log(std::max(F, 1e-300)));
    }
  }
  if (lx.size() < 4)
    throw ResolutionError("pushforward check: too few transported samples");
  const auto fit = least_squares(lx, ly);
  out.fitted_exponent = fit.slope;
  Real c = 0;
  for (std::size_t i = 0; i < lx.size(); ++i)
    c = std::max(c, std::exp(ly[i] - fit.slope * lx[i]));
  out.worst_constant = c;
  return out;
}

}  // namespace escat
