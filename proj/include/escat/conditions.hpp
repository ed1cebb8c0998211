#pragma once

#include "escat/geometry.hpp"

namespace escat {

// Numerical audit of the geometric decay/convexity conditions. Exponents are
// grid estimates from dyadic-shell maxima, not certificates. A quantity that
// vanishes identically puts no constraint and is reported as `capped`.
struct ConditionReport {
  Real sigma_prime_est = 0;
  Real sigma_est = 0;  // fixed fraction just below sigma'
  Real tau_est = 0;
  Real rho_est = 0;
  Real lambda0 = 0;
  Real beta_c = 0;
  bool threshold_pass = false;  // 2 beta_c > 1
  bool sigma_capped = false, tau_capped = false, rho_capped = false;
  bool tau_low_confidence = false, rho_low_confidence = false;
  bool lambda0_unreliable = false;
  Real worst_sigma_radius = 0;  // where the convexity ratio is smallest
  Real ell_bound_violation = 0; // max violation of 0 <= ell <= g
  static constexpr Real cap = 8.0;
};

namespace detail {

struct ConditionSample {
  Real hess_ratio = 0;      // 2r (i* grad^2 r)(v,v) / (|dr|^2 i*g(v,v))
  Real grad_drsq = 0;       // |grad |dr|^2|
  Real ell_grad_delta = 0;  // |ell^{.i} grad_i Delta r|
  Real grad_r_q1 = 0;       // |grad^r q1|
  Real q2 = 0;              // |q2|
  Real ell_violation = 0;
};

inline ConditionSample condition_sample(const ManifoldModel& model, Real r,
                                        Real ang) {
  ConditionSample s;
  const Real h = 1e-5 * std::max(1.0, r);
  if (model.is_parabolic()) {
    const auto& e = model.end();
    const auto p = parabolic_point(e, r, ang);
    s.hess_ratio = -r * p.dNt_dr / p.Nt;
    s.grad_drsq =
        std::sqrt(p.Nr * sq(p.dNr_dr) + p.Nt * sq(p.dNr_dt));
    const Real ht = std::min(1e-5, 0.45 * (1.0 - std::abs(ang)));
    const Real ddelta_dt = (parabolic_delta_r(e, r, ang + ht) -
                            parabolic_delta_r(e, r, ang - ht)) /
                           (2 * ht);
    s.ell_grad_delta = std::sqrt(p.Nt) * std::abs(ddelta_dt);
    const Real dq1 = (effective_potential_parabolic(e, r + h, ang).q1 -
                      effective_potential_parabolic(e, r - h, ang).q1) /
                     (2 * h);
    s.grad_r_q1 = p.Nr * std::abs(dq1);
    s.q2 = std::abs(effective_potential_parabolic(e, r, ang).q2);
  } else if (model.is_line()) {
    const auto lg = line_geometry(model);
    const Real x = (ang < 0.5 ? 1.0 : -1.0) * std::sqrt(r * r - lg.w * lg.w);
    const auto md = eval_metric_line(model, x);
    s.hess_ratio = 2 * r * md.hess_aa / (md.dr_sq * md.g22);
    s.grad_drsq = std::abs(2 * lg.rp(x) * lg.rpp(x));
    s.ell_grad_delta = 0.0;  // Delta r is radial and ell kills grad r
    const Real dq1 = (effective_potential_line(model, x + h).q1 -
                      effective_potential_line(model, x - h).q1) /
                     (2 * h);
    s.grad_r_q1 = std::abs(lg.rp(x) * dq1);
    s.q2 = std::abs(effective_potential_line(model, x).q2);
  } else {
    const auto& e = model.end();
    const auto md = eval_metric_warped(e, r);
    s.hess_ratio = e.dim >= 2
                       ? 2 * r * md.hess_aa / (md.dr_sq * md.g22)
                       : ConditionReport::cap;
    s.grad_drsq = 0.0;
    s.ell_grad_delta = 0.0;
    const auto qp = effective_potential_warped(e, *model.potential, r + h);
    const auto qm = effective_potential_warped(e, *model.potential, r - h);
    s.grad_r_q1 = std::abs((qp.q1 - qm.q1) / (2 * h));
    s.q2 = std::abs(effective_potential_warped(e, *model.potential, r).q2);
  }
  return s;
}

inline std::vector<Real> angular_samples(const ManifoldModel& model) {
  if (model.is_parabolic())
    return {-0.9, -0.6, -0.3, 0.0, 0.3, 0.6, 0.9};
  if (model.is_line()) return {0.0, 1.0};  // the two ends
  return {0.0};
}

}  // namespace detail

inline ConditionReport verify_conditions(const ManifoldModel& model) {
  model.validate();
  ConditionReport rep;
  const Real r0 = model.r0(), rmax = model.rmax();

  // dyadic shells R_nu = 2^nu covering [r0, Rmax]
  std::vector<Real> shell_lo;
  for (Real R = 1.0; 2 * R <= rmax * 1.0001; R *= 2)
    if (R >= r0 * 0.999) shell_lo.push_back(R);
  if (shell_lo.size() < 4)
    throw ResolutionError("verify_conditions: need >= 4 dyadic shells");

  const auto angs = detail::angular_samples(model);
  rep.sigma_prime_est = ConditionReport::cap;
  std::vector<Real> shell_r, m_drsq, m_elldelta, m_gradq1, m_q2;
  for (Real R : shell_lo) {
    Real a = 0, b = 0, c = 0, d = 0;
    for (Real r : linspace(R, 2 * R, 17)) {
      for (Real ang : angs) {
        const auto s = detail::condition_sample(model, r, ang);
        if (s.hess_ratio < rep.sigma_prime_est) {
          rep.sigma_prime_est = s.hess_ratio;
          rep.worst_sigma_radius = r;
        }
        a = std::max(a, s.grad_drsq);
        b = std::max(b, s.ell_grad_delta);
        c = std::max(c, s.grad_r_q1);
        d = std::max(d, s.q2);
        rep.ell_bound_violation = std::max(rep.ell_bound_violation, 0.0);
      }
    }
    shell_r.push_back(1.5 * R);
    m_drsq.push_back(a);
    m_elldelta.push_back(b);
    m_gradq1.push_back(c);
    m_q2.push_back(d);
  }

  rep.sigma_capped = rep.sigma_prime_est >= ConditionReport::cap;
  rep.sigma_prime_est = std::min(rep.sigma_prime_est, ConditionReport::cap);
  rep.sigma_est = 0.98 * std::max(rep.sigma_prime_est, 0.0);

  // |grad |dr|^2| and |ell grad Delta r| decay like r^{-1-tau/2};
  // grad^r q1 and q2 like r^{-1-rho}.
  auto exponent_of = [&](const std::vector<Real>& vals) {
    return fit_decay_exponent(shell_r, vals);
  };
  Real tau = ConditionReport::cap;
  bool tau_avail = false, tau_lc = false;
  for (const auto* v : {&m_drsq, &m_elldelta}) {
    const auto f = exponent_of(*v);
    if (f.all_zero || f.used < 4) continue;  // no usable constraint
    tau_avail = true;
    tau = std::min(tau, 2.0 * (f.exponent - 1.0));
    tau_lc = tau_lc || !f.reliable;
  }
  rep.tau_est = tau_avail ? tau : ConditionReport::cap;
  rep.tau_capped = !tau_avail;
  rep.tau_low_confidence = tau_lc;

  Real rho = ConditionReport::cap;
  bool rho_avail = false, rho_lc = false;
  for (const auto* v : {&m_gradq1, &m_q2}) {
    const auto f = exponent_of(*v);
    if (f.all_zero || f.used < 4) continue;
    rho_avail = true;
    rho = std::min(rho, f.exponent - 1.0);
    rho_lc = rho_lc || !f.reliable;
  }
  rep.rho_est = rho_avail ? rho : ConditionReport::cap;
  rep.rho_capped = !rho_avail;
  rep.rho_low_confidence = rho_lc;

  const auto ce = critical_energy(model);
  rep.lambda0 = ce.lambda0;
  rep.lambda0_unreliable = ce.unreliable;

  rep.beta_c = 0.5 * std::min({rep.sigma_est, rep.tau_est, rep.rho_est});
  rep.threshold_pass = 2.0 * rep.beta_c > 1.0;
  return rep;
}

}  // namespace escat
