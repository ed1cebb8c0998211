#pragma once

#include "escat/solver.hpp"

namespace escat {

// Cumulative phase int k1 dx with k1 = eta_lambda sqrt(2(lambda - q1)),
// measured outward from each end's reference point. On warped and line
// charts this equals int b_tilde ds along the normalized flow.
struct PhaseTable {
  Real lambda = 0, lambda0 = 0, rlam = 0;
  std::vector<Real> k1;
  std::vector<Real> phi_cum;  // from the grid start, trapezoid
  std::size_t i_right0 = 0, i_left0 = 0;

  // outward phase on the end containing grid index i
  Real outward(const Track& tr, std::size_t i) const {
    if (!tr.line || tr.x[i] >= 0) return phi_cum[i] - phi_cum[i_right0];
    return phi_cum[i_left0] - phi_cum[i];
  }
};

inline PhaseTable make_phase_table(const ManifoldModel& model, const Track& tr,
                                   Real lambda) {
  PhaseTable pt;
  const auto ce = critical_energy(model);
  pt.lambda = lambda;
  pt.lambda0 = ce.lambda0;
  if (lambda <= ce.lambda0)
    throw SpectralError("phase table requires lambda > lambda0");
  pt.rlam = r_lambda(model, lambda, ce.lambda0);
  pt.k1.resize(tr.x.size());
  for (std::size_t i = 0; i < tr.x.size(); ++i) {
    const Real el = eta_lambda(tr.r[i], pt.rlam);
    pt.k1[i] =
        el * std::real(sqrt_principal(Complex(2.0 * (lambda - tr.q1[i]), 0)));
  }
  pt.phi_cum = cumtrapz(pt.k1, tr.h);
  pt.i_right0 = tr.index_at(tr.x0_right);
  pt.i_left0 = tr.line ? tr.index_at(tr.x0_left) : pt.i_right0;
  return pt;
}

// ---------------------------------------------------------------------------
// XiTrace: the flow-transported, phase-stripped, half-density-weighted trace
// of sqrt(b) phi on r-spheres, one complex value per (end, mode, radius).

struct XiTrace {
  Real lambda = 0;
  int sign = +1;  // +1: built from R(lambda+i0); -1: from R(lambda-i0)
  std::size_t n_ends = 1, n_modes = 0;
  std::vector<Real> radii;
  // values[end][mode][radius index]
  std::vector<std::vector<std::vector<Complex>>> values;
  std::vector<std::vector<std::size_t>> grid_index;  // [end][radius index]
};

namespace detail {

// Transported coefficient at grid index i for one mode:
//   xi = exp(-+ i Phi_out) * k1^{1/2} * u   (weights of dA~ and the
// half-density transport cancel; see the warped/line reduction).
inline Complex xi_value(const Track& tr, const PhaseTable& pt, int sign,
                        const std::vector<Complex>& u, std::size_t i) {
  const Real ph = pt.outward(tr, i);
  const Complex osc =
      std::exp(Complex(0, -Real(sign)) * ph);
  return osc * std::sqrt(std::max(pt.k1[i], 0.0)) * u[i];
}

}  // namespace detail

inline XiTrace xi_trace(const ManifoldModel& model, const Track& tr,
                        const PhaseTable& pt, const ResolventSolution& sol) {
  int sign;
  switch (sol.bc) {
    case BoundaryCondition::radiation_outgoing: sign = +1; break;
    case BoundaryCondition::radiation_incoming: sign = -1; break;
    default:
      throw ShapeError(
          "xi_trace needs a radiation solution with a definite sign");
  }
  XiTrace tx;
  tx.lambda = pt.lambda;
  tx.sign = sign;
  tx.n_ends = tr.line ? 2 : 1;
  tx.n_modes = sol.phi.u.size();
  tx.values.assign(tx.n_ends, {});
  tx.grid_index.assign(tx.n_ends, {});
  // shared radius samples: all grid radii beyond r0 on the right end
  for (std::size_t i = 0; i < tr.x.size(); ++i) {
    if (tr.x[i] < tr.x0_right - 1e-12) continue;
    tx.radii.push_back(tr.r[i]);
    tx.grid_index[0].push_back(i);
  }
  if (tr.line) {
    for (std::size_t k = 0; k < tx.radii.size(); ++k) {
      // mirror index on the left end
      const std::size_t i = tx.grid_index[0][k];
      const std::size_t j = tr.index_at(-tr.x[i]);
      tx.grid_index[1].push_back(j);
    }
  }
  for (std::size_t e = 0; e < tx.n_ends; ++e) {
    tx.values[e].assign(tx.n_modes, std::vector<Complex>(tx.radii.size()));
    for (std::size_t m = 0; m < tx.n_modes; ++m)
      for (std::size_t k = 0; k < tx.radii.size(); ++k)
        tx.values[e][m][k] = detail::xi_value(tr, pt, sign, sol.phi.u[m],
                                              tx.grid_index[e][k]);
  }
  return tx;
}

// Uniform window average over r in [R, 2R] of per-radius samples.
inline Complex window_average(const std::vector<Real>& radii,
                              const std::vector<Complex>& vals, Real R) {
  Complex acc(0, 0);
  Real len = 0;
  for (std::size_t k = 0; k + 1 < radii.size(); ++k) {
    const Real r0 = radii[k], r1 = radii[k + 1];
    if (r0 < R || r1 > 2 * R) continue;
    acc += 0.5 * (vals[k] + vals[k + 1]) * (r1 - r0);
    len += r1 - r0;
  }
  if (len <= 0) throw ResolutionError("window average: empty window");
  return acc / len;
}

// ---------------------------------------------------------------------------
// Distorted Fourier transform at fixed lambda: averaged large-radius limit
// of the transported trace.

struct BoundaryData {
  std::size_t n_ends = 1, n_modes = 0;
  std::vector<Complex> coef;  // flattened end-major: coef[end * n_modes + m]

  Complex& at(std::size_t e, std::size_t m) { return coef[e * n_modes + m]; }
  Complex at(std::size_t e, std::size_t m) const {
    return coef[e * n_modes + m];
  }
  Real norm() const {
    Real s = 0;
    for (const auto& c : coef) s += std::norm(c);
    return std::sqrt(s);
  }
};

struct DFTResult {
  BoundaryData xi;
  Real cauchy = 0;         // G-distance between the last two window averages
  Real parseval_gap = 0;   // | ||xi||^2 - 2 sign Im<psi, phi> |
  Real window_lo = 0;
  bool converged = true;
};

inline DFTResult dft_from_solution(const ManifoldModel& model, const Track& tr,
                                   const PhaseTable& pt,
                                   const ResolventSolution& sol,
                                   const ModeFunction& psi,
                                   Real cauchy_tol = 1e-2) {
  const auto tx = xi_trace(model, tr, pt, sol);
  DFTResult out;
  out.xi.n_ends = tx.n_ends;
  out.xi.n_modes = tx.n_modes;
  out.xi.coef.assign(tx.n_ends * tx.n_modes, Complex(0, 0));
  const Real rmax = tx.radii.back();
  const Real R = rmax / 2;
  out.window_lo = R;
  Real dist2 = 0;
  for (std::size_t e = 0; e < tx.n_ends; ++e)
    for (std::size_t m = 0; m < tx.n_modes; ++m) {
      const Complex w1 = window_average(tx.radii, tx.values[e][m], R);
      const Complex w0 = window_average(tx.radii, tx.values[e][m], R / 2);
      out.xi.at(e, m) = w1;
      dist2 += std::norm(w1 - w0);
    }
  out.cauchy = std::sqrt(dist2);
  const Real scale = std::max(out.xi.norm(), 1e-300);
  out.converged = out.cauchy <= cauchy_tol * scale;
  out.parseval_gap = std::abs(
      sq(out.xi.norm()) - 2.0 * tx.sign * std::imag(inner(psi, sol.phi)));
  return out;
}

inline DFTResult dft(const ManifoldModel& model, const ModeBasis& basis,
                     const Track& tr, const ModeFunction& psi, Real lambda,
                     int sign, Real cauchy_tol = 1e-2) {
  const auto pt = make_phase_table(model, tr, lambda);
  const auto sol = solve_resolvent(
      model, basis, tr, psi, Complex(lambda, 0),
      sign > 0 ? BoundaryCondition::radiation_outgoing
               : BoundaryCondition::radiation_incoming);
  return dft_from_solution(model, tr, pt, sol, psi, cauchy_tol);
}

// ---------------------------------------------------------------------------
// Zeroth-order WKB generalized eigenfunctions phi^{+/-}[xi]: amplitude
// [2 |dr|^2 (lambda - q1)]^{-1/4}, phase exp(+/- i int b~), cutoff bar_chi_n,
// realized in half-density gauge.

inline ModeFunction wkb_eigenfunction(const ManifoldModel& model,
                                      const Track& tr, const PhaseTable& pt,
                                      int sign, const BoundaryData& xi,
                                      Real cutoff_R) {
  ModeFunction out;
  out.h = tr.h;
  out.gauge = Gauge::half_density;
  out.u.assign(xi.n_modes, std::vector<Complex>(tr.x.size(), Complex(0, 0)));
  // branch sanity beyond the cutoff support
  for (std::size_t i = 0; i < tr.x.size(); ++i)
    if (tr.r[i] >= cutoff_R && pt.lambda - tr.q1[i] <= 0)
      throw SpectralError(
          "wkb_eigenfunction: lambda - q1 <= 0 beyond the cutoff");
  for (std::size_t e = 0; e < xi.n_ends; ++e) {
    for (std::size_t i = 0; i < tr.x.size(); ++i) {
      const bool on_end = !tr.line || (e == 0 ? tr.x[i] > 0 : tr.x[i] < 0);
      if (!on_end) continue;
      const Real cb = bar_chi(tr.r[i], cutoff_R);
      if (cb <= 0 || pt.k1[i] <= 1e-14) continue;
      // in half-density gauge the |dr| factors of the geometric amplitude
      // cancel against the transport weight: u_m = k1^{-1/2} e^{is Phi} xi_m
      const Complex osc =
          std::exp(Complex(0, Real(sign)) * pt.outward(tr, i));
      const Complex base = cb * osc / std::sqrt(pt.k1[i]);
      for (std::size_t m = 0; m < xi.n_modes; ++m)
        out.u[m][i] += base * xi.at(e, m);
    }
  }
  return out;
}

// Discrete (H - z) application with the solver's stencil; boundary rows are
// returned as zero.
inline ModeFunction apply_h_minus_z(const ManifoldModel& model,
                                    const ModeBasis& basis, const Track& tr,
                                    const ModeFunction& phi, Complex z) {
  ModeFunction out;
  out.h = tr.h;
  out.u.assign(phi.u.size(), std::vector<Complex>(tr.x.size(), Complex(0, 0)));
  for (std::size_t m = 0; m < phi.u.size(); ++m) {
    for (std::size_t i = 1; i + 1 < tr.x.size(); ++i) {
      const Real veff =
          tr.wv[i] +
          (model.dim() >= 2 ? basis.nu[m] / (2 * sq(tr.f[i])) : 0.0);
      out.u[m][i] = -0.5 *
                        (phi.u[m][i + 1] - 2.0 * phi.u[m][i] +
                         phi.u[m][i - 1]) /
                        sq(tr.h) +
                    (veff - z) * phi.u[m][i];
    }
  }
  return out;
}

// ---------------------------------------------------------------------------
// Genuine generalized eigenfunction with prescribed incoming data:
//   phi = psi_- + (lambda - i) R(lambda + i0) psi_- - phi^-[xi_-],
//   psi_- = R(i) (H - lambda) phi^-[xi_-],  xi_+ = (lambda - i) F^+ psi_-.

struct GeneralizedEigenfunction {
  ModeFunction phi;
  BoundaryData xi_minus, xi_plus;
  Real dft_cauchy = 0;
  bool converged = true;
  Real eigen_residual = 0;  // interior ||(H-lambda) phi|| / ||phi||_{B*}
};

// Cutoff scale R_n: support [R_n, 2 R_n] must clear the zeros of b and the
// inner wall, and stay below the averaging windows.
inline Real default_wkb_cutoff(const ManifoldModel& model, const Track& tr,
                               const PhaseTable& pt) {
  const Real rmax = tr.r[tr.x.size() - 1];
  const Real need = std::max(2.0 * model.r0(), pt.rlam);
  Real R = 1.0;
  while (R < need) R *= 2;
  if (2 * R > rmax / 4)
    throw ResolutionError(
        "grid too short to separate the WKB cutoff from the averaging "
        "windows; increase Rmax");
  return R;
}

inline GeneralizedEigenfunction generalized_eigenfunction(
    const ManifoldModel& model, const ModeBasis& basis, const Track& tr,
    Real lambda, const BoundaryData& xi_minus, Real cutoff_R = 0) {
  const auto pt = make_phase_table(model, tr, lambda);
  if (cutoff_R <= 0) cutoff_R = default_wkb_cutoff(model, tr, pt);
  GeneralizedEigenfunction out;
  out.xi_minus = xi_minus;

  const auto phi_in = wkb_eigenfunction(model, tr, pt, -1, xi_minus, cutoff_R);
  const auto src = apply_h_minus_z(model, basis, tr, phi_in,
                                   Complex(lambda, 0));
  const auto sol_i = solve_resolvent(model, basis, tr, src, Complex(0, 1),
                                     BoundaryCondition::damped);
  const auto& psi_minus = sol_i.phi;
  const auto sol_out =
      solve_resolvent(model, basis, tr, psi_minus, Complex(lambda, 0),
                      BoundaryCondition::radiation_outgoing);
  const auto ft = dft_from_solution(model, tr, pt, sol_out, psi_minus);
  out.dft_cauchy = ft.cauchy;
  out.converged = ft.converged;
  out.xi_plus = ft.xi;
  const Complex lam_i(lambda, -1.0);
  for (auto& c : out.xi_plus.coef) c *= lam_i;

  out.phi.h = tr.h;
  out.phi.u.assign(basis.count,
                   std::vector<Complex>(tr.x.size(), Complex(0, 0)));
  for (std::size_t m = 0; m < basis.count; ++m)
    for (std::size_t i = 0; i < tr.x.size(); ++i)
      out.phi.u[m][i] = psi_minus.u[m][i] +
                        lam_i * sol_out.phi.u[m][i] - phi_in.u[m][i];

  const auto resid = apply_h_minus_z(model, basis, tr, out.phi,
                                     Complex(lambda, 0));
  Real rn = 0;
  for (const auto& um : resid.u)
    for (std::size_t i = 2; i + 2 < um.size(); ++i) rn += std::norm(um[i]);
  out.eigen_residual = std::sqrt(rn * tr.h) /
                       std::max(besov_norms(out.phi, tr).Bstar, 1e-300);
  return out;
}

// ---------------------------------------------------------------------------
// Asymptotic data of an approximate generalized eigenfunction:
//   xi_{+/-} = 1/2 avg of the transported b^{-1/2} (A +/- b) phi.

struct ExtractedData {
  BoundaryData xi_minus, xi_plus;
  Real cauchy_minus = 0, cauchy_plus = 0;
  Real norm_gap = 0;      // | ||xi_+|| - ||xi_-|| |
  Real shell_energy = 0;  // R^{-1} int_{B_2R \ B_R} b |phi|^2
};

inline ExtractedData extract_asymptotics(const ManifoldModel& model,
                                         const ModeBasis& basis,
                                         const Track& tr,
                                         const PhaseTable& pt,
                                         const ModeFunction& phi,
                                         Real residual_tol = 0.05) {
  // refuse inputs that are far from the kernel of (H - lambda), measured on
  // the outer shells where cutoff tails cannot contaminate the test
  {
    Real rn = 0, sc = 0;
    const Real r_guard = tr.r[tr.x.size() - 1] / 4;
    for (std::size_t m = 0; m < phi.u.size(); ++m)
      for (std::size_t i = 2; i + 2 < tr.x.size(); ++i) {
        if (tr.r[i] < r_guard) continue;
        const Real veff =
            tr.wv[i] +
            (model.dim() >= 2 ? basis.nu[m] / (2 * sq(tr.f[i])) : 0.0);
        const Complex Hu =
            -0.5 * (phi.u[m][i + 1] - 2.0 * phi.u[m][i] + phi.u[m][i - 1]) /
                sq(tr.h) +
            (veff - pt.lambda) * phi.u[m][i];
        rn += std::norm(Hu);
        sc += std::norm(phi.u[m][i]);
      }
    if (sc > 0 && std::sqrt(rn / sc) > residual_tol * (1.0 + pt.lambda))
      throw DomainError(
          "extract_asymptotics: input is not an approximate generalized "
          "eigenfunction");
  }
  ExtractedData out;
  const std::size_t n = tr.x.size();
  const std::size_t n_modes = phi.u.size();
  const std::size_t n_ends = tr.line ? 2 : 1;
  out.xi_minus.n_ends = out.xi_plus.n_ends = n_ends;
  out.xi_minus.n_modes = out.xi_plus.n_modes = n_modes;
  out.xi_minus.coef.assign(n_ends * n_modes, Complex(0, 0));
  out.xi_plus.coef.assign(n_ends * n_modes, Complex(0, 0));

  // v = sqrt(p) u and its derivative
  std::vector<Real> radii;
  std::vector<std::size_t> idx_r;
  for (std::size_t i = 1; i + 1 < n; ++i)
    if (tr.x[i] >= tr.x0_right - 1e-12) {
      radii.push_back(tr.r[i]);
      idx_r.push_back(i);
    }
  const Real R = radii.back() / 2;
  Real c2m = 0, c2p = 0;
  for (std::size_t e = 0; e < n_ends; ++e) {
    for (std::size_t m = 0; m < n_modes; ++m) {
      std::vector<Complex> tp(radii.size()), tm(radii.size());
      for (std::size_t k = 0; k < radii.size(); ++k) {
        std::size_t i = idx_r[k];
        if (e == 1) i = tr.index_at(-tr.x[i]);
        const Complex vm1 = std::sqrt(tr.p[i - 1]) * phi.u[m][i - 1];
        const Complex vp1 = std::sqrt(tr.p[i + 1]) * phi.u[m][i + 1];
        const Complex v0 = std::sqrt(tr.p[i]) * phi.u[m][i];
        Complex dv = (vp1 - vm1) / (2 * tr.h);
        if (e == 1) dv = -dv;  // outward derivative on the left end
        const Real k1 = std::max(pt.k1[i], 1e-14);
        const Complex Av = Complex(0, -1) * dv;
        const Real w = 1.0 / (std::sqrt(k1) * std::sqrt(tr.p[i]));
        const Complex osc_p = std::exp(Complex(0, -1) * pt.outward(tr, i));
        const Complex osc_m = std::exp(Complex(0, +1) * pt.outward(tr, i));
        tp[k] = 0.5 * osc_p * w * (Av + k1 * v0);
        tm[k] = 0.5 * osc_m * w * (Av - k1 * v0);
      }
      const Complex ap1 = window_average(radii, tp, R);
      const Complex ap0 = window_average(radii, tp, R / 2);
      const Complex am1 = window_average(radii, tm, R);
      const Complex am0 = window_average(radii, tm, R / 2);
      out.xi_plus.at(e, m) = ap1;
      out.xi_minus.at(e, m) = am1;
      c2p += std::norm(ap1 - ap0);
      c2m += std::norm(am1 - am0);
    }
  }
  out.cauchy_plus = std::sqrt(c2p);
  out.cauchy_minus = std::sqrt(c2m);
  out.norm_gap = std::abs(out.xi_plus.norm() - out.xi_minus.norm());

  // shell energy R^{-1} int b |phi|^2 over the outermost full window
  Real en = 0;
  for (std::size_t i = 0; i < n; ++i)
    if (tr.r[i] >= R && tr.r[i] <= 2 * R) {
      Real slice = 0;
      for (std::size_t m = 0; m < n_modes; ++m)
        slice += std::norm(phi.u[m][i]);
      en += tr.p[i] * pt.k1[i] * slice * tr.h;
    }
  out.shell_energy = en / R;
  return out;
}

}  // namespace escat
