#pragma once

#include <Eigen/Dense>

#include "escat/geometry.hpp"

namespace escat {

struct AngularGrid {
  AngularKind kind = AngularKind::circle;
  std::vector<Real> theta;
  std::vector<Real> weight;  // quadrature weights for the plain d(theta) measure
};

inline AngularGrid make_angular_grid(AngularKind kind, std::size_t n = 401) {
  AngularGrid g;
  g.kind = kind;
  if (kind == AngularKind::none) {
    g.theta = {0.0};
    g.weight = {1.0};
    return g;
  }
  if (kind == AngularKind::circle) {
    g.theta.resize(n);
    g.weight.assign(n, 2 * pi / Real(n));
    for (std::size_t j = 0; j < n; ++j) g.theta[j] = 2 * pi * Real(j) / Real(n);
  } else {
    g.theta = linspace(-1.0, 1.0, n);
    const Real h = 2.0 / Real(n - 1);
    g.weight.assign(n, h);
    g.weight.front() = g.weight.back() = h / 2;
  }
  return g;
}

// Angular eigenbasis of the reference sphere operator: nu are eigenvalues of
// -d^2/dtheta^2 (circle: m^2 exactly; Dirichlet interval: finite differences
// refined by Richardson on two grids). Vectors are orthonormal against the
// plain d(theta) quadrature.
struct ModeBasis {
  AngularKind kind = AngularKind::circle;
  int truncation = 0;              // circle: max |m|; interval: mode count
  std::size_t count = 0;
  std::vector<Real> nu;            // nondecreasing
  std::vector<int> label;          // circle: signed m (cos: +m, sin: -m)
  AngularGrid grid;
  std::vector<std::vector<Real>> vec;  // [mode][grid node]
};

namespace detail {

// Dirichlet eigenpairs of -d^2/dtheta^2 on (-1,1), h^2-accurate FD.
inline std::pair<std::vector<Real>, Eigen::MatrixXd> interval_fd_eigen(
    std::size_t n_nodes, int count) {
  const std::size_t m = n_nodes - 2;  // interior points
  const Real h = 2.0 / Real(n_nodes - 1);
  Eigen::MatrixXd A = Eigen::MatrixXd::Zero(m, m);
  for (std::size_t i = 0; i < m; ++i) {
    A(i, i) = 2.0 / (h * h);
    if (i + 1 < m) {
      A(i, i + 1) = -1.0 / (h * h);
      A(i + 1, i) = -1.0 / (h * h);
    }
  }
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(A);
  std::vector<Real> evs(count);
  for (int k = 0; k < count; ++k) evs[k] = es.eigenvalues()(k);
  return {evs, es.eigenvectors().leftCols(count)};
}

}  // namespace detail

inline ModeBasis build_mode_basis(const ManifoldModel& model, int M,
                                  std::size_t angular_nodes = 401) {
  if (M < 1) throw ShapeError("build_mode_basis: M >= 1 required");
  const auto kind = model.end(0).angular;
  ModeBasis basis;
  basis.kind = kind;
  basis.truncation = M;
  basis.grid = make_angular_grid(kind, kind == AngularKind::none
                                           ? 1
                                           : angular_nodes);
  if (kind == AngularKind::none) {
    basis.count = 1;
    basis.nu = {0.0};
    basis.label = {0};
    basis.vec = {{1.0}};
    return basis;
  }
  if (std::size_t(M) > basis.grid.theta.size() / 4)
    throw ResolutionError("mode truncation exceeds angular resolution/4");

  if (kind == AngularKind::circle) {
    basis.count = std::size_t(2 * M + 1);
    const auto& th = basis.grid.theta;
    auto push = [&](Real nu, int label, auto&& fn) {
      std::vector<Real> v(th.size());
      for (std::size_t j = 0; j < th.size(); ++j) v[j] = fn(th[j]);
      basis.nu.push_back(nu);
      basis.label.push_back(label);
      basis.vec.push_back(std::move(v));
    };
    push(0.0, 0, [&](Real) { return 1.0 / std::sqrt(2 * pi); });
    for (int m = 1; m <= M; ++m) {
      push(Real(m) * m, +m,
           [&](Real t) { return std::cos(m * t) / std::sqrt(pi); });
      push(Real(m) * m, -m,
           [&](Real t) { return std::sin(m * t) / std::sqrt(pi); });
    }
    return basis;
  }

  // Dirichlet interval: Richardson refinement h -> h/2 of the eigenvalues,
  // eigenvectors taken from the fine grid restricted to the coarse nodes.
  basis.count = std::size_t(M);
  const std::size_t n1 = basis.grid.theta.size();
  const std::size_t n2 = 2 * (n1 - 1) + 1;
  auto [ev1, vec1] = detail::interval_fd_eigen(n1, M);
  auto [ev2, vec2] = detail::interval_fd_eigen(n2, M);
  for (int k = 0; k < M; ++k) {
    basis.nu.push_back((4.0 * ev2[k] - ev1[k]) / 3.0);
    basis.label.push_back(k + 1);
    std::vector<Real> v(n1, 0.0);
    for (std::size_t j = 1; j + 1 < n1; ++j) v[j] = vec2(2 * j - 1, k);
    // normalize against the quadrature weights
    Real nrm = 0;
    for (std::size_t j = 0; j < n1; ++j)
      nrm += basis.grid.weight[j] * v[j] * v[j];
    nrm = std::sqrt(nrm);
    // fix a sign convention: positive slope at theta = -1
    const Real sgn = v[1] >= 0 ? 1.0 : -1.0;
    for (auto& y : v) y *= sgn / nrm;
    basis.vec.push_back(std::move(v));
  }
  return basis;
}

// ---------------------------------------------------------------------------
// Half-density mode profiles. u_m(x) = f(x)^{(d-1)/2} <e_m, phi(x,.)>, so
// that sum_m int |u_m|^2 dx equals the geometric L^2(M) norm squared.

enum class Gauge { half_density, geometric };

struct ModeFunction {
  std::vector<std::vector<Complex>> u;  // [mode][radial node]
  Gauge gauge = Gauge::half_density;
  Real h = 0;  // radial grid spacing

  std::size_t modes() const { return u.size(); }
  Real norm_sq() const {
    Real s = 0;
    for (const auto& um : u) {
      Real acc = 0;
      for (std::size_t i = 0; i < um.size(); ++i) {
        const Real wq = (i == 0 || i + 1 == um.size()) ? 0.5 : 1.0;
        acc += wq * std::norm(um[i]);
      }
      s += acc * h;
    }
    return s;
  }
};

// Geometric samples phi[x-index][angular node] -> half-density profiles.
inline ModeFunction to_modes(const std::vector<std::vector<Complex>>& phi,
                             const ModeBasis& basis,
                             const std::vector<Real>& fpow, Real h) {
  if (!phi.empty() && phi.front().size() != basis.grid.theta.size())
    throw ShapeError("to_modes: angular grid mismatch");
  if (phi.size() != fpow.size())
    throw ShapeError("to_modes: radial grid mismatch");
  ModeFunction mf;
  mf.h = h;
  mf.u.assign(basis.count, std::vector<Complex>(phi.size(), Complex(0, 0)));
  for (std::size_t m = 0; m < basis.count; ++m) {
    for (std::size_t i = 0; i < phi.size(); ++i) {
      Complex acc(0, 0);
      for (std::size_t j = 0; j < basis.grid.theta.size(); ++j)
        acc += basis.grid.weight[j] * basis.vec[m][j] * phi[i][j];
      mf.u[m][i] = fpow[i] * acc;
    }
  }
  return mf;
}

inline std::vector<std::vector<Complex>> from_modes(
    const ModeFunction& mf, const ModeBasis& basis,
    const std::vector<Real>& fpow) {
  const std::size_t nx = mf.u.empty() ? 0 : mf.u[0].size();
  if (nx != fpow.size()) throw ShapeError("from_modes: radial grid mismatch");
  std::vector<std::vector<Complex>> phi(
      nx, std::vector<Complex>(basis.grid.theta.size(), Complex(0, 0)));
  for (std::size_t m = 0; m < basis.count; ++m)
    for (std::size_t i = 0; i < nx; ++i) {
      const Complex c = mf.u[m][i] / fpow[i];
      for (std::size_t j = 0; j < basis.grid.theta.size(); ++j)
        phi[i][j] += c * basis.vec[m][j];
    }
  return phi;
}

// f^{(d-1)/2} along the radial grid of a model.
inline std::vector<Real> half_density_weights(const ManifoldModel& model,
                                              const std::vector<Real>& x) {
  std::vector<Real> fp(x.size(), 1.0);
  const int d = model.dim();
  if (d < 2) return fp;
  if (model.is_line()) {
    const auto lg = line_geometry(model);
    for (std::size_t i = 0; i < x.size(); ++i)
      fp[i] = std::pow(lg.f(x[i]), 0.5 * (d - 1));
  } else {
    for (std::size_t i = 0; i < x.size(); ++i)
      fp[i] = std::pow(model.end().warp->f(x[i]), 0.5 * (d - 1));
  }
  return fp;
}

// Radial operator coefficients for one angular mode in half-density gauge:
// h_m = -1/2 d^2/dx^2 + nu_m/(2 f^2) + W/2 + V. Refuses angular-dependent
// potentials (none of the shipped potentials are).
struct ModeHamiltonian {
  Real nu = 0;
  std::vector<Real> veff;  // nu/(2 f^2) + W/2 + V on the radial grid
};

inline ModeHamiltonian assemble_mode_hamiltonian(const ManifoldModel& model,
                                                 const ModeBasis& basis,
                                                 std::size_t mode,
                                                 const std::vector<Real>& x) {
  if (model.is_parabolic())
    throw ShapeError(
        "parabolic charts are not separable; use the 2D path");
  ModeHamiltonian hm;
  hm.nu = basis.nu.at(mode);
  hm.veff.resize(x.size());
  const int d = model.dim();
  for (std::size_t i = 0; i < x.size(); ++i) {
    Real f = 1, fp = 0, fpp = 0, V;
    if (model.is_line()) {
      const auto lg = line_geometry(model);
      f = lg.f(x[i]);
      fp = lg.df(x[i]);
      fpp = lg.d2f(x[i]);
      V = model.potential->v(x[i]);
    } else {
      if (d >= 2) {
        f = model.end().warp->f(x[i]);
        fp = model.end().warp->df(x[i]);
        fpp = model.end().warp->d2f(x[i]);
      }
      V = model.potential->v(x[i]);
    }
    hm.veff[i] = (d >= 2 ? hm.nu / (2 * f * f) : 0.0) +
                 liouville_half_density_potential(d, f, fp, fpp) + V;
  }
  return hm;
}

}  // namespace escat
