#include "test_helpers.hpp"

#include <random>

#include "escat/modes.hpp"
#include "escat/solver.hpp"

using namespace escat;
using Catch::Approx;

TEST_CASE("circle basis: Fourier eigenvalues") {
  auto model = testing::euclidean_surface();
  const auto basis = build_mode_basis(model, 3, 128);
  REQUIRE(basis.count == 7);
  const std::vector<Real> expect = {0, 1, 1, 4, 4, 9, 9};
  for (std::size_t i = 0; i < basis.count; ++i)
    CHECK(basis.nu[i] == Approx(expect[i]).margin(1e-12));
  // orthonormal against the angular quadrature
  for (std::size_t a = 0; a < basis.count; ++a)
    for (std::size_t b = 0; b < basis.count; ++b) {
      Real s = 0;
      for (std::size_t j = 0; j < basis.grid.theta.size(); ++j)
        s += basis.grid.weight[j] * basis.vec[a][j] * basis.vec[b][j];
      REQUIRE(std::abs(s - (a == b ? 1.0 : 0.0)) < 1e-10);
    }
}

TEST_CASE("interval basis: Dirichlet sine eigenvalues") {
  auto tube = testing::twoend_tube();
  const auto basis = build_mode_basis(tube, 8);
  // nu_k = (k pi / 2)^2 for -d^2/dtheta^2; halve for -1/2 d^2/dtheta^2
  CHECK(0.5 * basis.nu[0] == Approx(pi * pi / 8).margin(1e-8));
  CHECK(0.5 * basis.nu[1] == Approx(pi * pi / 2).margin(1e-8));
  for (std::size_t m = 1; m < basis.count; ++m)
    CHECK(basis.nu[m] >= basis.nu[m - 1]);
  for (std::size_t m = 0; m < basis.count; ++m) {
    CHECK(basis.vec[m].front() == 0.0);
    CHECK(basis.vec[m].back() == 0.0);
  }
  CHECK_THROWS_AS(build_mode_basis(tube, 200, 401), ResolutionError);
}

TEST_CASE("to_modes picks out a single angular harmonic") {
  auto model = testing::euclidean_surface();
  const auto basis = build_mode_basis(model, 4, 256);
  const auto x = linspace(1.0, 8.0, 71);
  const Real h = x[1] - x[0];
  const auto fpow = half_density_weights(model, x);
  // phi(r, s) = g(r) e^{i s}
  std::vector<std::vector<Complex>> phi(x.size());
  auto g = [](Real r) { return std::exp(-sq(r - 3.0)); };
  for (std::size_t i = 0; i < x.size(); ++i) {
    phi[i].resize(basis.grid.theta.size());
    for (std::size_t j = 0; j < basis.grid.theta.size(); ++j)
      phi[i][j] = g(x[i]) * std::exp(Complex(0, basis.grid.theta[j]));
  }
  const auto mf = to_modes(phi, basis, fpow, h);
  for (std::size_t m = 0; m < basis.count; ++m) {
    Real amp = 0;
    for (auto& v : mf.u[m]) amp = std::max(amp, std::abs(v));
    if (std::abs(basis.label[m]) == 1)
      CHECK(amp > 0.1);
    else
      CHECK(amp < 1e-12);
  }
}

TEST_CASE("mode transform round trip and norms") {
  auto model = testing::euclidean_surface();
  const auto basis = build_mode_basis(model, 5, 256);
  const auto x = linspace(1.0, 16.0, 301);
  const Real h = x[1] - x[0];
  const auto fpow = half_density_weights(model, x);

  std::mt19937 rng(7);
  std::uniform_real_distribution<Real> U(-1, 1);
  // random band-limited field within the truncated span
  std::vector<std::vector<Complex>> phi(
      x.size(), std::vector<Complex>(basis.grid.theta.size(), 0));
  for (std::size_t m = 0; m < basis.count; ++m) {
    const Complex cm(U(rng), U(rng));
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < basis.grid.theta.size(); ++j)
        phi[i][j] += cm * std::exp(-sq(x[i] - 5 - Real(m))) * basis.vec[m][j];
  }
  const auto mf = to_modes(phi, basis, fpow, h);
  const auto back = from_modes(mf, basis, fpow);
  Real maxerr = 0;
  for (std::size_t i = 0; i < x.size(); ++i)
    for (std::size_t j = 0; j < basis.grid.theta.size(); ++j)
      maxerr = std::max(maxerr, std::abs(back[i][j] - phi[i][j]));
  CHECK(maxerr < 1e-10);

  // zero in, zero out
  const auto zero = to_modes(
      std::vector<std::vector<Complex>>(
          x.size(), std::vector<Complex>(basis.grid.theta.size(), 0)),
      basis, fpow, h);
  CHECK(zero.norm_sq() == 0.0);

  // half-density norm equals the geometric 2D quadrature norm
  Real geo = 0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    Real slice = 0;
    for (std::size_t j = 0; j < basis.grid.theta.size(); ++j)
      slice += basis.grid.weight[j] * std::norm(phi[i][j]);
    const Real wq = (i == 0 || i + 1 == x.size()) ? 0.5 : 1.0;
    geo += wq * h * slice * sq(fpow[i]);
  }
  CHECK(mf.norm_sq() == Approx(geo).epsilon(1e-10));
}

TEST_CASE("Parseval on the limiting space") {
  auto tube = testing::twoend_tube();
  const auto basis = build_mode_basis(tube, 6);
  std::vector<Complex> coef(basis.count);
  for (std::size_t m = 0; m < basis.count; ++m)
    coef[m] = Complex(std::sin(1.7 * m + 0.3), std::cos(0.9 * m));
  Real quad = 0;
  for (std::size_t j = 0; j < basis.grid.theta.size(); ++j) {
    Complex v(0, 0);
    for (std::size_t m = 0; m < basis.count; ++m)
      v += coef[m] * basis.vec[m][j];
    quad += basis.grid.weight[j] * std::norm(v);
  }
  Real sum = 0;
  for (auto& c : coef) sum += std::norm(c);
  CHECK(quad == Approx(sum).epsilon(1e-8));
}

TEST_CASE("mode Hamiltonian coefficients") {
  const auto x = linspace(1.0, 10.0, 10);
  {
    auto model = testing::euclidean_surface();
    const auto basis = build_mode_basis(model, 2, 64);
    const auto hm = assemble_mode_hamiltonian(model, basis, 0, x);
    for (std::size_t i = 0; i < x.size(); ++i)
      CHECK(hm.veff[i] == Approx(-1.0 / (8 * sq(x[i]))).margin(1e-12));
  }
  {
    auto model = testing::cylinder_surface();
    const auto basis = build_mode_basis(model, 2, 64);
    // mode with nu = 4 on f = 1: veff = 2
    const auto hm = assemble_mode_hamiltonian(model, basis, 3, x);
    CHECK(hm.nu == Approx(4.0));
    for (auto v : hm.veff) CHECK(v == Approx(2.0).margin(1e-12));
  }
  {
    auto model = testing::hyperbolic_surface();
    const auto basis = build_mode_basis(model, 1, 64);
    const auto hm = assemble_mode_hamiltonian(model, basis, 0, x);
    for (auto v : hm.veff) CHECK(v == Approx(0.125).margin(1e-12));
  }
  auto par = testing::parabolic_model(0.5);
  CHECK_THROWS_AS(assemble_mode_hamiltonian(par, ModeBasis{}, 0, x),
                  ShapeError);
}

TEST_CASE("direct-sum equivalence against a 2D discretization") {
  auto model = testing::euclidean_surface(9.0);
  auto run = [&](std::size_t nr, std::size_t nt_nodes) {
    const auto basis = build_mode_basis(model, 3, nt_nodes);
    const auto x = linspace(1.0, 9.0, nr);
    const Real h = x[1] - x[0];
    const auto fpow = half_density_weights(model, x);
    const std::size_t nt = basis.grid.theta.size();
    std::vector<std::vector<Complex>> phi(x.size(),
                                          std::vector<Complex>(nt, 0));
    auto g = [](Real r) { return std::exp(-sq(r - 5.0) / 2.0); };
    for (std::size_t i = 0; i < x.size(); ++i)
      for (std::size_t j = 0; j < nt; ++j) {
        const Real s = basis.grid.theta[j];
        phi[i][j] = g(x[i]) * (std::cos(s) + 0.5 * std::sin(2 * s));
      }
    // geometric 2D application of H on the warped chart
    auto f = [&](Real r) { return model.end().warp->f(r); };
    std::vector<std::vector<Complex>> H2(x.size(),
                                         std::vector<Complex>(nt, 0));
    const Real dth = 2 * pi / Real(nt);
    for (std::size_t i = 1; i + 1 < x.size(); ++i)
      for (std::size_t j = 0; j < nt; ++j) {
        const std::size_t jm = (j + nt - 1) % nt, jp = (j + 1) % nt;
        const Complex radial =
            (f(x[i] + h / 2) * (phi[i + 1][j] - phi[i][j]) -
             f(x[i] - h / 2) * (phi[i][j] - phi[i - 1][j])) /
            (h * h * f(x[i]));
        const Complex ang = (phi[i][jp] - 2.0 * phi[i][j] + phi[i][jm]) /
                            (dth * dth * sq(f(x[i])));
        H2[i][j] = -0.5 * (radial + ang);
      }
    // mode-wise path with the same radial stencil
    const auto mf = to_modes(phi, basis, fpow, h);
    ModeFunction hm_mf = mf;
    for (std::size_t m = 0; m < basis.count; ++m) {
      const auto hm = assemble_mode_hamiltonian(model, basis, m, x);
      for (std::size_t i = 1; i + 1 < x.size(); ++i)
        hm_mf.u[m][i] =
            -0.5 * (mf.u[m][i + 1] - 2.0 * mf.u[m][i] + mf.u[m][i - 1]) /
                (h * h) +
            hm.veff[i] * mf.u[m][i];
      hm_mf.u[m].front() = hm_mf.u[m].back() = 0;
    }
    const auto mode_path = from_modes(hm_mf, basis, fpow);
    Real disc = 0, scale = 0;
    for (std::size_t i = 1; i + 1 < x.size(); ++i)
      for (std::size_t j = 0; j < nt; ++j) {
        disc = std::max(disc, std::abs(mode_path[i][j] - H2[i][j]));
        scale = std::max(scale, std::abs(H2[i][j]));
      }
    return std::pair{disc, scale};
  };
  const auto [d1, s1] = run(33, 16);
  const auto [d2, s2] = run(65, 32);
  // both paths are second-order consistent; their gap shrinks accordingly
  CHECK(d2 < d1 / 2.5);
  CHECK(d1 < 0.05 * s1);
}
