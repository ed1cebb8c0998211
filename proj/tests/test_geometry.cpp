#include "test_helpers.hpp"

#include "escat/geometry.hpp"

using namespace escat;
using Catch::Approx;

TEST_CASE("warped metric data matches closed forms") {
  auto model = testing::euclidean_surface();
  const auto m = eval_metric_warped(model.end(), 2.0);
  CHECK(m.dr_sq == Approx(1.0));
  CHECK(m.delta_r == Approx(0.5));
  CHECK(m.hess_aa == Approx(2.0));  // f f' = 2
  CHECK(m.div_omega_tilde == Approx(0.5));

  auto cyl = testing::cylinder_surface();
  const auto mc = eval_metric_warped(cyl.end(), 3.0);
  CHECK(mc.delta_r == Approx(0.0));
  CHECK(mc.hess_aa == Approx(0.0));
  CHECK(mc.hess_rr == Approx(0.0));
}

TEST_CASE("warped metric derivatives agree with finite differences of g") {
  auto model = testing::euclidean_surface();
  const auto& chart = model.end();
  // Christoffel check: (grad^2 r)_aa = -Gamma^r_aa = f f' computed from
  // finite differences of g_aa.
  const Real r = 3.7, h = 1e-6;
  const Real gp = sq(chart.warp->f(r + h));
  const Real gm = sq(chart.warp->f(r - h));
  const Real gamma_r_aa = -0.5 * (gp - gm) / (2 * h);
  const auto m = eval_metric_warped(chart, r);
  CHECK(m.hess_aa == Approx(-gamma_r_aa).epsilon(1e-6));
}

TEST_CASE("effective potential equals the Liouville half-density potential") {
  // q - V = (f^{(d-1)/2})'' / (2 f^{(d-1)/2}) on warped charts beyond r0
  for (auto mk : {0, 1, 2}) {
    ManifoldModel model = mk == 0   ? testing::euclidean_surface()
                          : mk == 1 ? testing::hyperbolic_surface()
                                    : testing::cylinder_surface();
    const auto& c = model.end();
    for (Real r : linspace(c.r0, 20.0, 40)) {
      const auto q = effective_potential_warped(c, *model.potential, r);
      const Real w = liouville_half_density_potential(
          c.dim, c.warp->f(r), c.warp->df(r), c.warp->d2f(r));
      REQUIRE(std::abs(q.q - model.potential->v(r) - w) < 1e-10);
    }
  }
}

TEST_CASE("effective potential spot values") {
  auto eu = testing::euclidean_surface();
  CHECK(effective_potential_warped(eu.end(), *eu.potential, 2.0).q ==
        Approx(-1.0 / 32.0).margin(1e-12));
  auto hy = testing::hyperbolic_surface();
  CHECK(effective_potential_warped(hy.end(), *hy.potential, 5.0).q ==
        Approx(1.0 / 8.0).margin(1e-12));
  auto cy = testing::cylinder_surface();
  CHECK(effective_potential_warped(cy.end(), *cy.potential, 5.0).q ==
        Approx(0.0).margin(1e-14));
}

TEST_CASE("critical energies") {
  CHECK(critical_energy(testing::euclidean_surface(256.0)).lambda0 ==
        Approx(0.0).margin(1e-10));
  CHECK(critical_energy(testing::hyperbolic_surface(64.0)).lambda0 ==
        Approx(0.125).margin(1e-10));
  // decaying potential does not move the limsup
  auto m = testing::euclidean_surface(256.0);
  m.potential = std::make_shared<ExpDecayPotential>(3.0, 1.0);
  CHECK(critical_energy(m).lambda0 == Approx(0.0).margin(1e-10));
}

TEST_CASE("parabolic chart matches the closed-form inverse metric") {
  for (Real kappa : {0.3, 0.5, 0.7}) {
    auto model = testing::parabolic_model(kappa);
    const auto& chart = model.end();
    for (Real r : {5.0, 11.0, 40.0}) {
      for (Real theta : {-0.8, -0.25, 0.0, 0.5, 0.9}) {
        const auto p = parabolic_point(chart, r, theta);
        // consistency of the coordinate change
        REQUIRE(kappa * p.x * p.x + p.y * p.y ==
                Approx(r * r).epsilon(1e-12));
        REQUIRE(p.x == Approx(theta * std::pow(p.y, kappa)).margin(1e-12));
        // |dr|^2 and |dtheta|^2 from the plane gradient
        const Real drx = kappa * p.x / r, dry = p.y / r;
        CHECK(p.Nr == Approx(drx * drx + dry * dry).epsilon(1e-12));
        const Real dtx = std::pow(p.y, -kappa);
        const Real dty = -kappa * p.x * std::pow(p.y, -kappa - 1.0);
        CHECK(p.Nt == Approx(dtx * dtx + dty * dty).epsilon(1e-12));
        // theta = 0 kills the correction in N_r
        if (theta == 0.0) CHECK(p.Nr == Approx(1.0).margin(1e-14));
      }
    }
  }
}

TEST_CASE("parabolic derivative formulas agree with finite differences") {
  auto model = testing::parabolic_model(0.4);
  const auto& chart = model.end();
  const Real r = 9.0, theta = 0.37, h = 1e-6;
  const auto p = parabolic_point(chart, r, theta);
  const auto pr1 = parabolic_point(chart, r + h, theta);
  const auto pr0 = parabolic_point(chart, r - h, theta);
  const auto pt1 = parabolic_point(chart, r, theta + h);
  const auto pt0 = parabolic_point(chart, r, theta - h);
  CHECK(p.dNr_dr == Approx((pr1.Nr - pr0.Nr) / (2 * h)).epsilon(1e-6));
  CHECK(p.dNr_dt == Approx((pt1.Nr - pt0.Nr) / (2 * h)).epsilon(1e-6));
  CHECK(p.dNt_dr == Approx((pr1.Nt - pr0.Nt) / (2 * h)).epsilon(1e-6));
  CHECK(p.dNt_dt == Approx((pt1.Nt - pt0.Nt) / (2 * h)).epsilon(1e-6));
}

TEST_CASE("parabolic conjugated potentials decay like r^{-2}") {
  auto model = testing::parabolic_model(0.5, 4.0, 512.0);
  std::vector<Real> rr, ww;
  for (Real R = 8.0; R <= 256.0; R *= 2) {
    Real wmax = 0;
    for (Real theta : {-0.7, -0.2, 0.4, 0.8}) {
      const auto w = parabolic_conjugation(model.end(), R, theta);
      wmax = std::max({wmax, std::abs(w.Wr), std::abs(w.Wt)});
    }
    rr.push_back(R);
    ww.push_back(wmax);
  }
  const auto fit = fit_decay_exponent(rr, ww);
  CHECK(fit.exponent >= 1.8);
}

TEST_CASE("phases b and a") {
  auto model = testing::cylinder_surface();  // q1 = 0
  const auto ce = critical_energy(model);
  const Real rlam = r_lambda(model, 2.0, ce.lambda0);
  const auto ph = phases_at(model, Complex(2.0, 0.0), ce.lambda0, 30.0, rlam, +1);
  CHECK(ph.b.real() == Approx(2.0).margin(1e-12));
  CHECK(ph.b.imag() == Approx(0.0).margin(1e-14));

  // a - b = -(i/4) dq1/dr / (lambda - q1) for the outgoing sign on f = r
  auto eu = testing::euclidean_surface(512.0);
  const Real lam = 0.5;
  const auto ce2 = critical_energy(eu);
  const Real rl2 = r_lambda(eu, lam, ce2.lambda0);
  for (Real r : {20.0, 50.0}) {
    const auto p2 = phases_at(eu, Complex(lam, 0.0), ce2.lambda0, r, rl2, +1);
    const Real dq1 = 1.0 / (4.0 * r * r * r);
    const Real q1 = -1.0 / (8.0 * r * r);
    const Complex expect = -Complex(0, 0.25) * dq1 / (lam - q1);
    CHECK(std::abs((p2.a - p2.b) - expect) < 1e-8);
  }
}

TEST_CASE("Riccati residual decreases along a dyadic ladder") {
  auto eu = testing::euclidean_surface(1024.0);
  const Real lam = 1.0;
  const auto ce = critical_energy(eu);
  const Real rlam = r_lambda(eu, lam, ce.lambda0);
  auto residual = [&](Real r, int sign) {
    const Real h = 1e-5 * r;
    const auto pm = phases_at(eu, Complex(lam, 0), ce.lambda0, r - h, rlam, sign);
    const auto pp = phases_at(eu, Complex(lam, 0), ce.lambda0, r + h, rlam, sign);
    const auto p0 = phases_at(eu, Complex(lam, 0), ce.lambda0, r, rlam, sign);
    const Complex da = (pp.a - pm.a) / (2 * h);
    const Real q1 = -1.0 / (8.0 * r * r);
    // +/- p^r a + a^2 - 2 |dr|^2 (z - q1), p^r = -i d/dr
    return std::abs(Real(sign) * Complex(0, -1) * da + p0.a * p0.a -
                    2.0 * (lam - q1));
  };
  for (int sign : {+1, -1}) {
    const Real r1 = residual(50.0, sign);
    const Real r2 = residual(100.0, sign);
    const Real r4 = residual(200.0, sign);
    CHECK(r2 < r1);
    CHECK(r4 < r2);
    CHECK(r1 < 1e-4);
  }
}

TEST_CASE("r_lambda saturates at r0 for large lambda") {
  auto hy = testing::hyperbolic_surface();
  const auto ce = critical_energy(hy);
  const Real big = r_lambda(hy, 50.0, ce.lambda0);
  CHECK(big == Approx(hy.r0()));
  // near threshold the cutoff radius moves out
  const Real low = r_lambda(hy, 0.1251, ce.lambda0);
  CHECK(low >= big);
}

TEST_CASE("domain errors") {
  auto model = testing::euclidean_surface();
  CHECK_THROWS_AS(eval_metric_warped(model.end(), 0.1), DomainError);
  CHECK_THROWS_AS(parabolic_point(testing::parabolic_model(0.5).end(), 5.0, 1.2),
                  DomainError);
  ManifoldModel bad = model;
  bad.ends[0].r0 = 0.5;
  CHECK_THROWS_AS(bad.validate(), DomainError);
}

TEST_CASE("line-model geometry") {
  auto tube = testing::twoend_tube(4.0, 6.0, 64.0);
  const auto lg = line_geometry(tube);
  // warp composed with the smoothed radius: f = sqrt(a^2 + x^2 + w^2)
  CHECK(lg.f(3.0) == Approx(std::sqrt(16.0 + 9.0 + 1.0)));
  const auto m = eval_metric_line(tube, 10.0);
  CHECK(m.dr_sq == Approx(sq(10.0 / std::sqrt(101.0))));
  // Laplacian of r: r'' + f' r'/f
  const Real expect =
      lg.rpp(10.0) + lg.df(10.0) * lg.rp(10.0) / lg.f(10.0);
  CHECK(m.delta_r == Approx(expect));
}
