#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlstube/reduced_profile.hpp"

#include <cmath>

using namespace nlst;

TEST_CASE("exponents") {
  ProfileExponents e(3.0, 2);
  CHECK(e.sigma == doctest::Approx(-1.0));
  CHECK(e.theta == doctest::Approx(3.0));
  ProfileExponents f(3.0, 3);
  CHECK(f.sigma == doctest::Approx(0.0));
  CHECK(f.theta == doctest::Approx(2.0));
}

TEST_CASE("h closed forms") {
  CHECK(solve_h(4.0, 0.0, 3.0, 2).h == doctest::Approx(2.0));
  // sigma = 0: h^4 = V + A^2
  CHECK(solve_h(1.0, 0.5, 5.0, 2).h == doctest::Approx(std::pow(1.25, 0.25)).epsilon(1e-14));
  // p = 3, n = 2: h^4 - V h^2 - A^2 = 0
  double h2 = (2 + std::sqrt(4 + 4 * 0.49)) / 2;
  CHECK(solve_h(2.0, 0.7, 3.0, 2).h == doctest::Approx(std::sqrt(h2)).epsilon(1e-14));
}

TEST_CASE("fold of the profile relation") {
  // p = 3, n = 4: 2 sigma = p - 1, no root once A >= 1
  CHECK(critical_A(1.0, 3.0, 4) == doctest::Approx(1.0));
  try {
    solve_h(1.0, 1.1, 3.0, 4);
    FAIL("expected a solvability error");
  } catch (const SolvabilityError& e) {
    CHECK(e.a_crit == doctest::Approx(1.0));
  }
  double Ac = critical_A(1.0, 3.0, 5);
  CHECK(std::isfinite(Ac));
  HSolution s = solve_h(1.0, 0.99 * Ac, 3.0, 5);
  CHECK(std::abs(s.h * s.h - 0.99 * 0.99 * Ac * Ac * std::pow(s.h, 4) - 1) < 1e-12);
  CHECK(std::isinf(critical_A(1.0, 3.0, 2)));
}

TEST_CASE("stationary circle against an independent root") {
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  double r = find_stationary_circle(V, 0.0, 3.0, 2, 1.0, 2.0);
  // critical point of r V^{3/2}: V + 1.5 r V' = 0
  auto g = [](double r) { return 2 + std::cos(r) - 1.5 * r * std::sin(r); };
  double lo = 1, hi = 2;
  for (int i = 0; i < 200; ++i) {
    double m = 0.5 * (lo + hi);
    ((g(m) > 0) == (g(lo) > 0) ? lo : hi) = m;
  }
  CHECK(std::abs(r - lo) < 1e-10);
  CurveModel c = circle_curve(r, 2, 64);
  CHECK(euler_residual(c, V, 0.0, 3.0).cwiseAbs().maxCoeff() < 1e-8);
  CHECK_THROWS_AS(find_stationary_circle(V, 0.0, 3.0, 2, 0.5, 0.9), ConvergenceError);
}

TEST_CASE("profile identities with rotation") {
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  double r = find_stationary_circle(V, 0.3, 3.0, 2, 1.0, 2.5);
  CurveModel c = circle_curve(r, 2, 128);
  ProfileFields pf = profile_fields(c, V, 0.3, 3.0);
  CHECK(pf.relation_defect() < 1e-12);
  CHECK(pf.phase_ode_defect() < 1e-10);
  CHECK(euler_residual(c, V, pf).cwiseAbs().maxCoeff() < 1e-8);
}

TEST_CASE("phase ODE on a non-circular curve") {
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  ProfileFields pf = profile_fields(ellipse_curve(2.0, 1.5, 2, 128), V, 0.3, 3.0);
  CHECK(pf.relation_defect() < 1e-12);
  CHECK(pf.phase_ode_defect() < 1e-8);
}

TEST_CASE("first variations against finite differences") {
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  CurveModel el = ellipse_curve(2.0, 1.5, 2, 128);
  double A = 0.3;
  ProfileFields pf = profile_fields(el, V, A, 3.0);
  Mat var(el.N, 2);
  for (int i = 0; i < el.N; ++i) {
    double s = el.sbar[i];
    var.row(i) = (1 + 0.5 * std::cos(2 * M_PI * s / el.L) + 0.3 * std::sin(4 * M_PI * s / el.L)) * el.Y[0].row(i);
  }
  double C = constraint_value(el, V, 3.0, A);
  double t = 1e-3;
  DeformedEnergy ep = deformed_energy(el, V, 3.0, C, t * var), em = deformed_energy(el, V, 3.0, C, -t * var);
  DeformedEnergy e0 = deformed_energy(el, V, 3.0, C, 0 * var);
  CHECK(e0.A == doctest::Approx(A).epsilon(1e-12));
  CHECK(e0.E == doctest::Approx(reduced_energy(pf)).epsilon(1e-12));
  CHECK((ep.E - em.E) / (2 * t) == doctest::Approx(first_variation(el, V, pf, var)).epsilon(1e-5));
  CHECK((ep.A - em.A) / (2 * t) == doctest::Approx(A_prime(el, V, pf, var)).epsilon(1e-5));
}

TEST_CASE("quantization") {
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  CurveModel c = circle_curve(1.43, 2, 64);
  Quantization q = quantize_A(c, V, 3.0, 0.1, 0.3);
  CHECK(q.defect < 1e-10);
  CHECK(std::abs(q.A - 0.3) < 0.2);
  CHECK(std::abs(constraint_value(c, V, 3.0, q.A) - 2 * M_PI * 0.1 * q.m) < 1e-10);
  Quantization z = quantize_A(c, V, 3.0, 0.1, 0.0);
  CHECK(z.A == 0.0);
  CHECK(z.m == 0);
}

TEST_CASE("zero A gives zero A' weights") {
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  CurveModel c = circle_curve(1.43, 2, 32);
  CHECK(A_prime_weights(c, V, profile_fields(c, V, 0.0, 3.0)).cwiseAbs().maxCoeff() == 0.0);
}
