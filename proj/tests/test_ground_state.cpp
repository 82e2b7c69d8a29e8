#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlstube/ground_state.hpp"

#include <cmath>

using namespace nlst;

TEST_CASE("d = 1, p = 3 matches sqrt(2) sech") {
  GroundState g = solve_ground_state(3.0, 1);
  double err = 0.0;
  for (int i = 0; i < g.r.size(); ++i) err = std::max(err, std::abs(g.U[i] - std::sqrt(2.0) / std::cosh(g.r[i])));
  CHECK(err < 1e-8);
  CHECK(g.U0 == doctest::Approx(std::sqrt(2.0)).epsilon(1e-10));
  CHECK(ode_residual(g) < 1e-6);
}

TEST_CASE("closed-form soliton for p = 2") {
  GroundState g = solve_ground_state(2.0, 1), s = soliton_closed_form(2.0);
  double err = 0.0;
  for (int i = 0; i < g.r.size(); ++i) err = std::max(err, std::abs(g.U[i] - s.U[i]));
  CHECK(err < 1e-8);
  CHECK(s.U0 == doctest::Approx(1.5));
}

TEST_CASE("Pohozaev suite") {
  for (auto [p, d] : std::vector<std::pair<double, int>>{{3, 1}, {2, 1}, {3, 2}, {2, 2}, {2, 3}}) {
    CAPTURE(p);
    CAPTURE(d);
    GroundState g = solve_ground_state(p, d);
    PohozaevReport r = pohozaev_report(moments(g), p, d);
    CHECK(r.max_residual() < 1e-6);
    CHECK_FALSE(r.quadrature_flag);
    CHECK(g.U[g.U.size() - 1] < 1e-8);
    CHECK(g.decay_rate == doctest::Approx(1.0));
  }
}

TEST_CASE("profile is positive and decreasing") {
  GroundState g = solve_ground_state(3.0, 2);
  for (int i = 1; i < g.U.size(); ++i) {
    REQUIRE(g.U[i] > 0);
    REQUIRE(g.U[i] < g.U[i - 1]);
  }
  ProfileValue v = evaluate(g, 0.0);
  CHECK(v.U == doctest::Approx(g.U0));
  CHECK(std::abs(v.Up) < 1e-12);
  // interpolation between nodes
  ProfileValue m = evaluate(g, 1.2345);
  CHECK(m.U < evaluate(g, 1.2).U);
  CHECK(m.U > evaluate(g, 1.3).U);
}

TEST_CASE("exponent validation") {
  CHECK_THROWS_AS(solve_ground_state(1.0, 1), DomainError);
  CHECK_THROWS_AS(solve_ground_state(0.5, 2), DomainError);
  CHECK_THROWS_AS(solve_ground_state(5.0, 3), DomainError);  // critical in d = 3
  CHECK_NOTHROW(check_exponent(4.9, 3));
}

TEST_CASE("coarse grid raises the quadrature flag") {
  GroundStateOptions o;
  o.n_grid = 10;
  PohozaevReport r = pohozaev_report(moments(soliton_closed_form(3.0, o)), 3.0, 1);
  CHECK(r.quadrature_flag);
}

TEST_CASE("sphere areas") {
  CHECK(sphere_area(1) == doctest::Approx(2.0));
  CHECK(sphere_area(2) == doctest::Approx(2 * M_PI));
  CHECK(sphere_area(3) == doctest::Approx(4 * M_PI));
}
