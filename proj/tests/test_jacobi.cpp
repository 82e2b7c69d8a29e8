#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlstube/jacobi.hpp"

#include <algorithm>
#include <cmath>
#include <random>

using namespace nlst;

namespace {

Mat random_section(const CurveModel& c, std::mt19937& g) {
  std::normal_distribution<double> nd;
  Mat a = Mat::Zero(c.N, c.n - 1);
  for (int j = 0; j < c.n - 1; ++j)
    for (int k = 0; k <= 4; ++k) {
      double x = nd(g) / (1 + k * k), y = nd(g) / (1 + k * k);
      for (int i = 0; i < c.N; ++i) {
        double t = 2 * M_PI * k * c.sbar[i] / c.L;
        a(i, j) += x * std::cos(t) + y * std::sin(t);
      }
    }
  return c.to_ambient(a);
}

}  // namespace

TEST_CASE("second variation against mixed finite differences") {
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  double r = find_stationary_circle(V, 0.1, 3.0, 2, 1.0, 2.0);
  CurveModel c = circle_curve(r, 2, 128);
  ProfileFields pf = profile_fields(c, V, 0.1, 3.0);
  double C = constraint_value(c, V, 3.0, 0.1);
  JacobiMatrix J = assemble_jacobi(c, V, pf);
  std::mt19937 g(3);
  for (int k = 0; k < 2; ++k) {
    Mat v = random_section(c, g), w = random_section(c, g);
    double t = 1e-3;
    auto E = [&](double a, double b) { return deformed_energy(c, V, 3.0, C, a * v + b * w).E; };
    double fd = (E(t, t) - E(t, -t) - E(-t, t) + E(-t, -t)) / (4 * t * t);
    double Q = quadratic_form(c, V, pf, v, w);
    CHECK(std::abs(fd - Q) < 1e-4 * std::abs(Q));
    CHECK(std::abs(Q - quadratic_form(c, V, pf, w, v)) < 1e-10 * std::abs(Q));
    CHECK(std::abs(jacobi_pairing(J, c, v, w) - Q) < 1e-8 * std::max(1.0, std::abs(Q)));
  }
}

TEST_CASE("unreduced form is dual to Q off stationarity, reduced form is not") {
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  CurveModel c = ellipse_curve(2.0, 1.4, 2, 128);
  ProfileFields pf = profile_fields(c, V, 0.1, 3.0);
  JacobiMatrix Ju = assemble_jacobi(c, V, pf, JacobiForm::Unreduced), Jr = assemble_jacobi(c, V, pf);
  std::mt19937 g(5);
  Mat v = random_section(c, g), w = random_section(c, g);
  double Q = quadratic_form(c, V, pf, v, w);
  CHECK(std::abs(jacobi_pairing(Ju, c, v, w) - Q) < 1e-8 * std::max(1.0, std::abs(Q)));
  CHECK(std::abs(jacobi_pairing(Jr, c, v, w) - Q) > 1e-4);
}

TEST_CASE("constant-coefficient fixture against the Fourier symbols") {
  Vec w(3);
  w << 0, 0, 0.7;
  PotentialField V = PotentialField::quadratic(3, 2.0, w);
  CurveModel c = circle_curve(1.5, 3, 64);
  ProfileFields pf = profile_fields(c, V, 0.0, 3.0);
  Spectrum S = spectrum(assemble_jacobi(c, V, pf));
  ProfileExponents ex(3.0, 3);
  double h = pf.h[0], p = 3.0, s = ex.sigma, th = ex.theta;
  double cc = std::pow(h, th);
  double B = -(p - 1) * (3 + s / th) * std::pow(h, 2 * th) / ((p - 1) * std::pow(h, th));
  double H2 = 1 / (1.5 * 1.5);
  std::vector<double> oracle;
  for (int k = -31; k <= 32; ++k) {
    double q = cc * std::pow(2 * M_PI * k / c.L, 2);
    oracle.push_back(q + (cc + B) * H2);
    oracle.push_back(q + th / (p - 1) * std::pow(h, -s) * 1.4);
  }
  std::sort(oracle.begin(), oracle.end());
  double err = 0.0;
  for (size_t i = 0; i < oracle.size(); ++i)
    err = std::max(err, std::abs(oracle[i] - S.eigenvalues[i].real()) / std::max(1.0, std::abs(oracle[i])));
  CHECK(err < 1e-6);
  CHECK(S.max_imag < 1e-8);
}

TEST_CASE("stationary circle spectrum converges and is invertible") {
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  double r = find_stationary_circle(V, 0.0, 3.0, 2, 1.0, 2.0);
  double prev = 0.0;
  for (int N : {64, 128}) {
    Spectrum S = spectrum(assemble_jacobi(circle_curve(r, 2, N), V, 0.0, 3.0));
    CHECK(S.invertible);
    if (prev > 0) CHECK(std::abs(S.min_abs - prev) < 1e-3 * prev);
    prev = S.min_abs;
  }
}

TEST_CASE("translation fields are normal projections of the axes") {
  CurveModel c = circle_curve(1.0, 2, 64);
  auto T = translation_fields(c);
  REQUIRE(T.size() == 2);
  // in the plane the two projections of e_1, e_2 onto the unit normal satisfy a^2 + b^2 = 1
  for (int i = 0; i < c.N; ++i) CHECK(T[0](i, 0) * T[0](i, 0) + T[1](i, 0) * T[1](i, 0) == doctest::Approx(1.0));
}

TEST_CASE("stack and unstack") {
  Mat a(5, 2);
  a << 1, 2, 3, 4, 5, 6, 7, 8, 9, 10;
  Vec v = stack(a);
  CHECK(v[1] == 3);
  CHECK(v[5] == 2);
  CHECK((unstack(v, 5, 2) - a).norm() == 0);
}

TEST_CASE("f1 solves the T-equation with zero mean") {
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  double r = find_stationary_circle(V, 0.1, 3.0, 2, 1.0, 2.0);
  CurveModel c = circle_curve(r, 2, 128);
  ProfileFields pf = profile_fields(c, V, 0.1, 3.0);
  Mat Phi(c.N, 2);
  for (int i = 0; i < c.N; ++i) Phi.row(i) = std::cos(2 * M_PI * c.sbar[i] / c.L) * c.Y[0].row(i);
  F1Solution f = solve_f1(c, V, pf, Phi);
  CHECK(f.T_residual < 1e-8);
  CHECK(std::abs(f.mean) < 1e-10);
  CHECK(f.fp1.cwiseAbs().maxCoeff() > 1e-3);
  // no shift: f_1 = 0
  F1Solution z = solve_f1(c, V, pf, Mat::Zero(c.N, 2));
  CHECK(z.fp1.cwiseAbs().maxCoeff() < 1e-12);
}

TEST_CASE("open curves are rejected") {
  PotentialField V = PotentialField::constant(2, 1.0);
  CurveModel c = straight_segment(5.0, 2, 16);
  CHECK_THROWS_AS(assemble_jacobi(c, V, 0.0, 3.0), DomainError);
}
