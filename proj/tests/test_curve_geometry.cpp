#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlstube/curve_geometry.hpp"
#include "nlstube/spectral.hpp"

#include <cmath>

using namespace nlst;

TEST_CASE("circle length and curvature") {
  CurveModel c = circle_curve(2.0, 2, 64);
  CHECK(c.L == doctest::Approx(4 * M_PI).epsilon(1e-12));
  for (int i = 0; i < c.N; ++i) {
    CHECK(c.Hvec.row(i).norm() == doctest::Approx(0.5).epsilon(1e-10));
    // H points to the centre
    CHECK(c.Hvec.row(i).dot(c.gamma.row(i)) < 0);
  }
  CHECK(c.frame_defect() < 1e-12);
  CHECK(c.H_frame().cwiseAbs().maxCoeff() == doctest::Approx(0.5).epsilon(1e-10));
}

TEST_CASE("ellipse perimeter") {
  CurveModel e = ellipse_curve(2.0, 1.0, 2, 128);
  CHECK(e.L == doctest::Approx(9.688448220547675).epsilon(1e-10));
  // curvature at the end of the major axis is a / b^2
  int imax = 0;
  e.gamma.col(0).maxCoeff(&imax);
  CHECK(e.Hvec.row(imax).norm() == doctest::Approx(2.0).epsilon(1e-6));
}

TEST_CASE("planar circle in R^3 has no holonomy or twist") {
  CurveModel c = circle_curve(1.0, 3, 64);
  CHECK(std::abs(c.holonomy) < 1e-10);
  for (const auto& o : c.omega) CHECK(o.cwiseAbs().maxCoeff() < 1e-10);
  CHECK(c.frame_defect() < 1e-12);
}

TEST_CASE("torus knot frame") {
  CurveModel k = torus_knot_curve(2, 3, 2.0, 1.0, 256);
  CHECK(k.frame_defect() < 1e-10);
  // the transport diagnostic is a centred difference: second order in ds
  double t2 = torus_knot_curve(2, 3, 2.0, 1.0, 512).transport_defect();
  CHECK(k.transport_defect() / t2 == doctest::Approx(4.0).epsilon(0.15));
  // Z is periodic
  for (int j = 0; j < 2; ++j) CHECK(k.Z[j].row(0).norm() == doctest::Approx(1.0));
  CHECK(std::isfinite(k.holonomy));
}

TEST_CASE("frame components round trip") {
  CurveModel e = ellipse_curve(1.5, 1.0, 3, 64);
  Mat comps(e.N, 2);
  for (int i = 0; i < e.N; ++i) comps.row(i) << std::cos(e.sbar[i]), std::sin(2 * e.sbar[i]);
  CHECK((e.to_frame(e.to_ambient(comps)) - comps).cwiseAbs().maxCoeff() < 1e-13);
  Mat amb = e.to_ambient(comps);
  CHECK((e.project_normal(amb) - amb).cwiseAbs().maxCoeff() < 1e-13);
}

TEST_CASE("Fermi metric and its expansion") {
  CurveModel c = circle_curve(2.0, 2, 32);
  Vec y(1);
  for (double t : {0.1, 0.05, 0.025}) {
    y[0] = t;
    FermiMetric ex = fermi_metric_exact(c, 3, y);
    FermiMetric e1 = fermi_metric_expansion(c, 3, y, 1), e2 = fermi_metric_expansion(c, 3, y, 2);
    CHECK(std::abs(ex.g(0, 0) - e2.g(0, 0)) < 1e-14);  // flat space: exact at second order
    CHECK(std::abs(ex.g(0, 0) - e1.g(0, 0)) == doctest::Approx(0.25 * t * t).epsilon(1e-10));
  }
  y[0] = -2.5;  // past the centre of curvature
  CHECK_THROWS_AS(fermi_metric_exact(c, 0, y), GeometryError);
}

TEST_CASE("normal data of a radial potential on a concentric circle") {
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  CurveModel c = circle_curve(1.3, 2, 32);
  for (int i = 0; i < c.N; i += 7) {
    NormalData nd = potential_normal_data(V, c, i);
    CHECK(nd.V == doctest::Approx(2 + std::cos(1.3)));
    // |grad^N V| = |V'(r)| and only the normal part survives
    CHECK(std::abs(nd.grad[0]) == doctest::Approx(std::sin(1.3)).epsilon(1e-12));
    CHECK(std::abs(nd.grad_ambient.dot(c.T.row(i))) < 1e-12);
  }
}

TEST_CASE("arclength reparametrization of an unevenly sampled circle") {
  int M = 200;
  Mat s(M, 2);
  for (int i = 0; i < M; ++i) {
    double t = 2 * M_PI * i / M;
    double u = t + 0.3 * std::sin(t);  // uneven but smooth
    s.row(i) << std::cos(u), std::sin(u);
  }
  CurveModel c = arclength_reparam(s, 64);
  CHECK(c.L == doctest::Approx(2 * M_PI).epsilon(1e-9));
  for (int i = 0; i < c.N; ++i) CHECK(c.gamma.row(i).norm() == doctest::Approx(1.0).epsilon(1e-9));
}

TEST_CASE("spectral calculus") {
  int N = 32;
  double L = 3.0;
  Vec f(N), df(N);
  for (int i = 0; i < N; ++i) {
    double s = L * i / N;
    f[i] = std::sin(2 * M_PI * s / L) + 0.5;
    df[i] = 2 * M_PI / L * std::cos(2 * M_PI * s / L);
  }
  CHECK((spectral::derivative(f, L, 1) - df).cwiseAbs().maxCoeff() < 1e-12);
  CHECK(spectral::integral(f, L) == doctest::Approx(1.5));
  Vec F = spectral::antiderivative(df, L);
  CHECK((F.array() - F[0] - (f.array() - f[0])).abs().maxCoeff() < 1e-12);
  CHECK(spectral::interpolate(f, L, 0.37) == doctest::Approx(std::sin(2 * M_PI * 0.37 / L) + 0.5).epsilon(1e-12));
}
