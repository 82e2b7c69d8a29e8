#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include "nlstube/corrections.hpp"
#include "nlstube/reduced_profile.hpp"
#include "nlstube/residual.hpp"

#include <cmath>

using namespace nlst;

namespace {

double isup(const Vec& f, const ZGrid& zg) { return interior(f, zg, 4).cwiseAbs().maxCoeff(); }

// inputs at one node of an ellipse, with grad V adjusted so that the Euler condition holds there
CorrectionInputs stationary_like(double p, int d, const GroundState&) {
  PotentialField V = PotentialField::radial_cos(d + 1);
  CurveModel el = ellipse_curve(2.0, 1.4, d + 1, 64);
  ProfileFields pf = profile_fields(el, V, 0.1, p);
  int i = 5;
  CorrectionInputs in;
  in.p = p;
  in.h = pf.h[i];
  in.k = pf.k[i];
  in.hp = pf.hp[i];
  in.kp = pf.kp[i];
  in.fp = pf.fp[i];
  in.fpp = pf.fpp[i];
  in.theta = pf.theta;
  in.fp1 = 0.03;
  in.H = Vec::Zero(d);
  in.gradV = Vec::Zero(d);
  in.Phi = Vec::Zero(d);
  in.Phip = Vec::Zero(d);
  in.Phi[0] = 0.3;
  in.Phip[0] = 0.2;
  double e = (p - 1) / in.theta * std::pow(in.h, p - 1) - 2 * in.fp * in.fp;
  in.H[0] = -0.6;
  if (d == 2) {
    in.Phip[1] = -0.1;
    in.H[1] = 0.2;
  }
  in.gradV = e * in.H;
  return in;
}

}  // namespace

TEST_CASE("kernel identities, d = 1") {
  GroundState g = solve_ground_state(3.0, 1);
  for (double k : {1.0, 1.37}) {
    ZGrid zg = symmetric_zgrid(1, 20 / k, default_dz(1));
    ScaledProfile sp = scaled_profile(g, k, zg);
    Mat P = zg.points();
    auto Lr = [&](const Vec& w) { return linearized_apply(LinKind::Real, g, k, w, zg, default_order(1)); };
    auto Li = [&](const Vec& w) { return linearized_apply(LinKind::Imag, g, k, w, zg, default_order(1)); };
    Vec dU = k * sp.gradU.col(0);
    CHECK(isup(Lr(dU), zg) < 1e-6);
    CHECK(isup(Li(sp.U), zg) < 1e-6);
    Vec zU = (P.col(0).array() * sp.U.array()).matrix();
    CHECK(isup(Li(zU) + 2 * k * sp.gradU.col(0), zg) < 1e-6);
    Vec r2U = (P.rowwise().squaredNorm().array() * sp.U.array()).matrix();
    CHECK(isup(Li(r2U) + 2 * sp.U + 4 * k * sp.Udotz, zg) < 1e-6);
  }
}

TEST_CASE("first-order corrections solve their equations, d = 1") {
  GroundState g = solve_ground_state(3.0, 1);
  CorrectionInputs in = stationary_like(3.0, 1, g);
  ZGrid zg = symmetric_zgrid(1, 20 / in.k, default_dz(1));
  ScaledProfile sp = scaled_profile(g, in.k, zg);
  CorrectionFields cf = build_corrections(in, g, zg);
  double k = in.k;
  auto Lr = [&](const Vec& w) { return linearized_apply(LinKind::Real, g, k, w, zg); };
  auto Li = [&](const Vec& w) { return linearized_apply(LinKind::Imag, g, k, w, zg); };
  CHECK(isup(Lr(cf.Utilde) + sp.U, zg) < 1e-6);
  Vec rie = -(in.fpp * in.h * sp.U + 2 * in.fp * in.hp * sp.U + 2 * in.fp * in.h * in.kp * sp.Udotz);
  CHECK(isup(Li(cf.wie) - rie, zg) < 1e-6 * std::max(1.0, rie.cwiseAbs().maxCoeff()));
  Vec rio = 2 * in.Phip[0] * in.fp * in.h * k * sp.gradU.col(0);
  CHECK(isup(Li(cf.wio) - rio, zg) < 1e-6 * std::max(1.0, rio.cwiseAbs().maxCoeff()));
  Vec R = wro_rhs(in, sp, zg)[0];
  CHECK(isup(Lr(cf.wro) - R, zg) < 1e-6 * R.cwiseAbs().maxCoeff());
  CHECK(cf.kernel_projection < 1e-8);
  // parity and decay
  CHECK(parity_defect(cf.wie, zg, 1) < 1e-14);
  CHECK(parity_defect(cf.wre, zg, 1) < 1e-14);
  CHECK(parity_defect(cf.wio, zg, -1) < 1e-14);
  CHECK(parity_defect(cf.wro, zg, -1) < 1e-12);
  CHECK(std::isfinite(decay_constant(cf.wro, zg, k)));
  // the Euler condition is what makes w_ro solvable
  in.gradV[0] *= 1.01;
  CHECK_THROWS_AS(build_corrections(in, g, zg), DegeneracyError);
  WroOptions force;
  force.force = true;
  CHECK(build_corrections(in, g, zg, force).kernel_projection > 1e-6);
}

TEST_CASE("trivial corrections") {
  GroundState g = solve_ground_state(3.0, 1);
  CorrectionInputs in = stationary_like(3.0, 1, g);
  in.Phi.setZero();
  in.fp1 = 0.0;
  in.H.setZero();
  in.gradV.setZero();
  ZGrid zg = symmetric_zgrid(1, 10.0, 0.02);
  CorrectionFields cf = build_corrections(in, g, zg);
  CHECK(cf.wre.cwiseAbs().maxCoeff() == 0.0);
  CHECK(cf.wro.cwiseAbs().maxCoeff() == 0.0);
}

TEST_CASE("kernel identities and corrections, d = 2") {
  GroundState g = solve_ground_state(3.0, 2);
  CorrectionInputs in = stationary_like(3.0, 2, g);
  double k = in.k;
  ZGrid zg = symmetric_zgrid(2, 12 / k, default_dz(2));
  ScaledProfile sp = scaled_profile(g, k, zg);
  Mat P = zg.points();
  auto Lr = [&](const Vec& w) { return linearized_apply(LinKind::Real, g, k, w, zg, default_order(2)); };
  auto Li = [&](const Vec& w) { return linearized_apply(LinKind::Imag, g, k, w, zg, default_order(2)); };
  for (int j = 0; j < 2; ++j) CHECK(isup(Lr(k * sp.gradU.col(j)), zg) < 1e-6);
  CHECK(isup(Li(sp.U), zg) < 1e-6);
  Vec r2U = (P.rowwise().squaredNorm().array() * sp.U.array()).matrix();
  CHECK(isup(Li(r2U) + 4 * sp.U + 4 * k * sp.Udotz, zg) < 1e-6);
  CorrectionFields cf = build_corrections(in, g, zg);
  CHECK(cf.kernel_projection < 1e-8);
  CHECK(isup(Lr(cf.Utilde) + sp.U, zg) < 1e-6);
  CHECK(parity_defect(cf.wro, zg, -1) < 1e-10);
}

TEST_CASE("kernel projection grows linearly off the stationary radius") {
  GroundState g = solve_ground_state(3.0, 1);
  PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
  double r = find_stationary_circle(V, 0.0, 3.0, 2, 1.0, 2.0);
  std::vector<double> dr{0.005, 0.01, 0.02}, kp;
  for (double d : dr) {
    CurveModel c = circle_curve(r + d, 2, 16);
    ProfileFields pf = profile_fields(c, V, 0.0, 3.0);
    CorrectionInputs in;
    in.p = 3.0;
    in.h = pf.h[0];
    in.k = pf.k[0];
    in.theta = pf.theta;
    in.H = c.H_frame().row(0).transpose();
    in.gradV = potential_normal_data(V, c, 0).grad;
    in.Phi = in.Phip = Vec::Zero(1);
    WroOptions o;
    o.force = true;
    CorrectionModel m(in, g, 25.0, o);
    kp.push_back(m.kernel_projection());
  }
  double s = scaling_fit(dr, kp);
  CHECK(s == doctest::Approx(1.0).epsilon(0.2));
}

TEST_CASE("grid helpers") {
  ZGrid zg = symmetric_zgrid(2, 1.0, 0.25);
  CHECK(zg.count(0) == 9);
  CHECK(zg.size() == 81);
  Mat P = zg.points();
  for (int q = 0; q < zg.size(); ++q) {
    int m = zg.mirror(q);
    REQUIRE(m >= 0);
    CHECK((P.row(m) + P.row(q)).norm() < 1e-14);
  }
  Vec lo(1), hi(1);
  lo << -1.0;
  hi << 0.5;
  ZGrid b = box_zgrid(1, lo, hi, 0.25);
  CHECK(b.count(0) == 7);
  CHECK(b.mirror(0) == -1);
  Vec one = Vec::Ones(zg.size());
  CHECK(grid_dot(one, one, zg) == doctest::Approx(81 * 0.0625));
}

TEST_CASE("radial profile interpolation is exact on quintics") {
  double dr = 0.05;
  int M = 200;
  Vec phi(M + 1);
  for (int i = 0; i <= M; ++i) {
    double r = i * dr;
    phi[i] = r * std::exp(-r * r);
  }
  RadialProfile rp(dr, phi);
  CHECK(std::abs(rp(1.2345) - 1.2345 * std::exp(-1.2345 * 1.2345)) < 1e-7);
  CHECK(rp(M * dr + 1) == 0.0);
}
