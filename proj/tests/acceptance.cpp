// One line per acceptance criterion; exit code 1 if any fails.
#include "nlstube/scenario.hpp"
#include "nlstube/spectral.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>

using namespace nlst;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) { return std::chrono::duration<double>(Clock::now() - t0).count(); }

std::string scenario_path(const std::string& name) {
  const char* d = std::getenv("NLSTUBE_SCENARIOS");
  return std::string(d ? d : "scenarios") + "/" + name;
}

int failures = 0;

void report(int id, const std::string& title, const std::function<bool(std::ostringstream&)>& body) {
  std::ostringstream os;
  os.precision(3);
  bool ok = false;
  try {
    ok = body(os);
  } catch (const std::exception& e) {
    os << "exception: " << e.what();
  }
  if (!ok) ++failures;
  std::printf("criterion %d %s: %s; %s\n", id, ok ? "PASS" : "FAIL", title.c_str(), os.str().c_str());
  std::fflush(stdout);
}

Mat random_section(const CurveModel& c, std::mt19937_64& rng) {
  std::normal_distribution<double> nd;
  Mat a = Mat::Zero(c.N, c.n - 1);
  for (int j = 0; j < c.n - 1; ++j)
    for (int k = 0; k <= 4; ++k) {
      double x = nd(rng) / (1 + k * k), y = nd(rng) / (1 + k * k);
      for (int i = 0; i < c.N; ++i) {
        double t = 2 * M_PI * k * c.sbar[i] / c.L;
        a(i, j) += x * std::cos(t) + y * std::sin(t);
      }
    }
  return c.to_ambient(a);
}

double interior_sup(const Vec& f, const ZGrid& zg) { return interior(f, zg, 4).cwiseAbs().maxCoeff(); }

}  // namespace

int main() {
  report(1, "Pohozaev suite", [](std::ostringstream& os) {
    auto t0 = Clock::now();
    double worst = 0.0;
    for (auto [p, d] : std::vector<std::pair<double, int>>{{3, 1}, {2, 1}, {3, 2}, {2, 2}, {2, 3}}) {
      GroundState g = solve_ground_state(p, d);
      worst = std::max(worst, pohozaev_report(moments(g), p, d).max_residual());
    }
    double t = seconds_since(t0);
    os << "max relative residual " << worst << " (< 1e-6), " << t << " s (< 5 s)";
    return worst < 1e-6 && t < 5.0;
  });

  report(2, "soliton oracle", [](std::ostringstream& os) {
    auto t0 = Clock::now();
    GroundState g = solve_ground_state(3.0, 1);
    double err = 0.0;
    for (int i = 0; i < g.r.size(); ++i) err = std::max(err, std::abs(g.U[i] - std::sqrt(2.0) / std::cosh(g.r[i])));
    double t = seconds_since(t0);
    os << "sup error " << err << " (< 1e-8), " << t << " s (< 1 s)";
    return err < 1e-8 && t < 1.0;
  });

  report(3, "profile identities", [](std::ostringstream& os) {
    double rel = 0.0, ode = 0.0, quant = 0.0;
    for (const char* s : {"circle-a0.toml", "circle-a01.toml"}) {
      Pipeline pl(load_scenario(scenario_path(s)), false);
      StageReport r = pl.profile();
      rel = std::max(rel, r.summary["relation_defect"].get<double>());
      ode = std::max(ode, r.summary["phase_ode_defect"].get<double>());
      for (const auto& q : r.summary["quantization"]) quant = std::max(quant, q["defect"].get<double>());
    }
    os << "relation defect " << rel << ", phase ODE " << ode << ", quantization " << quant << " (all < 1e-10)";
    return rel < 1e-10 && ode < 1e-10 && quant < 1e-10;
  });

  report(4, "Euler stationarity", [](std::ostringstream& os) {
    PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
    double r = find_stationary_circle(V, 0.0, 3.0, 2, 1.0, 2.0);
    double E = euler_residual(circle_curve(r, 2, 64), V, 0.0, 3.0).cwiseAbs().maxCoeff();
    // independent root: r V^{3/2} is critical where V + 1.5 r V' = 0
    auto g = [](double x) { return 2 + std::cos(x) - 1.5 * x * std::sin(x); };
    double lo = 1.0, hi = 2.0;
    for (int i = 0; i < 200; ++i) {
      double m = 0.5 * (lo + hi);
      ((g(m) > 0) == (g(lo) > 0) ? lo : hi) = m;
    }
    os.precision(12);
    os << "r* = " << r << ", Euler sup " << E << " (< 1e-8), oracle gap " << std::abs(r - lo) << " (< 1e-8)";
    return r > 1 && r < 2 && E < 1e-8 && std::abs(r - lo) < 1e-8;
  });

  report(5, "second variation", [](std::ostringstream& os) {
    PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
    double A = 0.1;
    double r = find_stationary_circle(V, A, 3.0, 2, 1.0, 2.0);
    CurveModel c = circle_curve(r, 2, 128);
    ProfileFields pf = profile_fields(c, V, A, 3.0);
    double C = constraint_value(c, V, 3.0, A);
    JacobiMatrix J = assemble_jacobi(c, V, pf);
    std::mt19937_64 rng(2024);
    double fd_err = 0.0, dual = 0.0, sym = 0.0;
    for (int k = 0; k < 5; ++k) {
      Mat v = random_section(c, rng), w = random_section(c, rng);
      double t = 1e-3;
      auto E = [&](double a, double b) { return deformed_energy(c, V, 3.0, C, a * v + b * w).E; };
      double fd = (E(t, t) - E(t, -t) - E(-t, t) + E(-t, -t)) / (4 * t * t);
      double Q = quadratic_form(c, V, pf, v, w);
      double scale = std::sqrt(std::abs(quadratic_form(c, V, pf, v, v)) * std::abs(quadratic_form(c, V, pf, w, w)));
      fd_err = std::max(fd_err, std::abs(fd - Q) / std::abs(Q));
      dual = std::max(dual, std::abs(jacobi_pairing(J, c, v, w) - Q) / scale);
      sym = std::max(sym, std::abs(Q - quadratic_form(c, V, pf, w, v)) / scale);
    }
    os << "FD relative error " << fd_err << " (< 1e-4), operator pairing " << dual << " (< 1e-6 scale), symmetry "
       << sym << " (< 1e-10)";
    return fd_err < 1e-4 && dual < 1e-6 && sym < 1e-10;
  });

  report(6, "Jacobi spectrum", [](std::ostringstream& os) {
    // n = 3 circle with V = 2 + 0.7 x_3^2: constant coefficients, Fourier symbols per normal direction
    Vec w(3);
    w << 0, 0, 0.7;
    PotentialField Vq = PotentialField::quadratic(3, 2.0, w);
    CurveModel c3 = circle_curve(1.5, 3, 64);
    ProfileFields pf3 = profile_fields(c3, Vq, 0.0, 3.0);
    Spectrum S3 = spectrum(assemble_jacobi(c3, Vq, pf3));
    ProfileExponents ex(3.0, 3);
    double h = pf3.h[0], p = 3.0, s = ex.sigma, th = ex.theta, cc = std::pow(h, th);
    double B = -(p - 1) * (3 + s / th) * std::pow(h, 2 * th) / ((p - 1) * std::pow(h, th));
    std::vector<double> oracle;
    for (int k = -31; k <= 32; ++k) {
      double q = cc * std::pow(2 * M_PI * k / c3.L, 2);
      oracle.push_back(q + (cc + B) / (1.5 * 1.5));
      oracle.push_back(q + th / (p - 1) * std::pow(h, -s) * 1.4);
    }
    std::sort(oracle.begin(), oracle.end());
    double err = 0.0;
    for (size_t i = 0; i < oracle.size(); ++i)
      err = std::max(err, std::abs(oracle[i] - S3.eigenvalues[i].real()) / std::max(1.0, std::abs(oracle[i])));
    PotentialField V = PotentialField::radial_cos(2, 2.0, 1.0);
    double r = find_stationary_circle(V, 0.0, 3.0, 2, 1.0, 2.0);
    std::vector<double> mins;
    double t256 = 0.0;
    for (int N : {64, 128, 256}) {
      auto t0 = Clock::now();
      mins.push_back(spectrum(assemble_jacobi(circle_curve(r, 2, N), V, 0.0, 3.0)).min_abs);
      if (N == 256) t256 = seconds_since(t0);
    }
    double conv = std::max(std::abs(mins[1] - mins[0]), std::abs(mins[2] - mins[1])) / mins[2];
    os << "fixture error " << err << " (< 1e-6), min|lambda| " << mins[2] << " relative drift " << conv
       << " (< 5e-4), N_s = 256 in " << t256 << " s (< 30 s)";
    return err < 1e-6 && conv < 5e-4 && t256 < 30.0;
  });

  report(7, "kernel identities", [](std::ostringstream& os) {
    double worst = 0.0;
    for (auto [p, d] : std::vector<std::pair<double, int>>{{3, 1}, {2, 1}, {3, 2}, {2, 2}}) {
      GroundState g = solve_ground_state(p, d);
      double k = 1.2;
      ZGrid zg = symmetric_zgrid(d, (d == 1 ? 20.0 : 12.0) / k, default_dz(d));
      ScaledProfile sp = scaled_profile(g, k, zg);
      Mat P = zg.points();
      auto Lr = [&](const Vec& v) { return linearized_apply(LinKind::Real, g, k, v, zg, default_order(d)); };
      auto Li = [&](const Vec& v) { return linearized_apply(LinKind::Imag, g, k, v, zg, default_order(d)); };
      for (int j = 0; j < d; ++j) {
        worst = std::max(worst, interior_sup(Lr(k * sp.gradU.col(j)), zg));
        Vec zU = (P.col(j).array() * sp.U.array()).matrix();
        worst = std::max(worst, interior_sup(Li(zU) + 2 * k * sp.gradU.col(j), zg));
      }
      worst = std::max(worst, interior_sup(Li(sp.U), zg));
      Vec r2U = (P.rowwise().squaredNorm().array() * sp.U.array()).matrix();
      worst = std::max(worst, interior_sup(Li(r2U) + 2.0 * d * sp.U + 4 * k * sp.Udotz, zg));
      CorrectionInputs in;
      in.p = p;
      in.k = k;
      in.h = std::pow(k, 2 / (p - 1));
      in.theta = p + 1 - 0.5 * (p - 1) * d;
      in.H = in.gradV = in.Phi = in.Phip = Vec::Zero(d);
      worst = std::max(worst, interior_sup(Lr(companion_profile(in, sp)) + sp.U, zg));
    }
    os << "worst sup-norm defect " << worst << " over (p, d) in {3, 2} x {1, 2} (< 1e-6)";
    return worst < 1e-6;
  });

  report(8, "residual scaling", [](std::ostringstream& os) {
    auto t0 = Clock::now();
    ScenarioConfig c = load_scenario(scenario_path("circle-a0.toml"));
    c.eps_list = {0.2, 0.1, 0.05};
    c.ablations = true;
    Pipeline pl(c, false);
    StageReport r = pl.residual();
    double t = seconds_since(t0);
    const auto& s = r.summary["slopes"];
    double full = s.value("sup", NAN), none = s.value("no_corrections", NAN), off = s.value("off_stationary", NAN);
    os << "slopes full " << full << " (in [1.7, 2.3]), no corrections " << none << ", off-stationary " << off
       << " (both in [0.8, 1.3]), " << t << " s (< 300 s)";
    return full >= 1.7 && full <= 2.3 && none >= 0.8 && none <= 1.3 && off >= 0.8 && off <= 1.3 && t < 300;
  });

  report(9, "f1 and the T-equation", [](std::ostringstream& os) {
    ScenarioConfig c = load_scenario(scenario_path("circle-a01.toml"));
    Pipeline pl(c, false);
    StageReport f = pl.f1();
    double Tres = f.summary["T_residual"].get<double>(), mean = std::abs(f.summary["mean"].get<double>());
    double with = pl.residual().summary["slopes"].value("Pi", NAN);
    c.use_f1 = false;
    Pipeline pl0(c, false);
    double without = pl0.residual().summary["slopes"].value("Pi", NAN);
    os << "T residual " << Tres << " (< 1e-8), |mean f1'| " << mean << ", Pi slope " << with << " vs " << without
       << " without f1 (gain " << with - without << ", >= 0.4)";
    return Tres < 1e-8 && mean < 1e-10 && with - without >= 0.4;
  });

  std::printf("%d of 9 criteria failed\n", failures);
  return failures ? 1 : 0;
}
