#include "nlstube/reduced_profile.hpp"

#include "nlstube/spectral.hpp"

#include <boost/math/tools/roots.hpp>

#include <cmath>
#include <limits>
#include <sstream>

namespace nlst {

namespace tools = boost::math::tools;

ProfileExponents::ProfileExponents(double p_, int n_) : p(p_), n(n_) {
  sigma = 0.5 * (n - 1) * (p - 1.0) - 2.0;
  theta = p + 1.0 - 0.5 * (p - 1.0) * (n - 1);
}

double critical_A(double V, double p, int n) {
  ProfileExponents ex(p, n);
  const double s2 = 2.0 * ex.sigma, q = p - 1.0;
  if (s2 < q) return std::numeric_limits<double>::infinity();
  if (s2 == q) return 1.0;
  // g(h) = h^q - A^2 h^{2 sigma} - V has its maximum at the fold; zero maximum gives A_crit
  double hstar_q = V * s2 / (s2 - q);
  double hstar = std::pow(hstar_q, 1.0 / q);
  return std::sqrt(q * std::pow(hstar, q - s2) / s2);
}

HSolution solve_h(double V, double A, double p, int n) {
  if (!(V > 0)) throw DomainError("solve_h needs a positive potential value");
  if (!(p > 1)) throw DomainError("exponent p must satisfy p > 1");
  ProfileExponents ex(p, n);
  const double q = p - 1.0, s = ex.sigma, A2 = A * A;
  auto g = [&](double h) { return std::pow(h, q) - A2 * std::pow(h, 2 * s) - V; };
  auto dg = [&](double h) { return q * std::pow(h, q - 1) - 2 * s * A2 * std::pow(h, 2 * s - 1); };

  double lo = std::pow(V, 1.0 / q);  // root at A = 0; g(lo) <= 0
  double hi;
  if (A2 == 0.0) {
    return {lo, 1.0 / (q * std::pow(lo, q - 1)), 0.0};
  }
  if (2 * s > q || (2 * s == q)) {
    double Ac = critical_A(V, p, n);
    if (!(std::abs(A) < Ac)) {
      std::ostringstream os;
      os << "no admissible root for h at V = " << V << ", A = " << A << " (fold at A ~ " << Ac << ")";
      throw SolvabilityError(os.str(), Ac);
    }
  }
  if (2 * s > q) {
    // increasing branch ends at the crossover where g' = 0
    hi = std::pow(2 * s * A2 / q, 1.0 / (q - 2 * s));
  } else {
    hi = 2.0 * lo;
    int guard = 0;
    while (g(hi) <= 0) {
      hi *= 2.0;
      if (++guard > 200) throw ConvergenceError("solve_h: could not bracket the root");
    }
  }
  if (g(lo) > 0) lo = std::min(lo, hi) * 0.5;
  {
    int guard = 0;
    while (g(lo) > 0 && ++guard < 200) lo *= 0.5;
  }
  std::uintmax_t it = 100;
  auto fn = [&](double h) { return std::make_pair(g(h), dg(h)); };
  double h = tools::newton_raphson_iterate(fn, 0.5 * (lo + hi), lo, hi, 52, it);
  // polish
  for (int k = 0; k < 3; ++k) {
    double d = dg(h);
    if (d == 0) break;
    h -= g(h) / d;
  }
  double denom = dg(h);
  if (!(denom > 0)) throw SolvabilityError("solve_h: root is not on the increasing branch", critical_A(V, p, n));
  double dhdV = 1.0 / denom;
  return {h, dhdV, 2.0 * A * std::pow(h, 2 * s) * dhdV};
}

double ProfileFields::relation_defect() const {
  double d = 0.0;
  for (int i = 0; i < N(); ++i) {
    double hq = std::pow(h[i], p - 1.0);
    d = std::max(d, std::abs(k[i] * k[i] - hq) / hq);
    d = std::max(d, std::abs(V[i] + fp[i] * fp[i] - hq) / hq);
    double fe = A * std::pow(h[i], sigma);
    d = std::max(d, std::abs(fp[i] - fe) / std::max(1.0, std::abs(fe)));
  }
  return d;
}

double ProfileFields::phase_ode_defect() const {
  double d = 0.0;
  for (int i = 0; i < N(); ++i)
    d = std::max(d, std::abs(fpp[i] * h[i] + 2 * fp[i] * hp[i] - (n - 1) * fp[i] * h[i] * kp[i] / k[i]));
  return d;
}

ProfileFields profile_fields(const CurveModel& c, const PotentialField& V, double A, double p) {
  ProfileExponents ex(p, c.n);
  ProfileFields pf;
  pf.p = p;
  pf.n = c.n;
  pf.A = A;
  pf.sigma = ex.sigma;
  pf.theta = ex.theta;
  pf.L = c.L;
  const int N = c.N;
  pf.sbar = c.sbar;
  pf.V.resize(N);
  pf.h.resize(N);
  pf.k.resize(N);
  pf.fp.resize(N);
  pf.dh_dV.resize(N);
  pf.dh_dA.resize(N);
  for (int i = 0; i < N; ++i) {
    pf.V[i] = V.value(c.gamma.row(i).transpose());
    HSolution hs;
    try {
      hs = solve_h(pf.V[i], A, p, c.n);
    } catch (const SolvabilityError& e) {
      std::ostringstream os;
      os << e.what() << " at s = " << c.sbar[i];
      throw SolvabilityError(os.str(), e.a_crit);
    }
    pf.h[i] = hs.h;
    pf.k[i] = std::pow(hs.h, 0.5 * (p - 1.0));
    pf.fp[i] = A * std::pow(hs.h, ex.sigma);
    pf.dh_dV[i] = hs.dh_dV;
    pf.dh_dA[i] = hs.dh_dA;
  }
  if (c.closed) {
    pf.f = spectral::antiderivative(pf.fp, c.L);
    pf.hp = spectral::derivative(pf.h, c.L, 1);
    pf.kp = spectral::derivative(pf.k, c.L, 1);
    pf.fpp = spectral::derivative(pf.fp, c.L, 1);
  } else {
    pf.f = pf.fp * 0.0;
    for (int i = 1; i < N; ++i) pf.f[i] = pf.f[i - 1] + 0.5 * (pf.fp[i] + pf.fp[i - 1]) * c.ds();
    pf.hp = Vec::Zero(N);
    pf.kp = Vec::Zero(N);
    pf.fpp = Vec::Zero(N);
  }
  return pf;
}

double constraint_value(const CurveModel& c, const PotentialField& V, double p, double A) {
  Vec fp(c.N);
  ProfileExponents ex(p, c.n);
  for (int i = 0; i < c.N; ++i) {
    auto hs = solve_h(V.value(c.gamma.row(i).transpose()), A, p, c.n);
    fp[i] = A * std::pow(hs.h, ex.sigma);
  }
  return spectral::integral(fp, c.L);
}

namespace {

// constraint value and its A-derivative on a curve with node potentials Vn and length weights dl
std::pair<double, double> constraint_and_slope(const Vec& Vn, const Vec& dl, double A, double p, int n) {
  ProfileExponents ex(p, n);
  double F = 0, dF = 0;
  for (Eigen::Index i = 0; i < Vn.size(); ++i) {
    auto hs = solve_h(Vn[i], A, p, n);
    double hs_ = std::pow(hs.h, ex.sigma);
    F += A * hs_ * dl[i];
    dF += (hs_ + A * ex.sigma * std::pow(hs.h, ex.sigma - 1) * hs.dh_dA) * dl[i];
  }
  return {F, dF};
}

double solve_constraint(const Vec& Vn, const Vec& dl, double target, double p, int n, double A0) {
  if (target == 0.0) return 0.0;
  double Amax = std::numeric_limits<double>::infinity();
  for (Eigen::Index i = 0; i < Vn.size(); ++i) Amax = std::min(Amax, critical_A(Vn[i], p, n));
  double A = A0;
  for (int it = 0; it < 100; ++it) {
    auto [F, dF] = constraint_and_slope(Vn, dl, A, p, n);
    if (!(dF > 0)) throw RangeError("quantization: A -> A h^sigma is not increasing (A too large)");
    double step = (F - target) / dF;
    double An = A - step;
    if (!(An < Amax)) An = 0.5 * (A + Amax);
    if (An < 0) An = 0.5 * A;
    if (std::abs(An - A) <= 1e-16 * std::max(1.0, std::abs(A))) {
      A = An;
      break;
    }
    A = An;
  }
  return A;
}

}  // namespace

Quantization quantize_A(const CurveModel& c, const PotentialField& V, double p, double eps, double A_target) {
  if (!(eps > 0)) throw DomainError("quantize_A needs eps > 0");
  if (A_target < 0) throw DomainError("quantize_A needs A_target >= 0");
  const int N = c.N;
  Vec Vn(N), dl = Vec::Constant(N, c.ds());
  for (int i = 0; i < N; ++i) Vn[i] = V.value(c.gamma.row(i).transpose());
  if (A_target == 0.0) return {0.0, 0, 0.0};
  auto [F, dF] = constraint_and_slope(Vn, dl, A_target, p, c.n);
  if (!(dF > 0)) throw RangeError("quantization: A -> A h^sigma is not increasing at the target (A too large)");
  const double unit = 2.0 * M_PI * eps;
  long m0 = std::lround(F / unit);
  Quantization best{0, 0, 0};
  double best_gap = std::numeric_limits<double>::infinity();
  for (long m = std::max(0L, m0 - 1); m <= m0 + 1; ++m) {
    double A;
    try {
      A = solve_constraint(Vn, dl, m * unit, p, c.n, A_target);
    } catch (const SolvabilityError&) {
      continue;
    } catch (const RangeError&) {
      continue;
    }
    double defect = std::abs(constraint_and_slope(Vn, dl, A, p, c.n).first - m * unit);
    double gap = std::abs(A - A_target);
    if (gap < best_gap - 1e-15) {  // ties go to the smaller m, which is visited first
      best_gap = gap;
      best = {A, m, defect};
    }
  }
  if (!std::isfinite(best_gap)) throw RangeError("quantization: no admissible A near the target");
  return best;
}

double reduced_energy(const ProfileFields& pf) {
  return spectral::integral(pf.h.array().pow(pf.theta).matrix(), pf.L);
}

double energy_prefactor(double mp1, double p) { return (0.5 - 1.0 / (p + 1.0)) * mp1; }

Mat euler_residual(const CurveModel& c, const PotentialField& V, const ProfileFields& pf) {
  const int N = c.N, m = c.n - 1;
  Mat Hf = c.H_frame();
  Mat rho(N, m);
  for (int i = 0; i < N; ++i) {
    auto nd = potential_normal_data(V, c, i);
    double e = (pf.p - 1.0) / pf.theta * std::pow(pf.h[i], pf.p - 1.0) -
               2.0 * pf.A * pf.A * std::pow(pf.h[i], 2.0 * pf.sigma);
    for (int j = 0; j < m; ++j) rho(i, j) = nd.grad[j] - Hf(i, j) * e;
  }
  return rho;
}

Mat euler_residual(const CurveModel& c, const PotentialField& V, double A, double p) {
  return euler_residual(c, V, profile_fields(c, V, A, p));
}

double circle_stationarity(const PotentialField& V, double A, double p, int n, double r) {
  ProfileExponents ex(p, n);
  auto hs = solve_h(V.radial_value(r), A, p, n);
  double e = (p - 1.0) / ex.theta * std::pow(hs.h, p - 1.0) - 2.0 * A * A * std::pow(hs.h, 2.0 * ex.sigma);
  return V.radial_derivative(r) + e / r;
}

double find_stationary_circle(const PotentialField& V, double A, double p, int n, double r_lo, double r_hi) {
  if (!V.is_radial()) throw DomainError("find_stationary_circle needs a radial potential");
  if (!(r_lo > 0 && r_hi > r_lo)) throw DomainError("find_stationary_circle needs 0 < r_lo < r_hi");
  auto F = [&](double r) { return circle_stationarity(V, A, p, n, r); };
  double flo = F(r_lo), fhi = F(r_hi);
  if (flo == 0) return r_lo;
  if (fhi == 0) return r_hi;
  if ((flo > 0) == (fhi > 0)) throw ConvergenceError("no stationary circle found in the bracket (no sign change)");
  std::uintmax_t it = 200;
  auto res = tools::toms748_solve(F, r_lo, r_hi, flo, fhi, tools::eps_tolerance<double>(52), it);
  double r = 0.5 * (res.first + res.second);
  // secant polish
  double r1 = res.first, r2 = res.second;
  if (r1 != r2) {
    double f1 = F(r1), f2 = F(r2);
    if (f1 != f2) {
      double rs = r2 - f2 * (r2 - r1) / (f2 - f1);
      if (rs >= r1 && rs <= r2) r = rs;
    }
  }
  return r;
}

Mat A_prime_weights(const CurveModel& c, const PotentialField& V, const ProfileFields& pf) {
  const int N = c.N;
  const double s = pf.sigma, A = pf.A;
  double D = 0.0;
  for (int i = 0; i < N; ++i)
    D += (A * s * std::pow(pf.h[i], s - 1) * pf.dh_dA[i] + std::pow(pf.h[i], s)) * c.ds();
  if (std::abs(D) < 1e-12) throw DegeneracyError("A': denominator int(A sigma h^{sigma-1} dh/dA + h^sigma) vanishes");
  Mat w = Mat::Zero(N, c.n);
  if (A == 0.0) return w;
  for (int i = 0; i < N; ++i) {
    auto nd = potential_normal_data(V, c, i);
    Eigen::RowVectorXd row = s * std::pow(pf.h[i], s - 1) * pf.dh_dV[i] * nd.grad_ambient.transpose() -
                             std::pow(pf.h[i], s) * c.Hvec.row(i);
    w.row(i) = -A * row * c.ds() / D;
  }
  return w;
}

double A_prime(const CurveModel& c, const PotentialField& V, const ProfileFields& pf, const Mat& var) {
  return (A_prime_weights(c, V, pf).array() * var.array()).sum();
}

double first_variation(const CurveModel& c, const PotentialField& V, const ProfileFields& pf, const Mat& var) {
  const double p = pf.p, th = pf.theta, s = pf.sigma, A = pf.A;
  double acc = 0.0;
  for (int i = 0; i < c.N; ++i) {
    auto nd = potential_normal_data(V, c, i);
    double h = pf.h[i];
    double e = (p - 1.0) / th * std::pow(h, p - 1.0) - 2.0 * A * A * std::pow(h, 2.0 * s);
    double gv = nd.grad_ambient.dot(var.row(i).transpose());
    double hv = c.Hvec.row(i).dot(var.row(i));
    acc += th / (p - 1.0) * std::pow(h, -s) * (gv - hv * e);
  }
  return acc * c.ds();
}

DeformedEnergy deformed_energy(const CurveModel& c, const PotentialField& V, double p, double constraint,
                               const Mat& displacement) {
  const int N = c.N;
  ProfileExponents ex(p, c.n);
  Mat dD = spectral::derivative(displacement, c.L, 1);
  Vec Vn(N), dl(N);
  for (int i = 0; i < N; ++i) {
    Vec x = (c.gamma.row(i) + displacement.row(i)).transpose();
    Vn[i] = V.value(x);
    dl[i] = (c.T.row(i) + dD.row(i)).norm() * c.ds();
  }
  double A0 = 0.0;
  if (constraint != 0.0) {
    // start from the value that would hold on the undeformed curve
    double Ls = dl.sum();
    double hbar = std::pow(Vn.mean(), 1.0 / (p - 1.0));
    A0 = constraint / (Ls * std::pow(hbar, ex.sigma));
  }
  double A = solve_constraint(Vn, dl, constraint, p, c.n, A0);
  double E = 0.0;
  for (int i = 0; i < N; ++i) E += std::pow(solve_h(Vn[i], A, p, c.n).h, ex.theta) * dl[i];
  return {A, E};
}

}  // namespace nlst
