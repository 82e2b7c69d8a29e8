#include "nlstube/ground_state.hpp"

#include <boost/math/special_functions/bessel.hpp>
#include <boost/numeric/odeint.hpp>

#include <array>
#include <cmath>
#include <limits>
#include <sstream>
#include <vector>

namespace nlst {

namespace odeint = boost::numeric::odeint;

namespace {

using State = std::array<double, 2>;

double spow(double u, double p) { return u >= 0 ? std::pow(u, p) : -std::pow(-u, p); }

struct Radial {
  double p;
  int d;
  void operator()(const State& x, State& dx, double r) const {
    dx[0] = x[1];
    dx[1] = -(d - 1) / r * x[1] + x[0] - spow(x[0], p);
  }
};

constexpr double kAtol = 1e-30;
constexpr double kRtol = 1e-13;
constexpr double kR0 = 1e-3;

// Taylor start at r = kR0 for U(0) = a.
State taylor_start(double a, double p, int d) {
  double b = (a - std::pow(a, p)) / (2.0 * d);
  double c = b * (1.0 - p * std::pow(a, p - 1.0)) / (4.0 * (d + 2));
  double r = kR0;
  return {a + b * r * r + c * r * r * r * r, 2.0 * b * r + 4.0 * c * r * r * r};
}

enum class Shot { Over, Under, Undecided };

// Over: U crosses zero (U(0) too large). Under: U turns up (too small).
Shot classify(double a, double p, int d, double r_stop) {
  Radial sys{p, d};
  auto stepper = odeint::make_controlled(kAtol, kRtol, odeint::runge_kutta_fehlberg78<State>());
  State x = taylor_start(a, p, d);
  double r = kR0, dt = 1e-3;
  int guard = 0;
  while (r < r_stop && guard++ < 2000000) {
    dt = std::min(dt, r_stop - r);
    if (stepper.try_step(sys, x, r, dt) != odeint::success) continue;
    if (x[0] < 0) return Shot::Over;
    if (x[1] > 0) return Shot::Under;
  }
  return Shot::Undecided;
}

// Integrate from the origin to the abscissae ts (ascending, ts[0] > kR0).
std::vector<State> integrate_inner(double a, double p, int d, const std::vector<double>& ts) {
  Radial sys{p, d};
  std::vector<State> out;
  std::vector<double> times;
  times.push_back(kR0);
  times.insert(times.end(), ts.begin(), ts.end());
  State x = taylor_start(a, p, d);
  auto stepper = odeint::make_controlled(kAtol, kRtol, odeint::runge_kutta_fehlberg78<State>());
  odeint::integrate_times(stepper, sys, x, times.begin(), times.end(), 1e-3,
                          [&](const State& s, double) { out.push_back(s); });
  out.erase(out.begin());
  return out;
}

// Decaying solution of the linear tail equation, r^{-nu} K_nu(r), nu = (d-2)/2.
State tail(double c, int d, double r) {
  double nu = 0.5 * (d - 2);
  double k0 = boost::math::cyl_bessel_k(nu, r);
  double k1 = boost::math::cyl_bessel_k(nu + 1.0, r);
  double w = std::pow(r, -nu);
  return {c * w * k0, -c * w * k1};
}

// Integrate inward from r_max to the abscissae ts (descending).
std::vector<State> integrate_outer(double c, double p, int d, double r_max,
                                   const std::vector<double>& ts) {
  Radial sys{p, d};
  std::vector<State> out;
  std::vector<double> times;
  times.push_back(r_max);
  times.insert(times.end(), ts.begin(), ts.end());
  State x = tail(c, d, r_max);
  auto stepper = odeint::make_controlled(kAtol, kRtol, odeint::runge_kutta_fehlberg78<State>());
  odeint::integrate_times(stepper, sys, x, times.begin(), times.end(), -1e-3,
                          [&](const State& s, double) { out.push_back(s); });
  out.erase(out.begin());
  return out;
}

struct Grid {
  int N;
  double dr;
};

Grid make_grid(const GroundStateOptions& opt) {
  if (opt.r_max <= 0) throw DomainError("r_max must be positive");
  if (opt.n_grid > 0) {
    if (opt.n_grid < 3) throw DomainError("ground-state grid needs at least 3 points");
    return {opt.n_grid, opt.r_max / (opt.n_grid - 1)};
  }
  if (opt.dr <= 0) throw DomainError("dr must be positive");
  int cells = static_cast<int>(std::ceil(opt.r_max / opt.dr / 8.0)) * 8;
  return {cells + 1, opt.r_max / cells};
}

// Composite rule on nodes [0, last] with spacing h; Boole, Simpson or trapezoid.
double composite(const Vec& f, int stride, int last, double h) {
  int cells = last / stride;
  auto at = [&](int j) { return f[j * stride]; };
  if (cells >= 4 && cells % 4 == 0) {
    double s = 0;
    for (int j = 0; j < cells; j += 4)
      s += 7 * at(j) + 32 * at(j + 1) + 12 * at(j + 2) + 32 * at(j + 3) + 7 * at(j + 4);
    return s * 2.0 * h / 45.0;
  }
  if (cells >= 2 && cells % 2 == 0) {
    double s = 0;
    for (int j = 0; j < cells; j += 2) s += at(j) + 4 * at(j + 1) + at(j + 2);
    return s * h / 3.0;
  }
  double s = 0;
  for (int j = 0; j < cells; ++j) s += 0.5 * (at(j) + at(j + 1));
  return s * h;
}

int rule_order(int cells) {
  if (cells >= 4 && cells % 4 == 0) return 6;
  if (cells >= 2 && cells % 2 == 0) return 4;
  return 2;
}

}  // namespace

double sphere_area(int d) { return 2.0 * std::pow(M_PI, 0.5 * d) / std::tgamma(0.5 * d); }

void check_exponent(double p, int d) {
  if (d < 1) throw DomainError("normal dimension d must be >= 1");
  if (!(p > 1.0)) throw DomainError("exponent p must satisfy p > 1");
  if (d >= 3 && !(p < (d + 2.0) / (d - 2.0))) {
    std::ostringstream os;
    os << "exponent p = " << p << " is not subcritical in dimension d = " << d
       << " (need p < " << (d + 2.0) / (d - 2.0) << ")";
    throw DomainError(os.str());
  }
}

GroundState solve_ground_state(double p, int d, double tol) {
  GroundStateOptions opt;
  opt.tol = tol;
  return solve_ground_state(p, d, opt);
}

GroundState solve_ground_state(double p, int d, const GroundStateOptions& opt) {
  check_exponent(p, d);
  const double r_stop = opt.r_max + 10.0;

  // bracket U(0)
  double lo = 1.0 + 1e-6, hi = 2.0;
  int expand = 0;
  while (classify(hi, p, d, r_stop) != Shot::Over) {
    lo = hi;
    hi *= 2.0;
    if (++expand > 40) throw ConvergenceError("no ground state at these parameters (shooting bracket not found)");
  }
  if (classify(lo, p, d, r_stop) == Shot::Over)
    throw ConvergenceError("no ground state at these parameters (lower bracket overshoots)");
  int iters = 0;
  while (hi - lo > opt.tol * hi) {
    double mid = 0.5 * (lo + hi);
    Shot s = classify(mid, p, d, r_stop);
    if (s == Shot::Over) hi = mid;
    else lo = mid;  // an undecided shot is treated as undershoot
    if (++iters > 200) throw ConvergenceError("no ground state at these parameters (bisection stalled)");
  }
  double a = 0.5 * (lo + hi);

  // the core width scales like U(0)^{-(p-1)/2}; refine the grid for tall profiles
  GroundStateOptions gopt = opt;
  gopt.dr = opt.dr * std::min(1.0, 1.5 / std::pow(a, 0.5 * (p - 1.0)));
  Grid grid = make_grid(gopt);

  // matching radius: where the shot profile has decayed to ~1e-2 of U(0)
  const int N = grid.N;
  const double h = grid.dr;
  int im = 0;
  {
    std::vector<double> ts;
    for (int i = 1; i < N; ++i) {
      double r = i * h;
      if (r > 12.0) break;
      ts.push_back(r);
    }
    auto xs = integrate_inner(a, p, d, ts);
    im = static_cast<int>(ts.size());
    for (size_t j = 0; j < xs.size(); ++j)
      if (xs[j][0] < 1e-2 * a || xs[j][1] > 0) {
        im = static_cast<int>(j) + 1;
        break;
      }
    im = std::max(im, std::min(N - 2, static_cast<int>(std::ceil(2.0 / h))));
    im = std::min(im, N - 2);
  }
  const double rm = im * h;
  auto in_at = [&](double aa) { return integrate_inner(aa, p, d, {rm})[0]; };
  auto out_at = [&](double cc) { return integrate_outer(cc, p, d, grid.dr * (N - 1), {rm})[0]; };

  State xin = in_at(a);
  double c = xin[0] / tail(1.0, d, rm)[0];

  // two-sided Newton polish on (U(0), tail amplitude); stops at the integrator noise floor
  double best_res = std::numeric_limits<double>::infinity(), best_a = a, best_c = c;
  for (int it = 0; it < 12; ++it) {
    State fi = in_at(a), fo = out_at(c);
    double F0 = fi[0] - fo[0], F1 = fi[1] - fo[1];
    double scale = std::abs(fi[0]) + std::abs(fi[1]);
    double res = (std::abs(F0) + std::abs(F1)) / scale;
    if (res < best_res) {
      best_res = res;
      best_a = a;
      best_c = c;
    }
    if (res < 1e-14 || (it > 3 && res < 1e-10)) break;
    double da = 1e-9 * a, dc = 1e-7 * c;
    State fia = in_at(a + da), foc = out_at(c + dc);
    double J00 = (fia[0] - fi[0]) / da, J10 = (fia[1] - fi[1]) / da;
    double J01 = -(foc[0] - fo[0]) / dc, J11 = -(foc[1] - fo[1]) / dc;
    double det = J00 * J11 - J01 * J10;
    if (std::abs(det) < std::numeric_limits<double>::min())
      throw ConvergenceError("no ground state at these parameters (singular matching Jacobian)");
    double sa = (F0 * J11 - F1 * J01) / det;
    double sc = (J00 * F1 - J10 * F0) / det;
    a -= sa;
    c -= sc;
  }
  if (!(best_res < 1e-9)) throw ConvergenceError("no ground state at these parameters (matching did not converge)");
  a = best_a;
  c = best_c;

  GroundState g;
  g.p = p;
  g.d = d;
  g.dr = h;
  g.r_max = h * (N - 1);
  g.U0 = a;
  g.r.resize(N);
  g.U.resize(N);
  g.Up.resize(N);
  for (int i = 0; i < N; ++i) g.r[i] = i * h;
  g.U[0] = a;
  g.Up[0] = 0.0;
  std::vector<double> tin, tout;
  for (int i = 1; i <= im; ++i) tin.push_back(i * h);
  for (int i = N - 2; i > im; --i) tout.push_back(i * h);
  auto xi = integrate_inner(a, p, d, tin);
  for (int i = 1; i <= im; ++i) {
    g.U[i] = xi[i - 1][0];
    g.Up[i] = xi[i - 1][1];
  }
  State last = tail(c, d, g.r_max);
  g.U[N - 1] = last[0];
  g.Up[N - 1] = last[1];
  if (!tout.empty()) {
    auto xo = integrate_outer(c, p, d, g.r_max, tout);
    for (size_t j = 0; j < tout.size(); ++j) {
      int i = N - 2 - static_cast<int>(j);
      g.U[i] = xo[j][0];
      g.Up[i] = xo[j][1];
    }
  }
  g.decay_rate = 1.0;

  for (int i = 0; i < N; ++i)
    if (!(g.U[i] > 0)) throw ConvergenceError("no ground state at these parameters (profile not positive)");
  if (g.U[N - 1] >= 1e-8) throw DomainError("r_max too small: U(r_max) >= 1e-8");
  return g;
}

GroundState soliton_closed_form(double p, const GroundStateOptions& opt) {
  if (!(p > 1.0)) throw DomainError("exponent p must satisfy p > 1");
  Grid grid = make_grid(opt);
  GroundState g;
  g.p = p;
  g.d = 1;
  g.dr = grid.dr;
  g.r_max = grid.dr * (grid.N - 1);
  g.r.resize(grid.N);
  g.U.resize(grid.N);
  g.Up.resize(grid.N);
  const double amp = std::pow(0.5 * (p + 1.0), 1.0 / (p - 1.0));
  const double beta = 0.5 * (p - 1.0);
  for (int i = 0; i < grid.N; ++i) {
    double r = i * grid.dr;
    g.r[i] = r;
    g.U[i] = amp * std::pow(1.0 / std::cosh(beta * r), 2.0 / (p - 1.0));
    g.Up[i] = -g.U[i] * std::tanh(beta * r);
  }
  g.U0 = amp;
  g.decay_rate = 1.0;
  return g;
}

MomentTable moments(const GroundState& g) {
  const int N = static_cast<int>(g.r.size());
  const double w = sphere_area(g.d);
  Vec f[6];
  for (auto& v : f) v.resize(N);
  for (int i = 0; i < N; ++i) {
    double r = g.r[i];
    double rw = w * std::pow(r, g.d - 1);
    if (g.d == 1) rw = w;
    double u2 = g.U[i] * g.U[i], g2 = g.Up[i] * g.Up[i], up = std::pow(g.U[i], g.p + 1.0);
    f[0][i] = rw * u2;
    f[1][i] = rw * g2;
    f[2][i] = rw * up;
    f[3][i] = rw * r * r * u2;
    f[4][i] = rw * r * r * g2;
    f[5][i] = rw * r * r * up;
  }
  const int last = N - 1;
  const int half_last = (last / 2) * 2;
  double vals[6], err = 0.0;
  for (int k = 0; k < 6; ++k) {
    vals[k] = composite(f[k], 1, last, g.dr);
    double fine = composite(f[k], 1, half_last, g.dr);
    double coarse = composite(f[k], 2, half_last, 2.0 * g.dr);
    int ord = rule_order(half_last / 2);
    double e = std::abs(fine - coarse) / (std::pow(2.0, ord) - 1.0);
    if (half_last < 4) e = std::abs(vals[k]);
    err = std::max(err, e / std::abs(vals[k]));
  }
  MomentTable m;
  m.m2 = vals[0];
  m.mg = vals[1];
  m.mp1 = vals[2];
  m.z2m2 = vals[3];
  m.z2mg = vals[4];
  m.z2mp1 = vals[5];
  m.quad_error = err;
  return m;
}

double PohozaevReport::max_residual() const {
  return std::max({grad_identity, weighted_energy, weighted_mass, weighted_l2, mass_balance});
}

PohozaevReport pohozaev_report(const MomentTable& m, double p, int d, double quad_threshold) {
  const double n = d + 1.0;
  const double theta = p + 1.0 - 0.5 * (p - 1.0) * d;
  auto rel = [](double lhs, double rhs) {
    return std::abs(lhs - rhs) / std::max(std::abs(lhs), std::abs(rhs));
  };
  PohozaevReport r;
  r.grad_identity = rel(m.mg, d * (p - 1.0) / (2.0 * theta) * m.m2);
  r.weighted_energy = rel((n - 5.0) * m.z2mg + (n + 1.0) * m.z2m2, 2.0 * (n + 1.0) / (p + 1.0) * m.z2mp1);
  r.weighted_mass = rel((n - 1.0) * m.m2, m.z2mg + m.z2m2 - m.z2mp1);
  r.weighted_l2 = rel(m.z2m2, 2.0 / (p + 1.0) * m.z2mp1 - (n - 5.0) / (n + 1.0) * m.z2mg);
  r.mass_balance = rel((n - 1.0) * m.m2, 6.0 / (n + 1.0) * m.z2mg - (p - 1.0) / (p + 1.0) * m.z2mp1);
  r.quad_error = m.quad_error;
  r.quadrature_flag = m.quad_error > quad_threshold;
  return r;
}

namespace {

// quintic on [0, 1] matching value, derivative and second derivative (pre-scaled) at both ends
struct Quintic {
  double a0, a1, a2, a3, a4, a5;
  Quintic(double f0, double d0, double s0, double f1, double d1, double s1) {
    a0 = f0;
    a1 = d0;
    a2 = 0.5 * s0;
    double D0 = f1 - a0 - a1 - a2, D1 = d1 - a1 - 2 * a2, D2 = s1 - 2 * a2;
    a3 = 10 * D0 - 4 * D1 + 0.5 * D2;
    a4 = -15 * D0 + 7 * D1 - D2;
    a5 = 6 * D0 - 3 * D1 + 0.5 * D2;
  }
  double v(double t) const { return a0 + t * (a1 + t * (a2 + t * (a3 + t * (a4 + t * a5)))); }
  double d(double t) const { return a1 + t * (2 * a2 + t * (3 * a3 + t * (4 * a4 + t * 5 * a5))); }
};

}  // namespace

ProfileValue evaluate(const GroundState& g, double r) {
  r = std::abs(r);
  const int N = static_cast<int>(g.r.size());
  if (r >= g.r_max) {
    double u = g.U[N - 1] * std::exp(-(r - g.r_max));
    return {u, -u, u};
  }
  const double dm = g.d - 1.0;
  auto second = [&](int i) {
    double u = g.U[i];
    if (i == 0) return (u - std::pow(u, g.p)) / g.d;
    return -dm / g.r[i] * g.Up[i] + u - std::pow(u, g.p);
  };
  // differentiated ODE; the origin value vanishes by symmetry
  auto third = [&](int i) {
    double u = g.U[i], up = g.Up[i];
    if (i == 0) return 0.0;
    return -dm / g.r[i] * second(i) + dm / (g.r[i] * g.r[i]) * up + up - g.p * std::pow(u, g.p - 1) * up;
  };
  int i = std::min(static_cast<int>(r / g.dr), N - 2);
  const double h = g.dr;
  double t = (r - g.r[i]) / h;
  // U' has its own interpolant, otherwise Laplacians of grad U inherit an O(dr^3) kink
  Quintic qU(g.U[i], h * g.Up[i], h * h * second(i), g.U[i + 1], h * g.Up[i + 1], h * h * second(i + 1));
  Quintic qP(g.Up[i], h * second(i), h * h * third(i), g.Up[i + 1], h * second(i + 1), h * h * third(i + 1));
  return {qU.v(t), qP.v(t), qP.d(t) / h};
}

double ode_residual(const GroundState& g) {
  const int N = static_cast<int>(g.r.size());
  const double h = g.dr;
  double sup = 0.0;
  for (int i = 3; i < N - 3; ++i) {
    const auto& f = g.Up;
    double upp = (-f[i - 3] + 9 * f[i - 2] - 45 * f[i - 1] + 45 * f[i + 1] - 9 * f[i + 2] + f[i + 3]) / (60 * h);
    double res = -upp - (g.d - 1) / g.r[i] * g.Up[i] + g.U[i] - std::pow(g.U[i], g.p);
    sup = std::max(sup, std::abs(res));
  }
  return sup;
}

}  // namespace nlst
