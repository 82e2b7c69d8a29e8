#include "nlstube/jacobi.hpp"

#include "nlstube/spectral.hpp"

#include <algorithm>
#include <cmath>

namespace nlst {

Vec stack(const Mat& comps) {
  Vec v(comps.size());
  for (Eigen::Index j = 0; j < comps.cols(); ++j) v.segment(j * comps.rows(), comps.rows()) = comps.col(j);
  return v;
}

Mat unstack(const Vec& v, int N, int m) {
  Mat a(N, m);
  for (int j = 0; j < m; ++j) a.col(j) = v.segment(j * N, N);
  return a;
}

namespace {

double denominator_int(const CurveModel& c, const ProfileFields& pf) {
  double D = 0.0;
  for (int i = 0; i < c.N; ++i)
    D += pf.A * pf.sigma * std::pow(pf.h[i], pf.sigma - 1) * pf.dh_dA[i] + std::pow(pf.h[i], pf.sigma);
  return D * c.ds();
}

// covariant derivative of frame components
Mat cov_derivative(const CurveModel& c, const Mat& a) {
  Mat Da = spectral::derivative(a, c.L, 1);
  if (a.cols() > 1)
    for (int i = 0; i < c.N; ++i) Da.row(i) += (c.omega[i] * a.row(i).transpose()).transpose();
  return Da;
}

}  // namespace

JacobiCoefficients jacobi_coefficients(const CurveModel& c, const PotentialField& V, const ProfileFields& pf,
                                       JacobiForm form) {
  if (!c.closed) throw DomainError("jacobi: curve must be closed");
  if (pf.N() != c.N) throw DomainError("jacobi: profile fields and curve grids differ");
  const int N = c.N, m = c.n - 1;
  const double p = pf.p, s = pf.sigma, th = pf.theta, A = pf.A, A2 = A * A;
  JacobiCoefficients co;
  co.N = N;
  co.m = m;
  co.L = c.L;
  co.c.resize(N);
  co.cp.resize(N);
  co.M.resize(N);
  co.omega.resize(N);
  co.col = Mat::Zero(N, m);
  co.row = Mat::Zero(N, m);
  Mat Hf = c.H_frame();
  Mat w = A_prime_weights(c, V, pf);  // throws on a degenerate denominator
  Mat wf = c.to_frame(w);
  for (int i = 0; i < N; ++i) {
    const double h = pf.h[i];
    co.c[i] = std::pow(h, th) - 2 * A2 * th / (p - 1) * std::pow(h, s);
    co.cp[i] = th * (std::pow(h, th - 1) - 2 * A2 * s / (p - 1) * std::pow(h, s - 1)) * pf.hp[i];
    co.omega[i] = m > 1 ? c.omega[i] : Mat::Zero(m, m);
    auto nd = potential_normal_data(V, c, i);
    Vec H = Hf.row(i).transpose();
    Mat M = th / (p - 1) * std::pow(h, -s) * nd.hess;
    if (form == JacobiForm::Reduced) {
      double den = (p - 1) * std::pow(h, th) - 2 * A2 * s * std::pow(h, s);
      double B = (-(p - 1) * (3 + s / th) * std::pow(h, 2 * th) - 16 * s * th * A2 * A2 / (p - 1) * std::pow(h, 2 * s) +
                  2 * A2 * (5 * s + 3 * th) * std::pow(h, th + s)) /
                 den;
      // (1/2) c sum_j d^2_{jm} g_11 V^j with d^2_{jm} g_11 = 2 H^j H^m, plus the H<H,.> bracket
      M += (co.c[i] + B) * H * H.transpose();
      co.col.row(i) = (2 * A * (th - s) * std::pow(h, p - 1) / den) * H.transpose();
    } else {
      Vec g = nd.grad;
      M -= th / (p - 1) * std::pow(h, -s) * (H * g.transpose() + g * H.transpose());
      M -= s * th / (p - 1) * std::pow(h, -s - 1) * pf.dh_dV[i] * g * g.transpose();
      co.col.row(i) = (-2 * th / (p - 1) * A *
                       (s * std::pow(h, s - 1) * pf.dh_dV[i] * g - std::pow(h, s) * H))
                          .transpose();
    }
    co.M[i] = M;
  }
  co.row = wf;
  return co;
}

JacobiMatrix assemble_jacobi(const JacobiCoefficients& co) {
  const int N = co.N, m = co.m, K = N * m;
  Mat D1 = spectral::diff_matrix(N, co.L, 1), D2 = spectral::diff_matrix(N, co.L, 2);
  Mat D1b = Mat::Zero(K, K), D2b = Mat::Zero(K, K), Om = Mat::Zero(K, K), Mb = Mat::Zero(K, K);
  for (int j = 0; j < m; ++j) {
    D1b.block(j * N, j * N, N, N) = D1;
    D2b.block(j * N, j * N, N, N) = D2;
  }
  bool twist = false;
  for (int i = 0; i < N; ++i)
    for (int k = 0; k < m; ++k)
      for (int j = 0; j < m; ++j) {
        Om(k * N + i, j * N + i) = co.omega[i](k, j);
        Mb(k * N + i, j * N + i) = co.M[i](k, j);
        if (co.omega[i](k, j) != 0.0) twist = true;
      }
  Mat Dc = D1b, Dc2 = D2b;
  if (twist) {
    Dc += Om;
    Dc2 += D1b * Om + Om * D1b + Om * Om;
  }
  JacobiMatrix J;
  J.N = N;
  J.m = m;
  J.L = co.L;
  Vec cs(K), cps(K);
  for (int j = 0; j < m; ++j) {
    cs.segment(j * N, N) = co.c;
    cps.segment(j * N, N) = co.cp;
  }
  J.local = Mb - cs.asDiagonal() * Dc2 - cps.asDiagonal() * Dc;
  J.nonlocal = stack(co.col) * stack(co.row).transpose();
  J.weight_hk = Vec::Ones(N);
  return J;
}

JacobiMatrix assemble_jacobi(const CurveModel& c, const PotentialField& V, const ProfileFields& pf,
                             JacobiForm form) {
  JacobiMatrix J = assemble_jacobi(jacobi_coefficients(c, V, pf, form));
  J.weight_hk = (pf.h.array() * pf.k.array()).matrix();
  return J;
}

JacobiMatrix assemble_jacobi(const CurveModel& c, const PotentialField& V, double A, double p, JacobiForm form) {
  return assemble_jacobi(c, V, profile_fields(c, V, A, p), form);
}

double quadratic_form(const CurveModel& c, const PotentialField& V, const ProfileFields& pf, const Mat& Vs,
                      const Mat& Ws) {
  const double p = pf.p, s = pf.sigma, th = pf.theta, A = pf.A;
  Mat a = c.to_frame(Vs), b = c.to_frame(Ws);
  Mat Da = cov_derivative(c, a), Db = cov_derivative(c, b);
  Mat Hf = c.H_frame();
  double acc = 0.0;
  for (int i = 0; i < c.N; ++i) {
    const double h = pf.h[i];
    auto nd = potential_normal_data(V, c, i);
    Vec ai = a.row(i).transpose(), bi = b.row(i).transpose(), H = Hf.row(i).transpose();
    double cc = std::pow(h, th) - 2 * A * A * th / (p - 1) * std::pow(h, s);
    double ga = nd.grad.dot(ai), gb = nd.grad.dot(bi);
    acc += cc * Da.row(i).dot(Db.row(i));
    acc += th / (p - 1) * std::pow(h, -s) * (ai.dot(nd.hess * bi) - ga * H.dot(bi) - gb * H.dot(ai));
    acc -= s * th / (p - 1) * std::pow(h, -s - 1) * pf.dh_dV[i] * ga * gb;
  }
  acc *= c.ds();
  if (A != 0.0) acc += A_prime(c, V, pf, Vs) * A_prime(c, V, pf, Ws) * 2 * th / (p - 1) * denominator_int(c, pf);
  return acc;
}

double jacobi_pairing(const JacobiMatrix& J, const CurveModel& c, const Mat& Vs, const Mat& Ws) {
  Vec a = stack(c.to_frame(Vs)), b = stack(c.to_frame(Ws));
  return (J.full() * a).dot(b) * J.ds();
}

Spectrum spectrum(const JacobiMatrix& J, double tol) {
  Mat F = J.full();
  Eigen::EigenSolver<Mat> es(F, false);
  if (es.info() != Eigen::Success) throw ConvergenceError("spectrum: eigensolver failed");
  Eigen::VectorXcd ev = es.eigenvalues();
  std::vector<std::complex<double>> v(ev.data(), ev.data() + ev.size());
  std::sort(v.begin(), v.end(), [](auto x, auto y) {
    return x.real() < y.real() || (x.real() == y.real() && x.imag() < y.imag());
  });
  Spectrum S;
  S.eigenvalues = Eigen::Map<Eigen::VectorXcd>(v.data(), v.size());
  std::vector<double> ab;
  for (auto& z : v) {
    ab.push_back(std::abs(z));
    S.max_imag = std::max(S.max_imag, std::abs(z.imag()));
  }
  std::sort(ab.begin(), ab.end());
  S.min_abs = ab.front();
  S.second_abs = ab.size() > 1 ? ab[1] : ab.front();
  S.norm = F.norm();
  S.invertible = S.min_abs > tol * ab.back();
  return S;
}

SymmetryReport symmetry_report(const JacobiMatrix& J) {
  Mat F = J.full();
  SymmetryReport r;
  r.plain = (F - F.transpose()).norm() / F.norm();
  Vec w(J.size());
  for (int j = 0; j < J.m; ++j) w.segment(j * J.N, J.N) = J.weight_hk;
  Mat G = w.asDiagonal() * F;
  r.weighted = (G - G.transpose()).norm() / G.norm();
  return r;
}

double rayleigh_quotient(const JacobiMatrix& J, const Mat& comps) {
  Vec a = stack(comps);
  return (J.full() * a).dot(a) / a.squaredNorm();
}

std::vector<Mat> translation_fields(const CurveModel& c) {
  std::vector<Mat> out;
  for (int d = 0; d < c.n; ++d) {
    Mat e = Mat::Zero(c.N, c.n);
    e.col(d).setOnes();
    out.push_back(c.to_frame(e));
  }
  return out;
}

F1Solution solve_f1(const CurveModel& c, const PotentialField& V, const ProfileFields& pf, const Mat& Phi) {
  const int N = c.N;
  const double p = pf.p, s = pf.sigma, th = pf.theta, A = pf.A, A2 = A * A;
  Mat Hf = c.H_frame();
  Mat phi = c.to_frame(Phi);
  Vec HPhi(N), Psi(N);
  double sign = 0.0;
  for (int i = 0; i < N; ++i) {
    const double h = pf.h[i];
    double den = (p - 1) * std::pow(h, p + 1) - 2 * s * A2 * std::pow(h, 2 * s + 2);
    double sg = den > 0 ? 1.0 : -1.0;
    if (den == 0.0 || (i > 0 && sg != sign))
      throw RangeError("solve_f1: denominator (p-1)h^{p+1} - 2 sigma A^2 h^{2 sigma+2} changes sign (A too large)");
    sign = sg;
    Psi[i] = (p - 1) * std::pow(pf.k[i], c.n + 1) / den;
    HPhi[i] = Hf.row(i).dot(phi.row(i));
  }
  const double a1 = 2 * A * ((p - 1) / (2 * th) - 1);
  F1Solution out;
  out.c = A_prime(c, V, pf, Phi);
  out.fp1 = (Psi.array() * (a1 * HPhi.array() + out.c)).matrix();
  out.mean = spectral::integral(out.fp1, c.L);
  out.f1 = spectral::antiderivative(out.fp1, c.L);
  Vec flux(N);
  for (int i = 0; i < N; ++i) {
    const double h = pf.h[i];
    flux[i] = h * h * out.fp1[i] / ((p - 1) * std::pow(pf.k[i], c.n + 1)) *
              ((p - 1) * std::pow(h, p - 1) - 2 * s * A2 * std::pow(h, 2 * s));
  }
  Vec lhs = spectral::derivative(flux, c.L, 1), rhs = a1 * spectral::derivative(HPhi, c.L, 1);
  out.T_residual = (lhs - rhs).cwiseAbs().maxCoeff();
  return out;
}

}  // namespace nlst
