#include "nlstube/residual.hpp"

#include "nlstube/spectral.hpp"

#include <cmath>
#include <sstream>

namespace nlst {

namespace {

const std::complex<double> I(0.0, 1.0);

Mat phi_frame(const HarnessSetup& S) {
  const int m = S.curve.n - 1;
  if (S.Phi.size() == 0) return Mat::Zero(S.curve.N, m);
  return S.curve.to_frame(S.Phi);
}

double max_twist(const CurveModel& c) {
  double t = 0.0;
  if (c.n < 3) return 0.0;
  for (const auto& o : c.omega) t = std::max(t, o.cwiseAbs().maxCoeff());
  return t;
}

// first derivative along axis a, FD of the given order, zero outside
Vec grad_axis(const Vec& w, const ZGrid& zg, int axis, int order) {
  static const double c4[3] = {0.0, 2.0 / 3.0, -1.0 / 12.0};
  static const double c6[4] = {0.0, 0.75, -0.15, 1.0 / 60.0};
  const double* c = order == 4 ? c4 : c6;
  const int half = order / 2;
  Vec out(w.size());
  auto at = [&](int i0, int i1) -> double {
    if (i0 < zg.lo[0] || i0 > zg.hi[0]) return 0.0;
    if (zg.d == 2 && (i1 < zg.lo[1] || i1 > zg.hi[1])) return 0.0;
    return w[zg.index(i0, i1)];
  };
  const int j0 = zg.d == 1 ? 0 : zg.lo[1], j1 = zg.d == 1 ? 0 : zg.hi[1];
  for (int j = j0; j <= j1; ++j)
    for (int i = zg.lo[0]; i <= zg.hi[0]; ++i) {
      double acc = 0.0;
      for (int s = 1; s <= half; ++s) {
        if (axis == 0)
          acc += c[s] * (at(i + s, j) - at(i - s, j));
        else
          acc += c[s] * (at(i, j + s) - at(i, j - s));
      }
      out[zg.index(i, j)] = acc / zg.dz;
    }
  return out;
}

CMat s_derivative(const CMat& f, double L, int order) {
  Mat re = spectral::derivative(Mat(f.real()), L, order);
  Mat im = spectral::derivative(Mat(f.imag()), L, order);
  CMat out(f.rows(), f.cols());
  out.real() = re;
  out.imag() = im;
  return out;
}

Eigen::VectorXcd row_laplacian(const Eigen::VectorXcd& v, const ZGrid& zg, int order) {
  Vec re = laplacian(v.real(), zg, order), im = laplacian(v.imag(), zg, order);
  Eigen::VectorXcd out(v.size());
  out.real() = re;
  out.imag() = im;
  return out;
}

Eigen::VectorXcd row_grad(const Eigen::VectorXcd& v, const ZGrid& zg, int axis, int order) {
  Vec re = grad_axis(v.real(), zg, axis, order), im = grad_axis(v.imag(), zg, axis, order);
  Eigen::VectorXcd out(v.size());
  out.real() = re;
  out.imag() = im;
  return out;
}

// pieces shared by the exact and expanded Laplacians
struct LapPieces {
  CMat D, D2;  // D Psi, D^2 Psi
  Mat Hf, Hpf;
  Mat P;       // z grid points
};

LapPieces lap_pieces(const TubeField& f, const HarnessSetup& S) {
  LapPieces lp;
  const double e = f.eps;
  CMat Ps = s_derivative(f.psi, f.L, 1), Pss = s_derivative(f.psi, f.L, 2);
  lp.D.resize(f.psi.rows(), f.psi.cols());
  lp.D2.resize(f.psi.rows(), f.psi.cols());
  for (int i = 0; i < f.Ns; ++i) {
    lp.D.row(i) = e * Ps.row(i) - I * f.Fp[i] * f.psi.row(i);
    lp.D2.row(i) = e * e * Pss.row(i) - 2.0 * I * e * f.Fp[i] * Ps.row(i) - I * e * f.Fpp[i] * f.psi.row(i) -
                   f.Fp[i] * f.Fp[i] * f.psi.row(i);
  }
  lp.Hf = S.curve.H_frame();
  lp.Hpf = spectral::derivative(lp.Hf, S.curve.L, 1);
  lp.P = f.zg.points();
  return lp;
}

}  // namespace

HarnessSetup make_setup(const CurveModel& c, const PotentialField& V, double A, double p, const GroundState& g,
                        const Mat& Phi, bool use_f1) {
  if (g.d != c.n - 1) throw DomainError("harness: ground state dimension must be n - 1");
  HarnessSetup S;
  S.curve = c;
  S.V = V;
  S.pf = profile_fields(c, V, A, p);
  S.g = &g;
  S.Phi = Phi;
  S.use_f1 = use_f1;
  Mat Ph = Phi.size() ? Phi : Mat::Zero(c.N, c.n);
  if (use_f1 && c.closed) {
    S.f1 = solve_f1(c, V, S.pf, Ph);
  } else {
    S.f1.fp1 = Vec::Zero(c.N);
    S.f1.f1 = Vec::Zero(c.N);
  }
  return S;
}

CircleFit stationary_quantized_circle(const PotentialField& V, double p, int n, double A_target, double eps, int N_s,
                                      double r_lo, double r_hi) {
  CircleFit fit;
  fit.A = A_target;
  for (int it = 0; it < 50; ++it) {
    fit.iterations = it + 1;
    fit.r = find_stationary_circle(V, fit.A, p, n, r_lo, r_hi);
    if (A_target == 0.0) break;
    CurveModel c = circle_curve(fit.r, n, N_s, V.center());
    Quantization q = quantize_A(c, V, p, eps, A_target);
    fit.m = q.m;
    bool done = std::abs(q.A - fit.A) <= 1e-15 * std::max(1.0, q.A);
    fit.A = q.A;
    if (done) break;
  }
  return fit;
}

TubeField assemble_psi1(const HarnessSetup& S, const ResidualOptions& opt) {
  const CurveModel& c = S.curve;
  if (!S.g) throw DomainError("harness: missing ground state");
  if (opt.order != 4 && opt.order != 6) throw DomainError("harness: z order must be 4 or 6");
  if (max_twist(c) > 1e-8) throw DomainError("harness: only twist-free normal frames are supported");
  const ProfileFields& pf = S.pf;
  const int N = c.N, d = c.n - 1;
  const double e = opt.eps;
  TubeField f;
  f.eps = e;
  f.L = c.L;
  f.Ns = N;
  f.margin = opt.order / 2;
  f.sbar = c.sbar;
  Mat Hf = c.H_frame();
  const double kmin = pf.k.minCoeff();
  const double R = opt.tail / kmin;
  Vec lo(d), hi(d);
  for (int j = 0; j < d; ++j) {
    double hp = std::max(0.0, Hf.col(j).maxCoeff()), hn = std::max(0.0, -Hf.col(j).minCoeff());
    hi[j] = hp > 0 ? std::min(R, opt.focal_fraction / (e * hp)) : R;
    lo[j] = -(hn > 0 ? std::min(R, opt.focal_fraction / (e * hn)) : R);
    hi[j] += f.margin * opt.dz;
    lo[j] -= f.margin * opt.dz;
  }
  f.zg = box_zgrid(d, lo, hi, opt.dz);
  Mat P = f.zg.points();
  const int Z = f.zg.size();
  // fold-over check
  f.Jmin = 1.0;
  for (int i = 0; i < N; ++i) f.Jmin = std::min(f.Jmin, (1.0 - e * (P * Hf.row(i).transpose()).array()).minCoeff());
  if (!(f.Jmin > 0.05)) {
    std::ostringstream os;
    os << "tube grid reaches the focal set (min J = " << f.Jmin << "); lower focal_fraction or eps";
    throw ConfigError(os.str());
  }
  // phase and shift
  Mat phi = phi_frame(S);
  Mat phip = spectral::derivative(phi, c.L, 1);
  Vec fp1 = opt.corrections && S.use_f1 && S.f1.fp1.size() ? S.f1.fp1 : Vec::Zero(N);
  f.Fp = pf.fp + e * fp1;
  if (opt.f2p.size()) f.Fp += e * e * opt.f2p;
  f.Fpp = spectral::derivative(f.Fp, c.L, 1);
  f.F = spectral::antiderivative(f.Fp, c.L);
  f.winding = spectral::integral(f.Fp, c.L);
  f.shift = phi;
  if (opt.Phi1.size()) f.shift += e * opt.Phi1;
  f.psi.resize(N, Z);
  f.Ubase.resize(N, Z);
  f.dUbase.assign(d, Mat(N, Z));
  f.kz = pf.k;
  double rmax = 0.0;
  for (int q = 0; q < Z; ++q) rmax = std::max(rmax, P.row(q).norm());
  rmax += f.shift.cwiseAbs().maxCoeff() + 1.0;
  WroOptions wopt;
  wopt.force = opt.force_solvability;
  f.kernel_projection = 0.0;
  for (int i = 0; i < N; ++i) {
    CorrectionInputs in;
    in.p = pf.p;
    in.h = pf.h[i];
    in.k = pf.k[i];
    in.hp = pf.hp[i];
    in.kp = pf.kp[i];
    in.fp = pf.fp[i];
    in.fpp = pf.fpp[i];
    in.fp1 = fp1[i];
    in.theta = pf.theta;
    in.H = Hf.row(i).transpose();
    in.gradV = potential_normal_data(S.V, c, i).grad;
    in.Phi = phi.row(i).transpose();
    in.Phip = phip.row(i).transpose();
    Mat z = P.rowwise() - f.shift.row(i);
    Vec U, wr, wi;
    if (opt.corrections) {
      CorrectionModel cm(in, *S.g, rmax, wopt);
      f.kernel_projection = std::max(f.kernel_projection, cm.kernel_projection());
      cm.evaluate(z, U, wr, wi, true);
    } else {
      CorrectionModel cm(in, *S.g, 1.0, WroOptions{0.01, 0.0, 1e-8, true});
      cm.evaluate(z, U, wr, wi, false);
    }
    for (int q = 0; q < Z; ++q) {
      f.psi(i, q) = std::complex<double>(in.h * U[q] + e * wr[q], e * wi[q]);
      f.Ubase(i, q) = U[q];
      double r = z.row(q).norm();
      double up = r > 0 ? evaluate(*S.g, in.k * r).Up : 0.0;
      for (int j = 0; j < d; ++j) f.dUbase[j](i, q) = r > 0 ? up * z(q, j) / r : 0.0;
    }
  }
  // outer layer of the reported region
  f.boundary_max = 0.0;
  for (int q = 0; q < Z; ++q) {
    int i0 = q % f.zg.count(0) + f.zg.lo[0];
    bool edge = i0 - f.zg.lo[0] == f.margin || f.zg.hi[0] - i0 == f.margin;
    if (d == 2) {
      int i1 = q / f.zg.count(0) + f.zg.lo[1];
      edge = edge || i1 - f.zg.lo[1] == f.margin || f.zg.hi[1] - i1 == f.margin;
    }
    if (edge) f.boundary_max = std::max(f.boundary_max, f.psi.col(q).cwiseAbs().maxCoeff());
  }
  return f;
}

TubeField test_bump(const HarnessSetup& S, const ResidualOptions& opt) {
  ResidualOptions o = opt;
  o.corrections = false;
  TubeField f = assemble_psi1(S, o);
  Mat P = f.zg.points();
  for (int i = 0; i < f.Ns; ++i)
    for (int q = 0; q < f.zg.size(); ++q)
      f.psi(i, q) = std::exp(-P.row(q).squaredNorm()) * (1.0 + 0.3 * std::cos(2 * M_PI * f.sbar[i] / f.L));
  f.Fp = Vec::Ones(f.Ns);
  f.Fpp = Vec::Zero(f.Ns);
  f.F = f.sbar;
  f.winding = f.L;
  return f;
}

CMat laplacian_exact(const TubeField& f, const HarnessSetup& S) {
  LapPieces lp = lap_pieces(f, S);
  const double e = f.eps;
  const int d = f.zg.d;
  CMat out(f.psi.rows(), f.psi.cols());
  for (int i = 0; i < f.Ns; ++i) {
    Vec a = lp.P * lp.Hf.row(i).transpose(), b = lp.P * lp.Hpf.row(i).transpose();
    Eigen::ArrayXd J = 1.0 - e * a.array();
    Eigen::VectorXcd row = f.psi.row(i).transpose();
    Eigen::VectorXcd lap = row_laplacian(row, f.zg, 2 * f.margin);
    Eigen::VectorXcd Hgrad = Eigen::VectorXcd::Zero(row.size());
    for (int j = 0; j < d; ++j) Hgrad += lp.Hf(i, j) * row_grad(row, f.zg, j, 2 * f.margin);
    Eigen::ArrayXcd D = lp.D.row(i).transpose().array(), D2 = lp.D2.row(i).transpose().array();
    Eigen::ArrayXcd val = D2 / (J * J) + e * e * b.array() * D / (J * J * J) + lap.array() - e * Hgrad.array() / J;
    out.row(i) = val.matrix().transpose();
  }
  return out;
}

CMat laplacian_expanded(const TubeField& f, const HarnessSetup& S) {
  LapPieces lp = lap_pieces(f, S);
  const double e = f.eps;
  const int d = f.zg.d;
  CMat out(f.psi.rows(), f.psi.cols());
  for (int i = 0; i < f.Ns; ++i) {
    Vec a = lp.P * lp.Hf.row(i).transpose(), b = lp.P * lp.Hpf.row(i).transpose();
    Eigen::VectorXcd row = f.psi.row(i).transpose();
    Eigen::VectorXcd lap = row_laplacian(row, f.zg, 2 * f.margin);
    Eigen::VectorXcd Hgrad = Eigen::VectorXcd::Zero(row.size());
    for (int j = 0; j < d; ++j) Hgrad += lp.Hf(i, j) * row_grad(row, f.zg, j, 2 * f.margin);
    Eigen::ArrayXcd D = lp.D.row(i).transpose().array(), D2 = lp.D2.row(i).transpose().array();
    Eigen::ArrayXd A = a.array();
    Eigen::ArrayXcd val = D2 + lap.array() - e * Hgrad.array() + 2 * e * A * D2 - e * e * A * Hgrad.array() +
                          3 * e * e * A * A * D2 + e * e * b.array() * D;
    out.row(i) = val.matrix().transpose();
  }
  return out;
}

CMat apply_linear_part(const TubeField& f, const HarnessSetup& S) {
  CMat out = -laplacian_exact(f, S);
  const CurveModel& c = S.curve;
  Mat P = f.zg.points();
  const int d = f.zg.d;
  for (int i = 0; i < f.Ns; ++i) {
    Vec x0 = c.gamma.row(i).transpose();
    for (int q = 0; q < f.zg.size(); ++q) {
      Vec x = x0;
      for (int j = 0; j < d; ++j) x += f.eps * P(q, j) * c.Z[j].row(i).transpose();
      out(i, q) += S.V.value(x) * f.psi(i, q);
    }
  }
  return out;
}

CMat apply_nls_operator(const TubeField& f, const HarnessSetup& S) {
  CMat out = apply_linear_part(f, S);
  const double p = S.pf.p;
  out.array() -= f.psi.array().abs().pow(p - 1.0) * f.psi.array();
  return out;
}

std::vector<int> interior_nodes(const TubeField& f) {
  std::vector<int> idx;
  const ZGrid& zg = f.zg;
  for (int q = 0; q < zg.size(); ++q) {
    int i0 = q % zg.count(0) + zg.lo[0];
    bool edge = i0 - zg.lo[0] < f.margin || zg.hi[0] - i0 < f.margin;
    if (zg.d == 2) {
      int i1 = q / zg.count(0) + zg.lo[1];
      edge = edge || i1 - zg.lo[1] < f.margin || zg.hi[1] - i1 < f.margin;
    }
    if (!edge) idx.push_back(q);
  }
  return idx;
}

ResidualNorms residual_norms(const TubeField& f, const CMat& res, const HarnessSetup& S) {
  ResidualNorms n;
  auto idx = interior_nodes(f);
  Mat Hf = S.curve.H_frame();
  Mat P = f.zg.points();
  const double ds = (f.L / f.Ns) / f.eps, dv = ds * f.zg.cell();
  double acc = 0.0;
  for (int i = 0; i < f.Ns; ++i)
    for (int q : idx) {
      double J = 1.0 - f.eps * P.row(q).dot(Hf.row(i));
      double a = std::abs(res(i, q));
      n.sup = std::max(n.sup, a);
      acc += a * a * J * dv;
    }
  n.l2 = std::sqrt(acc);
  return n;
}

KernelProjections project_residual(const TubeField& f, const CMat& res) {
  KernelProjections kp;
  const int d = f.zg.d;
  auto idx = interior_nodes(f);
  kp.Pi = Vec::Zero(f.Ns);
  kp.Pr = Mat::Zero(f.Ns, d);
  for (int i = 0; i < f.Ns; ++i) {
    for (int q : idx) {
      kp.Pi[i] += res(i, q).imag() * f.Ubase(i, q);
      for (int j = 0; j < d; ++j) kp.Pr(i, j) += res(i, q).real() * f.dUbase[j](i, q);
    }
  }
  kp.Pi *= f.zg.cell();
  kp.Pr *= f.zg.cell();
  kp.Pi_sup = kp.Pi.cwiseAbs().maxCoeff();
  kp.Pr_sup = kp.Pr.cwiseAbs().maxCoeff();
  return kp;
}

ResidualEntry residual_entry(const HarnessSetup& S, const ResidualOptions& opt) {
  TubeField f = assemble_psi1(S, opt);
  CMat res = apply_nls_operator(f, S);
  ResidualEntry e;
  e.eps = opt.eps;
  e.norms = residual_norms(f, res, S);
  KernelProjections kp = project_residual(f, res);
  e.Pi_sup = kp.Pi_sup;
  e.Pr_sup = kp.Pr_sup;
  double turns = f.winding / (2 * M_PI * opt.eps);
  e.winding_defect = std::abs(f.winding - 2 * M_PI * opt.eps * std::round(turns));
  e.Jmin = f.Jmin;
  e.kernel_projection = f.kernel_projection;
  e.boundary_max = f.boundary_max;
  e.Ns = f.Ns;
  e.Nz = f.zg.size();
  return e;
}

double scaling_fit(const std::vector<double>& eps, const std::vector<double>& values) {
  if (eps.size() != values.size()) throw DomainError("scaling_fit: size mismatch");
  if (eps.size() < 3) throw DomainError("scaling_fit: needs at least 3 points");
  const int n = static_cast<int>(eps.size());
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (int i = 0; i < n; ++i) {
    if (!(eps[i] > 0 && values[i] > 0)) throw DomainError("scaling_fit: values must be positive");
    double x = std::log(eps[i]), y = std::log(values[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  double den = n * sxx - sx * sx;
  if (den == 0) throw DomainError("scaling_fit: eps values must differ");
  return (n * sxy - sx * sy) / den;
}

HigherOrder solve_higher_order(const JacobiMatrix& J, const ProfileFields& pf, const Vec& W31, const Mat& W32) {
  HigherOrder out;
  const int N = J.N;
  if (W31.size() != N || W32.rows() != N || W32.cols() != J.m) throw DomainError("higher order: size mismatch");
  Eigen::PartialPivLU<Mat> lu(J.full());
  out.Phi1 = unstack(lu.solve(stack(W32)), N, J.m);
  if (std::abs(spectral::integral(W31, J.L)) > 1e-10 * std::max(1.0, W31.cwiseAbs().maxCoeff()))
    throw DomainError("higher order: the f_2 right-hand side must have zero mean");
  // T f = (a f')' with a = h^2 [(p-1) h^{p-1} - 2 sigma A^2 h^{2 sigma}] / ((p-1) k^{n+1})
  Vec a(N);
  for (int i = 0; i < N; ++i) {
    double h = pf.h[i];
    a[i] = h * h * ((pf.p - 1) * std::pow(h, pf.p - 1) - 2 * pf.sigma * pf.A * pf.A * std::pow(h, 2 * pf.sigma)) /
           ((pf.p - 1) * std::pow(pf.k[i], pf.n + 1));
  }
  Vec G = spectral::antiderivative(W31, J.L);
  Vec inva = a.cwiseInverse();
  double cst = -spectral::integral((G.array() * inva.array()).matrix(), J.L) / spectral::integral(inva, J.L);
  out.f2p = ((G.array() + cst) * inva.array()).matrix();
  return out;
}

}  // namespace nlst
