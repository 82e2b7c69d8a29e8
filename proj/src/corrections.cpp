#include "nlstube/corrections.hpp"

#include <Eigen/SparseLU>

#include <cmath>
#include <sstream>

namespace nlst {

Mat ZGrid::points() const {
  Mat P(size(), d);
  if (d == 1) {
    for (int i = lo[0]; i <= hi[0]; ++i) P(index(i), 0) = i * dz;
  } else {
    for (int j = lo[1]; j <= hi[1]; ++j)
      for (int i = lo[0]; i <= hi[0]; ++i) {
        P(index(i, j), 0) = i * dz;
        P(index(i, j), 1) = j * dz;
      }
  }
  return P;
}

int ZGrid::mirror(int idx) const {
  int i0 = idx % count(0) + lo[0];
  int i1 = d == 1 ? 0 : idx / count(0) + lo[1];
  if (-i0 < lo[0] || -i0 > hi[0]) return -1;
  if (d == 2 && (-i1 < lo[1] || -i1 > hi[1])) return -1;
  return index(-i0, -i1);
}

ZGrid symmetric_zgrid(int d, double R, double dz) {
  if (d < 1 || d > 2) throw DomainError("z grid: normal dimension must be 1 or 2");
  if (!(dz > 0 && R > dz)) throw DomainError("z grid: need 0 < dz < R");
  ZGrid zg;
  zg.d = d;
  zg.dz = dz;
  int m = static_cast<int>(std::ceil(R / dz - 1e-9));
  for (int a = 0; a < d; ++a) {
    zg.lo[a] = -m;
    zg.hi[a] = m;
  }
  return zg;
}

ZGrid box_zgrid(int d, const Vec& lo, const Vec& hi, double dz) {
  if (d < 1 || d > 2) throw DomainError("z grid: normal dimension must be 1 or 2");
  if (!(dz > 0)) throw DomainError("z grid: need dz > 0");
  ZGrid zg;
  zg.d = d;
  zg.dz = dz;
  for (int a = 0; a < d; ++a) {
    if (!(lo[a] < 0 && hi[a] > 0)) throw DomainError("z grid: box must contain the origin");
    zg.lo[a] = -static_cast<int>(std::ceil(-lo[a] / dz - 1e-9));
    zg.hi[a] = static_cast<int>(std::ceil(hi[a] / dz - 1e-9));
  }
  return zg;
}

ScaledProfile scaled_profile(const GroundState& g, double k, const ZGrid& zg) {
  if (g.d != zg.d) throw DomainError("scaled_profile: ground state and grid dimensions differ");
  ScaledProfile sp;
  sp.k = k;
  Mat P = zg.points();
  const int S = zg.size();
  sp.U.resize(S);
  sp.Udotz.resize(S);
  sp.gradU.resize(S, zg.d);
  for (int q = 0; q < S; ++q) {
    double r = P.row(q).norm();
    auto v = evaluate(g, k * r);
    sp.U[q] = v.U;
    sp.Udotz[q] = v.Up * r;
    if (r > 0)
      sp.gradU.row(q) = v.Up * P.row(q) / r;
    else
      sp.gradU.row(q).setZero();
  }
  return sp;
}

namespace {

const double kLap4[3] = {-2.5, 4.0 / 3.0, -1.0 / 12.0};
const double kLap6[4] = {-49.0 / 18.0, 1.5, -0.15, 1.0 / 90.0};

}  // namespace

Vec laplacian(const Vec& w, const ZGrid& zg, int order) {
  if (order != 4 && order != 6) throw DomainError("laplacian: order must be 4 or 6");
  const double* c = order == 4 ? kLap4 : kLap6;
  const int half = order / 2;
  const double inv = 1.0 / (zg.dz * zg.dz);
  Vec out = Vec::Zero(w.size());
  auto at = [&](int i0, int i1) -> double {
    if (i0 < zg.lo[0] || i0 > zg.hi[0]) return 0.0;
    if (zg.d == 2 && (i1 < zg.lo[1] || i1 > zg.hi[1])) return 0.0;
    return w[zg.index(i0, i1)];
  };
  const int j0 = zg.d == 1 ? 0 : zg.lo[1], j1 = zg.d == 1 ? 0 : zg.hi[1];
  for (int j = j0; j <= j1; ++j)
    for (int i = zg.lo[0]; i <= zg.hi[0]; ++i) {
      double acc = zg.d * c[0] * at(i, j);
      for (int s = 1; s <= half; ++s) {
        acc += c[s] * (at(i + s, j) + at(i - s, j));
        if (zg.d == 2) acc += c[s] * (at(i, j + s) + at(i, j - s));
      }
      out[zg.index(i, j)] = acc * inv;
    }
  return out;
}

Vec linearized_apply(LinKind kind, const GroundState& g, double k, const Vec& w, const ZGrid& zg, int order) {
  ScaledProfile sp = scaled_profile(g, k, zg);
  const double c = kind == LinKind::Real ? g.p : 1.0;
  Vec pot = (k * k * (1.0 - c * sp.U.array().pow(g.p - 1.0))).matrix();
  return -laplacian(w, zg, order) + (pot.array() * w.array()).matrix();
}

double grid_dot(const Vec& f, const Vec& b, const ZGrid& zg) { return f.dot(b) * zg.cell(); }

double parity_defect(const Vec& f, const ZGrid& zg, int sign) {
  double d = 0.0;
  for (int q = 0; q < zg.size(); ++q) {
    int m = zg.mirror(q);
    if (m < 0) continue;
    d = std::max(d, std::abs(f[q] - sign * f[m]));
  }
  return d;
}

Vec interior(const Vec& f, const ZGrid& zg, int width) {
  Vec out = f;
  for (int q = 0; q < zg.size(); ++q) {
    int i0 = q % zg.count(0) + zg.lo[0];
    bool edge = i0 - zg.lo[0] < width || zg.hi[0] - i0 < width;
    if (zg.d == 2) {
      int i1 = q / zg.count(0) + zg.lo[1];
      edge = edge || i1 - zg.lo[1] < width || zg.hi[1] - i1 < width;
    }
    if (edge) out[q] = 0.0;
  }
  return out;
}

double decay_constant(const Vec& f, const ZGrid& zg, double k) {
  Mat P = zg.points();
  double c = 0.0;
  for (int q = 0; q < zg.size(); ++q) {
    double r = P.row(q).norm();
    c = std::max(c, std::abs(f[q]) / ((1 + r * r * r) * std::exp(-k * r)));
  }
  return c;
}

void correction_wi(const CorrectionInputs& in, const ScaledProfile& sp, const ZGrid& zg, Vec& wie, Vec& wio,
                   std::vector<Vec>* wio_dir) {
  Mat P = zg.points();
  Vec r2 = P.rowwise().squaredNorm();
  wie = ((in.p - 1) / 4.0 * in.fp * in.hp) * (r2.array() * sp.U.array()).matrix();
  wio = Vec::Zero(zg.size());
  if (wio_dir) wio_dir->clear();
  for (int j = 0; j < zg.d; ++j) {
    double a = j < in.Phip.size() ? in.Phip[j] : 0.0;
    Vec wj = (-a * in.fp * in.h) * (P.col(j).array() * sp.U.array()).matrix();
    wio += wj;
    if (wio_dir) wio_dir->push_back(wj);
  }
}

Vec companion_profile(const CorrectionInputs& in, const ScaledProfile& sp) {
  return sp.U / ((in.p - 1) * std::pow(in.h, in.p - 1)) + sp.Udotz / (2 * in.k);
}

Vec correction_wre(const CorrectionInputs& in, const ScaledProfile& sp) {
  double HPhi = in.Phi.size() ? in.H.dot(in.Phi) : 0.0;
  double coef = (in.p - 1) / in.theta * std::pow(in.h, in.p) * HPhi + 2 * in.fp * in.fp1 * in.h;
  return coef * companion_profile(in, sp);
}

std::vector<Vec> wro_rhs(const CorrectionInputs& in, const ScaledProfile& sp, const ZGrid& zg) {
  Mat P = zg.points();
  std::vector<Vec> out;
  for (int j = 0; j < zg.d; ++j) {
    double a = in.H[j] * in.k, b = in.gradV[j] + 2 * in.fp * in.fp * in.H[j];
    out.push_back(-in.h * (a * sp.gradU.col(j).array() + b * P.col(j).array() * sp.U.array()).matrix());
  }
  return out;
}

namespace {

// Radial mode-1 problem on r_i = i dr, i = 0..M, phi_0 = phi_M = 0, odd ghost values.
struct RadialMode1 {
  int d, M;
  double dr, k, p;
  Vec r, kappa, weight;
  Eigen::SparseLU<Eigen::SparseMatrix<double>> lu;

  RadialMode1(const GroundState& g, double k_, double dr_, double r_max) : d(g.d), dr(dr_), k(k_), p(g.p) {
    M = static_cast<int>(std::ceil(r_max / dr));
    r = Vec::LinSpaced(M + 1, 0.0, M * dr);
    kappa.resize(M + 1);
    weight.resize(M + 1);
    Vec pot(M + 1);
    for (int i = 0; i <= M; ++i) {
      auto v = evaluate(g, k * r[i]);
      kappa[i] = v.Up;
      pot[i] = k * k * (1.0 - p * std::pow(v.U, p - 1.0));
      weight[i] = (i == 0 ? 0.0 : std::pow(r[i], d - 1)) * dr;
    }
    kappa[0] = 0.0;
    kappa[M] = 0.0;
    // unknowns phi_1..phi_{M-1}, then the multiplier
    const int K = M - 1;
    static const double c2[4] = {-49.0 / 18.0, 1.5, -0.15, 1.0 / 90.0};
    static const double c1[4] = {0.0, 0.75, -0.15, 1.0 / 60.0};
    std::vector<Eigen::Triplet<double>> trip;
    auto add = [&](int row, int col, double v) {
      // col is a radial node index, possibly negative (odd ghost) or >= M (zero)
      int sgn = 1;
      if (col < 0) {
        col = -col;
        sgn = -1;
      }
      if (col == 0 || col >= M) return;
      trip.emplace_back(row - 1, col - 1, sgn * v);
    };
    for (int i = 1; i < M; ++i) {
      double ri = r[i];
      add(i, i, -c2[0] / (dr * dr) + pot[i] + (d - 1) / (ri * ri));
      for (int s = 1; s <= 3; ++s) {
        add(i, i + s, -c2[s] / (dr * dr) - (d - 1) / ri * c1[s] / dr);
        add(i, i - s, -c2[s] / (dr * dr) + (d - 1) / ri * c1[s] / dr);
      }
      trip.emplace_back(i - 1, K, kappa[i]);
      trip.emplace_back(K, i - 1, kappa[i] * weight[i]);
    }
    Eigen::SparseMatrix<double> A(K + 1, K + 1);
    A.setFromTriplets(trip.begin(), trip.end());
    A.makeCompressed();
    lu.compute(A);
    if (lu.info() != Eigen::Success) throw DegeneracyError("w_ro: radial bordered system is singular");
  }

  // returns phi on the radial grid and the multiplier
  std::pair<Vec, double> solve(const Vec& q) {
    const int K = M - 1;
    Vec b(K + 1);
    b.head(K) = q.segment(1, K);
    b[K] = 0.0;
    Vec x = lu.solve(b);
    Vec phi = Vec::Zero(M + 1);
    phi.segment(1, K) = x.head(K);
    return {phi, x[K]};
  }

  double dot(const Vec& a, const Vec& b) const { return (a.array() * b.array() * weight.array()).sum(); }

};

}  // namespace

RadialProfile::RadialProfile(double dr_, const Vec& phi_) : dr(dr_), phi(phi_) {
  M = static_cast<int>(phi.size()) - 1;
  auto val = [&](int i) {
    if (i < 0) return -i > M ? 0.0 : -phi[-i];
    if (i > M) return 0.0;
    return phi[i];
  };
  d1.resize(M + 1);
  d2.resize(M + 1);
  for (int i = 0; i <= M; ++i) {
    d1[i] = (0.75 * (val(i + 1) - val(i - 1)) - 0.15 * (val(i + 2) - val(i - 2)) + (val(i + 3) - val(i - 3)) / 60.0) /
            dr;
    d2[i] = (-49.0 / 18.0 * val(i) + 1.5 * (val(i + 1) + val(i - 1)) - 0.15 * (val(i + 2) + val(i - 2)) +
             (val(i + 3) + val(i - 3)) / 90.0) /
            (dr * dr);
  }
}

double RadialProfile::operator()(double x) const {
  if (M < 1 || x >= M * dr) return 0.0;
  int i = std::min(static_cast<int>(x / dr), M - 1);
  double t = (x - i * dr) / dr;
  if (std::abs(t) < 1e-12) return phi[i];
  if (std::abs(t - 1) < 1e-12) return phi[i + 1];
  double a0 = phi[i], a1 = dr * d1[i], a2 = 0.5 * dr * dr * d2[i];
  double D0 = phi[i + 1] - a0 - a1 - a2, D1 = dr * d1[i + 1] - a1 - 2 * a2, D2 = dr * dr * d2[i + 1] - 2 * a2;
  double a3 = 10 * D0 - 4 * D1 + 0.5 * D2, a4 = -15 * D0 + 7 * D1 - D2, a5 = 6 * D0 - 3 * D1 + 0.5 * D2;
  return a0 + t * (a1 + t * (a2 + t * (a3 + t * (a4 + t * a5))));
}

RadialWro radial_wro(const CorrectionInputs& in, const GroundState& g, double r_max, const WroOptions& opt) {
  const int d = g.d;
  if (in.H.size() < d || in.gradV.size() < d) throw DomainError("w_ro: H and grad V need n - 1 components");
  RadialWro out;
  const double ang = d == 1 ? 2.0 : M_PI;  // int over directions of (z_j/|z|)^2
  bool any = false;
  for (int j = 0; j < d; ++j) any = any || in.H[j] != 0.0 || in.gradV[j] != 0.0;
  if (!any) {
    for (int j = 0; j < d; ++j) {
      out.phi.emplace_back(opt.dr, Vec::Zero(2));
      out.kernel_projection.push_back(0.0);
      out.multiplier.push_back(0.0);
    }
    return out;
  }
  RadialMode1 rad(g, in.k, opt.dr, r_max);
  // the two radial right-hand sides: U'(kr) and r U(kr)
  Vec qa = rad.kappa, qb(rad.M + 1);
  for (int i = 0; i <= rad.M; ++i) qb[i] = rad.r[i] * evaluate(g, in.k * rad.r[i]).U;
  auto [pa, la] = rad.solve(qa);
  auto [pb, lb] = rad.solve(qb);
  const double knorm = std::sqrt(ang * in.k * in.k * rad.dot(rad.kappa, rad.kappa));
  for (int j = 0; j < d; ++j) {
    double a = -in.h * in.H[j] * in.k, b = -in.h * (in.gradV[j] + 2 * in.fp * in.fp * in.H[j]);
    Vec q = a * qa + b * qb;
    double proj = ang * in.k * rad.dot(q, rad.kappa) / knorm;
    double qnorm = std::sqrt(ang * rad.dot(q, q));
    out.kernel_projection.push_back(proj);
    out.multiplier.push_back(a * la + b * lb);
    if (std::abs(proj) > opt.solvability_tol * std::max(1.0, qnorm) && !opt.force) {
      double e = (in.p - 1) / in.theta * std::pow(in.h, in.p - 1) - 2 * in.fp * in.fp;
      std::ostringstream fail;
      fail << "w_ro: right-hand side has kernel component " << proj << " in direction " << j
           << " (solvability needs the stationarity condition; Euler residual grad^N V - H e = "
           << in.gradV[j] - in.H[j] * e << ")";
      throw DegeneracyError(fail.str());
    }
    out.phi.emplace_back(opt.dr, a * pa + b * pb);
  }
  return out;
}

WroSolution solve_wro(const CorrectionInputs& in, const GroundState& g, const ZGrid& zg, const WroOptions& opt) {
  if (g.d != zg.d) throw DomainError("solve_wro: ground state and grid dimensions differ");
  Mat P = zg.points();
  Vec rz = P.rowwise().norm();
  double r_max = opt.r_max > 0 ? opt.r_max : rz.maxCoeff() + 4 * opt.dr;
  RadialWro rw = radial_wro(in, g, r_max, opt);
  WroSolution out;
  out.kernel_projection = rw.kernel_projection;
  out.multiplier = rw.multiplier;
  out.w = Vec::Zero(zg.size());
  ScaledProfile sp = scaled_profile(g, in.k, zg);
  for (int j = 0; j < zg.d; ++j) {
    Vec w(zg.size());
    for (int q = 0; q < zg.size(); ++q) w[q] = rz[q] > 0 ? rw.phi[j](rz[q]) * P(q, j) / rz[q] : 0.0;
    // discrete L2 projection off the kernel direction d_j U(kz)
    Vec kj = sp.gradU.col(j);
    double kk = grid_dot(kj, kj, zg);
    if (kk > 0) w -= grid_dot(w, kj, zg) / kk * kj;
    out.w += w;
    out.w_dir.push_back(w);
  }
  return out;
}

CorrectionModel::CorrectionModel(const CorrectionInputs& in, const GroundState& g, double r_max,
                                 const WroOptions& opt)
    : in_(in), g_(&g) {
  if (in.H.size() < g.d) throw DomainError("CorrectionModel: H needs n - 1 components");
  rw_ = radial_wro(in, g, r_max, opt);
}

double CorrectionModel::kernel_projection() const {
  double m = 0.0;
  for (double v : rw_.kernel_projection) m = std::max(m, std::abs(v));
  return m;
}

void CorrectionModel::evaluate(const Mat& z, Vec& U, Vec& wr, Vec& wi, bool corrections) const {
  const int P = static_cast<int>(z.rows()), d = g_->d;
  const auto& in = in_;
  U.resize(P);
  wr = Vec::Zero(P);
  wi = Vec::Zero(P);
  const double HPhi = in.Phi.size() ? in.H.head(d).dot(in.Phi.head(d)) : 0.0;
  const double cre = (in.p - 1) / in.theta * std::pow(in.h, in.p) * HPhi + 2 * in.fp * in.fp1 * in.h;
  const double cie = (in.p - 1) / 4.0 * in.fp * in.hp;
  for (int q = 0; q < P; ++q) {
    double r = z.row(q).norm();
    auto v = nlst::evaluate(*g_, in.k * r);
    U[q] = v.U;
    if (!corrections) continue;
    double Udotz = v.Up * r;
    double ut = v.U / ((in.p - 1) * std::pow(in.h, in.p - 1)) + Udotz / (2 * in.k);
    wr[q] = cre * ut;
    wi[q] = cie * r * r * v.U;
    for (int j = 0; j < d; ++j) {
      double a = j < in.Phip.size() ? in.Phip[j] : 0.0;
      wi[q] -= a * in.fp * in.h * z(q, j) * v.U;
      if (r > 0) wr[q] += rw_.phi[j](r) * z(q, j) / r;
    }
  }
}

CorrectionFields build_corrections(const CorrectionInputs& in, const GroundState& g, const ZGrid& zg,
                                   const WroOptions& opt) {
  CorrectionFields cf;
  cf.in = in;
  ScaledProfile sp = scaled_profile(g, in.k, zg);
  correction_wi(in, sp, zg, cf.wie, cf.wio, &cf.wio_dir);
  cf.Utilde = companion_profile(in, sp);
  cf.wre = correction_wre(in, sp);
  WroSolution s = solve_wro(in, g, zg, opt);
  cf.wro = s.w;
  cf.wro_dir = s.w_dir;
  for (double v : s.kernel_projection) cf.kernel_projection = std::max(cf.kernel_projection, std::abs(v));
  return cf;
}

}  // namespace nlst
