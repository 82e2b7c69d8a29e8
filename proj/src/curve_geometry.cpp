#include "nlstube/curve_geometry.hpp"

#include "nlstube/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <fstream>
#include <sstream>

namespace nlst {

// ---------------------------------------------------------------- potentials

PotentialField PotentialField::constant(int n, double c) {
  PotentialField V;
  V.kind_ = Kind::Constant;
  V.n_ = n;
  V.c0_ = c;
  V.center_ = Vec::Zero(n);
  return V;
}

PotentialField PotentialField::radial_cos(int n, double a, double b, const Vec& center) {
  PotentialField V;
  V.kind_ = Kind::RadialCos;
  V.n_ = n;
  V.c0_ = a;
  V.b_ = b;
  V.center_ = center.size() ? center : Vec::Zero(n);
  if (V.center_.size() != n) throw DomainError("potential center has wrong dimension");
  return V;
}

PotentialField PotentialField::quadratic(int n, double c, const Vec& weights, const Vec& center) {
  if (weights.size() != n) throw DomainError("quadratic potential needs n weights");
  PotentialField V;
  V.kind_ = Kind::Quadratic;
  V.n_ = n;
  V.c0_ = c;
  V.w_ = weights;
  V.center_ = center.size() ? center : Vec::Zero(n);
  if (V.center_.size() != n) throw DomainError("potential center has wrong dimension");
  return V;
}

std::string PotentialField::name() const {
  switch (kind_) {
    case Kind::Constant: return "constant";
    case Kind::RadialCos: return "radial-cos";
    case Kind::Quadratic: return "quadratic";
  }
  return "unknown";
}

double PotentialField::value(const Vec& x) const {
  switch (kind_) {
    case Kind::Constant: return c0_;
    case Kind::RadialCos: return c0_ + b_ * std::cos((x - center_).norm());
    case Kind::Quadratic: {
      Vec d = x - center_;
      return c0_ + (w_.array() * d.array().square()).sum();
    }
  }
  return 0.0;
}

Vec PotentialField::gradient(const Vec& x) const {
  switch (kind_) {
    case Kind::Constant: return Vec::Zero(n_);
    case Kind::RadialCos: {
      Vec d = x - center_;
      double r = d.norm();
      if (r < 1e-12) return Vec::Zero(n_);
      return -b_ * std::sin(r) / r * d;
    }
    case Kind::Quadratic: return 2.0 * (w_.array() * (x - center_).array()).matrix();
  }
  return Vec::Zero(n_);
}

Mat PotentialField::hessian(const Vec& x) const {
  switch (kind_) {
    case Kind::Constant: return Mat::Zero(n_, n_);
    case Kind::RadialCos: {
      Vec d = x - center_;
      double r = d.norm();
      if (r < 1e-8) return -b_ * Mat::Identity(n_, n_);
      Vec u = d / r;
      Mat P = u * u.transpose();
      return -b_ * (std::cos(r) * P + std::sin(r) / r * (Mat::Identity(n_, n_) - P));
    }
    case Kind::Quadratic: return 2.0 * w_.asDiagonal().toDenseMatrix();
  }
  return Mat::Zero(n_, n_);
}

bool PotentialField::is_radial() const {
  if (kind_ == Kind::Quadratic) return (w_.array() == w_[0]).all();
  return true;
}

double PotentialField::radial_value(double r) const {
  switch (kind_) {
    case Kind::Constant: return c0_;
    case Kind::RadialCos: return c0_ + b_ * std::cos(r);
    case Kind::Quadratic: return c0_ + w_[0] * r * r;
  }
  return 0.0;
}

double PotentialField::radial_derivative(double r) const {
  switch (kind_) {
    case Kind::Constant: return 0.0;
    case Kind::RadialCos: return -b_ * std::sin(r);
    case Kind::Quadratic: return 2.0 * w_[0] * r;
  }
  return 0.0;
}

// ---------------------------------------------------------------- curve model

Mat CurveModel::H_parallel() const {
  Mat out(N, n - 1);
  for (int j = 0; j < n - 1; ++j) out.col(j) = (Hvec.array() * Y[j].array()).rowwise().sum();
  return out;
}

Mat CurveModel::H_frame() const {
  Mat out(N, n - 1);
  for (int j = 0; j < n - 1; ++j) out.col(j) = (Hvec.array() * Z[j].array()).rowwise().sum();
  return out;
}

Mat CurveModel::to_ambient(const Mat& comps) const {
  Mat out = Mat::Zero(N, n);
  for (int j = 0; j < n - 1; ++j) out.array() += Z[j].array().colwise() * comps.col(j).array();
  return out;
}

Mat CurveModel::to_frame(const Mat& ambient) const {
  Mat out(N, n - 1);
  for (int j = 0; j < n - 1; ++j) out.col(j) = (ambient.array() * Z[j].array()).rowwise().sum();
  return out;
}

Mat CurveModel::project_normal(const Mat& ambient) const {
  Vec tang = (ambient.array() * T.array()).rowwise().sum();
  return ambient - (T.array().colwise() * tang.array()).matrix();
}

double CurveModel::frame_defect() const {
  double d = 0.0;
  for (int i = 0; i < N; ++i) {
    d = std::max(d, std::abs(T.row(i).norm() - 1.0));
    for (int j = 0; j < n - 1; ++j) {
      d = std::max(d, std::abs(Y[j].row(i).dot(T.row(i))));
      for (int k = 0; k < n - 1; ++k)
        d = std::max(d, std::abs(Y[j].row(i).dot(Y[k].row(i)) - (j == k ? 1.0 : 0.0)));
    }
  }
  return d;
}

double CurveModel::transport_defect() const {
  double d = 0.0;
  const double h = ds();
  for (int i = 1; i + 1 < N; ++i)
    for (int j = 0; j < n - 1; ++j) {
      Eigen::RowVectorXd dy = (Y[j].row(i + 1) - Y[j].row(i - 1)) / (2.0 * h);
      dy -= dy.dot(T.row(i)) * T.row(i);
      d = std::max(d, dy.norm());
    }
  return d;
}

namespace {

using cd = std::complex<double>;

// Trigonometric interpolant of equispaced periodic samples on t in [0, 2 pi).
struct TrigCurve {
  int M = 0, n = 0;
  std::vector<std::vector<cd>> coef;  // per coordinate

  explicit TrigCurve(const Mat& samples) : M(samples.rows()), n(samples.cols()), coef(n) {
    Eigen::FFT<double> fft;
    for (int a = 0; a < n; ++a) {
      std::vector<cd> in(M);
      for (int i = 0; i < M; ++i) in[i] = samples(i, a);
      fft.fwd(coef[a], in);
      for (auto& c : coef[a]) c /= static_cast<double>(M);
    }
  }

  // value, first and second parameter derivatives at t
  void eval(double t, Vec& x, Vec& dx, Vec& ddx) const {
    x = Vec::Zero(n);
    dx = Vec::Zero(n);
    ddx = Vec::Zero(n);
    for (int j = 0; j < M; ++j) {
      int k = j <= M / 2 ? j : j - M;
      double kk = k;
      if (M % 2 == 0 && j == M / 2) {
        for (int a = 0; a < n; ++a) {
          double c = coef[a][j].real();
          x[a] += c * std::cos(kk * t);
          dx[a] += -kk * c * std::sin(kk * t);
          ddx[a] += -kk * kk * c * std::cos(kk * t);
        }
        continue;
      }
      cd e = std::polar(1.0, kk * t);
      for (int a = 0; a < n; ++a) {
        cd v = coef[a][j] * e;
        x[a] += v.real();
        dx[a] += (cd(0.0, kk) * v).real();
        ddx[a] += (-kk * kk * v).real();
      }
    }
  }
};

Vec rotate_in_plane(const Vec& a, const Vec& b, double phi, bool first) {
  return first ? Vec(std::cos(phi) * a + std::sin(phi) * b) : Vec(-std::sin(phi) * a + std::cos(phi) * b);
}

}  // namespace

CurveModel arclength_reparam(const Mat& samples, int N_s) {
  const int M = static_cast<int>(samples.rows());
  const int n = static_cast<int>(samples.cols());
  if (n < 2 || n > 3) throw DomainError("ambient dimension must be 2 or 3");
  if (N_s < 8) throw DomainError("N_s must be at least 8");
  if (M < 3) throw GeometryError("degenerate curve: fewer than three distinct samples");
  for (int i = 0; i < M; ++i)
    if ((samples.row(i) - samples.row((i + 1) % M)).norm() < 1e-14)
      throw GeometryError("degenerate curve: coincident consecutive samples");

  TrigCurve tc(samples);
  // speed on a fine grid, then its Fourier series for the cumulative length
  const int Q = std::max(4 * M, 512);
  Vec speed(Q);
  Vec x, dx, ddx;
  for (int q = 0; q < Q; ++q) {
    tc.eval(2.0 * M_PI * q / Q, x, dx, ddx);
    speed[q] = dx.norm();
  }
  double mean_speed = speed.mean();
  if (!(mean_speed > 1e-14)) throw GeometryError("degenerate curve: zero length");
  if (speed.minCoeff() < 1e-8 * mean_speed) throw GeometryError("degenerate curve: vanishing speed (cusp)");

  Eigen::FFT<double> fft;
  std::vector<cd> sin_(Q), sc;
  for (int q = 0; q < Q; ++q) sin_[q] = speed[q];
  fft.fwd(sc, sin_);
  for (auto& c : sc) c /= static_cast<double>(Q);
  const double L = 2.0 * M_PI * sc[0].real();
  auto cumlen = [&](double t) {
    double s = sc[0].real() * t;
    for (int j = 1; j < Q; ++j) {
      int k = j <= Q / 2 ? j : j - Q;
      if (Q % 2 == 0 && j == Q / 2) continue;
      s += (sc[j] * (std::polar(1.0, k * t) - 1.0) / cd(0.0, k)).real();
    }
    return s;
  };

  CurveModel c;
  c.n = n;
  c.N = N_s;
  c.L = L;
  c.sbar.resize(N_s);
  c.gamma.resize(N_s, n);
  c.T.resize(N_s, n);
  c.Hvec.resize(N_s, n);
  for (int i = 0; i < N_s; ++i) {
    double s = L * i / N_s;
    double t = 2.0 * M_PI * i / N_s;
    for (int it = 0; it < 50; ++it) {
      tc.eval(t, x, dx, ddx);
      double f = cumlen(t) - s;
      t -= f / dx.norm();
      if (std::abs(f) < 1e-15 * L) break;
    }
    tc.eval(t, x, dx, ddx);
    double v = dx.norm();
    Vec Tt = dx / v;
    c.sbar[i] = s;
    c.gamma.row(i) = x.transpose();
    c.T.row(i) = Tt.transpose();
    c.Hvec.row(i) = ((ddx - ddx.dot(Tt) * Tt) / (v * v)).transpose();
  }
  parallel_frame(c);
  return c;
}

void parallel_frame(CurveModel& c) {
  const int N = c.N, n = c.n;
  c.Y.assign(n - 1, Mat(N, n));
  c.Z.assign(n - 1, Mat(N, n));
  c.omega.assign(N, Mat::Zero(n - 1, n - 1));
  c.holonomy = 0.0;
  if (n == 2) {
    // the unique parallel unit normal; outward for counterclockwise loops
    for (int i = 0; i < N; ++i) {
      c.Y[0](i, 0) = c.T(i, 1);
      c.Y[0](i, 1) = -c.T(i, 0);
    }
    c.Z[0] = c.Y[0];
    return;
  }
  // n == 3: initial normal from the axis least aligned with T(0)
  Vec t0 = c.T.row(0).transpose();
  int ax = 0;
  t0.cwiseAbs().minCoeff(&ax);
  Vec e = Vec::Zero(n);
  e[ax] = 1.0;
  Vec y2 = (e - e.dot(t0) * t0).normalized();
  Vec y3 = Eigen::Vector3d(t0).cross(Eigen::Vector3d(y2));
  std::vector<Vec> frame = {y2, y3};
  for (int j = 0; j < 2; ++j) c.Y[j].row(0) = frame[j].transpose();

  auto step = [&](int i, int ip, std::vector<Vec>& fr) {
    Vec v1 = c.gamma.row(ip).transpose() - c.gamma.row(i).transpose();
    double c1 = v1.dot(v1);
    Vec ti = c.T.row(i).transpose(), tn = c.T.row(ip).transpose();
    Vec tL = ti - (2.0 / c1) * v1.dot(ti) * v1;
    Vec v2 = tn - tL;
    double c2 = v2.dot(v2);
    for (auto& r : fr) {
      Vec rL = r - (2.0 / c1) * v1.dot(r) * v1;
      r = c2 > 0 ? Vec(rL - (2.0 / c2) * v2.dot(rL) * v2) : rL;
    }
  };
  for (int i = 0; i + 1 < N; ++i) {
    step(i, i + 1, frame);
    for (int j = 0; j < 2; ++j) c.Y[j].row(i + 1) = frame[j].transpose();
  }
  // the closing step only serves to measure the holonomy
  if (c.closed) {
    std::vector<Vec> end = frame;
    step(N - 1, 0, end);
    Vec a2 = c.Y[0].row(0).transpose(), a3 = c.Y[1].row(0).transpose();
    c.holonomy = std::atan2(end[0].dot(a3), end[0].dot(a2));
  }
  for (int i = 0; i < N; ++i) {
    double phi = -c.holonomy * c.sbar[i] / c.L;
    Vec a2 = c.Y[0].row(i).transpose(), a3 = c.Y[1].row(i).transpose();
    c.Z[0].row(i) = rotate_in_plane(a2, a3, phi, true).transpose();
    c.Z[1].row(i) = rotate_in_plane(a2, a3, phi, false).transpose();
  }
  if (!c.closed) return;
  std::vector<Mat> dZ(2);
  for (int j = 0; j < 2; ++j) dZ[j] = spectral::derivative(c.Z[j], c.L, 1);
  for (int i = 0; i < N; ++i)
    for (int j = 0; j < 2; ++j)
      for (int k = 0; k < 2; ++k) c.omega[i](k, j) = dZ[j].row(i).dot(c.Z[k].row(i));
}

Mat curvature_vector(const CurveModel& c) { return c.H_parallel(); }

Mat rotate_samples(const Mat& samples, const Mat& Q) { return samples * Q.transpose(); }

CurveModel circle_curve(double radius, int n, int N_s, const Vec& center, int samples) {
  if (!(radius > 0)) throw DomainError("circle radius must be positive");
  Mat S = Mat::Zero(samples, n);
  for (int i = 0; i < samples; ++i) {
    double t = 2.0 * M_PI * i / samples;
    S(i, 0) = radius * std::cos(t);
    S(i, 1) = radius * std::sin(t);
    if (center.size()) S.row(i) += center.transpose();
  }
  return arclength_reparam(S, N_s);
}

CurveModel ellipse_curve(double a, double b, int n, int N_s, int samples) {
  if (!(a > 0 && b > 0)) throw DomainError("ellipse semi-axes must be positive");
  Mat S = Mat::Zero(samples, n);
  for (int i = 0; i < samples; ++i) {
    double t = 2.0 * M_PI * i / samples;
    S(i, 0) = a * std::cos(t);
    S(i, 1) = b * std::sin(t);
  }
  return arclength_reparam(S, N_s);
}

CurveModel torus_knot_curve(int p, int q, double R, double r, int N_s, int samples) {
  if (!(R > r && r > 0)) throw DomainError("torus knot needs R > r > 0");
  Mat S(samples, 3);
  for (int i = 0; i < samples; ++i) {
    double t = 2.0 * M_PI * i / samples;
    double rho = R + r * std::cos(q * t);
    S(i, 0) = rho * std::cos(p * t);
    S(i, 1) = rho * std::sin(p * t);
    S(i, 2) = r * std::sin(q * t);
  }
  return arclength_reparam(S, N_s);
}

CurveModel straight_segment(double L, int n, int N_s) {
  CurveModel c;
  c.n = n;
  c.N = N_s;
  c.L = L;
  c.closed = false;
  c.sbar.resize(N_s);
  c.gamma = Mat::Zero(N_s, n);
  c.T = Mat::Zero(N_s, n);
  c.Hvec = Mat::Zero(N_s, n);
  for (int i = 0; i < N_s; ++i) {
    c.sbar[i] = L * i / N_s;
    c.gamma(i, 0) = c.sbar[i];
    c.T(i, 0) = 1.0;
  }
  c.Y.assign(n - 1, Mat::Zero(N_s, n));
  for (int j = 0; j < n - 1; ++j) c.Y[j].col(j + 1).setOnes();
  c.Z = c.Y;
  c.omega.assign(N_s, Mat::Zero(n - 1, n - 1));
  return c;
}

Mat load_samples_csv(const std::string& path, int n) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open samples file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    if (line.empty() || line[0] == '#') continue;
    for (auto& ch : line)
      if (ch == ',') ch = ' ';
    std::istringstream ss(line);
    std::vector<double> row;
    double v;
    while (ss >> v) row.push_back(v);
    if (row.empty()) continue;
    if (static_cast<int>(row.size()) != n)
      throw ConfigError("samples file row has " + std::to_string(row.size()) + " columns, expected " + std::to_string(n));
    rows.push_back(row);
  }
  Mat S(rows.size(), n);
  for (size_t i = 0; i < rows.size(); ++i)
    for (int a = 0; a < n; ++a) S(i, a) = rows[i][a];
  return S;
}

// ---------------------------------------------------------------- Fermi metric

namespace {

FermiMetric diag_metric(int n, double g11) {
  FermiMetric m;
  m.g = Mat::Identity(n, n);
  m.g(0, 0) = g11;
  m.ginv = Mat::Identity(n, n);
  m.ginv(0, 0) = 1.0 / g11;
  m.sqrt_det = std::sqrt(std::abs(g11));
  return m;
}

double H_dot_y(const CurveModel& c, int i, const Vec& y) {
  if (y.size() != c.n - 1) throw DomainError("normal offset has wrong dimension");
  double hy = 0.0;
  for (int j = 0; j < c.n - 1; ++j) hy += c.Hvec.row(i).dot(c.Y[j].row(i)) * y[j];
  return hy;
}

}  // namespace

FermiMetric fermi_metric_exact(const CurveModel& c, int i, const Vec& y) {
  double hy = H_dot_y(c, i, y);
  if (std::abs(hy) >= 1.0) throw GeometryError("Fermi coordinates invalid: |<H,y>| >= 1 (focal point)");
  FermiMetric m = diag_metric(c.n, (1.0 - hy) * (1.0 - hy));
  m.sqrt_det = 1.0 - hy;
  return m;
}

FermiMetric fermi_metric_expansion(const CurveModel& c, int i, const Vec& y, int order) {
  if (order != 1 && order != 2) throw DomainError("expansion order must be 1 or 2");
  double hy = H_dot_y(c, i, y);
  if (std::abs(hy) >= 1.0) throw GeometryError("Fermi coordinates invalid: |<H,y>| >= 1 (focal point)");
  // second derivatives of g11 are 2 H^j H^l in flat space
  double g11 = 1.0 - 2.0 * hy;
  if (order == 2) g11 += hy * hy;
  return diag_metric(c.n, g11);
}

NormalData potential_normal_data(const PotentialField& V, const CurveModel& c, int i) {
  Vec x = c.gamma.row(i).transpose();
  Vec t = c.T.row(i).transpose();
  Vec g = V.gradient(x);
  Mat Hs = V.hessian(x);
  NormalData nd;
  nd.V = V.value(x);
  nd.grad_ambient = g - g.dot(t) * t;
  nd.grad.resize(c.n - 1);
  nd.hess.resize(c.n - 1, c.n - 1);
  for (int j = 0; j < c.n - 1; ++j) {
    Vec zj = c.Z[j].row(i).transpose();
    nd.grad[j] = g.dot(zj);
    for (int k = 0; k < c.n - 1; ++k) nd.hess(j, k) = zj.dot(Hs * c.Z[k].row(i).transpose());
  }
  return nd;
}

}  // namespace nlst
