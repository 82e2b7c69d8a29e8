#include "nlstube/spectral.hpp"

#include <unsupported/Eigen/FFT>

#include <cmath>
#include <complex>
#include <vector>

namespace nlst::spectral {

namespace {

using cd = std::complex<double>;

std::vector<cd> forward(const Vec& f) {
  Eigen::FFT<double> fft;
  std::vector<cd> in(f.size()), out;
  for (Eigen::Index i = 0; i < f.size(); ++i) in[i] = f[i];
  fft.fwd(out, in);
  return out;
}

Vec inverse_real(const std::vector<cd>& c) {
  Eigen::FFT<double> fft;
  std::vector<cd> out;
  fft.inv(out, c);
  Vec r(c.size());
  for (size_t i = 0; i < c.size(); ++i) r[i] = out[i].real();
  return r;
}

// signed wavenumber of FFT slot j
int wavenumber(int j, int N) { return j <= N / 2 ? j : j - N; }

}  // namespace

Vec derivative(const Vec& f, double L, int order) {
  const int N = static_cast<int>(f.size());
  if (order == 0) return f;
  auto c = forward(f);
  const double w0 = 2.0 * M_PI / L;
  for (int j = 0; j < N; ++j) {
    int k = wavenumber(j, N);
    if (N % 2 == 0 && j == N / 2 && order % 2 == 1) {
      c[j] = 0.0;
      continue;
    }
    cd m = std::pow(cd(0.0, w0 * k), order);
    c[j] *= m;
  }
  return inverse_real(c);
}

Mat derivative(const Mat& f, double L, int order) {
  Mat out(f.rows(), f.cols());
  for (Eigen::Index j = 0; j < f.cols(); ++j) out.col(j) = derivative(Vec(f.col(j)), L, order);
  return out;
}

double integral(const Vec& f, double L) { return f.sum() * L / static_cast<double>(f.size()); }

Vec antiderivative(const Vec& f, double L) {
  const int N = static_cast<int>(f.size());
  auto c = forward(f);
  const double mean = c[0].real() / N;
  const double w0 = 2.0 * M_PI / L;
  c[0] = 0.0;
  for (int j = 1; j < N; ++j) {
    int k = wavenumber(j, N);
    if (N % 2 == 0 && j == N / 2) {
      c[j] = 0.0;
      continue;
    }
    c[j] /= cd(0.0, w0 * k);
  }
  Vec per = inverse_real(c);
  Vec out(N);
  for (int i = 0; i < N; ++i) out[i] = mean * (L * i / N) + per[i] - per[0];
  return out;
}

Mat diff_matrix(int N, double L, int order) {
  Mat D(N, N);
  Vec e = Vec::Zero(N);
  for (int j = 0; j < N; ++j) {
    e.setZero();
    e[j] = 1.0;
    D.col(j) = derivative(e, L, order);
  }
  return D;
}

double interpolate(const Vec& f, double L, double s) {
  const int N = static_cast<int>(f.size());
  auto c = forward(f);
  const double w0 = 2.0 * M_PI / L;
  double acc = 0.0;
  for (int j = 0; j < N; ++j) {
    int k = wavenumber(j, N);
    cd term = c[j] * std::exp(cd(0.0, w0 * k * s));
    // split the Nyquist mode symmetrically so the interpolant is real
    if (N % 2 == 0 && j == N / 2) term = c[j] * std::cos(w0 * k * s);
    acc += term.real();
  }
  return acc / N;
}

}  // namespace nlst::spectral
