#pragma once

#include "nlstube/ground_state.hpp"

#include <array>
#include <vector>

namespace nlst {

// Uniform tensor grid in the normal variable z (d = n - 1 in {1, 2}).
// Node coordinates are integer multiples of dz, so z = 0 is always a node.
struct ZGrid {
  int d = 1;
  double dz = 0.02;
  std::array<int, 2> lo{0, 0}, hi{0, 0};  // inclusive index ranges per axis

  int count(int axis) const { return hi[axis] - lo[axis] + 1; }
  int size() const { return d == 1 ? count(0) : count(0) * count(1); }
  double cell() const { return d == 1 ? dz : dz * dz; }
  int index(int i0, int i1 = 0) const { return (i0 - lo[0]) + (d == 1 ? 0 : count(0) * (i1 - lo[1])); }
  Mat points() const;  // size x d
  // index of the point reflected through the origin, -1 if outside
  int mirror(int idx) const;
};

ZGrid symmetric_zgrid(int d, double R, double dz);
ZGrid box_zgrid(int d, const Vec& lo, const Vec& hi, double dz);

// U(k z), (grad U)(k z) and (grad U)(k z) . z on a grid.
struct ScaledProfile {
  double k = 1.0;
  Vec U, Udotz;
  Mat gradU;  // size x d, (grad U)(k z)
};
ScaledProfile scaled_profile(const GroundState& g, double k, const ZGrid& zg);

// z spacing and stencil order at which the kernel identities are checked
inline double default_dz(int d) { return d == 1 ? 0.005 : 0.02; }
inline int default_order(int d) { return d == 1 ? 4 : 6; }

enum class LinKind { Real, Imag };

// L w = -Lap w + k^2 w - c k^2 U(kz)^{p-1} w with c = p (Real) or 1 (Imag).
// Finite-difference Laplacian of order 4 or 6, zero values outside the grid.
Vec laplacian(const Vec& w, const ZGrid& zg, int order = 4);
Vec linearized_apply(LinKind kind, const GroundState& g, double k, const Vec& w, const ZGrid& zg, int order = 4);

// Per-node coefficients the corrections are built from (frame components).
struct CorrectionInputs {
  double p = 3.0, h = 1.0, k = 1.0, hp = 0.0, kp = 0.0, fp = 0.0, fpp = 0.0, fp1 = 0.0, theta = 1.0;
  Vec H, gradV, Phi, Phip;  // m components each
};

struct CorrectionFields {
  Vec wie, wio, wre, wro;
  std::vector<Vec> wio_dir, wro_dir;
  Vec Utilde;
  double kernel_projection = 0.0;  // max_j |<rhs_j, d_j U(kz)>| / ||d_j U(kz)||, before the w_ro solve
  CorrectionInputs in;
};

// w_ie = (p-1)/4 f' h' |z|^2 U(kz), w_io = -sum_j Phi'_j f' h z_j U(kz)
void correction_wi(const CorrectionInputs& in, const ScaledProfile& sp, const ZGrid& zg, Vec& wie, Vec& wio,
                   std::vector<Vec>* wio_dir = nullptr);

// U(kz)/((p-1)h^{p-1}) + (grad U)(kz).z/(2k); L_r of it is -U(kz)
Vec companion_profile(const CorrectionInputs& in, const ScaledProfile& sp);

// [(p-1)/theta h^p <H,Phi> + 2 f' f_1' h] * companion
Vec correction_wre(const CorrectionInputs& in, const ScaledProfile& sp);

// Right-hand side of the odd real equation, per direction j:
//   -h [H^j k d_jU(kz) + (grad^N V^j + 2 f'^2 H^j) z_j U(kz)]
std::vector<Vec> wro_rhs(const CorrectionInputs& in, const ScaledProfile& sp, const ZGrid& zg);

struct WroOptions {
  double dr = 0.01;
  double r_max = 0.0;         // 0: max |z| on the grid plus margin
  double solvability_tol = 1e-8;
  bool force = false;         // project the kernel component out instead of failing
};

struct WroSolution {
  std::vector<Vec> w_dir;     // on the z grid, per direction
  Vec w;                      // sum over directions
  std::vector<double> kernel_projection;  // <rhs_j, dU/dz_j> / ||dU/dz_j||, radial quadrature
  std::vector<double> multiplier;         // bordering multiplier of each radial solve
};

// Radial function on r_i = i dr with quintic Hermite interpolation (sixth-order
// differences for the derivatives, odd continuation through r = 0, zero past the end).
struct RadialProfile {
  double dr = 0.01;
  int M = 0;
  Vec phi, d1, d2;
  RadialProfile(double dr_, const Vec& phi_);
  double operator()(double r) const;
};

// Mode-1 radial profiles phi_j with w_ro = sum_j phi_j(|z|) z_j / |z|.
struct RadialWro {
  std::vector<RadialProfile> phi;
  std::vector<double> kernel_projection, multiplier;
};
RadialWro radial_wro(const CorrectionInputs& in, const GroundState& g, double r_max, const WroOptions& opt = {});

// Radial mode-1 solve of L_r w = rhs with decay and zero kernel component.
WroSolution solve_wro(const CorrectionInputs& in, const GroundState& g, const ZGrid& zg, const WroOptions& opt = {});

// Ground profile and first-order corrections at arbitrary points z (P x d); the
// w_ro radial solves are done once at construction. The GroundState must outlive the model.
class CorrectionModel {
 public:
  CorrectionModel(const CorrectionInputs& in, const GroundState& g, double r_max, const WroOptions& opt = {});
  // U(kz), w_r = w_re + w_ro, w_i = w_ie + w_io; corrections = false leaves w_r = w_i = 0
  void evaluate(const Mat& z, Vec& U, Vec& wr, Vec& wi, bool corrections = true) const;
  double kernel_projection() const;
  const CorrectionInputs& inputs() const { return in_; }

 private:
  CorrectionInputs in_;
  const GroundState* g_;
  RadialWro rw_;
};

CorrectionFields build_corrections(const CorrectionInputs& in, const GroundState& g, const ZGrid& zg,
                                   const WroOptions& opt = {});

// <f, b> with the grid cell measure
double grid_dot(const Vec& f, const Vec& b, const ZGrid& zg);

// sup over nodes of |f(z) - s f(-z)| (s = +1 even, -1 odd), nodes whose mirror is off-grid skipped
double parity_defect(const Vec& f, const ZGrid& zg, int sign);

// copy of f with the outer band of `width` nodes set to zero; FD Laplacians there see the
// Dirichlet truncation rather than the operator
Vec interior(const Vec& f, const ZGrid& zg, int width = 3);

// sup |f| / ((1 + |z|^3) e^{-k|z|})
double decay_constant(const Vec& f, const ZGrid& zg, double k);

}  // namespace nlst
