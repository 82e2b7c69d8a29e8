#pragma once

#include "nlstube/corrections.hpp"
#include "nlstube/jacobi.hpp"

#include <Eigen/Dense>
#include <complex>

namespace nlst {

using CMat = Eigen::MatrixXcd;

// Everything the tube construction needs, owned by value.
struct HarnessSetup {
  CurveModel curve;
  PotentialField V = PotentialField::constant(2, 1.0);
  ProfileFields pf;
  const GroundState* g = nullptr;  // d = n - 1; must outlive the setup
  Mat Phi;                         // ambient normal section (N x n); empty means zero
  F1Solution f1;                   // filled by make_setup when use_f1
  bool use_f1 = true;
  long m = 0;                      // phase quantum, int f' = 2 pi eps m
};

// Builds profile fields and f_1 (if use_f1 and A != 0) on the given curve.
HarnessSetup make_setup(const CurveModel& c, const PotentialField& V, double A, double p, const GroundState& g,
                        const Mat& Phi = Mat(), bool use_f1 = true);

// Stationary circle about a radial potential's centre with A quantized for this eps.
// Alternates find_stationary_circle and quantize_A until the radius settles.
struct CircleFit {
  double r = 0.0, A = 0.0;
  long m = 0;
  int iterations = 0;
};
CircleFit stationary_quantized_circle(const PotentialField& V, double p, int n, double A_target, double eps, int N_s,
                                      double r_lo, double r_hi);

struct ResidualOptions {
  double eps = 0.1;
  double dz = 0.02;
  int order = 4;                 // FD order in z (4 or 6)
  double tail = 20.0;            // tube radius R = tail / min k
  double focal_fraction = 0.6;   // toward the centre of curvature keep eps <H,y> <= this
  bool corrections = true;       // w_r, w_i and f_1
  bool force_solvability = false;
  // structural hook for the next-order pair (f_2, Phi_1), supplied externally
  Vec f2p;   // f_2' on the s grid (empty: zero)
  Mat Phi1;  // frame components N x (n-1) (empty: zero)
};

// Demodulated field: psi = exp(-i F(eps s)/eps) Psi(sbar, y), sbar = eps s.
struct TubeField {
  double eps = 0.1, L = 0.0;
  int Ns = 0, margin = 3;
  ZGrid zg;                 // includes `margin` ghost layers filled with exact values
  Vec sbar, F, Fp, Fpp;     // phase F = f + eps f_1 (+ eps^2 f_2)
  Mat shift;                // Ns x d: Phi (+ eps Phi_1) in frame components
  CMat psi;                 // Ns x Z
  Mat Ubase;                // Ns x Z: U(k z), z = y - shift
  std::vector<Mat> dUbase;  // per axis, (d_j U)(k z)
  Vec kz;                   // k per s node
  double winding = 0.0;     // F(L) - F(0)
  double Jmin = 1.0;
  double kernel_projection = 0.0;  // worst w_ro solvability projection over s nodes
  double boundary_max = 0.0;       // sup |Psi| on the outer interior layer
};

TubeField assemble_psi1(const HarnessSetup& S, const ResidualOptions& opt);

// Smooth demodulated test bump exp(-|y|^2)(1 + 0.3 cos(2 pi sbar / L)) with F' = 1.
TubeField test_bump(const HarnessSetup& S, const ResidualOptions& opt);

// exp(iF/eps) (-Lap psi + V psi - |psi|^{p-1} psi), exact flat metric in Fermi coordinates.
CMat apply_nls_operator(const TubeField& f, const HarnessSetup& S);
// the -Lap + V part alone
CMat apply_linear_part(const TubeField& f, const HarnessSetup& S);
// demodulated Laplacian, exact and expanded to second order in eps
CMat laplacian_exact(const TubeField& f, const HarnessSetup& S);
CMat laplacian_expanded(const TubeField& f, const HarnessSetup& S);

// nodes at least `margin` layers from the z boundary
std::vector<int> interior_nodes(const TubeField& f);

struct ResidualNorms {
  double sup = 0.0, l2 = 0.0;
};
ResidualNorms residual_norms(const TubeField& f, const CMat& res, const HarnessSetup& S);

struct KernelProjections {
  Vec Pi;  // int Im(res) U(kz) dz per s node
  Mat Pr;  // Ns x d: int Re(res) d_m U(kz) dz
  double Pi_sup = 0.0, Pr_sup = 0.0;
};
KernelProjections project_residual(const TubeField& f, const CMat& res);

struct ResidualEntry {
  double eps = 0.0;
  ResidualNorms norms;
  double Pi_sup = 0.0, Pr_sup = 0.0;
  double winding_defect = 0.0;  // |F(L) - F(0) - 2 pi eps m|
  double Jmin = 1.0, kernel_projection = 0.0, boundary_max = 0.0;
  int Ns = 0, Nz = 0;
};

ResidualEntry residual_entry(const HarnessSetup& S, const ResidualOptions& opt);

// least-squares slope of log(value) against log(eps); needs at least 3 points
double scaling_fit(const std::vector<double>& eps, const std::vector<double>& values);

// Next-order hook: Phi_1 from J Phi_1 = W32 (frame components, N x (n-1)) and f_2' from
// T f_2 = W31 with zero mean. W31 must integrate to zero over the loop.
struct HigherOrder {
  Mat Phi1;
  Vec f2p;
};
HigherOrder solve_higher_order(const JacobiMatrix& J, const ProfileFields& pf, const Vec& W31, const Mat& W32);

}  // namespace nlst
