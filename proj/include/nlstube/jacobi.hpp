#pragma once

#include "nlstube/reduced_profile.hpp"

#include <Eigen/Eigenvalues>

namespace nlst {

// Which algebraic form of the operator to discretize.
//  Reduced:   stationarity has been used to merge the H-terms and the nonlocal column
//  Unreduced: raw integration by parts of the second variation, valid on any curve
enum class JacobiForm { Reduced, Unreduced };

// Pointwise coefficients of the operator on a periodic grid of N nodes with
// m = n - 1 normal components.
//   (J a)_i = -c_i (D^2 a)_i - cp_i (D a)_i + M_i a_i + col_i * sum_k <row_k, a_k>
// where D a = a' + omega a is the covariant derivative in the periodic frame.
struct JacobiCoefficients {
  int N = 0, m = 1;
  double L = 0.0;
  Vec c, cp;
  std::vector<Mat> M, omega;  // m x m per node
  Mat col, row;               // N x m
};

// Unknowns are ordered component-major: index j * N + i.
struct JacobiMatrix {
  int N = 0, m = 1;
  double L = 0.0;
  Mat local, nonlocal;
  Vec weight_hk;  // h k per node, for the weighted symmetry diagnostic

  Mat full() const { return local + nonlocal; }
  int size() const { return N * m; }
  double ds() const { return L / N; }
};

JacobiCoefficients jacobi_coefficients(const CurveModel& c, const PotentialField& V, const ProfileFields& pf,
                                       JacobiForm form = JacobiForm::Reduced);
JacobiMatrix assemble_jacobi(const JacobiCoefficients& co);
JacobiMatrix assemble_jacobi(const CurveModel& c, const PotentialField& V, const ProfileFields& pf,
                             JacobiForm form = JacobiForm::Reduced);
JacobiMatrix assemble_jacobi(const CurveModel& c, const PotentialField& V, double A, double p,
                             JacobiForm form = JacobiForm::Reduced);

// N x m frame components <-> stacked vector
Vec stack(const Mat& comps);
Mat unstack(const Vec& v, int N, int m);

// Second variation of the constrained reduced energy for ambient normal sections (N x n).
double quadratic_form(const CurveModel& c, const PotentialField& V, const ProfileFields& pf, const Mat& Vs,
                      const Mat& Ws);

// int <J v, w> ds for ambient normal sections.
double jacobi_pairing(const JacobiMatrix& J, const CurveModel& c, const Mat& Vs, const Mat& Ws);

struct Spectrum {
  Eigen::VectorXcd eigenvalues;  // sorted by real part, then imaginary part
  double min_abs = 0.0, second_abs = 0.0, norm = 0.0, max_imag = 0.0;
  bool invertible = false;
};

Spectrum spectrum(const JacobiMatrix& J, double tol = 1e-10);

struct SymmetryReport {
  double plain = 0.0;     // ||J - J^T|| / ||J||
  double weighted = 0.0;  // same for diag(hk) J
};
SymmetryReport symmetry_report(const JacobiMatrix& J);

// <J a, a> / <a, a> in the grid inner product
double rayleigh_quotient(const JacobiMatrix& J, const Mat& comps);

// Normal projections of the n constant translation fields, as frame components.
std::vector<Mat> translation_fields(const CurveModel& c);

struct F1Solution {
  Vec fp1, f1;      // f_1' and its periodic antiderivative
  double c = 0.0;   // the constant multiplying the homogeneous solution, equal to A'(Phi)
  double T_residual = 0.0;
  double mean = 0.0;  // int f_1' ds
};

// Phi is an ambient normal section (N x n).
F1Solution solve_f1(const CurveModel& c, const PotentialField& V, const ProfileFields& pf, const Mat& Phi);

}  // namespace nlst
