#pragma once

#include "nlstube/curve_geometry.hpp"

namespace nlst {

// Exponent constants attached to (p, n).
struct ProfileExponents {
  double p, sigma, theta;
  int n;
  ProfileExponents(double p_, int n_);
};

// Per-node profile data along a curve.
struct ProfileFields {
  double p = 3.0, A = 0.0, sigma = 0.0, theta = 0.0, L = 0.0;
  int n = 2;
  Vec sbar, V, h, k, fp, f, dh_dV, dh_dA;
  Vec hp, kp, fpp;  // spectral s-derivatives of h, k, f'

  int N() const { return static_cast<int>(h.size()); }
  // worst nodewise relative defects of k^2 = h^{p-1}, V + f'^2 = h^{p-1}, f' = A h^sigma
  double relation_defect() const;
  // sup of |f'' h + 2 f' h' - (n-1) f' h k'/k|
  double phase_ode_defect() const;
};

struct HSolution {
  double h, dh_dV, dh_dA;
};

// Smallest positive root of h^{p-1} - A^2 h^{2 sigma} = V.
HSolution solve_h(double V, double A, double p, int n);

// Fold location: the A beyond which no root exists at this V (infinity if none).
double critical_A(double V, double p, int n);

ProfileFields profile_fields(const CurveModel& c, const PotentialField& V, double A, double p);

struct Quantization {
  double A;
  long m;
  double defect;  // |int f' - 2 pi eps m|
};

Quantization quantize_A(const CurveModel& c, const PotentialField& V, double p, double eps, double A_target);

double reduced_energy(const ProfileFields& pf);

// (1/2 - 1/(p+1)) int U^{p+1}; multiplies eps^{n-1} E.
double energy_prefactor(double mp1, double p);

// Normal-field residual of the stationarity condition; N x (n-1) periodic-frame components.
Mat euler_residual(const CurveModel& c, const PotentialField& V, const ProfileFields& pf);
Mat euler_residual(const CurveModel& c, const PotentialField& V, double A, double p);

// Scalar stationarity function for circles centred at a radial potential's centre.
double circle_stationarity(const PotentialField& V, double A, double p, int n, double r);

// Root of circle_stationarity on [r_lo, r_hi].
double find_stationary_circle(const PotentialField& V, double A, double p, int n, double r_lo, double r_hi);

// Linear functional A' of a normal variation (N x n ambient, normal at every node).
double A_prime(const CurveModel& c, const PotentialField& V, const ProfileFields& pf, const Mat& var);

// Row weights w (N x n) such that A'(var) = sum_{i,a} w(i,a) var(i,a).
Mat A_prime_weights(const CurveModel& c, const PotentialField& V, const ProfileFields& pf);

// First variation of the constrained reduced energy along a normal variation.
double first_variation(const CurveModel& c, const PotentialField& V, const ProfileFields& pf, const Mat& var);

// Direct evaluation on a deformed curve gamma + t1 v + t2 w (no reparametrisation):
// solves the constraint int A h^sigma dl = target for A and returns (A, E).
struct DeformedEnergy {
  double A, E;
};
DeformedEnergy deformed_energy(const CurveModel& c, const PotentialField& V, double p, double constraint,
                               const Mat& displacement);
double constraint_value(const CurveModel& c, const PotentialField& V, double p, double A);

}  // namespace nlst
