#pragma once

#include "nlstube/common.hpp"

namespace nlst {

// Radial ground state of -Lap U + U = U^p in R^d on a uniform grid [0, r_max].
struct GroundState {
  double p = 3.0;
  int d = 1;
  Vec r, U, Up;  // abscissae, profile, radial derivative
  double dr = 0.0;
  double r_max = 0.0;
  double decay_rate = 1.0;  // U ~ r^{-(d-1)/2} e^{-decay_rate r}
  double U0 = 0.0;
};

struct GroundStateOptions {
  double tol = 1e-12;   // relative bracket width on U(0) before the matching polish
  double r_max = 30.0;
  double dr = 0.01;     // rounded so that r_max/dr is a multiple of 8
  int n_grid = 0;       // if > 0 overrides dr: exactly n_grid points on [0, r_max]
};

struct MomentTable {
  double m2 = 0, mg = 0, mp1 = 0;        // int U^2, |grad U|^2, U^{p+1}
  double z2m2 = 0, z2mg = 0, z2mp1 = 0;  // same with |z|^2 weight
  double quad_error = 0;                  // Richardson estimate, max relative over entries
};

struct PohozaevReport {
  double grad_identity = 0;   // int|grad U|^2 = d(p-1)/(2 theta) int U^2
  double weighted_energy = 0; // (n-5) z2mg + (n+1) z2m2 = 2(n+1)/(p+1) z2mp1
  double weighted_mass = 0;   // (n-1) m2 = z2mg + z2m2 - z2mp1
  double weighted_l2 = 0;     // z2m2 = 2/(p+1) z2mp1 - (n-5)/(n+1) z2mg
  double mass_balance = 0;    // (n-1) m2 = 6/(n+1) z2mg - (p-1)/(p+1) z2mp1
  double quad_error = 0;
  bool quadrature_flag = false;  // quad_error above threshold
  double max_residual() const;
};

struct ProfileValue {
  double U, Up, Upp;
};

// exponent check shared with callers that do not build a ground state
void check_exponent(double p, int d);

GroundState solve_ground_state(double p, int d, double tol = 1e-12);
GroundState solve_ground_state(double p, int d, const GroundStateOptions& opt);

// Closed-form d = 1 soliton on the standard grid.
GroundState soliton_closed_form(double p, const GroundStateOptions& opt = {});

MomentTable moments(const GroundState& g);

PohozaevReport pohozaev_report(const MomentTable& m, double p, int d,
                               double quad_threshold = 1e-8);

// Quintic Hermite interpolation (U'' from the ODE); exponential tail past r_max.
ProfileValue evaluate(const GroundState& g, double r);

// Sup-norm of -U'' - (d-1)/r U' + U - U^p at interior nodes, U'' by
// sixth-order differences of the stored U'.
double ode_residual(const GroundState& g);

// Surface measure of the unit sphere S^{d-1}.
double sphere_area(int d);

}  // namespace nlst
