#pragma once

#include "nlstube/common.hpp"

#include <string>
#include <vector>

namespace nlst {

// Smooth potential on R^n with analytic gradient and Hessian.
class PotentialField {
 public:
  enum class Kind { Constant, RadialCos, Quadratic };

  static PotentialField constant(int n, double c);
  // V = a + b cos|x - center|
  static PotentialField radial_cos(int n, double a = 2.0, double b = 1.0, const Vec& center = Vec());
  // V = c + sum_i w_i (x_i - center_i)^2
  static PotentialField quadratic(int n, double c, const Vec& weights, const Vec& center = Vec());

  double value(const Vec& x) const;
  Vec gradient(const Vec& x) const;
  Mat hessian(const Vec& x) const;

  int dim() const { return n_; }
  Kind kind() const { return kind_; }
  std::string name() const;
  const Vec& center() const { return center_; }

  // radial potentials depend on |x - center| only
  bool is_radial() const;
  double radial_value(double r) const;
  double radial_derivative(double r) const;

 private:
  Kind kind_ = Kind::Constant;
  int n_ = 2;
  double c0_ = 1.0, b_ = 0.0;
  Vec w_, center_;
};

// Closed curve in R^n sampled at N uniform arclength nodes.
struct CurveModel {
  int n = 2;
  int N = 0;
  double L = 0.0;
  bool closed = true;      // false only for the straight test fixture
  Vec sbar;                // s_i = i L / N
  Mat gamma, T, Hvec;      // N x n: positions, unit tangent, curvature vector dT/ds
  std::vector<Mat> Y;      // parallel normal frame Y_2..Y_n, each N x n (quasi-periodic if n >= 3)
  std::vector<Mat> Z;      // periodic normal frame: Y rotated by -holonomy * s / L
  std::vector<Mat> omega;  // per node (n-1)x(n-1): omega(k, j) = <Z_j', Z_k>
  double holonomy = 0.0;   // rotation of the parallel frame after one loop (n = 3)

  double ds() const { return L / N; }
  int normal_dim() const { return n - 1; }
  Mat H_parallel() const;  // N x (n-1) components <H, Y_m>
  Mat H_frame() const;     // N x (n-1) components <H, Z_m>
  // ambient normal section from periodic-frame components (N x (n-1)) and back
  Mat to_ambient(const Mat& comps) const;
  Mat to_frame(const Mat& ambient) const;
  // orthogonal projection of an ambient field onto the normal spaces
  Mat project_normal(const Mat& ambient) const;
  // sup over nodes of |<Y_j,Y_k> - delta_jk| and |<Y_j,T>|
  double frame_defect() const;
  // sup over interior nodes of |P_N (Y_{i+1} - Y_{i-1}) / (2 ds)|
  double transport_defect() const;
};

// Uniform-arclength resampling of closed-curve samples (rows are points).
// Samples are treated as equispaced in an underlying periodic parameter and
// interpolated trigonometrically; cumulative length is inverted by Newton.
CurveModel arclength_reparam(const Mat& samples, int N_s);

// Fills Y (double-reflection transport), holonomy, Z and omega.
void parallel_frame(CurveModel& c);

// Curvature vector in parallel-frame components, N x (n-1).
Mat curvature_vector(const CurveModel& c);

// presets
CurveModel circle_curve(double radius, int n, int N_s, const Vec& center = Vec(), int samples = 256);
CurveModel ellipse_curve(double a, double b, int n, int N_s, int samples = 256);
CurveModel torus_knot_curve(int p, int q, double R, double r, int N_s, int samples = 512);
CurveModel straight_segment(double L, int n, int N_s);
Mat load_samples_csv(const std::string& path, int n);

// rigid motion applied to every point of a sample set
Mat rotate_samples(const Mat& samples, const Mat& Q);

struct FermiMetric {
  Mat g, ginv;     // (n x n), index 0 is the arclength direction
  double sqrt_det;
};

// Exact flat-space metric at node i and parallel-frame offset y (n-1 entries).
FermiMetric fermi_metric_exact(const CurveModel& c, int i, const Vec& y);
// Truncation of order 1 or 2 of the same metric.
FermiMetric fermi_metric_expansion(const CurveModel& c, int i, const Vec& y, int order);

struct NormalData {
  double V = 0.0;
  Vec grad;   // (n-1) components of the normal gradient in the periodic frame
  Mat hess;   // (n-1)x(n-1) normal Hessian in the periodic frame
  Vec grad_ambient;  // n-vector: grad V minus its tangential part
};

NormalData potential_normal_data(const PotentialField& V, const CurveModel& c, int i);

}  // namespace nlst
