#pragma once

#include "nlstube/common.hpp"

namespace nlst::spectral {

// Derivative of order `order` of a periodic sample vector on [0, L).
// Odd orders drop the Nyquist mode; even orders keep it.
Vec derivative(const Vec& f, double L, int order = 1);

// Column-wise derivative of an N x m block.
Mat derivative(const Mat& f, double L, int order = 1);

// Trapezoid rule on the uniform periodic grid.
double integral(const Vec& f, double L);

// F(s) = int_0^s f, mean part kept as a linear term. F(0) = 0.
Vec antiderivative(const Vec& f, double L);

// Dense differentiation matrix consistent with derivative().
Mat diff_matrix(int N, double L, int order);

// Trigonometric interpolant of periodic samples evaluated at s.
double interpolate(const Vec& f, double L, double s);

}  // namespace nlst::spectral
