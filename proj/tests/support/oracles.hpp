#pragma once

// Independent reference computations used as test oracles. None of these
// share code with the library routines they check.

#include "handkin/common.hpp"

#include <complex>
#include <vector>

namespace handkin::testing {

// Solves A x = b by Gaussian elimination with partial pivoting (A is n x n, row-major nested vectors).
std::vector<double> gauss_solve(std::vector<std::vector<double>> A, std::vector<double> b);

// |sum_n h[n] e^{-i w n}| evaluated directly.
double dft_magnitude(const std::vector<double>& taps, double freq_hz, double fs);

// Homogeneous-sphere dipole potential from the Legendre series
// V = 1/(4 pi sigma R^2) sum_n (2n+1)/n (b/R)^(n-1) [n p_r P_n(cos g) + p_t P_n^1(cos g)],
// where p_r / p_t are the moment components radial / tangential (towards
// the sensor) at the dipole and g the angle between dipole and sensor directions.
double legendre_sphere_potential(const Eigen::Vector3d& sensor, const Eigen::Vector3d& position,
                                 const Eigen::Vector3d& moment, double radius, double conductivity,
                                 int terms = 400);

// Plain two-pass Pearson correlation.
double naive_pearson(const std::vector<double>& a, const std::vector<double>& b);

}  // namespace handkin::testing
