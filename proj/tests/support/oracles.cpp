#include "oracles.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace handkin::testing {

std::vector<double> gauss_solve(std::vector<std::vector<double>> A, std::vector<double> b) {
  const std::size_t n = b.size();
  for (std::size_t col = 0; col < n; ++col) {
    std::size_t piv = col;
    for (std::size_t r = col + 1; r < n; ++r) {
      if (std::abs(A[r][col]) > std::abs(A[piv][col])) piv = r;
    }
    if (A[piv][col] == 0.0) throw std::runtime_error("gauss_solve: singular system");
    std::swap(A[piv], A[col]);
    std::swap(b[piv], b[col]);
    for (std::size_t r = col + 1; r < n; ++r) {
      const double f = A[r][col] / A[col][col];
      for (std::size_t c = col; c < n; ++c) A[r][c] -= f * A[col][c];
      b[r] -= f * b[col];
    }
  }
  std::vector<double> x(n);
  for (std::size_t i = n; i-- > 0;) {
    double s = b[i];
    for (std::size_t c = i + 1; c < n; ++c) s -= A[i][c] * x[c];
    x[i] = s / A[i][i];
  }
  return x;
}

double dft_magnitude(const std::vector<double>& taps, double freq_hz, double fs) {
  const double w = 2.0 * std::numbers::pi * freq_hz / fs;
  std::complex<double> acc(0.0, 0.0);
  for (std::size_t n = 0; n < taps.size(); ++n) acc += taps[n] * std::polar(1.0, -w * static_cast<double>(n));
  return std::abs(acc);
}

double legendre_sphere_potential(const Eigen::Vector3d& sensor, const Eigen::Vector3d& position,
                                 const Eigen::Vector3d& moment, double radius, double conductivity, int terms) {
  const double b = position.norm();
  const Eigen::Vector3d er = position / b;
  const Eigen::Vector3d es = sensor.normalized();
  const double cg = std::clamp(er.dot(es), -1.0, 1.0);
  // Tangential unit vector at the dipole pointing towards the sensor.
  Eigen::Vector3d et = es - cg * er;
  const double sg = et.norm();
  double pt = 0.0;
  if (sg > 1e-14) {
    et /= sg;
    pt = moment.dot(et);
  }
  const double pr = moment.dot(er);
  double sum = 0.0;
  double ratio = 1.0;  // (b/R)^(n-1)
  for (int n = 1; n <= terms; ++n) {
    const double Pn = std::legendre(static_cast<unsigned>(n), cg);
    // P_n^1 with the sign convention sin(g) * dP_n/dx (no Condon-Shortley phase);
    // std::assoc_legendre omits the phase as well.
    const double Pn1 = std::assoc_legendre(static_cast<unsigned>(n), 1u, cg);
    sum += (2.0 * n + 1.0) / n * ratio * (n * pr * Pn + pt * Pn1);
    ratio *= b / radius;
  }
  return sum / (4.0 * std::numbers::pi * conductivity * radius * radius);
}

double naive_pearson(const std::vector<double>& a, const std::vector<double>& b) {
  double ma = 0.0, mb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i];
    mb += b[i];
  }
  ma /= static_cast<double>(a.size());
  mb /= static_cast<double>(b.size());
  double sab = 0.0, saa = 0.0, sbb = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace handkin::testing
