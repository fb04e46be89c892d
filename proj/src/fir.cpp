#include "handkin/fir.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace handkin {
namespace {

// Unit-DC-gain windowed-sinc lowpass at cutoff/fs, written into the left half
// and mirrored so the taps are exactly symmetric.
std::vector<double> windowed_sinc(double cutoff_hz, double fs, std::size_t n) {
  const double fc = cutoff_hz / fs;
  const std::size_t centre = (n - 1) / 2;
  std::vector<double> h(n);
  for (std::size_t i = 0; i <= centre; ++i) {
    const double m = static_cast<double>(i) - static_cast<double>(centre);
    const double ideal = m == 0.0 ? 2.0 * fc : std::sin(2.0 * std::numbers::pi * fc * m) / (std::numbers::pi * m);
    const double w = 0.54 - 0.46 * std::cos(2.0 * std::numbers::pi * static_cast<double>(i) / static_cast<double>(n - 1));
    h[i] = ideal * w;
    h[n - 1 - i] = h[i];
  }
  double sum = 0.0;
  for (double v : h) sum += v;
  for (double& v : h) v /= sum;
  return h;
}

}  // namespace

FirKernel design_fir(FilterKind kind, Band band, double fs, std::size_t num_taps) {
  if (!(fs > 0.0)) throw Error("design_fir: fs must be positive");
  if (num_taps < 3 || num_taps % 2 == 0) {
    throw Error("design_fir: num_taps must be odd and >= 3 (got " + std::to_string(num_taps) + ")");
  }
  const double nyquist = fs / 2.0;
  FirKernel k;
  k.fs = fs;
  k.kind = kind;
  if (kind == FilterKind::lowpass) {
    if (!(band.high_hz > 0.0 && band.high_hz < nyquist)) {
      throw Error("design_fir: cutoff " + std::to_string(band.high_hz) + " Hz must lie in (0, Nyquist)");
    }
    k.high_hz = band.high_hz;
    k.taps = windowed_sinc(band.high_hz, fs, num_taps);
  } else {
    if (!(band.low_hz > 0.0 && band.low_hz < band.high_hz && band.high_hz < nyquist)) {
      throw Error("design_fir: band edges must satisfy 0 < low < high < Nyquist");
    }
    k.low_hz = band.low_hz;
    k.high_hz = band.high_hz;
    const auto hi = windowed_sinc(band.high_hz, fs, num_taps);
    const auto lo = windowed_sinc(band.low_hz, fs, num_taps);
    k.taps.resize(num_taps);
    for (std::size_t i = 0; i < num_taps; ++i) k.taps[i] = hi[i] - lo[i];
  }
  return k;
}

double magnitude_response(const FirKernel& k, double freq_hz) {
  const std::size_t c = (k.size() - 1) / 2;
  const double w = 2.0 * std::numbers::pi * freq_hz / k.fs;
  double a = k.taps[c];
  for (std::size_t j = 1; j <= c; ++j) a += 2.0 * k.taps[c - j] * std::cos(w * static_cast<double>(j));
  return std::abs(a);
}

std::vector<double> filtfilt(std::span<const double> x, const FirKernel& k) {
  const std::size_t L = k.size();
  const std::size_t n = x.size();
  if (n <= 3 * L) {
    throw Error("filtfilt: series of " + std::to_string(n) + " samples is too short for a " + std::to_string(L) +
                "-tap kernel (need > " + std::to_string(3 * L) + ")");
  }
  const std::size_t pad = L - 1;
  std::vector<double> xp(n + 2 * pad);
  for (std::size_t i = 0; i < n; ++i) xp[pad + i] = x[i];
  for (std::size_t i = 1; i <= pad; ++i) {
    xp[pad - i] = 2.0 * x[0] - x[i];
    xp[pad + n - 1 + i] = 2.0 * x[n - 1] - x[n - 1 - i];
  }

  using Map = Eigen::Map<const Eigen::VectorXd>;
  const Map h(k.taps.data(), static_cast<Eigen::Index>(L));
  // Forward pass, valid part only: y[j] for j in [pad, n + 2 pad).
  const std::size_t ylen = n + pad;
  std::vector<double> y(ylen);
  for (std::size_t j = 0; j < ylen; ++j) {
    y[j] = h.dot(Map(xp.data() + j, static_cast<Eigen::Index>(L)));
  }
  // Backward pass; symmetric taps make the reversed kernel equal to h.
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = h.dot(Map(y.data() + i, static_cast<Eigen::Index>(L)));
  }
  return out;
}

Vector filtfilt(const Vector& x, const FirKernel& k) {
  const auto y = filtfilt(std::span<const double>(x.data(), static_cast<std::size_t>(x.size())), k);
  return Eigen::Map<const Vector>(y.data(), static_cast<Eigen::Index>(y.size()));
}

Matrix filtfilt_rows(const Matrix& x, const FirKernel& k) {
  Matrix out(x.rows(), x.cols());
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    const Vector row = x.row(r).transpose();
    out.row(r) = filtfilt(row, k).transpose();
  }
  return out;
}

}  // namespace handkin
