#pragma once

#include "handkin/common.hpp"

#include <span>
#include <vector>

namespace handkin {

enum class FilterKind { lowpass, bandpass };

// Type-I linear-phase FIR kernel (odd length, symmetric taps).
struct FirKernel {
  std::vector<double> taps;
  double fs = 0.0;
  FilterKind kind = FilterKind::lowpass;
  double low_hz = 0.0;   // unused for lowpass
  double high_hz = 0.0;  // cutoff for lowpass

  std::size_t size() const { return taps.size(); }
};

struct Band {
  double low_hz = 0.0;
  double high_hz = 0.0;
};

// Hamming-windowed sinc. Lowpass kernels have unit DC gain; bandpass kernels
// are the difference of two unit-gain lowpasses and so have zero DC gain.
FirKernel design_fir(FilterKind kind, Band band, double fs, std::size_t num_taps);
inline FirKernel design_lowpass(double cutoff_hz, double fs, std::size_t num_taps) {
  return design_fir(FilterKind::lowpass, {0.0, cutoff_hz}, fs, num_taps);
}

// |H(f)| from the zero-phase amplitude A(w) = h[c] + 2 sum h[c-k] cos(wk).
double magnitude_response(const FirKernel& k, double freq_hz);

// Forward-backward application with odd reflection padding of (taps - 1)
// samples on each side. Requires x.size() > 3 * taps.
std::vector<double> filtfilt(std::span<const double> x, const FirKernel& k);
Vector filtfilt(const Vector& x, const FirKernel& k);
// Row-wise filtfilt.
Matrix filtfilt_rows(const Matrix& x, const FirKernel& k);

}  // namespace handkin
