#pragma once

#include "handkin/common.hpp"
#include "handkin/fir.hpp"
#include "handkin/trialset.hpp"

#include <optional>
#include <span>
#include <string>
#include <utility>

namespace handkin {

// Subtracts the across-channel mean at every sample.
Matrix average_rereference(const Matrix& eeg);

// Zero-phase anti-alias lowpass at 0.4 * fs_out, then every (fs_in/fs_out)-th
// sample starting at index 0.
Vector downsample(const Vector& x, double fs_in, double fs_out);
Matrix downsample_rows(const Matrix& x, double fs_in, double fs_out);
std::size_t downsample_factor(double fs_in, double fs_out);
inline std::size_t downsample_index(std::size_t index, std::size_t factor) { return index / factor; }

// Kinematics lowpass tap count: 301 at 100 Hz, 1001 at 500 Hz, else 2 * fs + 1 rounded to odd.
std::size_t kinematics_lowpass_taps(double fs);
std::size_t anti_alias_taps(std::size_t factor);

constexpr double kKinematicsCutoffHz = 2.0;
constexpr Band kEegBand{0.1, 40.0};
constexpr std::size_t kEegBandpassTaps = 1001;

// 2 Hz zero-phase lowpass applied per axis.
Matrix smooth_kinematics(const Matrix& kin, double fs);

struct MinMaxStats {
  Vector min;
  Vector max;
  std::string fitted_on;
};

struct ZScoreStats {
  Vector mean;
  Vector std;  // population (1/N)
  std::string fitted_on;
};

// Rows are series. Fitting pools all columns of all given matrices.
MinMaxStats fit_minmax(std::span<const Matrix> parts, std::string fitted_on = {});
ZScoreStats fit_zscore(std::span<const Matrix> parts, std::string fitted_on = {});

Matrix apply_minmax(const Matrix& x, const MinMaxStats& s);
Matrix invert_minmax(const Matrix& x, const MinMaxStats& s);
Matrix apply_zscore(const Matrix& x, const ZScoreStats& s);

// Fits on the input when stats are absent; otherwise applies them unclamped.
std::pair<Matrix, MinMaxStats> minmax_normalize(const Matrix& kin, const std::optional<MinMaxStats>& stats = {});
std::pair<Matrix, ZScoreStats> zscore_normalize(const Matrix& series, const std::optional<ZScoreStats>& stats = {});

struct PrepConfig {
  double fs_out = 100.0;
  Band eeg_band = kEegBand;
  std::size_t eeg_taps = kEegBandpassTaps;
  bool normalize_kinematics = true;
  std::optional<MinMaxStats> kinematics_stats;  // fitted on the session when absent
};

// EEG: bandpass -> average re-reference -> (ICA, not applied) -> downsample.
// Kinematics: smooth -> min-max -> downsample. Onset/end indices floor-rescaled.
TrialSet preprocess_session(const TrialSet& ts, const PrepConfig& cfg = {});

}  // namespace handkin
