#include "handkin/preprocess.hpp"

#include "handkin/log.hpp"

#include <cmath>
#include <limits>

namespace handkin {

Matrix average_rereference(const Matrix& eeg) {
  if (eeg.rows() < 2) throw Error("average_rereference: need at least 2 channels");
  const Eigen::RowVectorXd mean = eeg.colwise().mean();
  return eeg.rowwise() - mean;
}

std::size_t downsample_factor(double fs_in, double fs_out) {
  if (!(fs_in > 0.0 && fs_out > 0.0)) throw Error("downsample: sampling rates must be positive");
  const double ratio = fs_in / fs_out;
  const double rounded = std::round(ratio);
  if (rounded < 1.0 || std::abs(ratio - rounded) > 1e-9) {
    throw Error("downsample: fs_in " + std::to_string(fs_in) + " is not an integer multiple of fs_out " +
                std::to_string(fs_out));
  }
  return static_cast<std::size_t>(rounded);
}

std::size_t anti_alias_taps(std::size_t factor) { return 20 * factor + 1; }

Vector downsample(const Vector& x, double fs_in, double fs_out) {
  const std::size_t factor = downsample_factor(fs_in, fs_out);
  if (factor == 1) return x;
  const auto k = design_lowpass(0.4 * fs_out, fs_in, anti_alias_taps(factor));
  const Vector y = filtfilt(x, k);
  const auto n_out = static_cast<Eigen::Index>((static_cast<std::size_t>(x.size()) + factor - 1) / factor);
  Vector out(n_out);
  for (Eigen::Index i = 0; i < n_out; ++i) out[i] = y[i * static_cast<Eigen::Index>(factor)];
  return out;
}

Matrix downsample_rows(const Matrix& x, double fs_in, double fs_out) {
  const std::size_t factor = downsample_factor(fs_in, fs_out);
  if (factor == 1) return x;
  const auto n_out = static_cast<Eigen::Index>((static_cast<std::size_t>(x.cols()) + factor - 1) / factor);
  Matrix out(x.rows(), n_out);
  for (Eigen::Index r = 0; r < x.rows(); ++r) {
    out.row(r) = downsample(Vector(x.row(r).transpose()), fs_in, fs_out).transpose();
  }
  return out;
}

std::size_t kinematics_lowpass_taps(double fs) {
  if (fs == 100.0) return 301;
  if (fs == 500.0) return 1001;
  auto n = static_cast<std::size_t>(std::lround(2.0 * fs)) + 1;
  if (n % 2 == 0) ++n;
  return n;
}

Matrix smooth_kinematics(const Matrix& kin, double fs) {
  const auto k = design_lowpass(kKinematicsCutoffHz, fs, kinematics_lowpass_taps(fs));
  return filtfilt_rows(kin, k);
}

MinMaxStats fit_minmax(std::span<const Matrix> parts, std::string fitted_on) {
  if (parts.empty()) throw Error("fit_minmax: no data");
  const auto rows = parts.front().rows();
  MinMaxStats s;
  s.min = Vector::Constant(rows, std::numeric_limits<double>::infinity());
  s.max = Vector::Constant(rows, -std::numeric_limits<double>::infinity());
  for (const auto& p : parts) {
    if (p.rows() != rows) throw Error("fit_minmax: row count mismatch");
    if (p.cols() == 0) continue;
    s.min = s.min.cwiseMin(p.rowwise().minCoeff());
    s.max = s.max.cwiseMax(p.rowwise().maxCoeff());
  }
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!(s.max[r] > s.min[r])) throw Error("min-max: axis " + std::to_string(r) + " is degenerate (max == min)");
  }
  s.fitted_on = std::move(fitted_on);
  return s;
}

ZScoreStats fit_zscore(std::span<const Matrix> parts, std::string fitted_on) {
  if (parts.empty()) throw Error("fit_zscore: no data");
  const auto rows = parts.front().rows();
  Vector sum = Vector::Zero(rows);
  double count = 0.0;
  for (const auto& p : parts) {
    if (p.rows() != rows) throw Error("fit_zscore: row count mismatch");
    sum += p.rowwise().sum();
    count += static_cast<double>(p.cols());
  }
  if (count < 1.0) throw Error("fit_zscore: no samples");
  ZScoreStats s;
  s.mean = sum / count;
  Vector ss = Vector::Zero(rows);
  for (const auto& p : parts) ss += (p.colwise() - s.mean).array().square().matrix().rowwise().sum();
  s.std = (ss / count).cwiseSqrt();
  for (Eigen::Index r = 0; r < rows; ++r) {
    if (!(s.std[r] > 0.0)) throw Error("z-score: series " + std::to_string(r) + " has zero variance");
  }
  s.fitted_on = std::move(fitted_on);
  return s;
}

Matrix apply_minmax(const Matrix& x, const MinMaxStats& s) {
  if (x.rows() != s.min.size()) throw Error("apply_minmax: row count mismatch");
  const Vector range = s.max - s.min;
  return (x.colwise() - s.min).array().colwise() / range.array();
}

Matrix invert_minmax(const Matrix& x, const MinMaxStats& s) {
  if (x.rows() != s.min.size()) throw Error("invert_minmax: row count mismatch");
  const Vector range = s.max - s.min;
  return (x.array().colwise() * range.array()).matrix().colwise() + s.min;
}

Matrix apply_zscore(const Matrix& x, const ZScoreStats& s) {
  if (x.rows() != s.mean.size()) throw Error("apply_zscore: row count mismatch");
  return (x.colwise() - s.mean).array().colwise() / s.std.array();
}

std::pair<Matrix, MinMaxStats> minmax_normalize(const Matrix& kin, const std::optional<MinMaxStats>& stats) {
  MinMaxStats s = stats ? *stats : fit_minmax(std::span<const Matrix>(&kin, 1), "input");
  Matrix out = apply_minmax(kin, s);
  return {std::move(out), std::move(s)};
}

std::pair<Matrix, ZScoreStats> zscore_normalize(const Matrix& series, const std::optional<ZScoreStats>& stats) {
  ZScoreStats s = stats ? *stats : fit_zscore(std::span<const Matrix>(&series, 1), "input");
  Matrix out = apply_zscore(series, s);
  return {std::move(out), std::move(s)};
}

TrialSet preprocess_session(const TrialSet& ts, const PrepConfig& cfg) {
  validate(ts);
  const std::size_t factor = downsample_factor(ts.fs, cfg.fs_out);
  const auto bandpass = design_fir(FilterKind::bandpass, cfg.eeg_band, ts.fs, cfg.eeg_taps);

  std::vector<Matrix> smoothed;
  smoothed.reserve(ts.trials.size());
  for (const auto& t : ts.trials) smoothed.push_back(smooth_kinematics(t.kinematics, ts.fs));

  std::optional<MinMaxStats> kin_stats = cfg.kinematics_stats;
  if (cfg.normalize_kinematics && !kin_stats) kin_stats = fit_minmax(smoothed, "session " + ts.participant_id);
  log::info("ICA ocular-artifact stage skipped (synthetic sessions carry no ocular artifacts)");

  TrialSet out;
  out.participant_id = ts.participant_id;
  out.fs = cfg.fs_out;
  out.channel_names = ts.channel_names;
  for (std::size_t i = 0; i < ts.trials.size(); ++i) {
    const auto& t = ts.trials[i];
    Trial p;
    Matrix eeg = average_rereference(filtfilt_rows(t.eeg, bandpass));
    p.eeg = downsample_rows(eeg, ts.fs, cfg.fs_out);
    Matrix kin = cfg.normalize_kinematics ? apply_minmax(smoothed[i], *kin_stats) : smoothed[i];
    p.kinematics = downsample_rows(kin, ts.fs, cfg.fs_out);
    p.onset_index = downsample_index(t.onset_index, factor);
    p.end_index = downsample_index(t.end_index, factor);
    out.trials.push_back(std::move(p));
  }
  validate(out);
  return out;
}

}  // namespace handkin
