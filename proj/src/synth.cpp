#include "handkin/synth.hpp"

#include "handkin/head_model.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace handkin {

void validate(const SynthConfig& cfg) {
  if (cfg.n_trials < 1) throw Error("synth: n_trials must be >= 1");
  if (cfg.fs != 100.0 && cfg.fs != 500.0) throw Error("synth: fs must be 100 or 500 Hz");
  if (std::isnan(cfg.snr_db) || cfg.snr_db == -std::numeric_limits<double>::infinity()) {
    throw Error("synth: snr_db must be a number (+inf disables noise)");
  }
  if (!(cfg.coupling_lag_ms > 0.0)) throw Error("synth: coupling_lag_ms must be positive");
  if (cfg.n_active_scouts < 1) throw Error("synth: need at least one active scout");
  if (!(cfg.onset_s > 0.0 && cfg.movement_s > 0.0)) throw Error("synth: onset_s and movement_s must be positive");
  if (cfg.coupling_lag_ms >= cfg.onset_s * 1000.0) {
    throw Error("synth: coupling_lag_ms " + std::to_string(cfg.coupling_lag_ms) + " exceeds the pre-onset duration " +
                std::to_string(cfg.onset_s * 1000.0) + " ms");
  }
  if (cfg.burst_lead_ms > cfg.onset_s * 1000.0) throw Error("synth: burst_lead_ms exceeds the pre-onset duration");
  if (cfg.onset_s + cfg.movement_s >= cfg.trial_duration_s) {
    throw Error("synth: onset_s + movement_s must end before trial_duration_s");
  }
  if (!(0.0 < cfg.band_low_hz && cfg.band_low_hz < cfg.band_high_hz && cfg.band_high_hz < cfg.fs / 2.0)) {
    throw Error("synth: carrier band must satisfy 0 < low < high < Nyquist");
  }
  if (cfg.carrier_components < 1) throw Error("synth: carrier_components must be >= 1");
}

Matrix GroundTruth::sources(std::size_t trial, std::size_t n_sources) const {
  const Matrix& act = scout_activity.at(trial);
  Matrix S = Matrix::Zero(static_cast<Eigen::Index>(n_sources), act.cols());
  for (std::size_t j = 0; j < members.size(); ++j) {
    for (auto k : members[j]) S.row(static_cast<Eigen::Index>(k)) = source_amplitude * act.row(static_cast<Eigen::Index>(j));
  }
  return S;
}

namespace {

// Raised-cosine ramp up over [rise_start, rise_end], flat, ramp down over [fall_start, fall_end].
double envelope(double t, double rise_start, double rise_end, double fall_start, double fall_end) {
  if (t <= rise_start || t >= fall_end) return 0.0;
  if (t < rise_end) return 0.5 * (1.0 - std::cos(std::numbers::pi * (t - rise_start) / (rise_end - rise_start)));
  if (t <= fall_start) return 1.0;
  return 0.5 * (1.0 + std::cos(std::numbers::pi * (t - fall_start) / (fall_end - fall_start)));
}

}  // namespace

std::pair<TrialSet, GroundTruth> generate_synthetic_session(const SynthConfig& cfg, const LeadField& lf,
                                                            const ScoutAtlas& atlas,
                                                            std::vector<std::string> channel_names) {
  validate(cfg);
  validate(atlas, lf.sources());
  if (lf.gain.rows() == 0 || lf.gain.cols() == 0) throw Error("synth: empty lead field");
  if (cfg.n_active_scouts > atlas.size()) throw Error("synth: more active scouts than atlas regions");
  if (channel_names.empty()) channel_names = default_channel_names(lf.sensors());
  if (channel_names.size() != lf.sensors()) throw Error("synth: channel name count does not match lead field sensors");

  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> normal(0.0, 1.0);
  std::uniform_real_distribution<double> unit(0.0, 1.0);

  GroundTruth gt;
  gt.source_amplitude = cfg.source_amplitude;
  {
    std::vector<std::size_t> regions(atlas.size());
    for (std::size_t i = 0; i < regions.size(); ++i) regions[i] = i;
    // Partial Fisher-Yates: the first n_active entries are the active scouts.
    for (std::size_t i = 0; i < cfg.n_active_scouts; ++i) {
      const auto j = i + static_cast<std::size_t>(unit(rng) * static_cast<double>(regions.size() - i));
      std::swap(regions[i], regions[std::min(j, regions.size() - 1)]);
    }
    gt.active_scouts.assign(regions.begin(), regions.begin() + static_cast<std::ptrdiff_t>(cfg.n_active_scouts));
  }
  for (auto r : gt.active_scouts) gt.members.push_back(atlas.membership[r]);
  const auto n_active = static_cast<Eigen::Index>(cfg.n_active_scouts);
  gt.coupling.resize(3, n_active);
  for (Eigen::Index a = 0; a < 3; ++a) {
    for (Eigen::Index j = 0; j < n_active; ++j) gt.coupling(a, j) = normal(rng);
  }
  gt.reach_direction = Vec3(normal(rng), normal(rng), normal(rng)).normalized();
  const Vec3 rest_position(0.1, 0.2, 0.05);

  const double fs = cfg.fs;
  const auto samples = static_cast<std::size_t>(std::lround(cfg.trial_duration_s * fs));
  const auto onset = static_cast<std::size_t>(std::lround(cfg.onset_s * fs));
  const auto end = std::min(samples - 1, onset + static_cast<std::size_t>(std::lround(cfg.movement_s * fs)));
  gt.lag_samples = static_cast<std::size_t>(std::lround(cfg.coupling_lag_ms * fs / 1000.0));
  const double rise_start = cfg.onset_s - cfg.burst_lead_ms / 1000.0;
  const double fall_start = static_cast<double>(end) / fs;
  const double fall_end = fall_start + cfg.burst_lead_ms / 1000.0;

  // Per-active-scout spatial pattern: A restricted to the scout, summed over members.
  Matrix pattern = Matrix::Zero(lf.gain.rows(), n_active);
  for (Eigen::Index j = 0; j < n_active; ++j) {
    for (auto k : gt.members[static_cast<std::size_t>(j)]) pattern.col(j) += lf.gain.col(static_cast<Eigen::Index>(k));
  }
  pattern *= cfg.source_amplitude;

  TrialSet ts;
  ts.participant_id = cfg.participant_id;
  ts.fs = fs;
  ts.channel_names = std::move(channel_names);
  const bool noisy = std::isfinite(cfg.snr_db);
  const double noise_ratio = noisy ? std::pow(10.0, -cfg.snr_db / 10.0) : 0.0;

  for (std::size_t trial = 0; trial < cfg.n_trials; ++trial) {
    Matrix act(n_active, static_cast<Eigen::Index>(samples));
    const auto nc = cfg.carrier_components;
    for (Eigen::Index j = 0; j < n_active; ++j) {
      std::vector<double> freq(nc), phase(nc);
      for (std::size_t c = 0; c < nc; ++c) {
        freq[c] = cfg.band_low_hz + (cfg.band_high_hz - cfg.band_low_hz) * unit(rng);
        phase[c] = 2.0 * std::numbers::pi * unit(rng);
      }
      const double amp = std::sqrt(2.0 / static_cast<double>(nc));
      for (std::size_t s = 0; s < samples; ++s) {
        const double t = static_cast<double>(s) / fs;
        double v = 0.0;
        for (std::size_t c = 0; c < nc; ++c) v += std::sin(2.0 * std::numbers::pi * freq[c] * t + phase[c]);
        act(j, static_cast<Eigen::Index>(s)) = amp * v * envelope(t, rise_start, cfg.onset_s, fall_start, fall_end);
      }
    }

    Trial tr;
    tr.onset_index = onset;
    tr.end_index = end;
    tr.eeg = pattern * act;
    if (noisy) {
      for (Eigen::Index c = 0; c < tr.eeg.rows(); ++c) {
        const double power = tr.eeg.row(c).squaredNorm() / static_cast<double>(samples);
        const double sigma = std::sqrt(power * noise_ratio);
        for (Eigen::Index s = 0; s < tr.eeg.cols(); ++s) tr.eeg(c, s) += sigma * normal(rng);
      }
    }

    tr.kinematics.resize(3, static_cast<Eigen::Index>(samples));
    const double reach_len = static_cast<double>(end - onset);
    for (std::size_t s = 0; s < samples; ++s) {
      Vec3 pos = rest_position;
      if (s >= gt.lag_samples) {
        pos += gt.coupling * act.col(static_cast<Eigen::Index>(s - gt.lag_samples));
      }
      if (s >= onset && s <= end) {
        const double u = static_cast<double>(s - onset) / reach_len;
        pos += cfg.reach_amplitude * 0.5 * (1.0 - std::cos(2.0 * std::numbers::pi * u)) * gt.reach_direction;
      }
      tr.kinematics.col(static_cast<Eigen::Index>(s)) = pos;
    }
    gt.scout_activity.push_back(std::move(act));
    ts.trials.push_back(std::move(tr));
  }
  validate(ts);
  return {std::move(ts), std::move(gt)};
}

}  // namespace handkin
