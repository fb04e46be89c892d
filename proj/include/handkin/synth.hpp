#pragma once

#include "handkin/atlas.hpp"
#include "handkin/lead_field.hpp"
#include "handkin/trialset.hpp"

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

namespace handkin {

struct SynthConfig {
  std::string participant_id = "S01";
  std::size_t n_trials = 60;
  double fs = 500.0;  // 100 or 500
  double trial_duration_s = 8.0;
  double snr_db = 10.0;  // +inf disables sensor noise
  std::size_t n_active_scouts = 2;
  double coupling_lag_ms = 100.0;
  std::uint64_t seed = 1;

  double onset_s = 3.0;             // movement onset within the trial
  double movement_s = 2.0;          // onset..end segment length
  double burst_lead_ms = 300.0;     // source bursts ramp up this long before onset
  double source_amplitude = 10.0;   // nA*m per active dipole (RMS of the carrier)
  double reach_amplitude = 0.3;     // bell-shaped reach bump, kinematic units
  std::size_t carrier_components = 16;
  double band_low_hz = 0.5;
  double band_high_hz = 4.0;
};

void validate(const SynthConfig& cfg);

// Source activity is stored factored: every source of active scout j carries
// amplitude * scout_activity[trial].row(j); all other sources are silent.
struct GroundTruth {
  std::vector<std::size_t> active_scouts;
  std::vector<Matrix> scout_activity;  // per trial, n_active x samples (unit-RMS carrier x envelope)
  Matrix coupling;                     // 3 x n_active linear map onto kinematics
  Vec3 reach_direction = Vec3::Zero();
  double source_amplitude = 0.0;
  std::size_t lag_samples = 0;
  std::vector<std::vector<std::size_t>> members;  // source indices of each active scout

  // Dense sources x samples S for one trial.
  Matrix sources(std::size_t trial, std::size_t n_sources) const;
};

// Deterministic in (cfg, lead field, atlas). Channel names default to E01...
std::pair<TrialSet, GroundTruth> generate_synthetic_session(const SynthConfig& cfg, const LeadField& lf,
                                                            const ScoutAtlas& atlas,
                                                            std::vector<std::string> channel_names = {});

}  // namespace handkin
