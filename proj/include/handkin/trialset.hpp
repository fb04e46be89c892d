#pragma once

#include "handkin/common.hpp"

#include <cstddef>
#include <filesystem>
#include <string>
#include <vector>

namespace handkin {

// One grasp-and-lift trial. eeg is channels x samples, kinematics 3 x samples.
struct Trial {
  Matrix eeg;
  Matrix kinematics;
  std::size_t onset_index = 0;
  std::size_t end_index = 0;

  std::size_t samples() const { return static_cast<std::size_t>(eeg.cols()); }
};

struct TrialSet {
  std::string participant_id;
  double fs = 0.0;
  std::vector<std::string> channel_names;
  std::vector<Trial> trials;

  std::size_t channels() const { return channel_names.size(); }
};

// Throws Error naming the offending trial when an invariant does not hold.
void validate(const TrialSet& ts);

enum class SessionFormat { binary, csv_dir };

TrialSet load_trialset(const std::filesystem::path& path, SessionFormat format = SessionFormat::binary);

// Binary session format. Refuses empty sets and non-finite samples.
void save_trialset(const TrialSet& ts, const std::filesystem::path& path);

// CSV directory: meta.toml plus one CSV per trial (EEG channel columns, then kin_x, kin_y, kin_z).
void save_trialset_csv(const TrialSet& ts, const std::filesystem::path& dir);

}  // namespace handkin
