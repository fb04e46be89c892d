#pragma once

#include "handkin/eval/metrics.hpp"
#include "handkin/head_model.hpp"
#include "handkin/inverse.hpp"
#include "handkin/nn/decoder.hpp"
#include "handkin/nn/train.hpp"
#include "handkin/preprocess.hpp"
#include "handkin/synth.hpp"
#include "handkin/windows.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace handkin::eval {

// A participant session: either a stored file or a synthetic generator config.
struct SessionSource {
  std::optional<std::filesystem::path> path;
  SessionFormat format = SessionFormat::binary;
  std::optional<SynthConfig> synth;
};

struct ExperimentConfig {
  std::string name = "experiment";
  std::vector<SessionSource> sessions;
  std::vector<int> windows_ms{kStandardWindowsMs.begin(), kStandardWindowsMs.end()};
  std::vector<Domain> domains{Domain::source, Domain::sensor};
  int gap_ms = kPreMovementGapMs;
  double fs = 100.0;
  SplitSpec split{234, 30, 30, 0, true};

  // Geometry: files when given, otherwise the built-in spherical model.
  std::optional<std::filesystem::path> lead_field_path;
  std::optional<std::filesystem::path> atlas_path;
  HeadModelConfig head_model;
  double inverse_snr = kDefaultInverseSnr;
  std::optional<double> inverse_alpha;

  bool run_decoder = true;
  bool run_mlr = false;
  double mlr_ridge = 1e-6;
  nn::DecoderConfig model;
  nn::TrainConfig train;
};

void validate(const ExperimentConfig& cfg);

struct CvResult {
  std::string participant_id;
  Domain domain = Domain::source;
  int window_ms = 0;
  std::string model;   // "cnn_lstm" or "mlr"
  AxisCv cv{};         // pooled over all test windows
  AxisCv trial_cv{};   // per test trial, then averaged
  std::size_t test_rows = 0;
  std::size_t epochs = 0;  // 0 for mLR
  std::size_t best_epoch = 0;
};

struct AggregateRow {
  Domain domain = Domain::source;
  int window_ms = 0;
  std::string model;
  AxisCv mean{};
  AxisCv std{};  // population std across participants
  std::array<std::size_t, 3> count{};  // participants contributing per axis (NaN excluded)
};

struct CellFailure {
  std::string participant_id;
  Domain domain = Domain::source;
  int window_ms = 0;
  std::string message;
};

struct ReportTable {
  std::vector<CvResult> rows;
  std::vector<AggregateRow> aggregates;
  std::vector<CellFailure> failures;
  std::vector<int> windows_ms;  // configured order, for plotting
};

// Geometry shared by every participant.
struct Geometry {
  LeadField lead_field;
  ScoutAtlas atlas;
  std::vector<std::string> channel_names;
};

Geometry load_geometry(const ExperimentConfig& cfg);

// Per-participant preprocessing output: kinematics min-max fit on training
// trials, and per-domain z-scored feature series (fit on training trials).
struct PreparedSession {
  std::string participant_id;
  TrialSplit split;
  std::optional<TrialSet> source;  // eeg field holds scout series
  std::optional<TrialSet> sensor;  // eeg field holds re-referenced channels
};

TrialSet load_session(const SessionSource& src, const Geometry& geo);
PreparedSession prepare_session(const TrialSet& raw, const ExperimentConfig& cfg, const Geometry& geo);

// Scout time series of a preprocessed session (EEG replaced by region means).
TrialSet to_source_domain(const TrialSet& prepped, const InverseOperator& op, const ScoutAtlas& atlas);

// Trains/fits the configured models for one (participant, domain, window).
std::vector<CvResult> run_cell(const PreparedSession& ps, Domain domain, int window_ms, const ExperimentConfig& cfg);

// Recomputes aggregate rows from result rows (mean/pop. std per axis, NaN skipped).
std::vector<AggregateRow> aggregate(const std::vector<CvResult>& rows);

ReportTable run_experiment(const ExperimentConfig& cfg);

}  // namespace handkin::eval
