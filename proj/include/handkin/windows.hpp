#pragma once

#include "handkin/common.hpp"
#include "handkin/trialset.hpp"

#include <array>
#include <cstdint>
#include <filesystem>
#include <span>
#include <vector>

namespace handkin {

constexpr std::array<int, 4> kStandardWindowsMs{150, 200, 250, 300};
constexpr int kPreMovementGapMs = 50;

// N = window_ms * fs / 1000 lag samples ending g = gap_ms * fs / 1000 samples
// before the prediction instant.
struct WindowSpec {
  int window_ms = 300;
  int gap_ms = kPreMovementGapMs;
  double fs = 100.0;

  std::size_t lags() const;  // N
  std::size_t gap() const;   // g
  void validate() const;
};

// Input rows are flattened scout-major: all N lags of series 0, then series 1, ...
struct FeatureLayout {
  std::size_t series = 0;  // M
  std::size_t lags = 0;    // N
  std::size_t width() const { return series * lags; }
};

struct WindowBlock {
  Matrix inputs;   // T x (M*N)
  Matrix targets;  // T x 3
};

// One row per prediction index p in [onset, end]: target kin[:, p], input
// series[:, p-g-N .. p-g-1]. Requires onset >= N + g and end < samples.
WindowBlock build_windows(const Matrix& series, const Matrix& kin, std::size_t onset, std::size_t end,
                          const WindowSpec& spec);

Matrix unflatten_row(std::span<const double> row, const FeatureLayout& layout);

enum class Partition : std::uint8_t { train = 0, val = 1, test = 2, unassigned = 255 };

struct WindowedDataset {
  Matrix inputs;
  Matrix targets;
  std::vector<std::size_t> trial_ids;
  FeatureLayout layout;
  std::vector<Partition> partition;  // per row; empty when not split
  Domain domain = Domain::source;
  int window_ms = 0;
  int gap_ms = kPreMovementGapMs;
  double fs = 0.0;

  std::size_t rows() const { return static_cast<std::size_t>(inputs.rows()); }
  WindowedDataset subset(Partition p) const;
};

// Concatenates per-trial windows in the given id order.
WindowedDataset assemble_dataset(const TrialSet& ts, const WindowSpec& spec, std::span<const std::size_t> ids,
                                 Domain domain = Domain::source);

struct SplitSpec {
  std::size_t n_train = 234;
  std::size_t n_val = 30;
  std::size_t n_test = 30;
  std::uint64_t seed = 0;
  bool proportional_fallback = false;
};

struct TrialSplit {
  std::vector<std::size_t> train;
  std::vector<std::size_t> val;
  std::vector<std::size_t> test;
};

// Uniform random without replacement; each id list returned sorted. With the
// fallback enabled and too few trials, val/test get floor(ratio * n) and train the rest.
TrialSplit split_trials(std::size_t n_trials, const SplitSpec& spec);
inline TrialSplit split_trials(const TrialSet& ts, const SplitSpec& spec) { return split_trials(ts.trials.size(), spec); }

// Assembles all split trials (train, then val, then test) with partition tags.
WindowedDataset assemble_split_dataset(const TrialSet& ts, const WindowSpec& spec, const TrialSplit& split,
                                       Domain domain);

void save_dataset(const WindowedDataset& ds, const std::filesystem::path& path);
WindowedDataset load_dataset(const std::filesystem::path& path);

}  // namespace handkin
