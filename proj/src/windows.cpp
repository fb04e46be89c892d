#include "handkin/windows.hpp"

#include "handkin/binary_io.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <numeric>
#include <random>

namespace handkin {
namespace {

std::size_t ms_to_samples(int ms, double fs, const char* what) {
  const double exact = static_cast<double>(ms) * fs / 1000.0;
  const double rounded = std::round(exact);
  if (std::abs(exact - rounded) > 1e-9) {
    throw Error(std::string("window spec: ") + what + " of " + std::to_string(ms) + " ms is not a whole number of samples at " +
                std::to_string(fs) + " Hz");
  }
  return static_cast<std::size_t>(rounded);
}

}  // namespace

std::size_t WindowSpec::lags() const { return ms_to_samples(window_ms, fs, "window"); }
std::size_t WindowSpec::gap() const { return ms_to_samples(gap_ms, fs, "gap"); }

void WindowSpec::validate() const {
  if (!(fs > 0.0)) throw Error("window spec: fs must be positive");
  if (window_ms <= 0 || gap_ms < 0) throw Error("window spec: window must be positive and gap non-negative");
  if (lags() < 1) throw Error("window spec: window shorter than one sample");
  (void)gap();
}

WindowBlock build_windows(const Matrix& series, const Matrix& kin, std::size_t onset, std::size_t end,
                          const WindowSpec& spec) {
  spec.validate();
  const std::size_t N = spec.lags();
  const std::size_t g = spec.gap();
  const auto samples = static_cast<std::size_t>(series.cols());
  if (kin.rows() != 3 || static_cast<std::size_t>(kin.cols()) != samples) {
    throw Error("build_windows: kinematics must be 3 x samples matching the series");
  }
  if (onset < N + g) {
    throw Error("build_windows: onset " + std::to_string(onset) + " too early for a " + std::to_string(spec.window_ms) +
                " ms window plus " + std::to_string(spec.gap_ms) + " ms gap (need onset >= " + std::to_string(N + g) + ")");
  }
  if (end < onset || end >= samples) throw Error("build_windows: end index out of range");

  const auto M = static_cast<std::size_t>(series.rows());
  const std::size_t T = end - onset + 1;
  WindowBlock out;
  out.inputs.resize(static_cast<Eigen::Index>(T), static_cast<Eigen::Index>(M * N));
  out.targets.resize(static_cast<Eigen::Index>(T), 3);
  for (std::size_t row = 0; row < T; ++row) {
    const std::size_t p = onset + row;
    const std::size_t first = p - g - N;
    const auto r = static_cast<Eigen::Index>(row);
    for (std::size_t m = 0; m < M; ++m) {
      out.inputs.row(r).segment(static_cast<Eigen::Index>(m * N), static_cast<Eigen::Index>(N)) =
          series.row(static_cast<Eigen::Index>(m)).segment(static_cast<Eigen::Index>(first), static_cast<Eigen::Index>(N));
    }
    out.targets.row(r) = kin.col(static_cast<Eigen::Index>(p)).transpose();
  }
  return out;
}

Matrix unflatten_row(std::span<const double> row, const FeatureLayout& layout) {
  if (row.size() != layout.width()) throw Error("unflatten_row: row width does not match layout");
  Matrix block(static_cast<Eigen::Index>(layout.series), static_cast<Eigen::Index>(layout.lags));
  for (std::size_t m = 0; m < layout.series; ++m) {
    for (std::size_t n = 0; n < layout.lags; ++n) {
      block(static_cast<Eigen::Index>(m), static_cast<Eigen::Index>(n)) = row[m * layout.lags + n];
    }
  }
  return block;
}

WindowedDataset WindowedDataset::subset(Partition p) const {
  if (partition.size() != rows()) throw Error("dataset has no partition tags");
  std::vector<Eigen::Index> keep;
  for (std::size_t i = 0; i < rows(); ++i) {
    if (partition[i] == p) keep.push_back(static_cast<Eigen::Index>(i));
  }
  WindowedDataset out;
  out.layout = layout;
  out.domain = domain;
  out.window_ms = window_ms;
  out.gap_ms = gap_ms;
  out.fs = fs;
  out.inputs = inputs(keep, Eigen::all);
  out.targets = targets(keep, Eigen::all);
  for (auto i : keep) {
    out.trial_ids.push_back(trial_ids[static_cast<std::size_t>(i)]);
    out.partition.push_back(p);
  }
  return out;
}

WindowedDataset assemble_dataset(const TrialSet& ts, const WindowSpec& spec, std::span<const std::size_t> ids,
                                 Domain domain) {
  if (ts.fs != spec.fs) throw Error("assemble_dataset: session fs does not match the window spec");
  WindowedDataset ds;
  ds.layout = FeatureLayout{ts.channels(), spec.lags()};
  ds.domain = domain;
  ds.window_ms = spec.window_ms;
  ds.gap_ms = spec.gap_ms;
  ds.fs = spec.fs;

  std::vector<WindowBlock> blocks;
  Eigen::Index total = 0;
  for (auto id : ids) {
    if (id >= ts.trials.size()) throw Error("assemble_dataset: trial id " + std::to_string(id) + " out of range");
    const auto& t = ts.trials[id];
    try {
      blocks.push_back(build_windows(t.eeg, t.kinematics, t.onset_index, t.end_index, spec));
    } catch (const Error& e) {
      throw Error("trial " + std::to_string(id) + ": " + e.what());
    }
    total += blocks.back().inputs.rows();
  }
  ds.inputs.resize(total, static_cast<Eigen::Index>(ds.layout.width()));
  ds.targets.resize(total, 3);
  Eigen::Index at = 0;
  for (std::size_t b = 0; b < blocks.size(); ++b) {
    const auto n = blocks[b].inputs.rows();
    ds.inputs.middleRows(at, n) = blocks[b].inputs;
    ds.targets.middleRows(at, n) = blocks[b].targets;
    ds.trial_ids.insert(ds.trial_ids.end(), static_cast<std::size_t>(n), ids[b]);
    at += n;
  }
  return ds;
}

TrialSplit split_trials(std::size_t n_trials, const SplitSpec& spec) {
  const std::size_t requested = spec.n_train + spec.n_val + spec.n_test;
  if (requested == 0) throw Error("split_trials: empty split requested");
  std::size_t n_train = spec.n_train;
  std::size_t n_val = spec.n_val;
  std::size_t n_test = spec.n_test;
  if (requested > n_trials) {
    if (!spec.proportional_fallback) {
      throw Error("split_trials: " + std::to_string(requested) + " trials requested but only " +
                  std::to_string(n_trials) + " available");
    }
    n_val = spec.n_val * n_trials / requested;
    n_test = spec.n_test * n_trials / requested;
    n_train = n_trials - n_val - n_test;
  }
  std::vector<std::size_t> ids(n_trials);
  std::iota(ids.begin(), ids.end(), std::size_t{0});
  std::mt19937_64 rng(spec.seed);
  for (std::size_t i = n_trials; i > 1; --i) {
    std::uniform_int_distribution<std::size_t> pick(0, i - 1);
    std::swap(ids[i - 1], ids[pick(rng)]);
  }
  TrialSplit s;
  auto take = [&](std::size_t from, std::size_t count) {
    std::vector<std::size_t> v(ids.begin() + static_cast<std::ptrdiff_t>(from),
                               ids.begin() + static_cast<std::ptrdiff_t>(from + count));
    std::sort(v.begin(), v.end());
    return v;
  };
  s.train = take(0, n_train);
  s.val = take(n_train, n_val);
  s.test = take(n_train + n_val, n_test);
  return s;
}

WindowedDataset assemble_split_dataset(const TrialSet& ts, const WindowSpec& spec, const TrialSplit& split,
                                       Domain domain) {
  std::vector<std::size_t> ids;
  std::vector<Partition> tags;
  auto add = [&](const std::vector<std::size_t>& v, Partition p) {
    ids.insert(ids.end(), v.begin(), v.end());
    tags.insert(tags.end(), v.size(), p);
  };
  add(split.train, Partition::train);
  add(split.val, Partition::val);
  add(split.test, Partition::test);
  WindowedDataset ds = assemble_dataset(ts, spec, ids, domain);
  // Rows per trial are contiguous and in id order.
  std::size_t trial_pos = 0;
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    while (ds.trial_ids[r] != ids[trial_pos]) ++trial_pos;
    ds.partition.push_back(tags[trial_pos]);
  }
  return ds;
}

namespace {
constexpr std::string_view kMagic = "HKDSET";
constexpr std::uint8_t kVersion = 1;
}  // namespace

void save_dataset(const WindowedDataset& ds, const std::filesystem::path& path) {
  if (static_cast<std::size_t>(ds.inputs.cols()) != ds.layout.width() || ds.targets.rows() != ds.inputs.rows() ||
      ds.targets.cols() != 3 || ds.trial_ids.size() != ds.rows()) {
    throw Error("save_dataset: inconsistent dataset");
  }
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  bin::write<std::uint8_t>(os, kVersion);
  bin::write<std::uint8_t>(os, ds.domain == Domain::source ? 0 : 1);
  bin::write<std::int32_t>(os, ds.window_ms);
  bin::write<std::int32_t>(os, ds.gap_ms);
  bin::write<double>(os, ds.fs);
  bin::write<std::uint32_t>(os, static_cast<std::uint32_t>(ds.layout.series));
  bin::write<std::uint32_t>(os, static_cast<std::uint32_t>(ds.layout.lags));
  bin::write<std::uint64_t>(os, ds.rows());
  bin::write<std::uint8_t>(os, ds.partition.empty() ? 0 : 1);
  bin::write_matrix(os, ds.inputs);
  bin::write_matrix(os, ds.targets);
  for (auto id : ds.trial_ids) bin::write<std::uint32_t>(os, static_cast<std::uint32_t>(id));
  for (auto p : ds.partition) bin::write<std::uint8_t>(os, static_cast<std::uint8_t>(p));
  if (!os) throw Error("write failed for " + path.string());
}

WindowedDataset load_dataset(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  bin::expect_magic(is, kMagic, "dataset");
  if (bin::read<std::uint8_t>(is, "version") != kVersion) throw Error("unsupported dataset version");
  WindowedDataset ds;
  ds.domain = bin::read<std::uint8_t>(is, "domain") == 0 ? Domain::source : Domain::sensor;
  ds.window_ms = bin::read<std::int32_t>(is, "window");
  ds.gap_ms = bin::read<std::int32_t>(is, "gap");
  ds.fs = bin::read<double>(is, "fs");
  ds.layout.series = bin::read<std::uint32_t>(is, "layout");
  ds.layout.lags = bin::read<std::uint32_t>(is, "layout");
  const auto rows = bin::read<std::uint64_t>(is, "row count");
  const bool has_partition = bin::read<std::uint8_t>(is, "partition flag") != 0;
  if (ds.layout.width() == 0 || rows > (std::uint64_t{1} << 32)) throw Error("malformed dataset header");
  ds.inputs = bin::read_matrix(is, static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(ds.layout.width()), "inputs");
  ds.targets = bin::read_matrix(is, static_cast<Eigen::Index>(rows), 3, "targets");
  ds.trial_ids.resize(rows);
  for (auto& id : ds.trial_ids) id = bin::read<std::uint32_t>(is, "trial ids");
  if (has_partition) {
    ds.partition.resize(rows);
    for (auto& p : ds.partition) p = static_cast<Partition>(bin::read<std::uint8_t>(is, "partition"));
  }
  return ds;
}

}  // namespace handkin
