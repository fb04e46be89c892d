#include "handkin/trialset.hpp"

#include "handkin/binary_io.hpp"
#include "handkin/text_util.hpp"

#include <toml.hpp>

#include <cmath>
#include <fstream>
#include <sstream>

namespace handkin {
namespace {

constexpr std::string_view kMagic = "HKSESS";
constexpr std::uint8_t kVersion = 1;

std::string trial_tag(std::size_t i) { return "trial " + std::to_string(i) + ": "; }

void check_trial(const Trial& t, std::size_t channels, std::size_t i) {
  if (static_cast<std::size_t>(t.eeg.rows()) != channels) {
    throw Error(trial_tag(i) + "channel count " + std::to_string(t.eeg.rows()) +
                " does not match session channel count " + std::to_string(channels));
  }
  if (t.kinematics.rows() != 3) throw Error(trial_tag(i) + "kinematics must have 3 rows");
  if (t.kinematics.cols() != t.eeg.cols()) {
    throw Error(trial_tag(i) + "eeg has " + std::to_string(t.eeg.cols()) + " samples but kinematics has " +
                std::to_string(t.kinematics.cols()));
  }
  const std::size_t n = t.samples();
  if (!(t.onset_index < t.end_index && t.end_index < n)) {
    throw Error(trial_tag(i) + "onset_index " + std::to_string(t.onset_index) + " / end_index " +
                std::to_string(t.end_index) + " out of range for " + std::to_string(n) + " samples");
  }
}

}  // namespace

void validate(const TrialSet& ts) {
  if (!(ts.fs > 0.0) || !std::isfinite(ts.fs)) throw Error("session sampling rate must be positive");
  if (ts.channel_names.empty()) throw Error("session must have at least one channel");
  for (std::size_t i = 0; i < ts.trials.size(); ++i) check_trial(ts.trials[i], ts.channels(), i);
}

void save_trialset(const TrialSet& ts, const std::filesystem::path& path) {
  if (ts.trials.empty()) throw Error("refusing to write a session with no trials");
  validate(ts);
  for (std::size_t i = 0; i < ts.trials.size(); ++i) {
    const auto& t = ts.trials[i];
    if (!t.eeg.allFinite() || !t.kinematics.allFinite()) {
      throw Error(trial_tag(i) + "non-finite sample (NaN/Inf are not allowed on disk)");
    }
  }

  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), kMagic.size());
  bin::write<std::uint8_t>(os, kVersion);
  bin::write_string(os, ts.participant_id);
  bin::write<double>(os, ts.fs);
  bin::write<std::uint32_t>(os, static_cast<std::uint32_t>(ts.channels()));
  for (const auto& name : ts.channel_names) bin::write_string(os, name);
  bin::write<std::uint32_t>(os, static_cast<std::uint32_t>(ts.trials.size()));
  for (const auto& t : ts.trials) {
    bin::write<std::uint32_t>(os, static_cast<std::uint32_t>(t.eeg.rows()));
    bin::write<std::uint64_t>(os, t.samples());
    bin::write<std::uint64_t>(os, t.onset_index);
    bin::write<std::uint64_t>(os, t.end_index);
    bin::write_matrix(os, t.eeg);
    bin::write_matrix(os, t.kinematics);
  }
  if (!os) throw Error("write failed for " + path.string());
}

namespace {

TrialSet load_binary(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open " + path.string());
  bin::expect_magic(is, kMagic, "session");
  const auto version = bin::read<std::uint8_t>(is, "version");
  if (version != kVersion) throw Error("unsupported session version " + std::to_string(version));

  TrialSet ts;
  ts.participant_id = bin::read_string(is, "participant id");
  ts.fs = bin::read<double>(is, "fs");
  if (!(ts.fs > 0.0) || !std::isfinite(ts.fs)) throw Error("malformed header: fs must be positive");
  const auto n_channels = bin::read<std::uint32_t>(is, "channel count");
  if (n_channels == 0) throw Error("malformed header: zero channels");
  for (std::uint32_t c = 0; c < n_channels; ++c) ts.channel_names.push_back(bin::read_string(is, "channel name"));
  const auto n_trials = bin::read<std::uint32_t>(is, "trial count");
  for (std::uint32_t i = 0; i < n_trials; ++i) {
    const auto ch = bin::read<std::uint32_t>(is, "trial header");
    const auto samples = bin::read<std::uint64_t>(is, "trial header");
    Trial t;
    t.onset_index = bin::read<std::uint64_t>(is, "trial header");
    t.end_index = bin::read<std::uint64_t>(is, "trial header");
    if (ch != n_channels) {
      throw Error(trial_tag(i) + "channel count " + std::to_string(ch) + " does not match session channel count " +
                  std::to_string(n_channels));
    }
    if (samples == 0 || samples > (std::uint64_t{1} << 32)) throw Error(trial_tag(i) + "malformed sample count");
    if (!(t.onset_index < t.end_index && t.end_index < samples)) {
      throw Error(trial_tag(i) + "onset_index " + std::to_string(t.onset_index) + " / end_index " +
                  std::to_string(t.end_index) + " out of range for " + std::to_string(samples) + " samples");
    }
    const auto cols = static_cast<Eigen::Index>(samples);
    t.eeg = bin::read_matrix(is, ch, cols, "eeg payload of " + trial_tag(i));
    t.kinematics = bin::read_matrix(is, 3, cols, "kinematics payload of " + trial_tag(i));
    ts.trials.push_back(std::move(t));
  }
  validate(ts);
  return ts;
}

TrialSet load_csv_dir(const std::filesystem::path& dir) {
  const auto meta_path = dir / "meta.toml";
  toml::table meta;
  try {
    meta = toml::parse_file(meta_path.string());
  } catch (const toml::parse_error& e) {
    throw Error("malformed header " + meta_path.string() + ": " + std::string(e.description()));
  }
  TrialSet ts;
  ts.participant_id = meta["participant_id"].value_or(std::string{});
  ts.fs = meta["fs"].value_or(0.0);
  if (!(ts.fs > 0.0)) throw Error("malformed header: meta.toml needs a positive fs");
  const auto* trials = meta["trial"].as_array();
  if (trials == nullptr || trials->empty()) throw Error("malformed header: meta.toml lists no [[trial]] entries");

  for (std::size_t i = 0; i < trials->size(); ++i) {
    const auto* entry = (*trials)[i].as_table();
    if (entry == nullptr) throw Error(trial_tag(i) + "malformed [[trial]] entry");
    const auto file = (*entry)["file"].value<std::string>();
    const auto onset = (*entry)["onset_index"].value<std::int64_t>();
    const auto end = (*entry)["end_index"].value<std::int64_t>();
    if (!file || !onset || !end || *onset < 0 || *end < 0) {
      throw Error(trial_tag(i) + "[[trial]] needs file, onset_index and end_index");
    }
    const auto table = read_csv(dir / *file);
    if (table.header.size() < 4) throw Error(trial_tag(i) + "CSV needs at least one channel plus kin_x,kin_y,kin_z");
    const std::size_t ch = table.header.size() - 3;
    const std::vector<std::string> names(table.header.begin(), table.header.begin() + static_cast<std::ptrdiff_t>(ch));
    if (i == 0) {
      ts.channel_names = names;
    } else if (ch != ts.channels()) {
      throw Error(trial_tag(i) + "channel count " + std::to_string(ch) + " does not match session channel count " +
                  std::to_string(ts.channels()));
    }
    Trial t;
    const auto n = static_cast<Eigen::Index>(table.rows.size());
    t.eeg.resize(static_cast<Eigen::Index>(ch), n);
    t.kinematics.resize(3, n);
    for (Eigen::Index s = 0; s < n; ++s) {
      const auto& row = table.rows[static_cast<std::size_t>(s)];
      for (std::size_t c = 0; c < ch; ++c) t.eeg(static_cast<Eigen::Index>(c), s) = row[c];
      for (std::size_t a = 0; a < 3; ++a) t.kinematics(static_cast<Eigen::Index>(a), s) = row[ch + a];
    }
    t.onset_index = static_cast<std::size_t>(*onset);
    t.end_index = static_cast<std::size_t>(*end);
    if (!(t.onset_index < t.end_index && t.end_index < static_cast<std::size_t>(n))) {
      throw Error(trial_tag(i) + "onset_index " + std::to_string(t.onset_index) + " / end_index " +
                  std::to_string(t.end_index) + " out of range for " + std::to_string(n) + " samples");
    }
    ts.trials.push_back(std::move(t));
  }
  validate(ts);
  return ts;
}

}  // namespace

TrialSet load_trialset(const std::filesystem::path& path, SessionFormat format) {
  if (!std::filesystem::exists(path)) throw Error("no such session: " + path.string());
  return format == SessionFormat::binary ? load_binary(path) : load_csv_dir(path);
}

void save_trialset_csv(const TrialSet& ts, const std::filesystem::path& dir) {
  if (ts.trials.empty()) throw Error("refusing to write a session with no trials");
  validate(ts);
  std::filesystem::create_directories(dir);
  toml::array trial_entries;
  std::vector<std::string> header = ts.channel_names;
  header.insert(header.end(), {"kin_x", "kin_y", "kin_z"});
  for (std::size_t i = 0; i < ts.trials.size(); ++i) {
    const auto& t = ts.trials[i];
    char name[32];
    std::snprintf(name, sizeof name, "trial_%04zu.csv", i);
    CsvTable table;
    table.header = header;
    for (Eigen::Index s = 0; s < t.eeg.cols(); ++s) {
      std::vector<double> row(t.eeg.col(s).data(), t.eeg.col(s).data() + t.eeg.rows());
      for (int a = 0; a < 3; ++a) row.push_back(t.kinematics(a, s));
      table.rows.push_back(std::move(row));
    }
    write_csv(table, dir / name);
    trial_entries.push_back(toml::table{{"file", std::string(name)},
                                        {"onset_index", static_cast<std::int64_t>(t.onset_index)},
                                        {"end_index", static_cast<std::int64_t>(t.end_index)}});
  }
  toml::table meta{{"participant_id", ts.participant_id}, {"fs", ts.fs}, {"trial", trial_entries}};
  std::ofstream os(dir / "meta.toml");
  os << meta << '\n';
  if (!os) throw Error("write failed for " + (dir / "meta.toml").string());
}

}  // namespace handkin
