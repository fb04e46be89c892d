#include "handkin/windows.hpp"

#include <doctest.h>

#include <filesystem>
#include <numeric>
#include <set>

using namespace handkin;

namespace {

// Series value = column index + 1000 * row, so every input entry names its source sample.
Matrix index_series(Eigen::Index rows, Eigen::Index cols) {
  Matrix s(rows, cols);
  for (Eigen::Index r = 0; r < rows; ++r) {
    for (Eigen::Index c = 0; c < cols; ++c) s(r, c) = static_cast<double>(c + 1000 * r);
  }
  return s;
}

Matrix index_kin(Eigen::Index cols) {
  Matrix k(3, cols);
  for (Eigen::Index c = 0; c < cols; ++c) k.col(c) << static_cast<double>(c), -static_cast<double>(c), 0.5;
  return k;
}

TrialSet toy_session(std::size_t n_trials, std::size_t channels, std::size_t samples, std::size_t onset,
                     std::size_t end) {
  TrialSet ts;
  ts.participant_id = "T";
  ts.fs = 100.0;
  for (std::size_t c = 0; c < channels; ++c) ts.channel_names.push_back("c" + std::to_string(c));
  for (std::size_t i = 0; i < n_trials; ++i) {
    Trial t;
    t.eeg = index_series(static_cast<Eigen::Index>(channels), static_cast<Eigen::Index>(samples)).array() +
            1e6 * static_cast<double>(i);
    t.kinematics = index_kin(static_cast<Eigen::Index>(samples));
    t.onset_index = onset;
    t.end_index = end;
    ts.trials.push_back(std::move(t));
  }
  return ts;
}

}  // namespace

TEST_CASE("first window at onset 200 covers columns 180..194 for 150 ms / 50 ms at 100 Hz") {
  const WindowSpec spec{150, 50, 100.0};
  CHECK(spec.lags() == 15);
  CHECK(spec.gap() == 5);
  const auto blk = build_windows(index_series(2, 400), index_kin(400), 200, 250, spec);
  REQUIRE(blk.inputs.rows() == 51);
  for (Eigen::Index k = 0; k < 15; ++k) {
    CHECK(blk.inputs(0, k) == 180.0 + static_cast<double>(k));
    CHECK(blk.inputs(0, 15 + k) == 1180.0 + static_cast<double>(k));
  }
  CHECK(blk.targets(0, 0) == 200.0);
  CHECK(blk.targets(50, 0) == 250.0);
  CHECK(blk.inputs(50, 14) == 244.0);
}

TEST_CASE("feature widths for every window in the source and sensor domains") {
  const std::vector<std::size_t> expected_n{15, 20, 25, 30};
  for (std::size_t i = 0; i < kStandardWindowsMs.size(); ++i) {
    const WindowSpec spec{kStandardWindowsMs[i], kPreMovementGapMs, 100.0};
    CHECK(spec.lags() == expected_n[i]);
    for (std::size_t M : {62u, 32u}) {
      const auto blk = build_windows(index_series(static_cast<Eigen::Index>(M), 300), index_kin(300), 100, 120, spec);
      CHECK(static_cast<std::size_t>(blk.inputs.cols()) == M * expected_n[i]);
    }
  }
}

TEST_CASE("window errors name the required onset") {
  const WindowSpec spec{300, 50, 100.0};
  try {
    build_windows(index_series(2, 200), index_kin(200), 34, 50, spec);
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).find("onset >= 35") != std::string::npos);
  }
  CHECK_NOTHROW(build_windows(index_series(2, 200), index_kin(200), 35, 50, spec));
  CHECK_THROWS_AS(build_windows(index_series(2, 200), index_kin(200), 100, 200, spec), Error);
  CHECK_THROWS_AS((WindowSpec{155, 50, 100.0}.validate()), Error);
  CHECK_THROWS_AS((WindowSpec{0, 50, 100.0}.validate()), Error);
}

TEST_CASE("unflatten_row inverts the scout-major layout") {
  const WindowSpec spec{200, 50, 100.0};
  const auto blk = build_windows(index_series(3, 200), index_kin(200), 60, 60, spec);
  const Matrix block = unflatten_row(std::span<const double>(blk.inputs.data(), 60), FeatureLayout{3, 20});
  for (Eigen::Index m = 0; m < 3; ++m) {
    for (Eigen::Index n = 0; n < 20; ++n) CHECK(block(m, n) == static_cast<double>(35 + n + 1000 * m));
  }
}

TEST_CASE("split_trials is a seeded partition with the requested sizes") {
  const auto s = split_trials(294, SplitSpec{234, 30, 30, 7});
  CHECK(s.train.size() == 234);
  CHECK(s.val.size() == 30);
  CHECK(s.test.size() == 30);
  std::set<std::size_t> all(s.train.begin(), s.train.end());
  all.insert(s.val.begin(), s.val.end());
  all.insert(s.test.begin(), s.test.end());
  CHECK(all.size() == 294);
  CHECK(std::is_sorted(s.test.begin(), s.test.end()));
  const auto again = split_trials(294, SplitSpec{234, 30, 30, 7});
  CHECK(again.test == s.test);
  const auto other = split_trials(294, SplitSpec{234, 30, 30, 8});
  CHECK(other.test != s.test);

  CHECK_THROWS_AS(split_trials(60, SplitSpec{}), Error);
  SplitSpec prop;
  prop.proportional_fallback = true;
  const auto p = split_trials(60, prop);
  CHECK(p.val.size() == 6);
  CHECK(p.test.size() == 6);
  CHECK(p.train.size() == 48);
}

TEST_CASE("assembled datasets keep trial order, tags and round-trip through a file") {
  const auto ts = toy_session(10, 2, 300, 100, 130);
  const WindowSpec spec{250, 50, 100.0};
  const TrialSplit split{{0, 3, 4, 5, 6, 8}, {1, 9}, {2, 7}};
  const auto ds = assemble_split_dataset(ts, spec, split, Domain::sensor);
  CHECK(ds.rows() == 10 * 31);
  CHECK(ds.layout.width() == 50);
  CHECK(ds.trial_ids.front() == 0);
  CHECK(ds.trial_ids.back() == 7);
  const auto test = ds.subset(Partition::test);
  CHECK(test.rows() == 62);
  CHECK(test.trial_ids.front() == 2);
  // Trial 2's series is offset by 2e6, so its first input is 2e6 + (100 - 5 - 25).
  CHECK(test.inputs(0, 0) == 2e6 + 70.0);

  const auto path = std::filesystem::temp_directory_path() / "handkin_dataset.bin";
  save_dataset(ds, path);
  const auto back = load_dataset(path);
  CHECK(back.inputs == ds.inputs);
  CHECK(back.targets == ds.targets);
  CHECK(back.trial_ids == ds.trial_ids);
  CHECK(back.partition == ds.partition);
  CHECK(back.domain == Domain::sensor);
  CHECK(back.window_ms == 250);
  std::filesystem::remove(path);

  auto broken = ts;
  broken.trials[4].onset_index = 10;
  try {
    assemble_dataset(broken, spec, std::vector<std::size_t>{3, 4});
    FAIL("expected error");
  } catch (const Error& e) {
    CHECK(std::string(e.what()).rfind("trial 4:", 0) == 0);
  }
}
