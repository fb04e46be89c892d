// Acceptance runner: one PASS/FAIL line per criterion, nonzero exit if any gating one fails.
#include "gradcheck.hpp"
#include "oracles.hpp"

#include "handkin/config.hpp"
#include "handkin/eval/experiment.hpp"
#include "handkin/eval/metrics.hpp"
#include "handkin/fir.hpp"
#include "handkin/head_model.hpp"
#include "handkin/inverse.hpp"
#include "handkin/log.hpp"
#include "handkin/nn/decoder.hpp"
#include "handkin/nn/train.hpp"
#include "handkin/preprocess.hpp"
#include "handkin/windows.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <random>
#include <sstream>
#include <string>
#include <vector>

using namespace handkin;

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

struct Outcome {
  bool pass = false;
  std::string detail;
};

bool run_criterion(int id, const char* title, const std::function<Outcome()>& body) {
  const auto t0 = Clock::now();
  Outcome out;
  try {
    out = body();
  } catch (const std::exception& e) {
    out = {false, std::string("exception: ") + e.what()};
  }
  std::printf("%s criterion %d (%s): %s [%.1f s]\n", out.pass ? "PASS" : "FAIL", id, title, out.detail.c_str(),
              seconds_since(t0));
  std::fflush(stdout);
  return out.pass;
}

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

std::string cv_str(const eval::AxisCv& cv) {
  char buf[96];
  std::snprintf(buf, sizeof buf, "(%.3f, %.3f, %.3f)", cv[0], cv[1], cv[2]);
  return buf;
}

Outcome gradient_fidelity() {
  const auto t0 = Clock::now();
  const auto reports = testing::gradient_suite(2024, 5);
  double worst = 0.0;
  std::string worst_op;
  bool pass = true;
  for (const auto& r : reports) {
    if (r.max_rel_error > worst) {
      worst = r.max_rel_error;
      worst_op = r.op;
    }
    pass = pass && r.configs >= 5 && r.max_rel_error < 1e-4;
  }
  const double t = seconds_since(t0);
  pass = pass && reports.size() == 8 && t < 120.0;
  return {pass, std::to_string(reports.size()) + " ops x 5 configs, max rel error " + fmt("%.2e", worst) + " (" +
                    worst_op + "), limit 1e-4, " + fmt("%.1f", t) + " s (limit 120 s)"};
}

Outcome filter_contract() {
  const auto bp = design_fir(FilterKind::bandpass, kEegBand, 500.0, kEegBandpassTaps);
  const auto lp = design_lowpass(kKinematicsCutoffHz, 100.0, kinematics_lowpass_taps(100.0));
  const double bp20 = testing::dft_magnitude(bp.taps, 20.0, 500.0);
  const double bp60 = testing::dft_magnitude(bp.taps, 60.0, 500.0);
  const double lp05 = testing::dft_magnitude(lp.taps, 0.5, 100.0);
  const double lp10 = testing::dft_magnitude(lp.taps, 10.0, 100.0);
  double asym = 0.0;
  for (const auto* k : {&bp, &lp}) {
    const std::size_t n = 3 * k->size() + 500;
    std::vector<double> x(n, 0.0);
    x[n / 2] = 1.0;
    const auto y = filtfilt(x, *k);
    for (std::size_t i = 0; i < n; ++i) asym = std::max(asym, std::abs(y[i] - y[n - 1 - i]));
  }
  const bool pass = bp.size() == 1001 && lp.size() == 301 && bp20 >= 0.95 && bp60 <= 0.05 && lp05 >= 0.95 &&
                    lp10 <= 0.01 && asym < 1e-10;
  return {pass, "|H_bp(20)|=" + fmt("%.4f", bp20) + " |H_bp(60)|=" + fmt("%.2e", bp60) + " |H_lp(0.5)|=" +
                    fmt("%.4f", lp05) + " |H_lp(10)|=" + fmt("%.2e", lp10) + " impulse asymmetry " +
                    fmt("%.1e", asym)};
}

Outcome sloreta_localization() {
  const auto t0 = Clock::now();
  const auto hm = default_head_model();
  const auto op = sloreta_inverse_operator(hm.lead_field);
  std::mt19937_64 rng(31);
  std::uniform_int_distribution<Eigen::Index> pick(0, static_cast<Eigen::Index>(hm.lead_field.sources()) - 1);
  int hits = 0;
  for (int trial = 0; trial < 200; ++trial) {
    const Eigen::Index k = pick(rng);
    const Vector est = op.kernel * hm.lead_field.gain.col(k);
    Eigen::Index arg = 0;
    est.cwiseAbs().maxCoeff(&arg);
    hits += arg == k ? 1 : 0;
  }
  const auto id_op = sloreta_inverse_operator(Matrix::Identity(32, 32), std::nullopt, 0.0);
  const double id_err = (id_op.kernel - Matrix::Identity(32, 32)).cwiseAbs().maxCoeff();
  const double t = seconds_since(t0);
  const bool pass = hm.lead_field.sensors() == 32 && hm.lead_field.sources() == 500 && hits >= 190 &&
                    id_err < 1e-10 && t < 60.0;
  return {pass, std::to_string(hits) + "/200 exact (need >= 190), identity kernel error " + fmt("%.1e", id_err)};
}

Outcome windowing_exactness() {
  const WindowSpec spec{150, kPreMovementGapMs, 100.0};
  Matrix series(1, 400);
  for (Eigen::Index c = 0; c < 400; ++c) series(0, c) = static_cast<double>(c);
  const auto blk = build_windows(series, Matrix::Zero(3, 400), 200, 210, spec);
  bool cols_ok = blk.inputs.cols() == 15;
  for (Eigen::Index k = 0; k < 15 && cols_ok; ++k) cols_ok = blk.inputs(0, k) == static_cast<double>(180 + k);
  bool widths_ok = true;
  std::string widths;
  for (int w : kStandardWindowsMs) {
    const WindowSpec s{w, kPreMovementGapMs, 100.0};
    const std::size_t n = s.lags();
    for (Eigen::Index m : {62, 32}) {
      const auto b = build_windows(Matrix::Zero(m, 300), Matrix::Zero(3, 300), 100, 101, s);
      widths_ok = widths_ok && static_cast<std::size_t>(b.inputs.cols()) == static_cast<std::size_t>(m) * n;
    }
    widths += std::to_string(n) + " ";
    widths_ok = widths_ok && n == static_cast<std::size_t>(w / 10);
  }
  return {cols_ok && widths_ok, "first row columns 180..194, N = " + widths + "with widths 62N and 32N"};
}

Outcome end_to_end(std::size_t n_trials) {
  const auto t0 = Clock::now();
  eval::ExperimentConfig cfg;
  cfg.name = "acceptance";
  SynthConfig sc;
  sc.n_trials = n_trials;
  sc.snr_db = 10.0;
  sc.n_active_scouts = 2;
  sc.coupling_lag_ms = 100.0;
  cfg.sessions.push_back(eval::SessionSource{std::nullopt, SessionFormat::binary, sc});
  cfg.windows_ms = {300};
  cfg.domains = {Domain::source};
  cfg.run_mlr = true;
  cfg.run_decoder = true;
  cfg.train.max_epochs = 100;
  const auto rt = eval::run_experiment(cfg);
  if (!rt.failures.empty()) return {false, "cell failed: " + rt.failures.front().message};
  const eval::CvResult* mlr = nullptr;
  const eval::CvResult* net = nullptr;
  for (const auto& r : rt.rows) (r.model == "mlr" ? mlr : net) = &r;
  if (mlr == nullptr || net == nullptr) return {false, "missing result rows"};
  bool pass = true;
  double worst_gap = -1e9;
  for (std::size_t a = 0; a < 3; ++a) {
    pass = pass && mlr->cv[a] >= 0.8;
    worst_gap = std::max(worst_gap, mlr->cv[a] - net->cv[a]);
  }
  const double t = seconds_since(t0);
  pass = pass && worst_gap <= 0.1 && net->epochs <= 100 && t < 900.0;
  return {pass, std::to_string(n_trials) + " trials, mLR CV " + cv_str(mlr->cv) + " (need >= 0.8), CNN-LSTM CV " +
                    cv_str(net->cv) + " after " + std::to_string(net->epochs) +
                    " epochs, largest shortfall vs mLR " + fmt("%.3f", worst_gap) + " (limit 0.1), " +
                    fmt("%.0f", t) + " s (limit 900 s)"};
}

Outcome training_protocol() {
  std::mt19937_64 rng(5);
  std::normal_distribution<double> n;
  Matrix x(48, 2 * 9), y(48, 3);
  for (Eigen::Index k = 0; k < x.size(); ++k) x.data()[k] = n(rng);
  for (Eigen::Index k = 0; k < y.size(); ++k) y.data()[k] = 0.1 * n(rng);
  nn::DecoderConfig mc;
  mc.conv_filters = {3, 4, 4};
  mc.res_filters = {4, 4, 5};
  mc.res_blocks = 1;
  mc.lstm_hidden = 3;
  nn::TrainConfig tc;
  tc.batch_size = 16;
  tc.max_epochs = 40;

  const std::vector<double> forced{1.0, 0.8, 0.7, 0.75, 0.71, 0.72, 0.9, 0.7, 0.1};
  nn::DecoderModel model(2, 9, mc);
  nn::ParamSnapshot at_best;
  nn::TrainHooks hooks;
  hooks.override_val_loss = [&](std::size_t epoch, double) { return forced.at(epoch - 1); };
  hooks.on_epoch_end = [&](std::size_t epoch, double, double) {
    if (epoch == 3) at_best = model.snapshot();
  };
  const auto rep = nn::train(model, x, y, x, y, tc, hooks);
  const auto now = model.snapshot();
  bool restored = now.params.size() == at_best.params.size();
  for (std::size_t i = 0; restored && i < now.params.size(); ++i) restored = std::ranges::equal(now.params[i].values(), at_best.params[i].values());
  const bool stop_ok = rep.best_epoch == 3 && rep.stopped_epoch == 8 && rep.stopped_early;

  tc.max_epochs = 4;
  nn::DecoderModel a(2, 9, mc), b(2, 9, mc);
  const auto ra = nn::train(a, x, y, x, y, tc);
  const auto rb = nn::train(b, x, y, x, y, tc);
  const bool same = ra.same_trajectory(rb) && a.predict(x) == b.predict(x);
  return {stop_ok && restored && same, "best epoch " + std::to_string(rep.best_epoch) + ", stopped at " +
                                           std::to_string(rep.stopped_epoch) + " (patience 5), weights restored " +
                                           (restored ? "yes" : "no") + ", same-seed reports identical " +
                                           (same ? "yes" : "no")};
}

// Optional comparison against recorded sessions. Never gates the run.
void extended_reproduction() {
  const char* path = std::getenv("HANDKIN_EXTENDED_CONFIG");
  if (path == nullptr || *path == '\0') {
    std::printf("SKIP criterion 7 (recorded-data comparison, not gating): set HANDKIN_EXTENDED_CONFIG to an experiment config\n");
    return;
  }
  try {
    const auto cfg = load_experiment_config(path);
    const auto rt = eval::run_experiment(cfg);
    const eval::AggregateRow* src = nullptr;
    const eval::AggregateRow* sen = nullptr;
    for (const auto& a : rt.aggregates) {
      if (a.window_ms != 300 || a.model != "cnn_lstm") continue;
      (a.domain == Domain::source ? src : sen) = &a;
    }
    std::string detail;
    if (src != nullptr) detail += "source 300 ms mean " + cv_str(src->mean) + " vs reported (0.59, 0.61, 0.56); ";
    if (sen != nullptr) detail += "sensor 300 ms mean " + cv_str(sen->mean) + " vs reported (0.62, 0.65, 0.59); ";
    if (src != nullptr && sen != nullptr) {
      bool sensor_higher = true;
      for (std::size_t a = 0; a < 3; ++a) sensor_higher = sensor_higher && sen->mean[a] > src->mean[a];
      detail += std::string("sensor above source on every axis: ") + (sensor_higher ? "yes" : "no");
    }
    std::printf("INFO criterion 7 (recorded-data comparison, not gating): %s\n", detail.c_str());
  } catch (const std::exception& e) {
    std::printf("INFO criterion 7 (recorded-data comparison, not gating): run failed: %s\n", e.what());
  }
}

Outcome metric_correctness() {
  std::mt19937_64 rng(9);
  std::normal_distribution<double> n;
  std::uniform_real_distribution<double> scale(0.01, 100.0), shift(-50.0, 50.0);
  double worst = 0.0;
  for (int rep = 0; rep < 200; ++rep) {
    Matrix act(40, 3);
    for (Eigen::Index k = 0; k < act.size(); ++k) act.data()[k] = n(rng);
    Matrix aff(40, 3), neg = -act;
    for (Eigen::Index c = 0; c < 3; ++c) aff.col(c) = (scale(rng) * act.col(c).array() + shift(rng)).matrix();
    const auto p = eval::pearson_cv(act, aff);
    const auto q = eval::pearson_cv(act, neg);
    for (std::size_t a = 0; a < 3; ++a) worst = std::max({worst, std::abs(p[a] - 1.0), std::abs(q[a] + 1.0)});
  }
  std::size_t warnings = 0;
  const auto previous = log::set_sink([&](log::Level lvl, std::string_view) { warnings += lvl == log::Level::warn; });
  Matrix act(20, 3), flat(20, 3);
  for (Eigen::Index k = 0; k < act.size(); ++k) act.data()[k] = n(rng);
  flat = act;
  flat.col(1).setConstant(3.0);
  const auto c = eval::pearson_cv(act, flat);
  log::set_sink(previous);
  const bool nan_ok = std::isnan(c[1]) && !std::isnan(c[0]) && !std::isnan(c[2]) && warnings >= 1;
  return {worst < 1e-12 && nan_ok, "200 random affine/negation cases, max deviation " + fmt("%.1e", worst) +
                                       ", constant axis NaN with " + std::to_string(warnings) + " warning(s)"};
}

}  // namespace

int main() {
  log::set_level(log::Level::warn);
  std::size_t trials = 60;
  if (const char* t = std::getenv("HANDKIN_ACCEPT_TRIALS")) trials = static_cast<std::size_t>(std::stoul(t));

  bool ok = true;
  ok &= run_criterion(1, "gradient fidelity", gradient_fidelity);
  ok &= run_criterion(2, "filter contract", filter_contract);
  ok &= run_criterion(3, "sLORETA localization", sloreta_localization);
  ok &= run_criterion(4, "windowing exactness", windowing_exactness);
  ok &= run_criterion(5, "end-to-end synthetic decode", [&] { return end_to_end(trials); });
  ok &= run_criterion(6, "training protocol", training_protocol);
  extended_reproduction();
  ok &= run_criterion(8, "metric correctness", metric_correctness);
  return ok ? 0 : 1;
}
