#include "handkin/config.hpp"
#include "handkin/eval/experiment.hpp"
#include "handkin/eval/metrics.hpp"
#include "handkin/eval/report.hpp"
#include "handkin/head_model.hpp"
#include "handkin/log.hpp"
#include "handkin/nn/decoder.hpp"
#include "handkin/nn/train.hpp"
#include "handkin/text_util.hpp"

#include <CLI11.hpp>
#include <json.hpp>

#include <fstream>
#include <iostream>

using namespace handkin;

namespace {

std::vector<Matrix> trial_series(const TrialSet& ts, const std::vector<std::size_t>& ids) {
  std::vector<Matrix> out;
  for (auto id : ids) out.push_back(ts.trials[id].eeg);
  return out;
}

void cmd_geometry(const std::string& lf_out, const std::string& atlas_out, const HeadModelConfig& cfg) {
  const auto hm = default_head_model(cfg);
  save_lead_field(hm.lead_field, lf_out);
  save_atlas(hm.atlas, atlas_out);
  log::info("wrote " + std::to_string(hm.lead_field.sensors()) + " x " + std::to_string(hm.lead_field.sources()) +
            " lead field and " + std::to_string(hm.atlas.size()) + "-region atlas");
}

void cmd_synth(const std::string& config, const std::string& lf_path, const std::string& atlas_path,
               const std::string& out) {
  const auto cfg = load_synth_config(config);
  const auto lf = load_lead_field(lf_path);
  const auto atlas = load_atlas(atlas_path);
  const auto [ts, truth] = generate_synthetic_session(cfg, lf, atlas);
  save_trialset(ts, out);
  std::string active;
  for (auto s : truth.active_scouts) active += (active.empty() ? "" : ", ") + atlas.labels[s];
  log::info("wrote " + std::to_string(ts.trials.size()) + " trials; active scouts: " + active);
}

void cmd_preprocess(const std::string& in, const std::string& out, double fs_out, bool csv_in, bool normalize) {
  const auto ts = load_trialset(in, csv_in ? SessionFormat::csv_dir : SessionFormat::binary);
  PrepConfig cfg;
  cfg.fs_out = fs_out;
  cfg.normalize_kinematics = normalize;
  save_trialset(preprocess_session(ts, cfg), out);
}

void cmd_inverse(const std::string& session, const std::string& lf_path, const std::string& atlas_path,
                 const std::string& alpha, double snr, bool reref, const std::string& out) {
  const auto ts = load_trialset(session);
  const auto lf = load_lead_field(lf_path);
  validate(lf);
  const auto atlas = load_atlas(atlas_path);
  validate(atlas, lf.sources());
  if (ts.channels() != lf.sensors()) {
    throw Error("session has " + std::to_string(ts.channels()) + " channels, lead field has " +
                std::to_string(lf.sensors()) + " sensors");
  }
  std::optional<double> a;
  if (alpha != "auto") a = parse_double(alpha);
  const Matrix gain = reref ? average_reference_gain(lf.gain) : lf.gain;
  const auto op = sloreta_inverse_operator(gain, std::nullopt, a, snr);
  log::info("sLORETA regularization alpha = " + format_double(op.regularization));
  save_trialset(eval::to_source_domain(ts, op, atlas), out);
}

void cmd_windows(const std::string& session, int window_ms, int gap_ms, const std::string& domain, std::uint64_t seed,
                 const SplitSpec& base_split, bool zscore, const std::string& out) {
  TrialSet ts = load_trialset(session);
  SplitSpec split = base_split;
  split.seed = seed;
  const auto sp = split_trials(ts, split);
  if (zscore) {
    const auto stats = fit_zscore(trial_series(ts, sp.train), "training trials");
    for (auto& t : ts.trials) t.eeg = apply_zscore(t.eeg, stats);
  }
  const auto ds = assemble_split_dataset(ts, WindowSpec{window_ms, gap_ms, ts.fs}, sp, parse_domain(domain));
  save_dataset(ds, out);
  log::info("wrote " + std::to_string(ds.rows()) + " rows of width " + std::to_string(ds.layout.width()) + " (" +
            std::to_string(sp.train.size()) + "/" + std::to_string(sp.val.size()) + "/" +
            std::to_string(sp.test.size()) + " trials)");
}

void cmd_train(const std::string& dataset, const std::string& config, const std::string& out,
               const std::string& report_path) {
  const auto ds = load_dataset(dataset);
  const auto cfg = load_model_train_config(config);
  const auto train_ds = ds.subset(Partition::train);
  const auto val_ds = ds.subset(Partition::val);
  nn::DecoderModel model(ds.layout.series, ds.layout.lags, cfg.model);
  log::info("decoder: " + std::to_string(model.parameter_count()) + " parameters");
  nn::TrainHooks hooks;
  hooks.on_epoch_end = [](std::size_t epoch, double tr, double va) {
    log::info("epoch " + std::to_string(epoch) + ": train " + format_double(tr) + ", val " + format_double(va));
  };
  const auto rep = nn::train(model, train_ds.inputs, train_ds.targets, val_ds.inputs, val_ds.targets, cfg.train, hooks);
  save_model(model, out);
  log::info("stopped at epoch " + std::to_string(rep.stopped_epoch) + ", best epoch " + std::to_string(rep.best_epoch));
  if (!report_path.empty()) {
    nlohmann::json j{{"train_loss", rep.train_loss}, {"val_loss", rep.val_loss},
                     {"stopped_epoch", rep.stopped_epoch}, {"best_epoch", rep.best_epoch},
                     {"stopped_early", rep.stopped_early}, {"wall_time_s", rep.wall_time_s}};
    std::ofstream os(report_path);
    if (!os) throw Error("cannot open " + report_path + " for writing");
    os << j.dump(2) << '\n';
  }
}

void cmd_predict(const std::string& model_path, const std::string& dataset, const std::string& partition,
                 const std::string& out) {
  auto model = nn::load_model(model_path);
  auto ds = load_dataset(dataset);
  if (partition == "test") {
    ds = ds.subset(Partition::test);
  } else if (partition != "all") {
    throw Error("--partition must be 'test' or 'all'");
  }
  const Matrix pred = model->predict(ds.inputs);
  CsvTable t;
  t.header = {"trial_id", "pred_x", "pred_y", "pred_z", "actual_x", "actual_y", "actual_z"};
  for (std::size_t r = 0; r < ds.rows(); ++r) {
    const auto i = static_cast<Eigen::Index>(r);
    t.rows.push_back({static_cast<double>(ds.trial_ids[r]), pred(i, 0), pred(i, 1), pred(i, 2), ds.targets(i, 0),
                      ds.targets(i, 1), ds.targets(i, 2)});
  }
  write_csv(t, out);
  if (ds.rows() >= 2) {
    const auto cv = eval::pearson_cv(ds.targets, pred);
    std::cout << "CV x=" << format_double(cv[0]) << " y=" << format_double(cv[1]) << " z=" << format_double(cv[2])
              << '\n';
  }
}

void cmd_report(const std::string& config, const std::string& out) {
  const auto cfg = load_experiment_config(config);
  const auto rt = eval::run_experiment(cfg);
  if (rt.rows.empty()) throw Error("every experiment cell failed; see warnings above");
  const auto files = eval::emit_report(rt, out);
  std::cout << eval::text_table(rt);
  log::info("wrote " + files.results_csv.string() + ", " + files.table_txt.string() + ", " + files.chart_svg.string());
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Hand-kinematics decoding from EEG: synthetic sessions, preprocessing, source imaging, "
               "windowing, CNN-LSTM training and evaluation"};
  app.require_subcommand(1);
  std::string level = "info";
  app.add_option("--log-level", level, "debug, info, warn or quiet")
      ->check(CLI::IsMember({"debug", "info", "warn", "quiet"}));

  HeadModelConfig hm;
  std::string lf_out, atlas_out;
  auto* geo = app.add_subcommand("geometry", "Write the built-in spherical lead field and atlas");
  geo->add_option("--out-leadfield", lf_out)->required();
  geo->add_option("--out-atlas", atlas_out)->required();
  geo->add_option("--sensors", hm.n_sensors);
  geo->add_option("--sources", hm.n_sources);
  geo->add_option("--regions", hm.n_regions);
  geo->add_option("--seed", hm.seed);

  std::string config, leadfield, atlas, out, in, session, dataset, model;
  auto* synth = app.add_subcommand("synth", "Generate a synthetic grasp-and-lift session");
  synth->add_option("--config", config)->required()->check(CLI::ExistingFile);
  synth->add_option("--leadfield", leadfield)->required()->check(CLI::ExistingFile);
  synth->add_option("--atlas", atlas)->required()->check(CLI::ExistingFile);
  synth->add_option("--out", out)->required();

  double fs_out = 100.0;
  bool csv_in = false, no_norm = false;
  auto* prep = app.add_subcommand("preprocess", "Bandpass, re-reference and downsample a session");
  prep->add_option("--in", in)->required();
  prep->add_option("--out", out)->required();
  prep->add_option("--fs-out", fs_out);
  prep->add_flag("--csv", csv_in, "Input is a CSV session directory");
  prep->add_flag("--no-normalize-kinematics", no_norm);

  std::string alpha = "auto";
  double snr = kDefaultInverseSnr;
  bool no_reref = false;
  auto* inv = app.add_subcommand("inverse", "sLORETA source estimation and scout averaging");
  inv->add_option("--session", session)->required();
  inv->add_option("--leadfield", leadfield)->required();
  inv->add_option("--atlas", atlas)->required();
  inv->add_option("--alpha", alpha, "'auto' or a numeric regularization");
  inv->add_option("--snr", snr, "SNR used by the automatic alpha");
  inv->add_flag("--no-average-reference", no_reref, "Use the lead field without average referencing");
  inv->add_option("--out", out)->required();

  int window_ms = 300, gap_ms = kPreMovementGapMs;
  std::string domain = "source";
  std::uint64_t split_seed = 0;
  SplitSpec split;
  bool proportional = false, no_zscore = false;
  auto* win = app.add_subcommand("windows", "Build a split, windowed dataset");
  win->add_option("--session", session)->required();
  win->add_option("--window-ms", window_ms);
  win->add_option("--gap-ms", gap_ms);
  win->add_option("--domain", domain)->check(CLI::IsMember({"source", "sensor"}));
  win->add_option("--split", split_seed, "Split seed");
  win->add_option("--n-train", split.n_train);
  win->add_option("--n-val", split.n_val);
  win->add_option("--n-test", split.n_test);
  win->add_flag("--proportional", proportional, "Scale the split down when the session is smaller");
  win->add_flag("--no-zscore", no_zscore, "Skip z-scoring the series on the training trials");
  win->add_option("--out", out)->required();

  std::string report_json;
  auto* tr = app.add_subcommand("train", "Train the CNN-LSTM decoder");
  tr->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
  tr->add_option("--config", config)->required()->check(CLI::ExistingFile);
  tr->add_option("--out", out)->required();
  tr->add_option("--report", report_json, "Write the training report as JSON");

  std::string partition = "test";
  auto* pr = app.add_subcommand("predict", "Predict kinematics for a dataset");
  pr->add_option("--model", model)->required()->check(CLI::ExistingFile);
  pr->add_option("--dataset", dataset)->required()->check(CLI::ExistingFile);
  pr->add_option("--partition", partition, "'test' or 'all'");
  pr->add_option("--out", out)->required();

  auto* rep = app.add_subcommand("report", "Run an experiment and write CSV/TXT/SVG reports");
  rep->add_option("--config", config)->required()->check(CLI::ExistingFile);
  rep->add_option("--out", out)->required();

  CLI11_PARSE(app, argc, argv);
  log::set_level(level == "debug" ? log::Level::debug
                 : level == "warn" ? log::Level::warn
                 : level == "quiet" ? log::Level::quiet
                                    : log::Level::info);
  split.proportional_fallback = proportional;
  try {
    if (*geo) cmd_geometry(lf_out, atlas_out, hm);
    if (*synth) cmd_synth(config, leadfield, atlas, out);
    if (*prep) cmd_preprocess(in, out, fs_out, csv_in, !no_norm);
    if (*inv) cmd_inverse(session, leadfield, atlas, alpha, snr, !no_reref, out);
    if (*win) cmd_windows(session, window_ms, gap_ms, domain, split_seed, split, !no_zscore, out);
    if (*tr) cmd_train(dataset, config, out, report_json);
    if (*pr) cmd_predict(model, dataset, partition, out);
    if (*rep) cmd_report(config, out);
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
