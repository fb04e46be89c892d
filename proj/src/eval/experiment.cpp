#include "handkin/eval/experiment.hpp"

#include "handkin/log.hpp"
#include "handkin/nn/mlr.hpp"

#include <cmath>
#include <map>
#include <tuple>

namespace handkin::eval {
namespace {

std::vector<Matrix> gather(const TrialSet& ts, const std::vector<std::size_t>& ids, bool kinematics) {
  std::vector<Matrix> out;
  out.reserve(ids.size());
  for (auto id : ids) out.push_back(kinematics ? ts.trials[id].kinematics : ts.trials[id].eeg);
  return out;
}

void zscore_on_train(TrialSet& ts, const std::vector<std::size_t>& train_ids, const std::string& what) {
  const auto parts = gather(ts, train_ids, false);
  const auto stats = fit_zscore(parts, what + " training trials");
  for (auto& t : ts.trials) t.eeg = apply_zscore(t.eeg, stats);
}

std::string coordinate(const std::string& pid, Domain d, int window_ms) {
  return "(" + pid + ", " + to_string(d) + ", " + std::to_string(window_ms) + " ms)";
}

}  // namespace

void validate(const ExperimentConfig& cfg) {
  if (cfg.windows_ms.empty()) throw Error("experiment: no window sizes configured");
  if (cfg.domains.empty()) throw Error("experiment: no domains configured");
  if (!cfg.run_decoder && !cfg.run_mlr) throw Error("experiment: neither the decoder nor the mLR baseline is enabled");
  for (int w : cfg.windows_ms) WindowSpec{w, cfg.gap_ms, cfg.fs}.validate();
  nn::validate(cfg.model);
  nn::validate(cfg.train);
}

Geometry load_geometry(const ExperimentConfig& cfg) {
  Geometry g;
  if (cfg.lead_field_path) {
    g.lead_field = load_lead_field(*cfg.lead_field_path);
    g.atlas = cfg.atlas_path ? load_atlas(*cfg.atlas_path) : contiguous_atlas(g.lead_field.sources());
    g.channel_names = default_channel_names(g.lead_field.sensors());
  } else {
    auto hm = default_head_model(cfg.head_model);
    g.lead_field = std::move(hm.lead_field);
    g.atlas = cfg.atlas_path ? load_atlas(*cfg.atlas_path) : std::move(hm.atlas);
    g.channel_names = std::move(hm.channel_names);
  }
  validate(g.lead_field);
  validate(g.atlas, g.lead_field.sources());
  return g;
}

TrialSet load_session(const SessionSource& src, const Geometry& geo) {
  if (src.synth) return generate_synthetic_session(*src.synth, geo.lead_field, geo.atlas, geo.channel_names).first;
  if (!src.path) throw Error("session has neither a path nor a synthetic config");
  return load_trialset(*src.path, src.format);
}

TrialSet to_source_domain(const TrialSet& prepped, const InverseOperator& op, const ScoutAtlas& atlas) {
  TrialSet out;
  out.participant_id = prepped.participant_id;
  out.fs = prepped.fs;
  out.channel_names = atlas.labels;
  out.trials.reserve(prepped.trials.size());
  for (const auto& t : prepped.trials) {
    const auto scouts = scout_means(apply_inverse(op, t.eeg, prepped.fs), atlas);
    out.trials.push_back(Trial{scouts.activations, t.kinematics, t.onset_index, t.end_index});
  }
  return out;
}

PreparedSession prepare_session(const TrialSet& raw, const ExperimentConfig& cfg, const Geometry& geo) {
  validate(raw);
  PreparedSession ps;
  ps.participant_id = raw.participant_id;
  ps.split = split_trials(raw, cfg.split);

  PrepConfig pc;
  pc.fs_out = cfg.fs;
  pc.normalize_kinematics = false;
  TrialSet prepped = preprocess_session(raw, pc);
  const auto kin_stats = fit_minmax(gather(prepped, ps.split.train, true), "training trials");
  for (auto& t : prepped.trials) t.kinematics = apply_minmax(t.kinematics, kin_stats);

  for (Domain d : cfg.domains) {
    if (d == Domain::source && !ps.source) {
      if (raw.channels() != geo.lead_field.sensors()) {
        throw Error("session has " + std::to_string(raw.channels()) + " channels but the lead field has " +
                    std::to_string(geo.lead_field.sensors()) + " sensors");
      }
      // The EEG is average-referenced, so the forward model must be too.
      const Matrix gain = average_reference_gain(geo.lead_field.gain);
      const auto op = sloreta_inverse_operator(gain, std::nullopt, cfg.inverse_alpha, cfg.inverse_snr);
      ps.source = to_source_domain(prepped, op, geo.atlas);
      zscore_on_train(*ps.source, ps.split.train, "source");
    } else if (d == Domain::sensor && !ps.sensor) {
      ps.sensor = prepped;
      zscore_on_train(*ps.sensor, ps.split.train, "sensor");
    }
  }
  return ps;
}

std::vector<CvResult> run_cell(const PreparedSession& ps, Domain domain, int window_ms, const ExperimentConfig& cfg) {
  const auto& series = domain == Domain::source ? ps.source : ps.sensor;
  if (!series) throw Error(std::string("domain ") + to_string(domain) + " was not prepared");
  const WindowSpec spec{window_ms, cfg.gap_ms, cfg.fs};
  spec.validate();
  const auto train_ds = assemble_dataset(*series, spec, ps.split.train, domain);
  const auto val_ds = assemble_dataset(*series, spec, ps.split.val, domain);
  const auto test_ds = assemble_dataset(*series, spec, ps.split.test, domain);

  std::vector<CvResult> out;
  auto make_row = [&](const std::string& model, const Matrix& pred) {
    CvResult r;
    r.participant_id = ps.participant_id;
    r.domain = domain;
    r.window_ms = window_ms;
    r.model = model;
    r.cv = pearson_cv(test_ds.targets, pred);
    r.trial_cv = trial_averaged_cv(test_ds.targets, pred, test_ds.trial_ids);
    r.test_rows = test_ds.rows();
    return r;
  };

  if (cfg.run_mlr) {
    const auto lm = nn::mlr_fit(train_ds.inputs, train_ds.targets, cfg.mlr_ridge);
    out.push_back(make_row("mlr", nn::mlr_predict(lm, test_ds.inputs)));
  }
  if (cfg.run_decoder) {
    nn::DecoderModel model(train_ds.layout.series, train_ds.layout.lags, cfg.model);
    const auto rep = nn::train(model, train_ds.inputs, train_ds.targets, val_ds.inputs, val_ds.targets, cfg.train);
    auto row = make_row("cnn_lstm", model.predict(test_ds.inputs));
    row.epochs = rep.stopped_epoch;
    row.best_epoch = rep.best_epoch;
    log::info("  cnn_lstm trained " + std::to_string(rep.stopped_epoch) + " epochs (best " +
              std::to_string(rep.best_epoch) + ") in " + std::to_string(rep.wall_time_s) + " s");
    out.push_back(std::move(row));
  }
  return out;
}

std::vector<AggregateRow> aggregate(const std::vector<CvResult>& rows) {
  std::vector<AggregateRow> out;
  std::map<std::tuple<std::string, int, int>, std::size_t> index;
  std::vector<std::array<std::vector<double>, 3>> values;
  for (const auto& r : rows) {
    const auto key = std::make_tuple(r.model, static_cast<int>(r.domain), r.window_ms);
    auto it = index.find(key);
    if (it == index.end()) {
      it = index.emplace(key, out.size()).first;
      AggregateRow a;
      a.domain = r.domain;
      a.window_ms = r.window_ms;
      a.model = r.model;
      out.push_back(a);
      values.emplace_back();
    }
    for (std::size_t j = 0; j < 3; ++j) {
      if (!std::isnan(r.cv[j])) values[it->second][j].push_back(r.cv[j]);
    }
  }
  for (std::size_t i = 0; i < out.size(); ++i) {
    for (std::size_t j = 0; j < 3; ++j) {
      const auto& v = values[i][j];
      out[i].count[j] = v.size();
      if (v.empty()) {
        out[i].mean[j] = out[i].std[j] = std::numeric_limits<double>::quiet_NaN();
        continue;
      }
      double s = 0.0;
      for (double x : v) s += x;
      const double mean = s / static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      out[i].mean[j] = mean;
      out[i].std[j] = std::sqrt(ss / static_cast<double>(v.size()));
    }
  }
  std::size_t excluded = 0;
  for (const auto& r : rows) {
    for (double c : r.cv) excluded += std::isnan(c) ? 1 : 0;
  }
  if (excluded > 0) log::warn("aggregate: " + std::to_string(excluded) + " NaN CV value(s) excluded");
  return out;
}

ReportTable run_experiment(const ExperimentConfig& cfg) {
  validate(cfg);
  if (cfg.sessions.empty()) throw Error("experiment: no sessions configured");
  ReportTable rt;
  rt.windows_ms = cfg.windows_ms;
  const Geometry geo = load_geometry(cfg);

  for (std::size_t si = 0; si < cfg.sessions.size(); ++si) {
    std::optional<PreparedSession> ps;
    std::string pid = "session" + std::to_string(si + 1);
    try {
      const TrialSet raw = load_session(cfg.sessions[si], geo);
      pid = raw.participant_id;
      log::info("preparing " + pid + " (" + std::to_string(raw.trials.size()) + " trials)");
      ps = prepare_session(raw, cfg, geo);
    } catch (const std::exception& e) {
      log::warn("session " + pid + " failed: " + e.what());
      for (Domain d : cfg.domains) {
        for (int w : cfg.windows_ms) rt.failures.push_back({pid, d, w, e.what()});
      }
      continue;
    }
    for (Domain d : cfg.domains) {
      for (int w : cfg.windows_ms) {
        log::info("cell " + coordinate(pid, d, w));
        try {
          for (auto& r : run_cell(*ps, d, w, cfg)) rt.rows.push_back(std::move(r));
        } catch (const std::exception& e) {
          log::warn("cell " + coordinate(pid, d, w) + " failed: " + e.what());
          rt.failures.push_back({pid, d, w, e.what()});
        }
      }
    }
  }
  rt.aggregates = aggregate(rt.rows);
  return rt;
}

}  // namespace handkin::eval
