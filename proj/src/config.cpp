#include "handkin/config.hpp"

#include <toml.hpp>

#include <fstream>
#include <concepts>
#include <limits>
#include <set>
#include <sstream>

namespace handkin {
namespace {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream is(path);
  if (!is) throw Error("cannot open config " + path.string());
  std::ostringstream ss;
  ss << is.rdbuf();
  return ss.str();
}

toml::table parse_toml(const std::string& text) {
  try {
    return toml::parse(text);
  } catch (const toml::parse_error& e) {
    std::ostringstream msg;
    msg << "config: " << e.description() << " (line " << e.source().begin.line << ")";
    throw Error(msg.str());
  }
}

// Typed accessors over one table; remembers which keys were read so the
// remainder can be reported as unknown.
class Section {
 public:
  Section(const toml::table* tbl, std::string name) : tbl_(tbl), name_(std::move(name)) {}

  bool present() const { return tbl_ != nullptr; }

  const toml::node* node(const std::string& key) {
    seen_.insert(key);
    return tbl_ != nullptr ? tbl_->get(key) : nullptr;
  }

  void get(const std::string& key, double& out) {
    if (const auto* n = node(key)) {
      auto v = n->value<double>();
      if (!v) fail(key, "a number");
      out = *v;
    }
  }
  void get(const std::string& key, bool& out) {
    if (const auto* n = node(key)) {
      if (!n->is_boolean()) fail(key, "a boolean");
      out = *n->value<bool>();
    }
  }
  void get(const std::string& key, std::string& out) {
    if (const auto* n = node(key)) {
      if (!n->is_string()) fail(key, "a string");
      out = *n->value<std::string>();
    }
  }
  void get(const std::string& key, int& out) { out = static_cast<int>(integer(key, out)); }
  template <std::unsigned_integral U>
  void get(const std::string& key, U& out) {
    const auto v = integer(key, static_cast<std::int64_t>(out));
    if (v < 0) fail(key, "a non-negative integer");
    out = static_cast<U>(v);
  }
  template <typename T>
  void get(const std::string& key, std::vector<T>& out) {
    const auto* n = node(key);
    if (n == nullptr) return;
    const auto* arr = n->as_array();
    if (arr == nullptr) fail(key, "an array");
    std::vector<T> vals;
    for (const auto& el : *arr) {
      if constexpr (std::is_same_v<T, std::string>) {
        if (!el.is_string()) fail(key, "an array of strings");
        vals.push_back(*el.value<std::string>());
      } else {
        if (!el.is_integer()) fail(key, "an array of integers");
        const auto v = *el.value<std::int64_t>();
        if (v < 0) fail(key, "an array of non-negative integers");
        vals.push_back(static_cast<T>(v));
      }
    }
    out = std::move(vals);
  }
  void get_optional(const std::string& key, std::optional<double>& out) {
    if (node(key) != nullptr) {
      double v = 0.0;
      get(key, v);
      out = v;
    }
  }

  void finish() const {
    if (tbl_ == nullptr) return;
    for (const auto& [k, v] : *tbl_) {
      if (!seen_.count(std::string(k.str()))) {
        throw Error("config: unknown key '" + std::string(k.str()) + "' in " + name_);
      }
    }
  }

 private:
  std::int64_t integer(const std::string& key, std::int64_t fallback) {
    const auto* n = node(key);
    if (n == nullptr) return fallback;
    if (!n->is_integer()) fail(key, "an integer");
    return *n->value<std::int64_t>();
  }
  [[noreturn]] void fail(const std::string& key, const std::string& what) const {
    throw Error("config: " + name_ + "." + key + " must be " + what);
  }

  const toml::table* tbl_;
  std::string name_;
  std::set<std::string> seen_;
};

void read_synth(Section& s, SynthConfig& c) {
  s.get("participant_id", c.participant_id);
  s.get("n_trials", c.n_trials);
  s.get("fs", c.fs);
  s.get("trial_duration_s", c.trial_duration_s);
  if (const auto* n = s.node("snr_db")) {
    if (const auto* str = n->as_string(); str != nullptr && (str->get() == "inf" || str->get() == "+inf")) {
      c.snr_db = std::numeric_limits<double>::infinity();
    } else {
      s.get("snr_db", c.snr_db);
    }
  }
  s.get("n_active_scouts", c.n_active_scouts);
  s.get("coupling_lag_ms", c.coupling_lag_ms);
  s.get("seed", c.seed);
  s.get("onset_s", c.onset_s);
  s.get("movement_s", c.movement_s);
  s.get("burst_lead_ms", c.burst_lead_ms);
  s.get("source_amplitude", c.source_amplitude);
  s.get("reach_amplitude", c.reach_amplitude);
  s.get("carrier_components", c.carrier_components);
  s.get("band_low_hz", c.band_low_hz);
  s.get("band_high_hz", c.band_high_hz);
  s.finish();
  validate(c);
}

void read_model(Section s, nn::DecoderConfig& c) {
  s.get("conv_filters", c.conv_filters);
  s.get("res_filters", c.res_filters);
  s.get("res_blocks", c.res_blocks);
  s.get("lstm_hidden", c.lstm_hidden);
  s.get("kernel", c.kernel);
  s.get("drop_rate", c.drop_rate);
  s.get("pool", c.pool);
  s.get("auto_skip_pool", c.auto_skip_pool);
  s.get("seed", c.seed);
  s.finish();
  nn::validate(c);
}

void read_train(Section s, nn::TrainConfig& c) {
  s.get("learning_rate", c.learning_rate);
  s.get("batch_size", c.batch_size);
  s.get("max_epochs", c.max_epochs);
  s.get("patience", c.patience);
  s.get("seed", c.seed);
  s.get("beta1", c.beta1);
  s.get("beta2", c.beta2);
  s.get("eps", c.eps);
  s.get("dropout", c.dropout);
  s.finish();
  nn::validate(c);
}

std::filesystem::path resolve(const std::filesystem::path& base, const std::string& p) {
  std::filesystem::path path(p);
  return path.is_absolute() ? path : base / path;
}

}  // namespace

SynthConfig parse_synth_config(const std::string& toml_text) {
  const auto root = parse_toml(toml_text);
  SynthConfig c;
  if (const auto* t = root.get_as<toml::table>("synth")) {
    Section outer(&root, "file");
    outer.node("synth");
    outer.finish();
    Section s(t, "[synth]");
    read_synth(s, c);
  } else {
    Section s(&root, "file");
    read_synth(s, c);
  }
  return c;
}

SynthConfig load_synth_config(const std::filesystem::path& path) { return parse_synth_config(read_text(path)); }

ModelTrainConfig parse_model_train_config(const std::string& toml_text) {
  const auto root = parse_toml(toml_text);
  Section top(&root, "file");
  ModelTrainConfig c;
  top.node("model");
  top.node("train");
  top.finish();
  read_model(Section(root.get_as<toml::table>("model"), "[model]"), c.model);
  read_train(Section(root.get_as<toml::table>("train"), "[train]"), c.train);
  return c;
}

ModelTrainConfig load_model_train_config(const std::filesystem::path& path) {
  return parse_model_train_config(read_text(path));
}

eval::ExperimentConfig parse_experiment_config(const std::string& toml_text, const std::filesystem::path& base_dir) {
  const auto root = parse_toml(toml_text);
  eval::ExperimentConfig c;
  Section top(&root, "file");
  for (const char* k : {"experiment", "split", "geometry", "inverse", "model", "train", "session"}) top.node(k);
  top.finish();

  Section ex(root.get_as<toml::table>("experiment"), "[experiment]");
  ex.get("name", c.name);
  ex.get("windows_ms", c.windows_ms);
  std::vector<std::string> domains;
  ex.get("domains", domains);
  if (!domains.empty()) {
    c.domains.clear();
    for (const auto& d : domains) c.domains.push_back(parse_domain(d));
  }
  ex.get("gap_ms", c.gap_ms);
  ex.get("fs", c.fs);
  ex.get("run_decoder", c.run_decoder);
  ex.get("run_mlr", c.run_mlr);
  ex.get("mlr_ridge", c.mlr_ridge);
  ex.finish();

  Section sp(root.get_as<toml::table>("split"), "[split]");
  sp.get("n_train", c.split.n_train);
  sp.get("n_val", c.split.n_val);
  sp.get("n_test", c.split.n_test);
  sp.get("seed", c.split.seed);
  sp.get("proportional_fallback", c.split.proportional_fallback);
  sp.finish();

  Section geo(root.get_as<toml::table>("geometry"), "[geometry]");
  std::string lf_path, atlas_path;
  geo.get("lead_field", lf_path);
  geo.get("atlas", atlas_path);
  if (!lf_path.empty()) c.lead_field_path = resolve(base_dir, lf_path);
  if (!atlas_path.empty()) c.atlas_path = resolve(base_dir, atlas_path);
  geo.get("n_sensors", c.head_model.n_sensors);
  geo.get("n_sources", c.head_model.n_sources);
  geo.get("n_regions", c.head_model.n_regions);
  geo.get("head_radius", c.head_model.head_radius);
  geo.get("seed", c.head_model.seed);
  geo.finish();

  Section inv(root.get_as<toml::table>("inverse"), "[inverse]");
  inv.get("snr", c.inverse_snr);
  inv.get_optional("alpha", c.inverse_alpha);
  inv.finish();

  read_model(Section(root.get_as<toml::table>("model"), "[model]"), c.model);
  read_train(Section(root.get_as<toml::table>("train"), "[train]"), c.train);

  if (const auto* sessions = root.get_as<toml::array>("session")) {
    for (std::size_t i = 0; i < sessions->size(); ++i) {
      const auto* t = sessions->get_as<toml::table>(i);
      if (t == nullptr) throw Error("config: [[session]] entries must be tables");
      const std::string where = "[[session]] #" + std::to_string(i + 1);
      Section s(t, where);
      eval::SessionSource src;
      std::string path, format = "binary";
      s.get("path", path);
      s.get("format", format);
      if (!path.empty()) src.path = resolve(base_dir, path);
      if (format == "binary") {
        src.format = SessionFormat::binary;
      } else if (format == "csv_dir") {
        src.format = SessionFormat::csv_dir;
      } else {
        throw Error("config: " + where + " format must be 'binary' or 'csv_dir'");
      }
      if (const auto* n = s.node("synth")) {
        const auto* st = n->as_table();
        if (st == nullptr) throw Error("config: " + where + " synth must be a table");
        Section ss(st, where + ".synth");
        SynthConfig sc;
        read_synth(ss, sc);
        src.synth = sc;
      }
      s.finish();
      if (src.path.has_value() == src.synth.has_value()) {
        throw Error("config: " + where + " needs exactly one of 'path' or 'synth'");
      }
      c.sessions.push_back(std::move(src));
    }
  }
  eval::validate(c);
  return c;
}

eval::ExperimentConfig load_experiment_config(const std::filesystem::path& path) {
  return parse_experiment_config(read_text(path), path.parent_path());
}

}  // namespace handkin
