#include "handkin/nn/decoder.hpp"

#include "handkin/binary_io.hpp"

#include <json.hpp>

#include <fstream>

namespace handkin::nn {
namespace {

constexpr std::string_view kMagic = "HKMODL";
constexpr std::uint8_t kVersion = 1;

}  // namespace

void validate(const DecoderConfig& cfg) {
  if (cfg.conv_filters.empty()) throw Error("decoder: at least one ConvBlock is required");
  for (auto f : cfg.conv_filters) {
    if (f < 1) throw Error("decoder: ConvBlock filter counts must be >= 1");
  }
  if (cfg.res_filters.size() != 3) throw Error("decoder: ResBlock needs exactly three filter counts");
  for (auto f : cfg.res_filters) {
    if (f < 1) throw Error("decoder: ResBlock filter counts must be >= 1");
  }
  if (cfg.kernel % 2 == 0) throw Error("decoder: kernel size must be odd");
  if (cfg.lstm_hidden < 1) throw Error("decoder: LSTM hidden size must be >= 1");
  if (cfg.pool < 1) throw Error("decoder: pool size must be >= 1");
  if (!(cfg.drop_rate >= 0.0 && cfg.drop_rate < 1.0)) throw Error("decoder: drop rate must be in [0, 1)");
  if (cfg.outputs < 1) throw Error("decoder: output count must be >= 1");
}

std::size_t minimal_input_length(const DecoderConfig& cfg) {
  std::size_t n = 1;
  for (std::size_t i = 0; i < cfg.conv_filters.size(); ++i) n *= cfg.pool;
  return n;
}

DecoderDescriptor plan_decoder(std::size_t channels, std::size_t length, const DecoderConfig& cfg) {
  validate(cfg);
  if (channels == 0 || length == 0) throw Error("decoder: input channels and length must be positive");
  DecoderDescriptor d;
  d.input_channels = channels;
  d.input_length = length;
  d.config = cfg;
  std::size_t L = length;
  for (std::size_t i = 0; i < cfg.conv_filters.size(); ++i) {
    bool pool = true;
    if (L < cfg.pool) {
      if (!cfg.auto_skip_pool) {
        throw Error("decoder: input length " + std::to_string(length) + " reaches " + std::to_string(L) +
                    " before ConvBlock " + std::to_string(i + 1) + " pool; minimal admissible N is " +
                    std::to_string(minimal_input_length(cfg)) + " (or enable auto_skip_pool)");
      }
      pool = false;
    }
    if (pool) L /= cfg.pool;
    d.pooled.push_back(pool);
    d.block_lengths.push_back(L);
  }
  d.lstm_length = L;
  return d;
}

DecoderModel::DecoderModel(std::size_t channels, std::size_t length, const DecoderConfig& cfg)
    : desc_(plan_decoder(channels, length, cfg)) {
  std::mt19937_64 rng(cfg.seed);
  std::size_t c = channels;
  for (std::size_t i = 0; i < cfg.conv_filters.size(); ++i) {
    conv_blocks_.emplace_back(c, cfg.conv_filters[i], cfg.kernel, cfg.drop_rate, cfg.pool, desc_.pooled[i], rng);
    c = cfg.conv_filters[i];
  }
  for (std::size_t i = 0; i < cfg.res_blocks; ++i) {
    res_blocks_.emplace_back(c, cfg.res_filters, cfg.kernel, cfg.drop_rate, rng);
    c = cfg.res_filters[2];
  }
  lstm_ = Lstm(c, cfg.lstm_hidden, rng);
  dense_ = Dense(cfg.lstm_hidden * desc_.lstm_length, cfg.outputs, rng);

  for (std::size_t i = 0; i < conv_blocks_.size(); ++i) conv_blocks_[i].collect("conv_block" + std::to_string(i + 1), params_);
  for (std::size_t i = 0; i < res_blocks_.size(); ++i) res_blocks_[i].collect("res_block" + std::to_string(i + 1), params_);
  lstm_.collect("lstm", params_);
  dense_.collect("dense", params_);
}

Var DecoderModel::forward(const Tensor& x, const ForwardContext& ctx) { return forward(constant(x), ctx); }

Var DecoderModel::forward(const Var& x, const ForwardContext& ctx) {
  const Tensor& X = x->value;
  if (X.ndim() != 2 || X.dim(1) != input_width()) {
    throw Error("decoder: expected input [B, " + std::to_string(input_width()) + "], got " + shape_string(X.shape()));
  }
  const std::size_t B = X.dim(0);
  Var h = reshape(x, {B, desc_.input_channels, desc_.input_length});
  for (auto& blk : conv_blocks_) h = blk(h, ctx);
  for (auto& blk : res_blocks_) h = blk(h, ctx);
  h = lstm_(h);
  h = reshape(h, {B, h->value.dim(1) * h->value.dim(2)});
  return dense_(h);
}

Matrix DecoderModel::predict(const Matrix& inputs, std::size_t batch) {
  if (static_cast<std::size_t>(inputs.cols()) != input_width()) {
    throw Error("decoder: inputs have " + std::to_string(inputs.cols()) + " columns, model expects " +
                std::to_string(input_width()));
  }
  const std::size_t T = static_cast<std::size_t>(inputs.rows());
  Matrix out(inputs.rows(), static_cast<Eigen::Index>(desc_.config.outputs));
  ForwardContext ctx;
  for (std::size_t start = 0; start < T; start += batch) {
    const std::size_t n = std::min(batch, T - start);
    const Tensor xb = Tensor::from_matrix(inputs.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)));
    out.middleRows(static_cast<Eigen::Index>(start), static_cast<Eigen::Index>(n)) = forward(xb, ctx)->value.to_matrix();
  }
  return out;
}

std::vector<Var> DecoderModel::parameters() const {
  std::vector<Var> out;
  out.reserve(params_.size());
  for (const auto& p : params_) out.push_back(p.var);
  return out;
}

std::vector<BatchNorm1d*> DecoderModel::norms() {
  std::vector<BatchNorm1d*> out;
  for (auto& blk : conv_blocks_) out.push_back(&blk.bn);
  for (auto& blk : res_blocks_) {
    for (auto* n : blk.norms()) out.push_back(n);
  }
  return out;
}

std::size_t DecoderModel::parameter_count() const {
  std::size_t n = 0;
  for (const auto& p : params_) n += p.var->value.size();
  return n;
}

ParamSnapshot DecoderModel::snapshot() {
  ParamSnapshot s;
  for (const auto& p : params_) s.params.push_back(p.var->value);
  for (auto* n : norms()) s.norms.push_back(n->state);
  return s;
}

void DecoderModel::restore(const ParamSnapshot& snap) {
  auto bns = norms();
  if (snap.params.size() != params_.size() || snap.norms.size() != bns.size()) {
    throw Error("decoder: snapshot does not match model structure");
  }
  for (std::size_t i = 0; i < params_.size(); ++i) {
    if (!snap.params[i].same_shape(params_[i].var->value)) {
      throw Error("decoder: snapshot shape mismatch for " + params_[i].name);
    }
    params_[i].var->value = snap.params[i];
  }
  for (std::size_t i = 0; i < bns.size(); ++i) bns[i]->state = snap.norms[i];
}

std::string descriptor_json(const DecoderDescriptor& d) {
  nlohmann::json j;
  j["input_channels"] = d.input_channels;
  j["input_length"] = d.input_length;
  j["block_lengths"] = d.block_lengths;
  j["pooled"] = d.pooled;
  j["lstm_length"] = d.lstm_length;
  const auto& c = d.config;
  j["config"] = {{"conv_filters", c.conv_filters}, {"res_filters", c.res_filters}, {"res_blocks", c.res_blocks},
                 {"lstm_hidden", c.lstm_hidden},   {"kernel", c.kernel},           {"drop_rate", c.drop_rate},
                 {"pool", c.pool},                 {"auto_skip_pool", c.auto_skip_pool}, {"seed", c.seed},
                 {"outputs", c.outputs}};
  return j.dump(2);
}

DecoderDescriptor parse_descriptor_json(const std::string& text) {
  try {
    const auto j = nlohmann::json::parse(text);
    DecoderDescriptor d;
    d.input_channels = j.at("input_channels").get<std::size_t>();
    d.input_length = j.at("input_length").get<std::size_t>();
    d.block_lengths = j.at("block_lengths").get<std::vector<std::size_t>>();
    d.pooled = j.at("pooled").get<std::vector<bool>>();
    d.lstm_length = j.at("lstm_length").get<std::size_t>();
    const auto& c = j.at("config");
    auto& cfg = d.config;
    cfg.conv_filters = c.at("conv_filters").get<std::vector<std::size_t>>();
    cfg.res_filters = c.at("res_filters").get<std::vector<std::size_t>>();
    cfg.res_blocks = c.at("res_blocks").get<std::size_t>();
    cfg.lstm_hidden = c.at("lstm_hidden").get<std::size_t>();
    cfg.kernel = c.at("kernel").get<std::size_t>();
    cfg.drop_rate = c.at("drop_rate").get<double>();
    cfg.pool = c.at("pool").get<std::size_t>();
    cfg.auto_skip_pool = c.at("auto_skip_pool").get<bool>();
    cfg.seed = c.at("seed").get<std::uint64_t>();
    cfg.outputs = c.at("outputs").get<std::size_t>();
    return d;
  } catch (const nlohmann::json::exception& e) {
    throw Error(std::string("malformed model descriptor: ") + e.what());
  }
}

void save_model(DecoderModel& model, const std::filesystem::path& path) {
  std::ofstream os(path, std::ios::binary);
  if (!os) throw Error("cannot open " + path.string() + " for writing");
  os.write(kMagic.data(), static_cast<std::streamsize>(kMagic.size()));
  bin::write<std::uint8_t>(os, kVersion);
  bin::write_string(os, descriptor_json(model.descriptor()));
  const auto& params = model.named_parameters();
  bin::write<std::uint32_t>(os, static_cast<std::uint32_t>(params.size()));
  for (const auto& p : params) {
    bin::write_string(os, p.name);
    const auto& shape = p.var->value.shape();
    bin::write<std::uint32_t>(os, static_cast<std::uint32_t>(shape.size()));
    for (auto s : shape) bin::write<std::uint64_t>(os, s);
    bin::write_doubles(os, p.var->value.values());
  }
  const auto norms = model.norms();
  bin::write<std::uint32_t>(os, static_cast<std::uint32_t>(norms.size()));
  for (const auto* n : norms) {
    bin::write<std::uint64_t>(os, n->state.running_mean.size());
    bin::write<std::uint8_t>(os, n->state.initialized ? 1 : 0);
    bin::write_doubles(os, n->state.running_mean.values());
    bin::write_doubles(os, n->state.running_var.values());
  }
  if (!os) throw Error("write failed for " + path.string());
}

std::unique_ptr<DecoderModel> load_model(const std::filesystem::path& path) {
  std::ifstream is(path, std::ios::binary);
  if (!is) throw Error("cannot open model file " + path.string());
  bin::expect_magic(is, kMagic, "model");
  const auto version = bin::read<std::uint8_t>(is, "model version");
  if (version != kVersion) throw Error("unsupported model file version " + std::to_string(version));
  const auto desc = parse_descriptor_json(bin::read_string(is, "model descriptor"));
  auto model = std::make_unique<DecoderModel>(desc.input_channels, desc.input_length, desc.config);
  if (model->descriptor().block_lengths != desc.block_lengths || model->descriptor().pooled != desc.pooled) {
    throw Error("model descriptor is inconsistent with its configuration");
  }
  const auto& params = model->named_parameters();
  const auto n_params = bin::read<std::uint32_t>(is, "parameter count");
  if (n_params != params.size()) throw Error("model file has " + std::to_string(n_params) + " tensors, expected " +
                                             std::to_string(params.size()));
  for (const auto& p : params) {
    const auto name = bin::read_string(is, "parameter name");
    if (name != p.name) throw Error("model file parameter '" + name + "' where '" + p.name + "' was expected");
    const auto rank = bin::read<std::uint32_t>(is, "parameter rank");
    Shape shape(rank);
    for (auto& s : shape) s = bin::read<std::uint64_t>(is, "parameter shape");
    if (shape != p.var->value.shape()) throw Error("model file shape mismatch for " + name);
    bin::read_doubles(is, p.var->value.values(), name);
  }
  auto norms = model->norms();
  const auto n_norms = bin::read<std::uint32_t>(is, "norm count");
  if (n_norms != norms.size()) throw Error("model file batch-norm count mismatch");
  for (auto* n : norms) {
    const auto c = bin::read<std::uint64_t>(is, "norm size");
    if (c != n->state.running_mean.size()) throw Error("model file batch-norm size mismatch");
    n->state.initialized = bin::read<std::uint8_t>(is, "norm flag") != 0;
    bin::read_doubles(is, n->state.running_mean.values(), "running mean");
    bin::read_doubles(is, n->state.running_var.values(), "running var");
  }
  return model;
}

}  // namespace handkin::nn
