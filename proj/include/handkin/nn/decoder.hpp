#pragma once

#include "handkin/nn/layers.hpp"

#include <filesystem>
#include <iosfwd>
#include <memory>

namespace handkin::nn {

struct DecoderConfig {
  std::vector<std::size_t> conv_filters{32, 64, 96};
  std::vector<std::size_t> res_filters{96, 96, 96};  // shared by both ResBlocks
  std::size_t res_blocks = 2;
  std::size_t lstm_hidden = 64;
  std::size_t kernel = 3;
  double drop_rate = 0.5;
  std::size_t pool = 3;
  bool auto_skip_pool = true;
  std::uint64_t seed = 1;
  std::size_t outputs = 3;
};

void validate(const DecoderConfig& cfg);

// Shape bookkeeping fixed at build time.
struct DecoderDescriptor {
  std::size_t input_channels = 0;  // M
  std::size_t input_length = 0;    // N
  std::vector<std::size_t> block_lengths;  // length after each ConvBlock
  std::vector<bool> pooled;                // whether each ConvBlock pooled
  std::size_t lstm_length = 0;
  DecoderConfig config;
};

// Smallest N that survives every ConvBlock pool without auto-skipping.
std::size_t minimal_input_length(const DecoderConfig& cfg);

// Planned per-ConvBlock lengths; throws if a pool would reach length 0
// (or any pool is impossible while auto_skip_pool is off).
DecoderDescriptor plan_decoder(std::size_t channels, std::size_t length, const DecoderConfig& cfg);

struct ParamSnapshot {
  std::vector<Tensor> params;
  std::vector<BatchNormState> norms;
};

class DecoderModel {
 public:
  DecoderModel(std::size_t channels, std::size_t length, const DecoderConfig& cfg);

  const DecoderDescriptor& descriptor() const { return desc_; }
  std::size_t input_width() const { return desc_.input_channels * desc_.input_length; }

  // x: [B, M*N] rows with channel-major layout (channel * N + lag).
  Var forward(const Tensor& x, const ForwardContext& ctx);
  Var forward(const Var& x, const ForwardContext& ctx);

  // Eval-mode prediction, rows x 3.
  Matrix predict(const Matrix& inputs, std::size_t batch = 256);

  const std::vector<NamedParam>& named_parameters() const { return params_; }
  std::vector<Var> parameters() const;
  std::vector<BatchNorm1d*> norms();
  std::size_t parameter_count() const;

  ParamSnapshot snapshot();
  void restore(const ParamSnapshot& snap);

 private:
  DecoderDescriptor desc_;
  std::vector<ConvBlock> conv_blocks_;
  std::vector<ResBlock> res_blocks_;
  Lstm lstm_;
  Dense dense_;
  std::vector<NamedParam> params_;
};

std::string descriptor_json(const DecoderDescriptor& d);
DecoderDescriptor parse_descriptor_json(const std::string& text);

void save_model(DecoderModel& model, const std::filesystem::path& path);
std::unique_ptr<DecoderModel> load_model(const std::filesystem::path& path);

}  // namespace handkin::nn
