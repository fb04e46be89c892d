#pragma once

#include "handkin/nn/ops.hpp"

#include <random>
#include <string>
#include <vector>

namespace handkin::nn {

struct ForwardContext {
  bool training = false;
  bool dropout_active = false;  // only meaningful in training
  std::mt19937_64* rng = nullptr;
};

struct NamedParam {
  std::string name;
  Var var;
};

struct Conv1d {
  Var weight;  // [out, in, k]
  Var bias;    // [out]

  Conv1d() = default;
  Conv1d(std::size_t in, std::size_t out, std::size_t kernel, std::mt19937_64& rng);
  Var operator()(const Var& x) const { return conv1d(x, weight, bias); }
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

struct BatchNorm1d {
  Var gamma;
  Var beta;
  BatchNormState state;

  BatchNorm1d() = default;
  explicit BatchNorm1d(std::size_t channels);
  Var operator()(const Var& x, const ForwardContext& ctx) { return batchnorm1d(x, gamma, beta, state, ctx.training); }
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

struct Dense {
  Var weight;  // [out, in]
  Var bias;

  Dense() = default;
  Dense(std::size_t in, std::size_t out, std::mt19937_64& rng);
  Var operator()(const Var& x) const { return linear(x, weight, bias); }
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

struct Lstm {
  Var w_ih;
  Var w_hh;
  Var bias;

  Lstm() = default;
  Lstm(std::size_t input, std::size_t hidden, std::mt19937_64& rng);
  std::size_t hidden() const { return w_hh->value.dim(1); }
  Var operator()(const Var& x) const { return lstm(x, w_ih, w_hh, bias); }
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

// conv -> BN -> ReLU -> dropout -> avgpool (pool skipped when `pool` is false)
struct ConvBlock {
  Conv1d conv;
  BatchNorm1d bn;
  double drop_rate = 0.5;
  std::size_t pool_size = 3;
  bool pool = true;

  ConvBlock() = default;
  ConvBlock(std::size_t in, std::size_t out, std::size_t kernel, double drop_rate, std::size_t pool_size, bool pool,
            std::mt19937_64& rng);
  Var operator()(const Var& x, const ForwardContext& ctx);
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
};

// Three conv -> BN units; the block input (through a 1x1 conv when the
// channel count changes) is added after the third BN, before its ReLU.
struct ResBlock {
  Conv1d conv[3];
  BatchNorm1d bn[3];
  bool project_skip = false;
  Conv1d skip;
  double drop_rate = 0.5;

  ResBlock() = default;
  ResBlock(std::size_t in, const std::vector<std::size_t>& filters, std::size_t kernel, double drop_rate,
           std::mt19937_64& rng);
  Var operator()(const Var& x, const ForwardContext& ctx);
  void collect(const std::string& prefix, std::vector<NamedParam>& out) const;
  std::vector<BatchNorm1d*> norms();
};

Var apply_dropout(const Var& x, double rate, const ForwardContext& ctx);

}  // namespace handkin::nn
