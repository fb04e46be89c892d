#include "handkin/nn/layers.hpp"

#include <cmath>

namespace handkin::nn {
namespace {

Tensor uniform(Shape shape, double bound, std::mt19937_64& rng) {
  Tensor t(std::move(shape));
  std::uniform_real_distribution<double> u(-bound, bound);
  for (auto& v : t.values()) v = u(rng);
  return t;
}

}  // namespace

Var apply_dropout(const Var& x, double rate, const ForwardContext& ctx) {
  const bool active = ctx.training && ctx.dropout_active && rate > 0.0;
  if (!active) return x;
  if (ctx.rng == nullptr) throw Error("dropout: training forward pass needs an rng");
  return dropout(x, rate, true, *ctx.rng);
}

Conv1d::Conv1d(std::size_t in, std::size_t out, std::size_t kernel, std::mt19937_64& rng) {
  const double fan_in = static_cast<double>(in * kernel);
  weight = parameter(uniform({out, in, kernel}, std::sqrt(6.0 / fan_in), rng));
  bias = parameter(Tensor({out}, 0.0));
}

void Conv1d::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

BatchNorm1d::BatchNorm1d(std::size_t channels) {
  gamma = parameter(Tensor({channels}, 1.0));
  beta = parameter(Tensor({channels}, 0.0));
  state.running_mean = Tensor({channels}, 0.0);
  state.running_var = Tensor({channels}, 1.0);
}

void BatchNorm1d::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".gamma", gamma});
  out.push_back({prefix + ".beta", beta});
}

Dense::Dense(std::size_t in, std::size_t out, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(in));
  weight = parameter(uniform({out, in}, bound, rng));
  bias = parameter(uniform({out}, bound, rng));
}

void Dense::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".weight", weight});
  out.push_back({prefix + ".bias", bias});
}

Lstm::Lstm(std::size_t input, std::size_t hidden, std::mt19937_64& rng) {
  const double bound = 1.0 / std::sqrt(static_cast<double>(hidden));
  w_ih = parameter(uniform({4 * hidden, input}, bound, rng));
  w_hh = parameter(uniform({4 * hidden, hidden}, bound, rng));
  bias = parameter(uniform({4 * hidden}, bound, rng));
}

void Lstm::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  out.push_back({prefix + ".w_ih", w_ih});
  out.push_back({prefix + ".w_hh", w_hh});
  out.push_back({prefix + ".bias", bias});
}

ConvBlock::ConvBlock(std::size_t in, std::size_t out, std::size_t kernel, double drop_rate_, std::size_t pool_size_,
                     bool pool_, std::mt19937_64& rng)
    : conv(in, out, kernel, rng), bn(out), drop_rate(drop_rate_), pool_size(pool_size_), pool(pool_) {}

Var ConvBlock::operator()(const Var& x, const ForwardContext& ctx) {
  Var h = relu(bn(conv(x), ctx));
  h = apply_dropout(h, drop_rate, ctx);
  return pool ? avgpool1d(h, pool_size) : h;
}

void ConvBlock::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  conv.collect(prefix + ".conv", out);
  bn.collect(prefix + ".bn", out);
}

ResBlock::ResBlock(std::size_t in, const std::vector<std::size_t>& filters, std::size_t kernel, double drop_rate_,
                   std::mt19937_64& rng)
    : drop_rate(drop_rate_) {
  if (filters.size() != 3) throw Error("ResBlock: expected exactly three filter counts");
  std::size_t c = in;
  for (std::size_t i = 0; i < 3; ++i) {
    conv[i] = Conv1d(c, filters[i], kernel, rng);
    bn[i] = BatchNorm1d(filters[i]);
    c = filters[i];
  }
  project_skip = in != filters[2];
  if (project_skip) skip = Conv1d(in, filters[2], 1, rng);
}

Var ResBlock::operator()(const Var& x, const ForwardContext& ctx) {
  Var h = x;
  for (std::size_t i = 0; i < 2; ++i) h = apply_dropout(relu(bn[i](conv[i](h), ctx)), drop_rate, ctx);
  Var pre = bn[2](conv[2](h), ctx);
  Var shortcut = project_skip ? skip(x) : x;
  return apply_dropout(relu(add(pre, shortcut)), drop_rate, ctx);
}

void ResBlock::collect(const std::string& prefix, std::vector<NamedParam>& out) const {
  for (std::size_t i = 0; i < 3; ++i) {
    conv[i].collect(prefix + ".conv" + std::to_string(i + 1), out);
    bn[i].collect(prefix + ".bn" + std::to_string(i + 1), out);
  }
  if (project_skip) skip.collect(prefix + ".skip", out);
}

std::vector<BatchNorm1d*> ResBlock::norms() { return {&bn[0], &bn[1], &bn[2]}; }

}  // namespace handkin::nn
