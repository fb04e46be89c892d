#include "gradcheck.hpp"

#include "handkin/nn/decoder.hpp"
#include "handkin/nn/ops.hpp"

#include <algorithm>
#include <cmath>

namespace handkin::testing {

using namespace handkin::nn;

Tensor random_tensor(Shape shape, std::mt19937_64& rng, double scale) {
  Tensor t(std::move(shape));
  std::normal_distribution<double> n(0.0, scale);
  for (auto& v : t.values()) v = n(rng);
  return t;
}

GradCheckResult grad_check(const std::vector<Var>& inputs, const std::function<Var()>& loss, double eps,
                           std::size_t max_per_input, double floor) {
  for (const auto& v : inputs) v->ensure_grad().fill(0.0);
  backward(loss());
  std::vector<Tensor> analytic;
  for (const auto& v : inputs) analytic.push_back(v->grad);

  GradCheckResult res;
  std::mt19937_64 pick(12345);
  for (std::size_t i = 0; i < inputs.size(); ++i) {
    Tensor& x = inputs[i]->value;
    std::vector<std::size_t> idx(x.size());
    for (std::size_t k = 0; k < idx.size(); ++k) idx[k] = k;
    if (idx.size() > max_per_input) {
      std::shuffle(idx.begin(), idx.end(), pick);
      idx.resize(max_per_input);
    }
    for (auto k : idx) {
      const double orig = x[k];
      x[k] = orig + eps;
      const double fp = loss()->value[0];
      x[k] = orig - eps;
      const double fm = loss()->value[0];
      x[k] = orig;
      const double numeric = (fp - fm) / (2.0 * eps);
      const double a = analytic[i][k];
      const double rel = std::abs(a - numeric) / std::max({std::abs(a), std::abs(numeric), floor});
      res.max_rel_error = std::max(res.max_rel_error, rel);
      ++res.checked;
    }
  }
  return res;
}

Var project(const Var& out, const Tensor& weights) {
  // mse(out, 0)-style reductions would square; a linear projection keeps the
  // check sensitive to every entry with an exactly known outer gradient.
  Tensor flat_w = weights.reshaped({1, weights.size()});
  Var flat = reshape(out, {1, out->value.size()});
  return linear(flat, constant(flat_w), constant(Tensor({1}, 0.0)));
}

namespace {

std::size_t uniform_int(std::mt19937_64& rng, std::size_t lo, std::size_t hi) {
  return std::uniform_int_distribution<std::size_t>(lo, hi)(rng);
}

OpGradReport run(const std::string& name, std::size_t configs, std::mt19937_64& rng,
                 const std::function<GradCheckResult(std::mt19937_64&)>& one) {
  OpGradReport r{name, 0, 0.0};
  for (std::size_t c = 0; c < configs; ++c) {
    const auto g = one(rng);
    r.max_rel_error = std::max(r.max_rel_error, g.max_rel_error);
    ++r.configs;
  }
  return r;
}

}  // namespace

std::vector<OpGradReport> gradient_suite(std::uint64_t seed, std::size_t configs) {
  std::mt19937_64 rng(seed);
  std::vector<OpGradReport> out;

  out.push_back(run("conv1d", configs, rng, [](std::mt19937_64& g) {
    const std::size_t B = uniform_int(g, 1, 3), C = uniform_int(g, 1, 4), O = uniform_int(g, 1, 4),
                      L = uniform_int(g, 1, 7);
    auto x = parameter(random_tensor({B, C, L}, g));
    auto w = parameter(random_tensor({O, C, 3}, g));
    auto b = parameter(random_tensor({O}, g));
    const Tensor proj = random_tensor({B, O, L}, g);
    return grad_check({x, w, b}, [&] { return project(conv1d(x, w, b), proj); });
  }));

  out.push_back(run("batchnorm1d", configs, rng, [](std::mt19937_64& g) {
    const std::size_t B = uniform_int(g, 2, 4), C = uniform_int(g, 1, 3), L = uniform_int(g, 1, 5);
    auto x = parameter(random_tensor({B, C, L}, g));
    auto gamma = parameter(random_tensor({C}, g));
    auto beta = parameter(random_tensor({C}, g));
    const Tensor proj = random_tensor({B, C, L}, g);
    return grad_check({x, gamma, beta}, [&] {
      BatchNormState st;  // fresh state per evaluation so running stats never leak into the check
      return project(batchnorm1d(x, gamma, beta, st, true), proj);
    });
  }));

  out.push_back(run("relu", configs, rng, [](std::mt19937_64& g) {
    const std::size_t B = uniform_int(g, 1, 3), C = uniform_int(g, 1, 3), L = uniform_int(g, 1, 6);
    Tensor v = random_tensor({B, C, L}, g);
    // Keep entries away from the kink so the central difference is valid.
    for (auto& e : v.values()) e = e >= 0 ? e + 0.05 : e - 0.05;
    auto x = parameter(v);
    const Tensor proj = random_tensor({B, C, L}, g);
    return grad_check({x}, [&] { return project(relu(x), proj); });
  }));

  out.push_back(run("avgpool1d", configs, rng, [](std::mt19937_64& g) {
    const std::size_t B = uniform_int(g, 1, 3), C = uniform_int(g, 1, 3), L = uniform_int(g, 3, 11);
    auto x = parameter(random_tensor({B, C, L}, g));
    const Tensor proj = random_tensor({B, C, L / 3}, g);
    return grad_check({x}, [&] { return project(avgpool1d(x, 3), proj); });
  }));

  out.push_back(run("lstm", configs, rng, [](std::mt19937_64& g) {
    const std::size_t B = uniform_int(g, 1, 3), C = uniform_int(g, 1, 4), H = uniform_int(g, 1, 4),
                      L = uniform_int(g, 1, 5);
    auto x = parameter(random_tensor({B, C, L}, g));
    auto wih = parameter(random_tensor({4 * H, C}, g, 0.5));
    auto whh = parameter(random_tensor({4 * H, H}, g, 0.5));
    auto b = parameter(random_tensor({4 * H}, g, 0.5));
    const Tensor proj = random_tensor({B, H, L}, g);
    return grad_check({x, wih, whh, b}, [&] { return project(lstm(x, wih, whh, b), proj); });
  }));

  out.push_back(run("dense", configs, rng, [](std::mt19937_64& g) {
    const std::size_t B = uniform_int(g, 1, 4), D = uniform_int(g, 1, 6), O = uniform_int(g, 1, 4);
    auto x = parameter(random_tensor({B, D}, g));
    auto w = parameter(random_tensor({O, D}, g));
    auto b = parameter(random_tensor({O}, g));
    const Tensor proj = random_tensor({B, O}, g);
    return grad_check({x, w, b}, [&] { return project(linear(x, w, b), proj); });
  }));

  out.push_back(run("mse_loss", configs, rng, [](std::mt19937_64& g) {
    const std::size_t T = uniform_int(g, 1, 8);
    auto p = parameter(random_tensor({T, 3}, g));
    const Tensor target = random_tensor({T, 3}, g);
    return grad_check({p}, [&] { return mse_loss(p, target); });
  }));

  out.push_back(run("decoder", configs, rng, [](std::mt19937_64& g) {
    DecoderConfig cfg;
    cfg.conv_filters = {uniform_int(g, 2, 4), uniform_int(g, 2, 4), uniform_int(g, 2, 5)};
    const std::size_t f = uniform_int(g, 2, 5);
    cfg.res_filters = {f, uniform_int(g, 2, 5), f + uniform_int(g, 0, 1)};
    cfg.lstm_hidden = uniform_int(g, 2, 4);
    cfg.seed = g();
    const std::size_t M = uniform_int(g, 1, 3);
    const std::size_t N = uniform_int(g, 4, 30);
    const std::size_t B = uniform_int(g, 2, 4);
    DecoderModel model(M, N, cfg);
    auto x = parameter(random_tensor({B, M * N}, g));
    const Tensor target = random_tensor({B, 3}, g);
    // Train-mode batch norm normalizes with batch statistics, so the running
    // statistics it updates on every evaluation do not affect the loss.
    ForwardContext ctx{true, false, nullptr};
    std::vector<Var> inputs = model.parameters();
    inputs.push_back(x);
    return grad_check(
        inputs,
        [&] { return mse_loss(model.forward(x, ctx), target); },
        1e-5, 24);
  }));
  return out;
}

}  // namespace handkin::testing
