#include "handkin/nn/optim.hpp"

#include <cmath>

namespace handkin::nn {

void adam_update(Tensor& param, const Tensor& grad, AdamMoments& moments, std::uint64_t step, const AdamConfig& cfg) {
  if (!param.same_shape(grad)) {
    throw Error("adam: gradient shape " + shape_string(grad.shape()) + " does not match parameter " +
                shape_string(param.shape()));
  }
  if (step == 0) throw Error("adam: step index is 1-based");
  if (moments.m.size() != param.size()) {
    moments.m = Tensor::zeros_like(param);
    moments.v = Tensor::zeros_like(param);
  }
  const double t = static_cast<double>(step);
  const double c1 = 1.0 - std::pow(cfg.beta1, t);
  const double c2 = 1.0 - std::pow(cfg.beta2, t);
  for (std::size_t i = 0; i < param.size(); ++i) {
    const double g = grad[i];
    moments.m[i] = cfg.beta1 * moments.m[i] + (1.0 - cfg.beta1) * g;
    moments.v[i] = cfg.beta2 * moments.v[i] + (1.0 - cfg.beta2) * g * g;
    const double mhat = moments.m[i] / c1;
    const double vhat = moments.v[i] / c2;
    param[i] -= cfg.learning_rate * mhat / (std::sqrt(vhat) + cfg.eps);
  }
}

Adam::Adam(std::vector<Var> params, AdamConfig cfg) : params_(std::move(params)), moments_(params_.size()), cfg_(cfg) {}

void Adam::step() {
  ++t_;
  for (std::size_t i = 0; i < params_.size(); ++i) {
    adam_update(params_[i]->value, params_[i]->ensure_grad(), moments_[i], t_, cfg_);
  }
}

void Adam::zero_grad() { nn::zero_grad(params_); }

}  // namespace handkin::nn
