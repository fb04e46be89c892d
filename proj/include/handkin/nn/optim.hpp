#pragma once

#include "handkin/nn/graph.hpp"

namespace handkin::nn {

struct AdamConfig {
  double learning_rate = 1e-3;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamMoments {
  Tensor m;
  Tensor v;
};

// One bias-corrected Adam update of `param`; `step` is the 1-based step index.
void adam_update(Tensor& param, const Tensor& grad, AdamMoments& moments, std::uint64_t step, const AdamConfig& cfg);

class Adam {
 public:
  Adam(std::vector<Var> params, AdamConfig cfg);
  void step();
  void zero_grad();
  std::uint64_t steps() const { return t_; }

 private:
  std::vector<Var> params_;
  std::vector<AdamMoments> moments_;
  AdamConfig cfg_;
  std::uint64_t t_ = 0;
};

}  // namespace handkin::nn
