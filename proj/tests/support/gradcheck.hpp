#pragma once

#include "handkin/nn/graph.hpp"

#include <functional>
#include <random>
#include <vector>

namespace handkin::testing {

nn::Tensor random_tensor(nn::Shape shape, std::mt19937_64& rng, double scale = 1.0);

struct GradCheckResult {
  double max_rel_error = 0.0;
  std::size_t checked = 0;
};

// Central finite differences of `loss` (which must rebuild the graph on each
// call and return a scalar) against backward(), over up to `max_per_input`
// entries of each input. Relative error is |a - n| / max(|a|, |n|, floor).
GradCheckResult grad_check(const std::vector<nn::Var>& inputs, const std::function<nn::Var()>& loss,
                           double eps = 1e-5, std::size_t max_per_input = 64, double floor = 1e-6);

// sum(out * weights) with fixed random weights, so every output entry
// contributes a distinct gradient.
nn::Var project(const nn::Var& out, const nn::Tensor& weights);

struct OpGradReport {
  std::string op;
  std::size_t configs = 0;
  double max_rel_error = 0.0;
};

// Randomized gradient checks over `configs` shapes per differentiable op,
// the composed decoder included (train mode, dropout off).
std::vector<OpGradReport> gradient_suite(std::uint64_t seed, std::size_t configs = 5);

}  // namespace handkin::testing
