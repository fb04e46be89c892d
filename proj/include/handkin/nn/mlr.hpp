#pragma once

#include "handkin/common.hpp"

namespace handkin::nn {

inline constexpr double kDefaultRidge = 1e-6;

// Ridge regression with an unpenalized intercept. weights is (D+1) x outputs:
// row 0 holds the intercept, rows 1..D the per-feature coefficients.
struct LinearModel {
  Matrix weights;
  double ridge = kDefaultRidge;
  std::size_t features() const { return weights.rows() > 0 ? static_cast<std::size_t>(weights.rows() - 1) : 0; }
};

LinearModel mlr_fit(const Matrix& inputs, const Matrix& targets, double ridge = kDefaultRidge);
Matrix mlr_predict(const LinearModel& model, const Matrix& inputs);

}  // namespace handkin::nn
