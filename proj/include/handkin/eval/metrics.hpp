#pragma once

#include "handkin/common.hpp"

#include <array>
#include <span>

namespace handkin::eval {

using AxisCv = std::array<double, 3>;

// Pearson correlation of two equal-length series. NaN when either has zero variance.
double pearson(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b);

// Per-axis correlation of T x 3 matrices. A constant axis yields NaN and a
// logged warning. Throws for T < 2 or mismatched shapes.
AxisCv pearson_cv(const Matrix& actual, const Matrix& predicted);

// Per-trial CVs (rows grouped by trial id, contiguous or not), averaged over
// trials per axis ignoring NaN entries.
AxisCv trial_averaged_cv(const Matrix& actual, const Matrix& predicted, std::span<const std::size_t> trial_ids);

}  // namespace handkin::eval
