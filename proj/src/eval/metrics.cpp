#include "handkin/eval/metrics.hpp"

#include "handkin/log.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace handkin::eval {

double pearson(const Eigen::Ref<const Vector>& a, const Eigen::Ref<const Vector>& b) {
  if (a.size() != b.size()) throw Error("pearson: length mismatch");
  if (a.size() < 2) throw Error("pearson: need at least 2 samples");
  const Vector da = a.array() - a.mean();
  const Vector db = b.array() - b.mean();
  const double saa = da.squaredNorm();
  const double sbb = db.squaredNorm();
  if (saa == 0.0 || sbb == 0.0) return std::numeric_limits<double>::quiet_NaN();
  const double r = da.dot(db) / std::sqrt(saa * sbb);
  return std::clamp(r, -1.0, 1.0);
}

AxisCv pearson_cv(const Matrix& actual, const Matrix& predicted) {
  if (actual.rows() != predicted.rows() || actual.cols() != 3 || predicted.cols() != 3) {
    throw Error("pearson_cv: expected two T x 3 matrices");
  }
  if (actual.rows() < 2) throw Error("pearson_cv: need T >= 2 rows, got " + std::to_string(actual.rows()));
  AxisCv out{};
  static constexpr const char* kAxes[] = {"x", "y", "z"};
  for (Eigen::Index j = 0; j < 3; ++j) {
    out[static_cast<std::size_t>(j)] = pearson(actual.col(j), predicted.col(j));
    if (std::isnan(out[static_cast<std::size_t>(j)])) {
      log::warn(std::string("pearson_cv: axis ") + kAxes[j] + " has zero variance; CV is undefined (NaN)");
    }
  }
  return out;
}

AxisCv trial_averaged_cv(const Matrix& actual, const Matrix& predicted, std::span<const std::size_t> trial_ids) {
  if (static_cast<std::size_t>(actual.rows()) != trial_ids.size()) throw Error("trial_averaged_cv: id count mismatch");
  std::map<std::size_t, std::vector<Eigen::Index>> groups;
  for (std::size_t r = 0; r < trial_ids.size(); ++r) groups[trial_ids[r]].push_back(static_cast<Eigen::Index>(r));
  AxisCv sum{0.0, 0.0, 0.0};
  std::array<std::size_t, 3> count{0, 0, 0};
  for (const auto& [id, rows] : groups) {
    if (rows.size() < 2) continue;
    const Matrix a = actual(rows, Eigen::all);
    const Matrix p = predicted(rows, Eigen::all);
    for (Eigen::Index j = 0; j < 3; ++j) {
      const double r = pearson(a.col(j), p.col(j));
      if (std::isnan(r)) continue;
      sum[static_cast<std::size_t>(j)] += r;
      ++count[static_cast<std::size_t>(j)];
    }
  }
  AxisCv out{};
  for (std::size_t j = 0; j < 3; ++j) {
    out[j] = count[j] > 0 ? sum[j] / static_cast<double>(count[j]) : std::numeric_limits<double>::quiet_NaN();
  }
  return out;
}

}  // namespace handkin::eval
