#include "handkin/nn/mlr.hpp"

#include <Eigen/Cholesky>

namespace handkin::nn {

LinearModel mlr_fit(const Matrix& inputs, const Matrix& targets, double ridge) {
  const auto T = inputs.rows();
  const auto D = inputs.cols();
  if (T == 0) throw Error("mlr: no training rows");
  if (targets.rows() != T) throw Error("mlr: inputs and targets have different row counts");
  if (ridge < 0.0) throw Error("mlr: ridge must be non-negative");
  if (ridge == 0.0 && T <= D) {
    throw Error("mlr: " + std::to_string(T) + " rows for " + std::to_string(D) + " features needs ridge > 0");
  }
  const Eigen::RowVectorXd x_mean = inputs.colwise().mean();
  const Eigen::RowVectorXd y_mean = targets.colwise().mean();
  const Matrix xc = inputs.rowwise() - x_mean;
  const Matrix yc = targets.rowwise() - y_mean;

  Matrix gram = xc.transpose() * xc;
  gram.diagonal().array() += ridge;
  Eigen::LDLT<Matrix> ldlt(gram);
  const auto d = ldlt.vectorD();
  const double dmax = d.size() > 0 ? d.cwiseAbs().maxCoeff() : 0.0;
  if (ldlt.info() != Eigen::Success || (D > 0 && (d.minCoeff() <= 1e-12 * dmax || dmax == 0.0))) {
    throw Error("mlr: singular normal equations (collinear or constant features); use ridge > 0");
  }
  const Matrix w = ldlt.solve(xc.transpose() * yc);

  LinearModel m;
  m.ridge = ridge;
  m.weights.resize(D + 1, targets.cols());
  m.weights.row(0) = y_mean - x_mean * w;
  m.weights.bottomRows(D) = w;
  return m;
}

Matrix mlr_predict(const LinearModel& model, const Matrix& inputs) {
  if (static_cast<std::size_t>(inputs.cols()) != model.features()) {
    throw Error("mlr: inputs have " + std::to_string(inputs.cols()) + " features, model expects " +
                std::to_string(model.features()));
  }
  Matrix out = inputs * model.weights.bottomRows(inputs.cols());
  out.rowwise() += model.weights.row(0);
  return out;
}

}  // namespace handkin::nn
