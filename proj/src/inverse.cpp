#include "handkin/inverse.hpp"

#include <cmath>

namespace handkin {

double auto_regularization(const Matrix& gain, double snr) {
  if (!(snr > 0.0)) throw Error("auto regularization: snr must be positive");
  // trace(A A^T) is the squared Frobenius norm.
  return gain.squaredNorm() / (static_cast<double>(gain.rows()) * snr * snr);
}

InverseOperator sloreta_inverse_operator(const Matrix& gain, const std::optional<Matrix>& noise_cov,
                                         std::optional<double> alpha, double snr) {
  const auto I = gain.rows();
  if (I == 0 || gain.cols() == 0) throw Error("sLORETA: empty lead field");
  if (!gain.allFinite()) throw Error("sLORETA: lead field has non-finite entries");

  Matrix C = Matrix::Identity(I, I);
  std::string cov_desc = "identity";
  if (noise_cov) {
    if (noise_cov->rows() != I || noise_cov->cols() != I) throw Error("sLORETA: noise covariance must be I x I");
    if (!noise_cov->isApprox(noise_cov->transpose(), 1e-12)) throw Error("sLORETA: noise covariance not symmetric");
    Eigen::LLT<Matrix> chol(*noise_cov);
    if (chol.info() != Eigen::Success) throw Error("sLORETA: noise covariance is not positive definite");
    C = *noise_cov;
    cov_desc = "user";
  }
  const double a = alpha ? *alpha : auto_regularization(gain, snr);
  if (!(a >= 0.0) || !std::isfinite(a)) throw Error("sLORETA: regularization must be >= 0");

  const Matrix G = gain * gain.transpose() + a * C;
  Eigen::SelfAdjointEigenSolver<Matrix> eig(G);
  if (eig.info() != Eigen::Success) throw Error("sLORETA: eigendecomposition failed");
  const Vector& lambda = eig.eigenvalues();
  const double lmax = lambda.cwiseAbs().maxCoeff();
  if (!(lambda.minCoeff() > 1e-12 * lmax)) {
    throw Error("sLORETA: A A^T + alpha C is singular (rank-deficient lead field with alpha = 0?)");
  }
  const Matrix& V = eig.eigenvectors();
  const Matrix G_inv = V * lambda.cwiseInverse().asDiagonal() * V.transpose();

  InverseOperator op;
  op.regularization = a;
  op.noise_cov_desc = cov_desc;
  const Matrix M = gain.transpose() * G_inv;  // K x I
  op.resolution_diag = (M.array() * gain.transpose().array()).rowwise().sum();
  op.kernel.resize(M.rows(), M.cols());
  for (Eigen::Index j = 0; j < M.rows(); ++j) {
    const double r = op.resolution_diag[j];
    if (!(r > 0.0)) throw Error("sLORETA: resolution diagonal at source " + std::to_string(j) + " is not positive");
    op.kernel.row(j) = M.row(j) / std::sqrt(r);
  }
  return op;
}

InverseOperator sloreta_inverse_operator(const LeadField& lf, const std::optional<Matrix>& noise_cov,
                                         std::optional<double> alpha, double snr) {
  validate(lf);
  return sloreta_inverse_operator(lf.gain, noise_cov, alpha, snr);
}

SourceEstimate apply_inverse(const InverseOperator& op, const Matrix& eeg, double fs) {
  if (eeg.rows() != op.kernel.cols()) {
    throw Error("apply_inverse: EEG has " + std::to_string(eeg.rows()) + " channels, operator expects " +
                std::to_string(op.kernel.cols()));
  }
  return SourceEstimate{op.kernel * eeg, fs};
}

}  // namespace handkin
