#pragma once

#include "handkin/common.hpp"
#include "handkin/lead_field.hpp"

#include <optional>
#include <string>

namespace handkin {

// Standardized minimum-norm (sLORETA) operator: kernel is sources x sensors.
struct InverseOperator {
  Matrix kernel;
  Vector resolution_diag;  // R_jj of the unstandardized resolution matrix
  double regularization = 0.0;
  std::string noise_cov_desc;
};

struct SourceEstimate {
  Matrix activations;  // sources x samples
  double fs = 0.0;
};

constexpr double kDefaultInverseSnr = 3.0;

// trace(A A^T) / (I * snr^2)
double auto_regularization(const Matrix& gain, double snr = kDefaultInverseSnr);

// alpha == nullopt selects auto_regularization(gain, snr). noise_cov == nullopt is identity.
InverseOperator sloreta_inverse_operator(const Matrix& gain, const std::optional<Matrix>& noise_cov = {},
                                         std::optional<double> alpha = {}, double snr = kDefaultInverseSnr);
// Validates the lead field first.
InverseOperator sloreta_inverse_operator(const LeadField& lf, const std::optional<Matrix>& noise_cov = {},
                                         std::optional<double> alpha = {}, double snr = kDefaultInverseSnr);

SourceEstimate apply_inverse(const InverseOperator& op, const Matrix& eeg, double fs);

}  // namespace handkin
