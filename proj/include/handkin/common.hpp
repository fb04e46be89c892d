#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <stdexcept>
#include <string>

namespace handkin {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

// Raised for malformed inputs and violated preconditions across the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

enum class Domain { source, sensor };

inline const char* to_string(Domain d) { return d == Domain::source ? "source" : "sensor"; }
Domain parse_domain(const std::string& s);

}  // namespace handkin
