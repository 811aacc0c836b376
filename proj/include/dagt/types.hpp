#pragma once

#include <Eigen/Dense>

#include <stdexcept>
#include <string>

namespace dagt {

using Vec = Eigen::VectorXd;
using Mat = Eigen::MatrixXd;

/// Thrown when an iteration produces a non-finite coordinate.
struct DivergenceError : std::runtime_error {
  DivergenceError(int k, const std::string& what)
      : std::runtime_error(what), iteration(k) {}
  int iteration;
};

/// Formats a double with 17 significant digits (round-trip safe).
std::string full_precision(double v);

}  // namespace dagt
