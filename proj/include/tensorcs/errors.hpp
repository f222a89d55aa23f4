#pragma once

#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Dense>

namespace tensorcs {

// Bad shapes, out-of-range modes, inconsistent configurations.
class InvalidArgument : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// Non-convergence, non-finite values.
class NumericalFailure : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// An exact computation would exceed its configured budget.
class ResourceLimit : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Gradient descent diverged; carries the last finite iterate.
class StepSizeFailure : public NumericalFailure {
 public:
  StepSizeFailure(const std::string& what, std::vector<Eigen::MatrixXd> last_iterate)
      : NumericalFailure(what), last_iterate_(std::move(last_iterate)) {}

  const std::vector<Eigen::MatrixXd>& last_iterate() const noexcept { return last_iterate_; }

 private:
  std::vector<Eigen::MatrixXd> last_iterate_;
};

}  // namespace tensorcs
