#pragma once

#include <stdexcept>
#include <string>

namespace betaflow {

// Error taxonomy maps onto CLI exit codes: usage 2, data 3, numerical 4.
struct usage_error : std::runtime_error {
  explicit usage_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct data_error : std::runtime_error {
  explicit data_error(const std::string& msg) : std::runtime_error(msg) {}
};

struct numerical_error : std::runtime_error {
  explicit numerical_error(const std::string& msg) : std::runtime_error(msg) {}
};

// Raised when a CLIME column subproblem has an empty feasible set at the
// requested constraint level.
struct clime_infeasible : numerical_error {
  clime_infeasible(int column, const std::string& msg)
      : numerical_error(msg), column(column) {}
  int column;
};

}  // namespace betaflow
