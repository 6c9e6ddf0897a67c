#ifndef UGCPL_ERRORS_HPP
#define UGCPL_ERRORS_HPP

#include <stdexcept>
#include <string>

namespace ugcpl {

// Error taxonomy shared by the whole library. The C API maps these onto
// numeric status codes; the CLI maps those onto process exit codes.

struct InvalidArgumentError : std::runtime_error {
  explicit InvalidArgumentError(const std::string& msg) : std::runtime_error(msg) {}
};

// a precondition the caller was responsible for (stepping a terminal env,
// reusing a stale tape, ...)
struct ContractViolationError : std::runtime_error {
  explicit ContractViolationError(const std::string& msg) : std::runtime_error(msg) {}
};

struct InsufficientDataError : std::runtime_error {
  explicit InsufficientDataError(const std::string& msg) : std::runtime_error(msg) {}
};

// numerically degenerate input (e.g. normalizing a near-zero vector)
struct DegenerateInputError : std::runtime_error {
  explicit DegenerateInputError(const std::string& msg) : std::runtime_error(msg) {}
};

// non-finite loss or gradient during training
struct DivergenceError : std::runtime_error {
  explicit DivergenceError(const std::string& msg) : std::runtime_error(msg) {}
};

struct IoError : std::runtime_error {
  explicit IoError(const std::string& msg) : std::runtime_error(msg) {}
};

struct ConfigError : std::runtime_error {
  explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

}  // namespace ugcpl

#endif  // UGCPL_ERRORS_HPP
