#pragma once

#include <stdexcept>
#include <string>

namespace tvising {

/// Malformed input: bad shapes, out-of-range indices, infeasible configs.
class ValidationError : public std::invalid_argument {
public:
  explicit ValidationError(const std::string& what) : std::invalid_argument(what) {}
};

/// The optimizer produced non-finite iterates or a node fit could not complete.
class SolverError : public std::runtime_error {
public:
  explicit SolverError(const std::string& what) : std::runtime_error(what) {}
};

class IoError : public std::runtime_error {
public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace tvising
