#pragma once

#include <stdexcept>
#include <string>

namespace dce {

// Invalid or inconsistent configuration input (CLI exit code 2).
class ConfigError : public std::runtime_error {
  public:
    explicit ConfigError(const std::string& msg) : std::runtime_error(msg) {}
};

// Numerical-regime failure: eigenvalue gap collapse, rank deficiency,
// orthogonal alignment reference and the like (CLI exit code 3).
class NumericalError : public std::runtime_error {
  public:
    explicit NumericalError(const std::string& msg) : std::runtime_error(msg) {}
};

} // namespace dce
