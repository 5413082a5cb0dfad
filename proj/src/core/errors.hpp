#pragma once

#include <stdexcept>
#include <string>

namespace so3rep {

// Thrown when an iterative or quadrature-based computation fails its own
// convergence criterion (e.g. refining the integration grid still moves the
// result by more than the accepted threshold).
class NotConverged : public std::runtime_error {
 public:
  explicit NotConverged(const std::string& what) : std::runtime_error(what) {}
};

// Thrown by the training loop when the objective becomes non-finite.
class Divergence : public std::runtime_error {
 public:
  explicit Divergence(const std::string& what) : std::runtime_error(what) {}
};

// Thrown when a file cannot be opened, parsed, read, or written.
class IoError : public std::runtime_error {
 public:
  explicit IoError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace so3rep
