#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace bouss {

/// Base class for every error raised by the library.
class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

/// A precondition on user-supplied input was violated.
class InvalidArgument : public Error {
 public:
  using Error::Error;
};

/// Configuration validation failed. Carries every violation found, not just
/// the first one.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations);

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

/// Nonlinear (Picard) iteration hit its iteration cap.
class PicardDiverged : public Error {
 public:
  PicardDiverged(int iterations, double last_change);

  int iterations() const noexcept { return iterations_; }
  double last_change() const noexcept { return last_change_; }

 private:
  int iterations_;
  double last_change_;
};

/// Sparse factorization failed or the residual exceeded the tolerance.
class LinearSolveFailed : public Error {
 public:
  using Error::Error;
};

}  // namespace bouss
