#pragma once
// Shared error types and constants.

#include <stdexcept>
#include <string>

namespace dualcharge {

inline constexpr double kPi = 3.14159265358979323846;

/// Evaluation of an interaction kernel at a coincident pair, or of a closed
/// form at a point where it diverges.
class SingularityError : public std::runtime_error {
 public:
  explicit SingularityError(const std::string& what) : std::runtime_error(what) {}
};

/// Adaptive integration failed to reach the requested tolerance.
class QuadratureError : public std::runtime_error {
 public:
  explicit QuadratureError(const std::string& what) : std::runtime_error(what) {}
};

/// Invalid or inconsistent configuration (file keys, parameter ranges).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

/// A Monte Carlo chain produced a non-finite state or an estimator collapsed.
class SamplerError : public std::runtime_error {
 public:
  explicit SamplerError(const std::string& what) : std::runtime_error(what) {}
};

/// The outer ascent iteration left the trust region and is considered divergent.
class DivergenceError : public std::runtime_error {
 public:
  explicit DivergenceError(const std::string& what) : std::runtime_error(what) {}
};

/// Output directory already holds a result and overwrite was not requested.
class OverwriteRefused : public std::runtime_error {
 public:
  explicit OverwriteRefused(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace dualcharge
