#pragma once

#include <stdexcept>
#include <string>

namespace bearline {

// Argument outside its mathematical domain (bad index, t outside [0, t_f], ...).
class DomainError : public std::domain_error {
 public:
  explicit DomainError(const std::string& what) : std::domain_error(what) {}
};

// Geometry that makes a quantity undefined (target on the vertical axis,
// roll at +-pi/2, non-invertible information matrix).
class SingularityError : public std::domain_error {
 public:
  explicit SingularityError(const std::string& what) : std::domain_error(what) {}
};

// Inconsistent object wiring (mismatched final times, wrong dimensions).
class ConfigError : public std::runtime_error {
 public:
  explicit ConfigError(const std::string& what) : std::runtime_error(what) {}
};

// Scenario/config file content that fails validation; carries the field name.
class ValidationError : public std::runtime_error {
 public:
  ValidationError(const std::string& field, const std::string& reason)
      : std::runtime_error(field + ": " + reason), field_(field) {}
  const std::string& field() const { return field_; }

 private:
  std::string field_;
};

// Persisted file with an unsupported format_version.
class VersionError : public std::runtime_error {
 public:
  explicit VersionError(const std::string& what) : std::runtime_error(what) {}
};

}  // namespace bearline
