#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace nlevo {

class Error : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Invalid arguments to a density or mollifier (coincident points, h <= 0, NaN).
class DomainError : public Error {
 public:
  using Error::Error;
};

// Configuration or parameter validation failure. Carries every violation found.
class ConfigError : public Error {
 public:
  explicit ConfigError(std::vector<std::string> violations);
  explicit ConfigError(const std::string& violation)
      : ConfigError(std::vector<std::string>{violation}) {}

  const std::vector<std::string>& violations() const noexcept { return violations_; }

 private:
  std::vector<std::string> violations_;
};

// Non-finite intermediate values or solver breakdown.
class NumericalError : public Error {
 public:
  using Error::Error;
};

// Missing or unwritable files.
class IoError : public Error {
 public:
  using Error::Error;
};

}  // namespace nlevo
