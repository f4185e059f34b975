#pragma once

#include <stdexcept>
#include <string>
#include <vector>

namespace qlink {

// Bad operation input: wrong dimension, out-of-range parameter, matrix that
// fails a structural check (unitarity, positivity, ...).
class DomainError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

// A matrix that must be strictly positive definite is numerically singular.
// The sampler maps this to a zero-likelihood point instead of aborting.
class SingularityError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// Configuration rejected; carries the offending field names so callers can
// report all of them at once.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& message, std::vector<std::string> fields)
      : std::runtime_error(format(message, fields)), fields_(std::move(fields)) {}

  const std::vector<std::string>& fields() const noexcept { return fields_; }

 private:
  static std::string format(const std::string& message,
                            const std::vector<std::string>& fields) {
    std::string out = message;
    if (!fields.empty()) {
      out += " [";
      for (std::size_t i = 0; i < fields.size(); ++i) {
        if (i) out += ", ";
        out += fields[i];
      }
      out += "]";
    }
    return out;
  }

  std::vector<std::string> fields_;
};

}  // namespace qlink
