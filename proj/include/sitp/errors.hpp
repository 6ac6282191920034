#pragma once

#include <stdexcept>
#include <string>

namespace sitp {

// Raised when a configuration value is out of its documented range. The
// message always starts with the offending field name.
class ConfigError : public std::invalid_argument {
 public:
  ConfigError(const std::string& field, const std::string& message)
      : std::invalid_argument(field + ": " + message), field_(field), message_(message) {}
  const std::string& field() const { return field_; }
  const std::string& message() const { return message_; }

  // Same error with `prefix` prepended to the field path.
  ConfigError nested(const std::string& prefix) const { return ConfigError(prefix + field_, message_); }

 private:
  std::string field_;
  std::string message_;
};

}  // namespace sitp
