#pragma once

#include <stdexcept>
#include <string>

namespace zpf {

/// Raised when an operation's precondition on its arguments is violated.
class InvalidInput : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Raised by the configuration loader. `is_parse_error` separates malformed
/// JSON from documents that parse but violate the schema or a physics invariant.
class ConfigError : public std::runtime_error {
 public:
  ConfigError(const std::string& what, bool is_parse_error = false)
      : std::runtime_error(what), parse_error_(is_parse_error) {}
  bool is_parse_error() const noexcept { return parse_error_; }

 private:
  bool parse_error_;
};

}  // namespace zpf
