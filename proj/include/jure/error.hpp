#pragma once

#include <stdexcept>
#include <string>

namespace jure {

/// Failure categories. The CLI maps these onto process exit codes.
enum class ErrorKind {
  dimension,  // shapes of operands disagree
  config,     // invalid hyperparameter or configuration value
  data,       // unreadable or malformed input data
  numeric,    // non-finite loss or gradient
  load,       // checkpoint could not be read back
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::dimension: return "dimension error";
    case ErrorKind::config: return "config error";
    case ErrorKind::data: return "data error";
    case ErrorKind::numeric: return "numeric error";
    case ErrorKind::load: return "load error";
  }
  return "error";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void fail(ErrorKind kind, const std::string& what) {
  throw Error(kind, what);
}

inline void require_dims(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::dimension, what);
}

inline void require_config(bool ok, const std::string& what) {
  if (!ok) fail(ErrorKind::config, what);
}

}  // namespace jure
