#ifndef PSHLAB_ERROR_HPP
#define PSHLAB_ERROR_HPP

#include <stdexcept>
#include <string>

namespace pshlab {

enum class ErrorKind {
  invalid_argument,  // precondition on inputs violated
  domain,            // point or stencil outside the admissible region
  format,            // file magic/version/size problems
  io,                // filesystem
  numerical,         // non-finite data or failed certification
  geometry,          // construction impossible at this resolution
  config,            // experiment configuration
  internal,          // a self-check of the library failed
};

inline const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_argument: return "invalid_argument";
    case ErrorKind::domain: return "domain";
    case ErrorKind::format: return "format";
    case ErrorKind::io: return "io";
    case ErrorKind::numerical: return "numerical";
    case ErrorKind::geometry: return "geometry";
    case ErrorKind::config: return "config";
    case ErrorKind::internal: return "internal";
  }
  return "unknown";
}

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

}  // namespace pshlab

#endif  // PSHLAB_ERROR_HPP
