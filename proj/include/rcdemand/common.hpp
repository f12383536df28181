// rcdemand — market-level demand from heterogeneous random-coefficient
// discrete-choice models: simulation, share inversion, density recovery.
//
// Error types shared across the library.  Config errors are caller mistakes
// (bad dimensions, bad options); numerical errors are runtime failures of an
// otherwise well-posed computation (non-convergence, loss of coverage).

#pragma once

#include <stdexcept>
#include <string>

namespace rcd {

enum class ErrorKind { config, numerical };

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(what), kind_(kind) {}
  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

[[noreturn]] inline void throw_config(const std::string& msg) {
  throw Error(ErrorKind::config, msg);
}

[[noreturn]] inline void throw_numerical(const std::string& msg) {
  throw Error(ErrorKind::numerical, msg);
}

inline void require_config(bool ok, const std::string& msg) {
  if (!ok) throw_config(msg);
}

inline void require_numerical(bool ok, const std::string& msg) {
  if (!ok) throw_numerical(msg);
}

}  // namespace rcd
