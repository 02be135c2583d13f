#pragma once

#include <stdexcept>
#include <string>

namespace plmc {

enum class ErrorKind {
  invalid_target,
  invalid_kernel,
  invalid_covariance,
  conditioning,
  invalid_batch,
  invalid_schedule,
  diagnostic_unavailable,
  estimator_mismatch,
  invalid_curve,
  quadrature,
  precondition,
  config,
};

const char* to_string(ErrorKind kind);

class Error : public std::runtime_error {
 public:
  Error(ErrorKind kind, const std::string& what)
      : std::runtime_error(std::string(to_string(kind)) + ": " + what), kind_(kind) {}

  ErrorKind kind() const noexcept { return kind_; }

 private:
  ErrorKind kind_;
};

inline void require(bool ok, ErrorKind kind, const std::string& what) {
  if (!ok) throw Error(kind, what);
}

}  // namespace plmc
