#include "plmc/error.hpp"

namespace plmc {

const char* to_string(ErrorKind kind) {
  switch (kind) {
    case ErrorKind::invalid_target: return "invalid target";
    case ErrorKind::invalid_kernel: return "invalid kernel";
    case ErrorKind::invalid_covariance: return "invalid covariance";
    case ErrorKind::conditioning: return "conditioning";
    case ErrorKind::invalid_batch: return "invalid batch";
    case ErrorKind::invalid_schedule: return "invalid schedule";
    case ErrorKind::diagnostic_unavailable: return "diagnostic unavailable";
    case ErrorKind::estimator_mismatch: return "estimator mismatch";
    case ErrorKind::invalid_curve: return "invalid curve";
    case ErrorKind::quadrature: return "quadrature";
    case ErrorKind::precondition: return "precondition";
    case ErrorKind::config: return "config";
  }
  return "error";
}

}  // namespace plmc
