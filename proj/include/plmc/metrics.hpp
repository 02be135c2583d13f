#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "plmc/potential.hpp"
#include "plmc/rng.hpp"

namespace plmc {

enum class CovarianceMode { diagonal, full };

struct MomentEstimate {
  std::size_t n = 0;
  CovarianceMode mode = CovarianceMode::diagonal;
  Vector mean;
  Eigen::MatrixXd cov;            // unbiased; off-diagonal zero in diagonal mode
  Vector mean_std_error;
  Eigen::MatrixXd cov_std_error;  // empty unless computed from the raw samples
};

// Streaming mean/covariance with an exact pairwise merge (Chan et al.).
class MomentAccumulator {
 public:
  explicit MomentAccumulator(std::size_t dim, CovarianceMode mode = CovarianceMode::diagonal);

  void add(std::span<const double> x);
  void merge(const MomentAccumulator& other);

  std::size_t count() const { return n_; }
  std::size_t dim() const { return static_cast<std::size_t>(mean_.size()); }
  MomentEstimate estimate() const;

 private:
  std::size_t n_ = 0;
  CovarianceMode mode_;
  Eigen::VectorXd mean_;
  Eigen::MatrixXd m2_;  // centred second moments; d x 1 in diagonal mode
};

// Moments plus covariance standard errors from the fourth central moments.
MomentEstimate estimate_moments(const std::vector<Vector>& samples,
                                CovarianceMode mode = CovarianceMode::diagonal);

enum class W2Estimator { gaussian_moment, exact_1d, sliced };
const char* to_string(W2Estimator e);

struct W2Estimate {
  double value_sq = 0.0;
  W2Estimator estimator = W2Estimator::gaussian_moment;
  double std_error = 0.0;
};

double w2_gaussian(const Vector& mean1, const Eigen::MatrixXd& cov1, const Vector& mean2,
                   const Eigen::MatrixXd& cov2);
// Diagonal covariances given as variance vectors.
double w2_gaussian_diag(const Vector& mean1, const Vector& var1, const Vector& mean2, const Vector& var2);

// Moment-W2 of an estimate against a Gaussian target with diagonal covariance.
double moment_w2(const MomentEstimate& est, const Vector& target_mean, const Vector& target_var);

// Delta-method standard error of moment_w2 in diagonal mode; needs the
// covariance standard errors from estimate_moments.
double moment_w2_std_error(const MomentEstimate& est, const Vector& target_mean, const Vector& target_var);

double w2_exact_1d(std::vector<double> a, std::vector<double> b);

W2Estimate w2_sliced(const std::vector<Vector>& a, const std::vector<Vector>& b, std::size_t n_directions,
                     RngStream& rng);
// Same estimator over caller-supplied unit directions.
W2Estimate w2_sliced_directions(const std::vector<Vector>& a, const std::vector<Vector>& b,
                                const std::vector<Vector>& directions);

struct LogLogFit {
  double slope = 0.0;
  double intercept = 0.0;
  double residual = 0.0;  // root mean square of the log-space residuals
};

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y);

// OLS of log(value_sq) against log(gradient_calls).
LogLogFit error_curve(const std::vector<std::pair<double, W2Estimate>>& points);

}  // namespace plmc
