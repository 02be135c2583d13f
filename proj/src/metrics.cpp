#include "plmc/metrics.hpp"

#include <algorithm>
#include <cmath>

#include "plmc/error.hpp"

namespace plmc {

MomentAccumulator::MomentAccumulator(std::size_t dim, CovarianceMode mode)
    : mode_(mode), mean_(Eigen::VectorXd::Zero(static_cast<Eigen::Index>(dim))) {
  const auto d = static_cast<Eigen::Index>(dim);
  m2_ = mode == CovarianceMode::full ? Eigen::MatrixXd::Zero(d, d) : Eigen::MatrixXd::Zero(d, 1);
}

void MomentAccumulator::add(std::span<const double> x) {
  require(x.size() == dim(), ErrorKind::precondition, "sample has wrong dimension");
  const Eigen::Map<const Eigen::VectorXd> v(x.data(), mean_.size());
  ++n_;
  const Eigen::VectorXd before = v - mean_;
  mean_ += before / static_cast<double>(n_);
  const Eigen::VectorXd after = v - mean_;
  if (mode_ == CovarianceMode::full)
    m2_.noalias() += before * after.transpose();
  else
    m2_.col(0).array() += before.array() * after.array();
}

void MomentAccumulator::merge(const MomentAccumulator& other) {
  require(other.dim() == dim() && other.mode_ == mode_, ErrorKind::precondition,
          "cannot merge accumulators of different shape");
  if (other.n_ == 0) return;
  if (n_ == 0) {
    *this = other;
    return;
  }
  const double na = static_cast<double>(n_), nb = static_cast<double>(other.n_);
  const double n = na + nb;
  const Eigen::VectorXd delta = other.mean_ - mean_;
  if (mode_ == CovarianceMode::full)
    m2_ += other.m2_ + (na * nb / n) * delta * delta.transpose();
  else
    m2_.col(0).array() += other.m2_.col(0).array() + (na * nb / n) * delta.array().square();
  mean_ += delta * (nb / n);
  n_ += other.n_;
}

MomentEstimate MomentAccumulator::estimate() const {
  const auto d = mean_.size();
  MomentEstimate e;
  e.n = n_;
  e.mode = mode_;
  e.mean.assign(mean_.data(), mean_.data() + d);
  const double denom = n_ > 1 ? static_cast<double>(n_ - 1) : 1.0;
  if (mode_ == CovarianceMode::full) {
    e.cov = m2_ / denom;
    e.cov = (0.5 * (e.cov + e.cov.transpose())).eval();
  } else {
    e.cov = Eigen::MatrixXd::Zero(d, d);
    e.cov.diagonal() = m2_.col(0) / denom;
  }
  e.mean_std_error.resize(static_cast<std::size_t>(d));
  for (Eigen::Index j = 0; j < d; ++j)
    e.mean_std_error[static_cast<std::size_t>(j)] =
        n_ > 0 ? std::sqrt(std::max(0.0, e.cov(j, j)) / static_cast<double>(n_)) : 0.0;
  return e;
}

MomentEstimate estimate_moments(const std::vector<Vector>& samples, CovarianceMode mode) {
  require(!samples.empty(), ErrorKind::precondition, "no samples");
  const std::size_t d = samples.front().size();
  MomentAccumulator acc(d, mode);
  for (const Vector& s : samples) acc.add(s);
  MomentEstimate e = acc.estimate();

  const auto dd = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd m4 = Eigen::MatrixXd::Zero(dd, dd);
  Eigen::VectorXd c(dd);
  for (const Vector& s : samples) {
    for (Eigen::Index j = 0; j < dd; ++j) c(j) = s[static_cast<std::size_t>(j)] - e.mean[static_cast<std::size_t>(j)];
    if (mode == CovarianceMode::full) {
      const Eigen::VectorXd c2 = c.array().square();
      m4.noalias() += c2 * c2.transpose();
    } else {
      m4.diagonal().array() += c.array().pow(4);
    }
  }
  const double n = static_cast<double>(samples.size());
  m4 /= n;
  e.cov_std_error = Eigen::MatrixXd::Zero(dd, dd);
  for (Eigen::Index a = 0; a < dd; ++a)
    for (Eigen::Index b = 0; b < dd; ++b) {
      if (mode == CovarianceMode::diagonal && a != b) continue;
      // Var of the product (x_a - mu_a)(x_b - mu_b) is E[c_a^2 c_b^2] - cov_ab^2.
      const double var = m4(a, b) - e.cov(a, b) * e.cov(a, b);
      e.cov_std_error(a, b) = std::sqrt(std::max(0.0, var) / n);
    }
  return e;
}

const char* to_string(W2Estimator e) {
  switch (e) {
    case W2Estimator::gaussian_moment: return "gaussian-moment";
    case W2Estimator::exact_1d: return "exact-1d";
    case W2Estimator::sliced: return "sliced";
  }
  return "unknown";
}

namespace {

Eigen::MatrixXd psd_sqrt(const Eigen::MatrixXd& m) {
  require(m.rows() == m.cols(), ErrorKind::invalid_covariance, "covariance must be square");
  const double scale = std::max(1.0, m.cwiseAbs().maxCoeff());
  require((m - m.transpose()).cwiseAbs().maxCoeff() <= 1e-10 * scale, ErrorKind::invalid_covariance,
          "covariance is not symmetric");
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(0.5 * (m + m.transpose()));
  require(eig.info() == Eigen::Success, ErrorKind::invalid_covariance, "eigendecomposition failed");
  const Eigen::VectorXd lambda = eig.eigenvalues();
  require(lambda.minCoeff() >= -1e-10 * scale, ErrorKind::invalid_covariance, "covariance is indefinite");
  return eig.eigenvectors() * lambda.cwiseMax(0.0).cwiseSqrt().asDiagonal() * eig.eigenvectors().transpose();
}

double mean_gap_sq(const Vector& a, const Vector& b) {
  require(a.size() == b.size(), ErrorKind::estimator_mismatch, "means have different dimension");
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += (a[j] - b[j]) * (a[j] - b[j]);
  return s;
}

}  // namespace

double w2_gaussian(const Vector& mean1, const Eigen::MatrixXd& cov1, const Vector& mean2,
                   const Eigen::MatrixXd& cov2) {
  const auto d = static_cast<Eigen::Index>(mean1.size());
  require(cov1.rows() == d && cov2.rows() == d, ErrorKind::estimator_mismatch,
          "covariance shape does not match mean");
  const Eigen::MatrixXd r2 = psd_sqrt(cov2);
  psd_sqrt(cov1);  // validation only
  const Eigen::MatrixXd cross = psd_sqrt(r2 * cov1 * r2);
  const double tr = cov1.trace() + cov2.trace() - 2.0 * cross.trace();
  return std::max(0.0, mean_gap_sq(mean1, mean2) + tr);
}

double w2_gaussian_diag(const Vector& mean1, const Vector& var1, const Vector& mean2, const Vector& var2) {
  require(var1.size() == mean1.size() && var2.size() == mean2.size(), ErrorKind::estimator_mismatch,
          "variance shape does not match mean");
  double s = mean_gap_sq(mean1, mean2);
  for (std::size_t j = 0; j < var1.size(); ++j) {
    require(var1[j] >= -1e-10 && var2[j] >= -1e-10, ErrorKind::invalid_covariance, "negative variance");
    const double r = std::sqrt(std::max(0.0, var1[j])) - std::sqrt(std::max(0.0, var2[j]));
    s += r * r;
  }
  return s;
}

double moment_w2(const MomentEstimate& est, const Vector& target_mean, const Vector& target_var) {
  if (est.mode == CovarianceMode::diagonal) {
    Vector var(est.mean.size());
    for (std::size_t j = 0; j < var.size(); ++j) var[j] = est.cov(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(j));
    return w2_gaussian_diag(est.mean, var, target_mean, target_var);
  }
  const Eigen::Map<const Eigen::VectorXd> tv(target_var.data(), static_cast<Eigen::Index>(target_var.size()));
  return w2_gaussian(est.mean, est.cov, target_mean, Eigen::MatrixXd(tv.asDiagonal()));
}

double moment_w2_std_error(const MomentEstimate& est, const Vector& target_mean, const Vector& target_var) {
  require(est.cov_std_error.size() > 0, ErrorKind::precondition, "covariance standard errors not available");
  require(target_mean.size() == est.mean.size() && target_var.size() == est.mean.size(),
          ErrorKind::estimator_mismatch, "target shape does not match estimate");
  const double n = static_cast<double>(est.n);
  double var = 0.0;
  for (std::size_t j = 0; j < est.mean.size(); ++j) {
    const auto jj = static_cast<Eigen::Index>(j);
    const double v = std::max(est.cov(jj, jj), 0.0);
    const double dm = est.mean[j] - target_mean[j];
    var += 4.0 * dm * dm * v / n;
    if (v > 0.0) {
      // d/dv (sqrt(v) - sigma)^2 = (sqrt(v) - sigma) / sqrt(v)
      const double ds = (std::sqrt(v) - std::sqrt(target_var[j])) / std::sqrt(v);
      const double se_v = est.cov_std_error(jj, jj);
      var += ds * ds * se_v * se_v;
    }
  }
  return std::sqrt(var);
}

double w2_exact_1d(std::vector<double> a, std::vector<double> b) {
  require(a.size() == b.size(), ErrorKind::estimator_mismatch, "sample counts differ");
  require(!a.empty(), ErrorKind::estimator_mismatch, "no samples");
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += (a[i] - b[i]) * (a[i] - b[i]);
  return s / static_cast<double>(a.size());
}

W2Estimate w2_sliced_directions(const std::vector<Vector>& a, const std::vector<Vector>& b,
                                const std::vector<Vector>& directions) {
  require(a.size() == b.size(), ErrorKind::estimator_mismatch, "sample counts differ");
  require(!a.empty(), ErrorKind::estimator_mismatch, "no samples");
  require(!directions.empty(), ErrorKind::precondition, "need at least one direction");
  const std::size_t d = a.front().size();
  std::vector<double> pa(a.size()), pb(b.size());
  double sum = 0.0, sum_sq = 0.0;
  for (const Vector& e : directions) {
    require(e.size() == d, ErrorKind::estimator_mismatch, "direction has wrong dimension");
    for (std::size_t i = 0; i < a.size(); ++i) {
      double x = 0.0, y = 0.0;
      for (std::size_t j = 0; j < d; ++j) {
        x += e[j] * a[i][j];
        y += e[j] * b[i][j];
      }
      pa[i] = x;
      pb[i] = y;
    }
    const double w = w2_exact_1d(pa, pb);
    sum += w;
    sum_sq += w * w;
  }
  const double n = static_cast<double>(directions.size());
  W2Estimate out;
  out.estimator = W2Estimator::sliced;
  out.value_sq = sum / n;
  out.std_error = n > 1 ? std::sqrt(std::max(0.0, (sum_sq - n * out.value_sq * out.value_sq) / (n - 1.0)) / n) : 0.0;
  return out;
}

W2Estimate w2_sliced(const std::vector<Vector>& a, const std::vector<Vector>& b, std::size_t n_directions,
                     RngStream& rng) {
  require(n_directions >= 1, ErrorKind::precondition, "need at least one direction");
  require(!a.empty(), ErrorKind::estimator_mismatch, "no samples");
  const std::size_t d = a.front().size();
  std::vector<Vector> dirs(n_directions, Vector(d));
  for (Vector& e : dirs) {
    double norm = 0.0;
    do {
      rng.fill_normal(e);
      norm = 0.0;
      for (double x : e) norm += x * x;
    } while (norm == 0.0);
    norm = std::sqrt(norm);
    for (double& x : e) x /= norm;
  }
  return w2_sliced_directions(a, b, dirs);
}

LogLogFit fit_loglog(std::span<const double> x, std::span<const double> y) {
  require(x.size() == y.size(), ErrorKind::invalid_curve, "x and y lengths differ");
  require(x.size() >= 2, ErrorKind::invalid_curve, "need at least two points");
  const double n = static_cast<double>(x.size());
  std::vector<double> lx(x.size()), ly(y.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    require(x[i] > 0.0 && y[i] > 0.0 && std::isfinite(x[i]) && std::isfinite(y[i]),
            ErrorKind::invalid_curve, "log-log fit needs positive finite values");
    lx[i] = std::log(x[i]);
    ly[i] = std::log(y[i]);
  }
  double mx = 0.0, my = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    mx += lx[i];
    my += ly[i];
  }
  mx /= n;
  my /= n;
  double sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    sxx += (lx[i] - mx) * (lx[i] - mx);
    sxy += (lx[i] - mx) * (ly[i] - my);
  }
  require(sxx > 1e-24 * std::max(1.0, mx * mx), ErrorKind::invalid_curve, "degenerate design: x values coincide");
  for (std::size_t i = 0; i < lx.size(); ++i)
    for (std::size_t j = i + 1; j < lx.size(); ++j)
      require(lx[i] != lx[j], ErrorKind::invalid_curve, "duplicate x value");
  LogLogFit fit;
  fit.slope = sxy / sxx;
  fit.intercept = my - fit.slope * mx;
  double rss = 0.0;
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const double r = ly[i] - (fit.intercept + fit.slope * lx[i]);
    rss += r * r;
  }
  fit.residual = std::sqrt(rss / n);
  return fit;
}

LogLogFit error_curve(const std::vector<std::pair<double, W2Estimate>>& points) {
  require(points.size() >= 3, ErrorKind::invalid_curve, "need at least three points");
  std::vector<double> x, y;
  for (const auto& [calls, w] : points) {
    x.push_back(calls);
    y.push_back(w.value_sq);
  }
  return fit_loglog(x, y);
}

}  // namespace plmc
