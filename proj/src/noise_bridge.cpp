#include "plmc/noise_bridge.hpp"

#include <algorithm>
#include <cmath>

#include "plmc/error.hpp"
#include "plmc/kernel.hpp"

namespace plmc {

namespace {

void check_indices(std::size_t k, const std::vector<std::size_t>& indices) {
  require(k >= 1, ErrorKind::invalid_batch, "batch size must be at least 1");
  for (std::size_t n = 0; n < indices.size(); ++n) {
    require(indices[n] < k, ErrorKind::invalid_batch, "index outside [0, k-1]");
    require(n == 0 || indices[n - 1] < indices[n], ErrorKind::invalid_batch,
            "indices must be strictly increasing");
  }
}

std::size_t interpolant_point(std::size_t i, InterpolantConvention convention) {
  return convention == InterpolantConvention::exclusive ? i : i + 1;
}

}  // namespace

std::vector<std::size_t> sample_index_set(std::size_t k, RngStream& rng) {
  require(k >= 1, ErrorKind::invalid_batch, "batch size must be at least 1");
  if (k == 1) return {0};
  const double log_q = std::log1p(-1.0 / static_cast<double>(k));
  std::vector<std::size_t> out;
  std::size_t pos = 0;
  while (true) {
    // Number of failures before the next success.
    const double gap = std::floor(std::log(rng.uniform(RngLane::selection)) / log_q);
    if (gap >= static_cast<double>(k - pos)) break;
    pos += static_cast<std::size_t>(gap);
    out.push_back(pos);
    if (++pos >= k) break;
  }
  return out;
}

BatchPlan sample_overdamped_bridge(std::size_t k, double eta, std::size_t dim,
                                   const std::vector<std::size_t>& indices, RngStream& rng,
                                   InterpolantConvention convention) {
  check_indices(k, indices);
  require(eta >= 0.0, ErrorKind::invalid_batch, "step must be nonnegative");

  BatchPlan plan;
  plan.k = k;
  plan.indices = indices;
  plan.interpolant_noise.reserve(indices.size());

  // Random walk over the needed partial-sum points, in increasing order.
  Vector walk(dim, 0.0);
  std::size_t at = 0;
  auto advance_to = [&](std::size_t point) {
    if (point == at) return;
    const double sd = std::sqrt(2.0 * eta * static_cast<double>(point - at) / static_cast<double>(k));
    for (std::size_t j = 0; j < dim; ++j) walk[j] += sd * rng.normal();
    at = point;
  };
  for (std::size_t i : indices) {
    advance_to(interpolant_point(i, convention));
    plan.interpolant_noise.push_back(walk);
  }
  advance_to(k);
  plan.end_noise = walk;
  return plan;
}

Eigen::MatrixXd underdamped_bridge_covariance(std::size_t k, double eta, double gamma,
                                              const std::vector<std::size_t>& indices) {
  check_indices(k, indices);
  const double h = eta / static_cast<double>(k);
  std::vector<std::size_t> points = indices;
  points.push_back(k);
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (Eigen::Index p = 0; p < m; ++p) {
    const Mat2 c = detail::transition(static_cast<double>(points[p]) * h, gamma).c;
    cov(2 * p, 2 * p) = c.m00;
    cov(2 * p, 2 * p + 1) = c.m01;
    cov(2 * p + 1, 2 * p) = c.m10;
    cov(2 * p + 1, 2 * p + 1) = c.m11;
    for (Eigen::Index q = p + 1; q < m; ++q) {
      // E[W_q W_p^T] = A_{(q-p)h} Gamma^2_{p h}
      const Mat2 a = detail::transition(static_cast<double>(points[q] - points[p]) * h, gamma).a;
      const Mat2 b = a * c;
      cov(2 * q, 2 * p) = b.m00;
      cov(2 * q, 2 * p + 1) = b.m01;
      cov(2 * q + 1, 2 * p) = b.m10;
      cov(2 * q + 1, 2 * p + 1) = b.m11;
      cov.block(2 * p, 2 * q, 2, 2) = cov.block(2 * q, 2 * p, 2, 2).transpose();
    }
  }
  return cov;
}

Eigen::MatrixXd underdamped_bridge_covariance_bruteforce(std::size_t k, double eta, double gamma,
                                                         const std::vector<std::size_t>& indices) {
  check_indices(k, indices);
  const KernelBlocks step = build_kernel(eta / static_cast<double>(k), gamma);
  std::vector<Mat2> powers(k + 1, Mat2::identity());  // A_h^n
  for (std::size_t n = 1; n <= k; ++n) powers[n] = step.a * powers[n - 1];
  std::vector<std::size_t> points = indices;
  points.push_back(k);
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(2 * m, 2 * m);
  for (Eigen::Index p = 0; p < m; ++p) {
    for (Eigen::Index q = 0; q < m; ++q) {
      const std::size_t i1 = points[p], i2 = points[q];
      Mat2 acc;
      for (std::size_t l = 0; l < std::min(i1, i2); ++l)
        acc = acc + powers[i1 - l - 1] * step.c * powers[i2 - l - 1].transpose();
      cov(2 * p, 2 * q) = acc.m00;
      cov(2 * p, 2 * q + 1) = acc.m01;
      cov(2 * p + 1, 2 * q) = acc.m10;
      cov(2 * p + 1, 2 * q + 1) = acc.m11;
    }
  }
  return cov;
}

Eigen::MatrixXd overdamped_bridge_covariance(std::size_t k, double eta,
                                             const std::vector<std::size_t>& indices,
                                             InterpolantConvention convention) {
  check_indices(k, indices);
  std::vector<std::size_t> points;
  for (std::size_t i : indices) points.push_back(interpolant_point(i, convention));
  points.push_back(k);
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd cov(m, m);
  const double unit = 2.0 * eta / static_cast<double>(k);
  for (Eigen::Index p = 0; p < m; ++p)
    for (Eigen::Index q = 0; q < m; ++q)
      cov(p, q) = static_cast<double>(std::min(points[p], points[q])) * unit;
  return cov;
}

Eigen::MatrixXd overdamped_bridge_covariance_bruteforce(std::size_t k, double eta,
                                                        const std::vector<std::size_t>& indices,
                                                        InterpolantConvention convention) {
  check_indices(k, indices);
  std::vector<std::size_t> points;
  for (std::size_t i : indices) points.push_back(interpolant_point(i, convention));
  points.push_back(k);
  const auto m = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd cov = Eigen::MatrixXd::Zero(m, m);
  const double unit = 2.0 * eta / static_cast<double>(k);
  for (std::size_t j = 0; j < k; ++j)
    for (Eigen::Index p = 0; p < m; ++p)
      for (Eigen::Index q = 0; q < m; ++q)
        if (j < points[p] && j < points[q]) cov(p, q) += unit;
  return cov;
}

double max_relative_difference(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double floor) {
  require(x.rows() == y.rows() && x.cols() == y.cols(), ErrorKind::precondition,
          "matrix shapes differ");
  double worst = 0.0;
  for (Eigen::Index r = 0; r < x.rows(); ++r)
    for (Eigen::Index c = 0; c < x.cols(); ++c) {
      const double diff = std::abs(x(r, c) - y(r, c));
      if (diff == 0.0) continue;
      worst = std::max(worst, diff / std::max(std::abs(y(r, c)), floor));
    }
  return worst;
}

BatchPlan sample_underdamped_bridge(std::size_t k, double eta, double gamma, std::size_t dim,
                                    const std::vector<std::size_t>& indices, RngStream& rng) {
  check_indices(k, indices);
  require(eta > 0.0, ErrorKind::invalid_batch, "step must be positive");
  require(gamma * eta / static_cast<double>(k) <= detail::kClampThreshold, ErrorKind::invalid_batch,
          "inner step beyond the exponential clamp");

  BatchPlan plan;
  plan.k = k;
  plan.indices = indices;
  plan.interpolant_noise.assign(indices.size(), Vector(2 * dim, 0.0));
  plan.end_noise.assign(2 * dim, 0.0);

  // W_0 is identically zero, so the point 0 drops out of the joint draw.
  std::vector<std::size_t> live;  // positions in `indices` with i > 0
  for (std::size_t n = 0; n < indices.size(); ++n)
    if (indices[n] > 0) live.push_back(n);

  if (live.empty()) {
    // End point only: one 2x2 block per coordinate, drawn exactly as a
    // single step of the exact kernel would be.
    const double span = static_cast<double>(k) * (eta / static_cast<double>(k));
    const Mat2 s = sqrt_block(detail::transition(span, gamma).c);
    for (std::size_t j = 0; j < dim; ++j) {
      const double z0 = rng.normal();
      const double z1 = rng.normal();
      const Vec2 w = s * Vec2{z0, z1};
      plan.end_noise[j] = w.x0;
      plan.end_noise[dim + j] = w.x1;
    }
    return plan;
  }

  std::vector<std::size_t> live_points;
  for (std::size_t n : live) live_points.push_back(indices[n]);
  const Eigen::MatrixXd cov = underdamped_bridge_covariance(k, eta, gamma, live_points);
  const Eigen::Index n = cov.rows();

  // Factor the diagonally rescaled matrix; the raw blocks mix scales h^3 and h.
  const Eigen::VectorXd scale = cov.diagonal().cwiseSqrt();
  require((scale.array() > 0.0).all(), ErrorKind::conditioning, "degenerate bridge covariance");
  const Eigen::MatrixXd unit = scale.cwiseInverse().asDiagonal() * cov * scale.cwiseInverse().asDiagonal();
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(unit);
  require(eig.info() == Eigen::Success, ErrorKind::conditioning, "eigendecomposition failed");
  Eigen::VectorXd lambda = eig.eigenvalues();
  require(lambda.minCoeff() >= -1e-12 * std::max(1.0, lambda.maxCoeff()), ErrorKind::conditioning,
          "bridge covariance is indefinite");
  lambda = lambda.cwiseMax(0.0);
  const Eigen::MatrixXd factor =
      scale.asDiagonal() * eig.eigenvectors() * lambda.cwiseSqrt().asDiagonal();

  Eigen::VectorXd z(n);
  for (std::size_t j = 0; j < dim; ++j) {
    for (Eigen::Index r = 0; r < n; ++r) z(r) = rng.normal();
    const Eigen::VectorXd w = factor * z;
    for (std::size_t p = 0; p < live.size(); ++p) {
      plan.interpolant_noise[live[p]][j] = w(2 * static_cast<Eigen::Index>(p));
      plan.interpolant_noise[live[p]][dim + j] = w(2 * static_cast<Eigen::Index>(p) + 1);
    }
    plan.end_noise[j] = w(n - 2);
    plan.end_noise[dim + j] = w(n - 1);
  }
  return plan;
}

PartialSumReport max_partial_sum_diag(std::size_t k, double eta, std::size_t dim, std::size_t n_mc,
                                      RngStream& rng) {
  require(k >= 1, ErrorKind::invalid_batch, "batch size must be at least 1");
  require(n_mc >= 1000, ErrorKind::precondition, "need at least 1000 Monte Carlo paths");
  require(eta >= 0.0 && dim > 0, ErrorKind::precondition, "need eta >= 0 and d > 0");
  const double sd = std::sqrt(2.0 * eta / static_cast<double>(k));
  Vector path(dim);
  double sum = 0.0, sum_sq = 0.0;
  for (std::size_t r = 0; r < n_mc; ++r) {
    std::fill(path.begin(), path.end(), 0.0);
    double best = 0.0;
    for (std::size_t i = 0; i < k; ++i) {
      double norm2 = 0.0;
      for (double& x : path) {
        x += sd * rng.normal();
        norm2 += x * x;
      }
      best = std::max(best, norm2);
    }
    sum += best;
    sum_sq += best * best;
  }
  const double n = static_cast<double>(n_mc);
  PartialSumReport out;
  out.mean_sq_max = sum / n;
  const double var = std::max(0.0, (sum_sq - n * out.mean_sq_max * out.mean_sq_max) / (n - 1.0));
  out.std_error = std::sqrt(var / n);
  out.bound = eta * static_cast<double>(dim);
  out.exceeds_bound = out.mean_sq_max - 3.0 * out.std_error > out.bound;
  return out;
}

}  // namespace plmc
