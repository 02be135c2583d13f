#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "plmc/error.hpp"
#include "plmc/kernel.hpp"
#include "plmc/noise_bridge.hpp"

using namespace plmc;

namespace {

// Entrywise comparison of the sample covariance of `draws` (zero mean known)
// with `cov`, in units of the per-entry Monte Carlo standard error.
double worst_z(const std::vector<Eigen::VectorXd>& draws, const Eigen::MatrixXd& cov) {
  const Eigen::Index m = cov.rows();
  const double n = static_cast<double>(draws.size());
  double worst = 0.0;
  for (Eigen::Index a = 0; a < m; ++a)
    for (Eigen::Index b = a; b < m; ++b) {
      double s = 0, s2 = 0;
      for (const auto& w : draws) {
        const double p = w(a) * w(b);
        s += p;
        s2 += p * p;
      }
      const double mean = s / n;
      const double se = std::sqrt((s2 / n - mean * mean) / n);
      worst = std::max(worst, std::abs(mean - cov(a, b)) / se);
    }
  return worst;
}

}  // namespace

TEST_CASE("index set basics") {
  RngStream rng(1, 0);
  for (int i = 0; i < 10; ++i) CHECK(sample_index_set(1, rng) == std::vector<std::size_t>{0});
  CHECK_THROWS_AS(sample_index_set(0, rng), Error);
  for (int i = 0; i < 1000; ++i) {
    const auto s = sample_index_set(7, rng);
    for (std::size_t j = 0; j < s.size(); ++j) {
      CHECK(s[j] < 7);
      if (j) CHECK(s[j] > s[j - 1]);
    }
  }
}

TEST_CASE("index set law at k = 100") {
  RngStream rng(2, 0);
  const int n = 1000000;
  double sum = 0;
  int empty = 0;
  std::vector<int> hits(100, 0);
  for (int r = 0; r < n; ++r) {
    const auto s = sample_index_set(100, rng);
    sum += static_cast<double>(s.size());
    empty += s.empty();
    for (std::size_t i : s) ++hits[i];
  }
  // Binomial(100, 1/100): mean 1, variance 0.99
  CHECK(std::abs(sum / n - 1.0) <= 3 * std::sqrt(0.99 / n));
  const double p0 = std::pow(0.99, 100);
  CHECK(p0 == doctest::Approx(0.3660).epsilon(1e-3));
  CHECK(std::abs(empty / double(n) - p0) <= 3 * std::sqrt(p0 * (1 - p0) / n));
  // each position marginally Bernoulli(1/100); checks the geometric gaps have no edge bias
  int worst = 0;
  for (int h : hits) worst = std::max(worst, std::abs(h - n / 100));
  CHECK(worst <= 5 * std::sqrt(n * 0.01 * 0.99));
}

TEST_CASE("overdamped covariance example") {
  const Eigen::MatrixXd c = overdamped_bridge_covariance(4, 0.4, {1, 3});
  Eigen::MatrixXd expect(3, 3);
  expect << 1, 1, 1, 1, 3, 3, 1, 3, 4;
  expect *= 2 * 0.4 / 4;
  CHECK((c - expect).cwiseAbs().maxCoeff() < 1e-15);
  // inclusive convention shifts each point by one
  const Eigen::MatrixXd ci = overdamped_bridge_covariance(4, 0.4, {1, 3}, InterpolantConvention::inclusive);
  Eigen::MatrixXd expect_i(3, 3);
  expect_i << 2, 2, 2, 2, 4, 4, 2, 4, 4;
  expect_i *= 2 * 0.4 / 4;
  CHECK((ci - expect_i).cwiseAbs().maxCoeff() < 1e-15);
}

TEST_CASE("overdamped bridge samples") {
  RngStream rng(3, 0);
  const double eta = 0.4;
  const std::size_t k = 4;
  BatchPlan empty = sample_overdamped_bridge(k, eta, 3, {}, rng);
  CHECK(empty.interpolant_noise.empty());
  CHECK(empty.end_noise.size() == 3);

  // S = {k-1}: end minus interpolant is one increment of variance 2 eta / k.
  const std::vector<std::size_t> s = {k - 1};
  const int n = 100000;
  std::vector<Eigen::VectorXd> joint;
  double d2 = 0.0;
  for (int r = 0; r < n; ++r) {
    const BatchPlan p = sample_overdamped_bridge(k, eta, 1, s, rng);
    const double diff = p.end_noise[0] - p.interpolant_noise[0][0];
    d2 += diff * diff;
    joint.push_back(Eigen::Vector2d(p.interpolant_noise[0][0], p.end_noise[0]));
  }
  const double unit = 2 * eta / k;
  CHECK(std::abs(d2 / n - unit) <= 3 * unit * std::sqrt(2.0 / n));
  CHECK(worst_z(joint, overdamped_bridge_covariance(k, eta, s)) <= 3.0);

  // Full-sum marginal with S empty
  double e2 = 0;
  for (int r = 0; r < n; ++r) {
    const BatchPlan p = sample_overdamped_bridge(k, eta, 1, {}, rng);
    e2 += p.end_noise[0] * p.end_noise[0];
  }
  CHECK(std::abs(e2 / n - 2 * eta) <= 3 * 2 * eta * std::sqrt(2.0 / n));
}

TEST_CASE("overdamped covariance against brute force") {
  for (auto conv : {InterpolantConvention::exclusive, InterpolantConvention::inclusive})
    for (std::size_t k = 1; k <= 8; ++k)
      for (std::size_t mask = 0; mask < (1u << k); ++mask) {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < k; ++i)
          if (mask & (1u << i)) s.push_back(i);
        CHECK(max_relative_difference(overdamped_bridge_covariance(k, 0.3, s, conv),
                                      overdamped_bridge_covariance_bruteforce(k, 0.3, s, conv)) <= 1e-10);
      }
}

TEST_CASE("underdamped covariance against brute force") {
  // k = 3, gamma = 2, eta = 0.03, S = {1}
  const Eigen::MatrixXd c = underdamped_bridge_covariance(3, 0.03, 2.0, {1});
  CHECK(c.rows() == 4);
  CHECK(max_relative_difference(c, underdamped_bridge_covariance_bruteforce(3, 0.03, 2.0, {1})) <= 1e-10);
  // independent oracle for the same example: the defining sums written out
  const KernelBlocks step = build_kernel(0.01, 2.0);
  Mat2 w1 = step.c;                                                     // Cov(W_1)
  Mat2 w3 = step.c + step.a * step.c * step.a.transpose() +
            step.a * step.a * step.c * (step.a * step.a).transpose();   // Cov(W_3)
  Mat2 x31 = step.a * step.a * step.c;                                  // E[W_3 W_1^T]
  CHECK(c(0, 0) == doctest::Approx(w1.m00).epsilon(1e-12));
  CHECK(c(1, 1) == doctest::Approx(w1.m11).epsilon(1e-12));
  CHECK(c(2, 2) == doctest::Approx(w3.m00).epsilon(1e-12));
  CHECK(c(3, 2) == doctest::Approx(w3.m10).epsilon(1e-12));
  CHECK(c(2, 0) == doctest::Approx(x31.m00).epsilon(1e-12));
  CHECK(c(3, 1) == doctest::Approx(x31.m11).epsilon(1e-12));
  CHECK(c(2, 1) == doctest::Approx(x31.m01).epsilon(1e-12));

  for (double gamma : {0.5, 2.0, 10.0})
    for (std::size_t k = 1; k <= 8; ++k)
      for (std::size_t mask = 0; mask < (1u << k); ++mask) {
        std::vector<std::size_t> s;
        for (std::size_t i = 0; i < k; ++i)
          if (mask & (1u << i)) s.push_back(i);
        const double eta = 0.1 / gamma;
        CHECK(max_relative_difference(underdamped_bridge_covariance(k, eta, gamma, s),
                                      underdamped_bridge_covariance_bruteforce(k, eta, gamma, s)) <= 1e-10);
      }
}

TEST_CASE("single step end noise is the one-step kernel noise") {
  const Eigen::MatrixXd c = underdamped_bridge_covariance(1, 0.05, 2.0, {});
  const KernelBlocks k = build_kernel(0.05, 2.0);
  CHECK(c(0, 0) == doctest::Approx(k.c.m00).epsilon(1e-14));
  CHECK(c(0, 1) == doctest::Approx(k.c.m01).epsilon(1e-14));
  CHECK(c(1, 1) == doctest::Approx(k.c.m11).epsilon(1e-14));
}

TEST_CASE("underdamped bridge samples match the assembled covariance") {
  RngStream rng(4, 0);
  const std::size_t k = 6;
  const double eta = 0.06, gamma = 2.0;
  const std::vector<std::size_t> s = {0, 2, 5};
  const std::vector<std::size_t> live = {2, 5};
  const Eigen::MatrixXd cov = underdamped_bridge_covariance(k, eta, gamma, live);
  std::vector<Eigen::VectorXd> draws;
  const int n = 100000;
  for (int r = 0; r < n; ++r) {
    const BatchPlan p = sample_underdamped_bridge(k, eta, gamma, 1, s, rng);
    CHECK_MESSAGE(p.interpolant_noise[0][0] == 0.0, "W_0 is zero");
    Eigen::VectorXd w(6);
    w << p.interpolant_noise[1][0], p.interpolant_noise[1][1], p.interpolant_noise[2][0],
        p.interpolant_noise[2][1], p.end_noise[0], p.end_noise[1];
    draws.push_back(w);
  }
  CHECK(worst_z(draws, cov) <= 3.0);
}

TEST_CASE("bridge reproducibility") {
  RngStream a(9, 2), b(9, 2);
  const BatchPlan p = sample_underdamped_bridge(5, 0.1, 2.0, 3, {1, 4}, a);
  const BatchPlan q = sample_underdamped_bridge(5, 0.1, 2.0, 3, {1, 4}, b);
  CHECK(p.interpolant_noise == q.interpolant_noise);
  CHECK(p.end_noise == q.end_noise);
}

TEST_CASE("bad index sets are rejected") {
  RngStream rng(0, 0);
  CHECK_THROWS_AS(sample_overdamped_bridge(4, 0.1, 1, {3, 1}, rng), Error);
  CHECK_THROWS_AS(sample_overdamped_bridge(4, 0.1, 1, {4}, rng), Error);
  CHECK_THROWS_AS(underdamped_bridge_covariance(3, 0.1, 1.0, {1, 1}), Error);
}

TEST_CASE("partial sum maxima") {
  RngStream rng(5, 0);
  // k = 1: M^2 = |N(0, 2 eta I)|^2, so E = 2 eta d, twice the printed p = 2 bound.
  const PartialSumReport one = max_partial_sum_diag(1, 0.1, 3, 100000, rng);
  CHECK(std::abs(one.mean_sq_max - 0.6) <= 3 * one.std_error);
  CHECK(one.bound == doctest::Approx(0.3));
  CHECK(one.exceeds_bound);

  const PartialSumReport tiny = max_partial_sum_diag(8, 1e-12, 2, 1000, rng);
  CHECK(tiny.mean_sq_max < 1e-10);

  // d = 1, k = 64, eta = 0.25. Doob's L2 inequality gives E[max] <= 4 E|S_k|^2 = 8 eta d.
  const PartialSumReport r = max_partial_sum_diag(64, 0.25, 1, 100000, rng);
  CHECK(r.bound == 0.25);
  CHECK(r.mean_sq_max >= 2 * 0.25 - 3 * r.std_error);
  CHECK(r.mean_sq_max <= 8 * 0.25);
  CHECK_THROWS_AS(max_partial_sum_diag(4, 0.1, 1, 10, rng), Error);
}
