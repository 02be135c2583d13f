#pragma once

#include <Eigen/Dense>

#include <cstddef>
#include <vector>

#include "plmc/potential.hpp"
#include "plmc/rng.hpp"

namespace plmc {

// Where the overdamped interpolant noise at inner index i stops summing:
// exclusive uses Y_0..Y_{i-1}, inclusive uses Y_0..Y_i.
enum class InterpolantConvention { exclusive, inclusive };

// Noise for one Poisson batch. Overdamped entries are d-vectors; underdamped
// entries are 2d-vectors laid out as [position block, velocity block].
struct BatchPlan {
  std::size_t k = 1;
  std::vector<std::size_t> indices;
  std::vector<Vector> interpolant_noise;
  Vector end_noise;
};

// Each of 0..k-1 kept independently with probability 1/k. Uses geometric gaps
// so the cost is O(1 + |S|) rather than O(k).
std::vector<std::size_t> sample_index_set(std::size_t k, RngStream& rng);

BatchPlan sample_overdamped_bridge(std::size_t k, double eta, std::size_t dim,
                                   const std::vector<std::size_t>& indices, RngStream& rng,
                                   InterpolantConvention convention = InterpolantConvention::exclusive);

BatchPlan sample_underdamped_bridge(std::size_t k, double eta, double gamma, std::size_t dim,
                                    const std::vector<std::size_t>& indices, RngStream& rng);

// Per-coordinate covariance of (interpolant noise at each i in S, end noise).
Eigen::MatrixXd overdamped_bridge_covariance(std::size_t k, double eta,
                                             const std::vector<std::size_t>& indices,
                                             InterpolantConvention convention = InterpolantConvention::exclusive);

// Per-coordinate 2(|S|+1) x 2(|S|+1) covariance of (W_i for i in S, W_k),
// assembled from closed-form OU blocks.
Eigen::MatrixXd underdamped_bridge_covariance(std::size_t k, double eta, double gamma,
                                              const std::vector<std::size_t>& indices);

// Same matrix by explicit accumulation over the k inner steps; O(k) per entry.
Eigen::MatrixXd underdamped_bridge_covariance_bruteforce(std::size_t k, double eta, double gamma,
                                                         const std::vector<std::size_t>& indices);
Eigen::MatrixXd overdamped_bridge_covariance_bruteforce(std::size_t k, double eta,
                                                        const std::vector<std::size_t>& indices,
                                                        InterpolantConvention convention = InterpolantConvention::exclusive);

// max_{a,b} |X_ab - Y_ab| / max(|Y_ab|, floor)
double max_relative_difference(const Eigen::MatrixXd& x, const Eigen::MatrixXd& y, double floor = 1e-300);

struct PartialSumReport {
  double mean_sq_max = 0.0;  // empirical E[max_j |S_j|^2], S_j = sqrt(2 eta/k) sum_{i<=j} Y_i
  double std_error = 0.0;
  double bound = 0.0;        // eta * d
  bool exceeds_bound = false;  // mean_sq_max - 3 std_error > bound
};

PartialSumReport max_partial_sum_diag(std::size_t k, double eta, std::size_t dim, std::size_t n_mc,
                                      RngStream& rng);

}  // namespace plmc
