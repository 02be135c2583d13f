#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "plmc/kernel.hpp"
#include "plmc/noise_bridge.hpp"
#include "plmc/potential.hpp"
#include "plmc/rng.hpp"

namespace plmc {

enum class Dynamics { overdamped, underdamped };
enum class Method { euler, poisson };

struct ChainState {
  Vector position;
  std::optional<Vector> velocity;  // present iff underdamped
  std::size_t batch_index = 0;
  std::uint64_t gradient_calls = 0;
  RngStream rng;
};

struct SamplerConfig {
  double eta = 0.0;
  std::size_t k = 1;
  double gamma = 0.0;
  std::size_t n_batches = 0;
  Dynamics dynamics = Dynamics::overdamped;
  Method method = Method::poisson;
  InterpolantConvention convention = InterpolantConvention::exclusive;
  bool naive = false;  // explicit K-step inner loop instead of the skip-ahead form
};

// Gradient oracle that charges every evaluation to one chain.
class CountingGradient {
 public:
  CountingGradient(const PotentialSpec& spec, std::uint64_t& counter) : spec_(spec), counter_(counter) {}
  void operator()(std::span<const double> x, std::span<double> g) const {
    ++counter_;
    spec_.gradient(x, g);
  }

 private:
  const PotentialSpec& spec_;
  std::uint64_t& counter_;
};

// Euler-Maruyama: x <- x - h grad F(x) + sqrt(2h) z.
void olmc_step(ChainState& state, const PotentialSpec& spec, double h);
void olmc_step(ChainState& state, const PotentialSpec& spec, double h, std::span<const double> z);

// One Poisson midpoint batch of k inner steps of size eta/k, computed in
// skip-ahead form. Returns |S|.
std::size_t oplmc_batch(ChainState& state, const PotentialSpec& spec, double eta, std::size_t k,
                        InterpolantConvention convention = InterpolantConvention::exclusive);
std::size_t oplmc_batch_naive(ChainState& state, const PotentialSpec& spec, double eta, std::size_t k,
                              InterpolantConvention convention = InterpolantConvention::exclusive);

// Exact-kernel step X <- A X + G b(X) + Gamma z, z drawn as (z_u, z_v) per coordinate.
void ulmc_step(ChainState& state, const PotentialSpec& spec, const KernelBlocks& kernel);
// z has length 2d, pairs (z_u, z_v) interleaved per coordinate.
void ulmc_step(ChainState& state, const PotentialSpec& spec, const KernelBlocks& kernel,
               std::span<const double> z);

std::size_t uplmc_batch(ChainState& state, const PotentialSpec& spec, double eta, std::size_t k,
                        double gamma);
std::size_t uplmc_batch_naive(ChainState& state, const PotentialSpec& spec, double eta, std::size_t k,
                              double gamma);

// One outer batch (or one Euler step of size eta) according to the config.
void advance(ChainState& state, const PotentialSpec& spec, const SamplerConfig& config);

void validate(const SamplerConfig& config);

// Human-readable notes for parameters outside the theorems' regimes.
std::vector<std::string> regime_warnings(const SamplerConfig& config, const PotentialSpec& spec);

struct InitOptions {
  double offset = 0.0;  // added to every coordinate of the default start
};

// Overdamped: X0 = optimum (or 0). Underdamped: U0 ~ N(x*, I/L), V0 ~ N(0, I).
ChainState initial_state(const PotentialSpec& spec, Dynamics dynamics, RngStream rng,
                         const InitOptions& init = {});

struct ScheduleInputs {
  double epsilon = 0.0;
  double alpha = 0.0;
  double ell = 0.0;
  std::size_t dim = 0;
  int p = 3;
  double c1 = 1.0, c2 = 1.0, c3 = 1.0, c4 = 1.0;
  double gamma_factor = 2.0;  // gamma = gamma_factor * sqrt(L)
};

struct Schedule {
  SamplerConfig config;
  double eta_requested = 0.0;          // before any rounding
  double k_real = 0.0;                 // K before rounding up
  double n_real = 0.0;                 // N before rounding up
  double inner_step_requested = 0.0;   // eps^2/(4L) or 0.94 eps sqrt(alpha)/(L sqrt 2)
  double inner_step_realized = 0.0;    // eta / K after rounding
  std::vector<std::string> warnings;
};

Schedule overdamped_schedule(const ScheduleInputs& in, Method method = Method::poisson);
Schedule underdamped_schedule(const ScheduleInputs& in, Method method = Method::poisson);

// Frozen constant in front of the gradient-sum bound.
inline constexpr double kGradientSumConstant = 8.0;

struct GradientSumReport {
  double sum_sq_grad = 0.0;  // chain average of sum_{t<N} |grad F(X_tK)|^2
  double bound = 0.0;
  double drift_term = 0.0;   // (1/eta) E[F(X_0) - F(X_NK)]
  double noise_term = 0.0;   // L d N
  bool within_bound = false;
};

// traces[c] holds the N+1 outer-batch positions of chain c.
GradientSumReport gradient_sum_diagnostic(const std::vector<std::vector<Vector>>& traces,
                                          const PotentialSpec& spec, double eta,
                                          double constant = kGradientSumConstant);

// Operator norm of the zero-noise step for one quadratic mode of precision
// lambda, written in the coordinates (u, u + 2v/gamma).
double transformed_step_norm(double lambda, double h, double gamma);

}  // namespace plmc
