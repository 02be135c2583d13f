#pragma once

#include <cstddef>
#include <optional>
#include <vector>

#include "plmc/rng.hpp"

namespace plmc {

// One-dimensional mixture sum_i w_i N(loc_i, sd^2). A single component is a
// plain Gaussian; sd = 0 with one component at 0 is the point mass at 0.
struct NormalMixture1d {
  std::vector<double> locations;
  std::vector<double> weights;
  double sd = 1.0;

  static NormalMixture1d gaussian(double mean, double sd);

  double cdf(double x) const;
  double survival(double x) const;
  double density(double x) const;
  // Q(Phi(z)): the quantile at the probability level of the standard score z.
  double quantile_from_score(double z) const;
  double sample(RngStream& rng) const;
};

struct QuadratureResult {
  double value = 0.0;        // W2^2
  double error_bound = 0.0;  // refinement difference, truncated tail bound and quantile roundoff
  double refinement_error = 0.0;
  double tail_bound = 0.0;
};

// W2^2 = int_0^1 (Q_a(u) - Q_b(u))^2 du, integrated in the score variable
// u = Phi(z) by composite Simpson on [-z_max, z_max] with n_quad panels,
// refined once to 2 n_quad panels.
QuadratureResult w2_1d_quantile(const NormalMixture1d& a, const NormalMixture1d& b, std::size_t n_quad,
                                double z_max = 8.0);

struct PerturbationSpec {
  double beta = 0.0;
  std::vector<double> support;
  std::vector<double> probs;

  double nu() const;
  void validate() const;
  static PerturbationSpec two_point(double beta);
};

struct W2Certificate {
  double beta = 0.0;
  double nu = 0.0;
  double lhs = 0.0;
  double rhs = 0.0;
  double margin = 0.0;
  double quadrature_error_bound = 0.0;
  std::optional<double> monte_carlo_lhs;
  bool pass() const { return margin >= -quadrature_error_bound; }
};

// W2^2(N(0,1), law of Z + V) against 11/2 nu^2 + 1{5 beta^2 > 1} 2 nu.
W2Certificate certify_lemma1(const PerturbationSpec& spec, std::size_t n_quad);
// W2^2(N(0,1+nu), law of Z + V) against 5 nu^2 + 1{5 beta^2 > 1} 2 nu.
W2Certificate certify_lemmaA2(const PerturbationSpec& spec, std::size_t n_quad);

// W2(Z_1, Z_{1-1/n} + Y) against 5 beta / n^{3/2} with Y = +-beta/sqrt(n)
// equiprobable, so Cov(Y) = Sigma/n with Sigma = beta^2 and Z_t ~ N(0, t beta^2).
// The certificate's lhs is W2 itself, not its square. n_mc > 0 adds a sampled
// cross-check.
W2Certificate certify_zhai(double beta, double n_param, std::size_t k, std::size_t n_quad,
                           std::size_t n_mc, RngStream& rng);

}  // namespace plmc
