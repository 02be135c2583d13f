#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "plmc/error.hpp"
#include "plmc/lemma_lab.hpp"
#include "plmc/metrics.hpp"

using namespace plmc;

namespace {
const std::vector<double> kBetas = {0.0, 0.01, 0.05, 0.1, 0.3, 1.0, 2.0};
}

TEST_CASE("mixture cdf, survival and quantiles") {
  const NormalMixture1d m{{-0.5, 0.5}, {0.5, 0.5}, 0.8};
  CHECK(m.cdf(0.0) == doctest::Approx(0.5).epsilon(1e-15));
  CHECK(m.cdf(1.3) + m.survival(1.3) == doctest::Approx(1.0).epsilon(1e-15));
  for (double z : {-7.5, -3.0, -0.2, 0.0, 0.9, 4.0, 7.9}) {
    const double x = m.quantile_from_score(z);
    const double phi = 0.5 * std::erfc(-z / std::sqrt(2.0));
    if (z <= 0)
      CHECK(m.cdf(x) == doctest::Approx(phi).epsilon(1e-11));
    else
      CHECK(m.survival(x) == doctest::Approx(1 - phi).epsilon(1e-10));
  }
  const NormalMixture1d g = NormalMixture1d::gaussian(2.0, 3.0);
  CHECK(g.quantile_from_score(1.5) == doctest::Approx(6.5));
  // density integrates to one
  double total = 0;
  for (double x = -10; x < 10; x += 1e-3) total += m.density(x) * 1e-3;
  CHECK(total == doctest::Approx(1.0).epsilon(1e-6));
}

TEST_CASE("quantile quadrature on gaussians") {
  const auto std_normal = NormalMixture1d::gaussian(0, 1);
  const QuadratureResult same = w2_1d_quantile(std_normal, std_normal, 1000);
  CHECK(same.value == doctest::Approx(0.0));
  const QuadratureResult shift = w2_1d_quantile(std_normal, NormalMixture1d::gaussian(0.7, 1), 1000);
  CHECK(shift.value == doctest::Approx(0.49).epsilon(1e-12));
  const QuadratureResult scale = w2_1d_quantile(std_normal, NormalMixture1d::gaussian(0, 1.5), 1000);
  CHECK(scale.value == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(scale.error_bound < 1e-10);
  CHECK_THROWS_AS(w2_1d_quantile(std_normal, std_normal, 10), Error);
}

TEST_CASE("refinement error stays inside the bound") {
  const auto a = NormalMixture1d::gaussian(0, 1);
  const NormalMixture1d b{{-0.3, 0.3}, {0.5, 0.5}, 1.0};
  const QuadratureResult coarse = w2_1d_quantile(a, b, 1000);
  const QuadratureResult fine = w2_1d_quantile(a, b, 2000);
  CHECK(std::abs(coarse.value - fine.value) <= coarse.error_bound);
  CHECK(coarse.error_bound >= coarse.refinement_error);
}

TEST_CASE("perturbation specs") {
  const PerturbationSpec p = PerturbationSpec::two_point(0.3);
  CHECK(p.nu() == doctest::Approx(0.09));
  CHECK_NOTHROW(p.validate());
  PerturbationSpec bad{0.1, {-0.2, 0.2}, {0.5, 0.5}};
  CHECK_THROWS_AS(bad.validate(), Error);
  PerturbationSpec skew{1.0, {-1, 1}, {0.3, 0.7}};
  CHECK_THROWS_AS(skew.validate(), Error);
}

TEST_CASE("lemma 1 certificates") {
  const W2Certificate zero = certify_lemma1(PerturbationSpec::two_point(0.0), 100000);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.rhs == 0.0);
  CHECK(zero.pass());

  const W2Certificate small = certify_lemma1(PerturbationSpec::two_point(0.1), 100000);
  CHECK(small.nu == doctest::Approx(0.01));
  CHECK(small.rhs == doctest::Approx(5.5e-4));
  CHECK(small.lhs <= small.rhs);
  // cross check against a finer grid
  const W2Certificate fine = certify_lemma1(PerturbationSpec::two_point(0.1), 1000000);
  CHECK(std::abs(fine.lhs - small.lhs) < 1e-8);
  CHECK(fine.quadrature_error_bound < 1e-8);

  const W2Certificate big = certify_lemma1(PerturbationSpec::two_point(1.0), 100000);
  CHECK(big.rhs == doctest::Approx(7.5));
  CHECK(big.lhs <= 2.0);  // independent coupling: E|V|^2 + E|Z - Z'|^2 ... bounded by 2 nu via shift coupling
  CHECK(big.pass());
}

TEST_CASE("lemma A.2 certificates") {
  const W2Certificate zero = certify_lemmaA2(PerturbationSpec::two_point(0.0), 100000);
  CHECK(zero.lhs == 0.0);
  const W2Certificate small = certify_lemmaA2(PerturbationSpec::two_point(0.1), 100000);
  CHECK(small.rhs == doctest::Approx(5e-4));
  CHECK(small.lhs <= small.rhs);

  // Gaussian sub-bound: W2^2(N(0,1), N(0,1+nu)) = (sqrt(1+nu) - 1)^2 <= nu^2 / 4
  for (double nu : {1e-3, 0.01, 0.1, 1.0, 4.0}) {
    const double g = w2_1d_quantile(NormalMixture1d::gaussian(0, 1), NormalMixture1d::gaussian(0, std::sqrt(1 + nu)),
                                    1000).value;
    CHECK(g == doctest::Approx(std::pow(std::sqrt(1 + nu) - 1, 2)).epsilon(1e-10));
    CHECK(4 + 2 * nu - 4 * std::sqrt(1 + nu) <= 0.5 * nu * nu);
    CHECK(g <= nu * nu / 4);
  }
}

TEST_CASE("zhai certificates") {
  RngStream rng(3, 0);
  const W2Certificate zero = certify_zhai(0.0, 10, 1, 100000, 0, rng);
  CHECK(zero.lhs == 0.0);
  CHECK(zero.pass());
  const W2Certificate c = certify_zhai(0.3, 10, 1, 100000, 0, rng);
  CHECK(c.rhs == doctest::Approx(0.04743).epsilon(1e-4));
  CHECK(c.lhs <= c.rhs);
  CHECK(certify_zhai(0.3, 7.5, 1, 100000, 0, rng).pass());
  CHECK_THROWS_AS(certify_zhai(0.3, 4.0, 1, 100000, 0, rng), Error);
  CHECK_THROWS_AS(certify_zhai(0.3, 10, 2, 100000, 0, rng), Error);

  // sampled cross-check agrees with the quadrature to within its noise
  const W2Certificate mc = certify_zhai(1.0, 10, 1, 100000, 200000, rng);
  REQUIRE(mc.monte_carlo_lhs);
  CHECK(*mc.monte_carlo_lhs >= 0.0);
  CHECK(*mc.monte_carlo_lhs < 0.05);
}

TEST_CASE("all certificates pass on the default grid") {
  RngStream rng(4, 0);
  for (double beta : kBetas) {
    CAPTURE(beta);
    const PerturbationSpec p = PerturbationSpec::two_point(beta);
    const W2Certificate l1 = certify_lemma1(p, 100000);
    const W2Certificate a2 = certify_lemmaA2(p, 100000);
    const W2Certificate z = certify_zhai(beta, 10, 1, 100000, 0, rng);
    CHECK(l1.pass());
    CHECK(a2.pass());
    CHECK(z.pass());
    CHECK(l1.quadrature_error_bound < 1e-8);
    CHECK(a2.quadrature_error_bound < 1e-8);
    CHECK(z.quadrature_error_bound < 1e-8);
    CHECK(a2.rhs <= l1.rhs);
  }
}
