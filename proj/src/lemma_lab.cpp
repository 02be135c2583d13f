#include "plmc/lemma_lab.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "plmc/error.hpp"
#include "plmc/metrics.hpp"

namespace plmc {

namespace {

double norm_cdf(double t) { return 0.5 * std::erfc(-t / std::numbers::sqrt2); }
double norm_pdf(double t) { return std::exp(-0.5 * t * t) / std::sqrt(2.0 * std::numbers::pi); }

}  // namespace

NormalMixture1d NormalMixture1d::gaussian(double mean, double sd) { return {{mean}, {1.0}, sd}; }

double NormalMixture1d::cdf(double x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < locations.size(); ++i) s += weights[i] * norm_cdf((x - locations[i]) / sd);
  return s;
}

double NormalMixture1d::survival(double x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < locations.size(); ++i) s += weights[i] * norm_cdf((locations[i] - x) / sd);
  return s;
}

double NormalMixture1d::density(double x) const {
  double s = 0.0;
  for (std::size_t i = 0; i < locations.size(); ++i) s += weights[i] * norm_pdf((x - locations[i]) / sd);
  return s / sd;
}

double NormalMixture1d::quantile_from_score(double z) const {
  require(!locations.empty() && locations.size() == weights.size(), ErrorKind::quadrature,
          "malformed mixture");
  const auto [lo_it, hi_it] = std::minmax_element(locations.begin(), locations.end());
  double lo = sd * z + *lo_it;
  double hi = sd * z + *hi_it;
  if (*lo_it == *hi_it) return lo;
  require(sd > 0.0, ErrorKind::quadrature, "point-mass mixtures are not invertible");

  // Work in whichever tail keeps the target probability well resolved.
  const bool lower = z <= 0.0;
  const double target = lower ? norm_cdf(z) : norm_cdf(-z);
  auto g = [&](double x) { return lower ? cdf(x) - target : target - survival(x); };

  double mean_loc = 0.0;
  for (std::size_t i = 0; i < locations.size(); ++i) mean_loc += weights[i] * locations[i];
  double x = std::clamp(sd * z + mean_loc, lo, hi);
  for (int it = 0; it < 200; ++it) {
    const double gx = g(x);
    if (gx == 0.0) return x;
    if (gx < 0.0)
      lo = x;
    else
      hi = x;
    const double dens = density(x);
    double next = dens > 0.0 ? x - gx / dens : 0.5 * (lo + hi);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    const double tol = 1e-15 * (1.0 + std::abs(x));
    if (std::abs(next - x) <= tol || hi - lo <= 1e-12 * (1.0 + std::abs(x))) return next;
    x = next;
  }
  throw Error(ErrorKind::quadrature, "mixture quantile did not converge");
}

double NormalMixture1d::sample(RngStream& rng) const {
  const double u = rng.uniform(RngLane::auxiliary);
  double acc = 0.0;
  std::size_t pick = locations.size() - 1;
  for (std::size_t i = 0; i < locations.size(); ++i) {
    acc += weights[i];
    if (u < acc) {
      pick = i;
      break;
    }
  }
  return locations[pick] + sd * rng.normal();
}

QuadratureResult w2_1d_quantile(const NormalMixture1d& a, const NormalMixture1d& b, std::size_t n_quad,
                                double z_max) {
  require(n_quad >= 1000, ErrorKind::precondition, "n_quad must be at least 1000");
  require(z_max > 0.0, ErrorKind::precondition, "truncation score must be positive");
  if (n_quad % 2 == 1) ++n_quad;

  // Simpson on 2 n_quad panels; the even nodes give the n_quad-panel rule.
  const std::size_t m = 2 * n_quad;
  const double step = 2.0 * z_max / static_cast<double>(m);
  // Each quantile carries a few ulps of inversion error; propagate it through
  // the square so the bound does not undercut floating-point noise.
  constexpr double kUlps = 8.0 * std::numeric_limits<double>::epsilon();
  double fine = 0.0, coarse = 0.0, roundoff = 0.0;
  for (std::size_t i = 0; i <= m; ++i) {
    const double z = -z_max + step * static_cast<double>(i);
    const double qa = a.quantile_from_score(z), qb = b.quantile_from_score(z);
    const double diff = qa - qb;
    const double f = diff * diff * norm_pdf(z);
    const double wf = (i == 0 || i == m) ? 1.0 : (i % 2 == 1 ? 4.0 : 2.0);
    fine += wf * f;
    roundoff += wf * norm_pdf(z) * (2.0 * std::abs(diff) * kUlps * (2.0 + std::abs(qa) + std::abs(qb)) + kUlps * diff * diff);
    if (i % 2 == 0) {
      const std::size_t j = i / 2;
      const double wc = (j == 0 || j == n_quad) ? 1.0 : (j % 2 == 1 ? 4.0 : 2.0);
      coarse += wc * f;
    }
  }
  fine *= step / 3.0;
  coarse *= 2.0 * step / 3.0;
  roundoff *= step / 3.0;
  roundoff += static_cast<double>(m) * std::numeric_limits<double>::epsilon() * std::abs(fine);  // summation

  // Outside [-z_max, z_max]: |Q_a - Q_b| <= c0 + c1 |z| from the location/scale envelopes.
  const auto [alo, ahi] = std::minmax_element(a.locations.begin(), a.locations.end());
  const auto [blo, bhi] = std::minmax_element(b.locations.begin(), b.locations.end());
  const double c1 = std::abs(a.sd - b.sd);
  const double c0 = std::max(std::abs(*ahi - *blo), std::abs(*bhi - *alo));
  const double tail_p = norm_cdf(-z_max), tail_d = norm_pdf(z_max);
  QuadratureResult r;
  r.value = fine;
  r.refinement_error = std::abs(fine - coarse);
  r.tail_bound = 2.0 * (c0 * c0 * tail_p + 2.0 * c0 * c1 * tail_d + c1 * c1 * (tail_p + z_max * tail_d));
  r.error_bound = r.refinement_error + r.tail_bound + roundoff;
  return r;
}

double PerturbationSpec::nu() const {
  double s = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) s += probs[i] * support[i] * support[i];
  return s;
}

void PerturbationSpec::validate() const {
  require(beta >= 0.0 && std::isfinite(beta), ErrorKind::precondition, "beta must be nonnegative");
  require(!support.empty() && support.size() == probs.size(), ErrorKind::precondition,
          "support and probabilities must be nonempty and aligned");
  double total = 0.0, mean = 0.0;
  for (std::size_t i = 0; i < support.size(); ++i) {
    require(probs[i] >= 0.0, ErrorKind::precondition, "negative probability");
    require(std::abs(support[i]) <= beta * (1.0 + 1e-12), ErrorKind::precondition,
            "support point exceeds beta");
    total += probs[i];
    mean += probs[i] * support[i];
  }
  require(std::abs(total - 1.0) <= 1e-12, ErrorKind::precondition, "probabilities must sum to 1");
  require(std::abs(mean) <= 1e-12 * std::max(1.0, beta), ErrorKind::precondition, "perturbation must have mean 0");
}

PerturbationSpec PerturbationSpec::two_point(double beta) {
  if (beta == 0.0) return {0.0, {0.0}, {1.0}};
  return {beta, {-beta, beta}, {0.5, 0.5}};
}

namespace {

W2Certificate make_certificate(double beta, double nu, const QuadratureResult& q, double rhs) {
  W2Certificate c;
  c.beta = beta;
  c.nu = nu;
  c.lhs = q.value;
  c.rhs = rhs;
  c.margin = rhs - q.value;
  c.quadrature_error_bound = q.error_bound;
  return c;
}

}  // namespace

W2Certificate certify_lemma1(const PerturbationSpec& spec, std::size_t n_quad) {
  spec.validate();
  const double nu = spec.nu();
  const NormalMixture1d z = NormalMixture1d::gaussian(0.0, 1.0);
  const NormalMixture1d zv{spec.support, spec.probs, 1.0};
  const double rhs = 5.5 * nu * nu + (5.0 * spec.beta * spec.beta > 1.0 ? 2.0 * nu : 0.0);
  return make_certificate(spec.beta, nu, w2_1d_quantile(z, zv, n_quad), rhs);
}

W2Certificate certify_lemmaA2(const PerturbationSpec& spec, std::size_t n_quad) {
  spec.validate();
  const double nu = spec.nu();
  const NormalMixture1d z = NormalMixture1d::gaussian(0.0, std::sqrt(1.0 + nu));
  const NormalMixture1d zv{spec.support, spec.probs, 1.0};
  const double rhs = 5.0 * nu * nu + (5.0 * spec.beta * spec.beta > 1.0 ? 2.0 * nu : 0.0);
  return make_certificate(spec.beta, nu, w2_1d_quantile(z, zv, n_quad), rhs);
}

W2Certificate certify_zhai(double beta, double n_param, std::size_t k, std::size_t n_quad,
                           std::size_t n_mc, RngStream& rng) {
  require(k == 1, ErrorKind::precondition, "only k = 1 is supported");
  require(beta >= 0.0 && std::isfinite(beta), ErrorKind::precondition, "beta must be nonnegative");
  require(n_param > 0.0 && std::isfinite(n_param), ErrorKind::precondition, "n must be positive");
  W2Certificate c;
  c.beta = beta;
  c.nu = beta * beta / n_param;  // Var(Y)
  c.rhs = 5.0 * std::sqrt(static_cast<double>(k)) * beta / (n_param * std::sqrt(n_param));
  if (beta == 0.0) {
    // Y = 0 and both sides are the point mass at 0.
    c.margin = c.rhs;
    if (n_mc > 0) c.monte_carlo_lhs = 0.0;
    return c;
  }
  // Sigma = beta^2, so the smallest eigenvalue is beta^2 as well.
  require(n_param >= 5.0 * beta * beta / (beta * beta), ErrorKind::precondition,
          "n must be at least 5 beta^2 / sigma_min^2");
  const NormalMixture1d z1 = NormalMixture1d::gaussian(0.0, beta);
  const double shift = beta / std::sqrt(n_param);
  const NormalMixture1d zy{{-shift, shift}, {0.5, 0.5}, beta * std::sqrt(1.0 - 1.0 / n_param)};
  const QuadratureResult q = w2_1d_quantile(z1, zy, n_quad);
  c.lhs = std::sqrt(q.value);
  c.quadrature_error_bound = std::sqrt(q.value + q.error_bound) - std::sqrt(std::max(0.0, q.value - q.error_bound));
  c.margin = c.rhs - c.lhs;
  if (n_mc > 0) {
    std::vector<double> xa(n_mc), xb(n_mc);
    for (std::size_t i = 0; i < n_mc; ++i) {
      xa[i] = z1.sample(rng);
      xb[i] = zy.sample(rng);
    }
    c.monte_carlo_lhs = std::sqrt(w2_exact_1d(std::move(xa), std::move(xb)));
  }
  return c;
}

}  // namespace plmc
