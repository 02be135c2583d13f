#include "plmc/kernel.hpp"

#include <algorithm>
#include <cmath>

#include "plmc/error.hpp"

namespace plmc {

double Mat2::frobenius() const { return std::sqrt(m00 * m00 + m01 * m01 + m10 * m10 + m11 * m11); }

Mat2 Mat2::inverse() const {
  const double d = det();
  require(d != 0.0 && std::isfinite(d), ErrorKind::conditioning, "singular 2x2 block");
  return {m11 / d, -m01 / d, -m10 / d, m00 / d};
}

Mat2 operator*(const Mat2& a, const Mat2& b) {
  return {a.m00 * b.m00 + a.m01 * b.m10, a.m00 * b.m01 + a.m01 * b.m11,
          a.m10 * b.m00 + a.m11 * b.m10, a.m10 * b.m01 + a.m11 * b.m11};
}
Mat2 operator+(const Mat2& a, const Mat2& b) {
  return {a.m00 + b.m00, a.m01 + b.m01, a.m10 + b.m10, a.m11 + b.m11};
}
Mat2 operator-(const Mat2& a, const Mat2& b) {
  return {a.m00 - b.m00, a.m01 - b.m01, a.m10 - b.m10, a.m11 - b.m11};
}
Mat2 operator*(double s, const Mat2& a) { return {s * a.m00, s * a.m01, s * a.m10, s * a.m11}; }
Vec2 operator+(const Vec2& a, const Vec2& b) { return {a.x0 + b.x0, a.x1 + b.x1}; }
Vec2 operator-(const Vec2& a, const Vec2& b) { return {a.x0 - b.x0, a.x1 - b.x1}; }
double norm(const Vec2& v) { return std::hypot(v.x0, v.x1); }

namespace {

// x - (1 - e^-x) = sum_{k>=2} (-1)^k x^k / k!
double psi2(double x) {
  if (x >= detail::kSeriesThreshold) return x + std::expm1(-x);
  double term = x * x / 2.0, sum = 0.0;
  for (int k = 2; k < 60 && std::abs(term) > 1e-18 * std::abs(sum); ++k) {
    sum += term;
    term *= -x / (k + 1);
  }
  return sum;
}

// x - 2(1 - e^-x) + (1 - e^-2x)/2 = sum_{k>=3} (-1)^k (2 - 2^(k-1)) x^k / k!
double psi3(double x) {
  if (x >= detail::kSeriesThreshold) return x + 2.0 * std::expm1(-x) - 0.5 * std::expm1(-2.0 * x);
  double sum = 0.0;
  double power = x * x * x / 6.0;  // (-1)^k x^k / k! at k = 3, sign included
  power = -power;
  double two_k1 = 4.0;  // 2^(k-1)
  for (int k = 3; k < 80; ++k) {
    const double term = power * (2.0 - two_k1);
    sum += term;
    if (std::abs(term) <= 1e-18 * std::abs(sum)) break;
    power *= -x / (k + 1);
    two_k1 *= 2.0;
  }
  return sum;
}

}  // namespace

KernelBlocks detail::transition(double h, double gamma) {
  require(gamma > 0.0 && std::isfinite(gamma), ErrorKind::invalid_kernel, "friction must be positive");
  require(h >= 0.0 && std::isfinite(h), ErrorKind::invalid_kernel, "step must be nonnegative");
  KernelBlocks k;
  k.h = h;
  k.gamma = gamma;
  if (h == 0.0) {
    k.a = Mat2::identity();
    return k;
  }
  const double x = gamma * h;
  const bool clamp = x > kClampThreshold;
  const double e1 = clamp ? 0.0 : std::exp(-x);
  const double phi = clamp ? 1.0 : -std::expm1(-x);        // 1 - e^-x
  const double phi2 = clamp ? 1.0 : -std::expm1(-2.0 * x);  // 1 - e^-2x
  const double g2 = gamma * gamma;

  k.a = {1.0, phi / gamma, 0.0, e1};
  k.g_col = {(clamp ? x - 1.0 : psi2(x)) / g2, phi / gamma};
  const double c00 = 2.0 * (clamp ? x - 1.5 : psi3(x)) / g2;
  const double c01 = phi * phi / gamma;
  k.c = {c00, c01, c01, phi2};
  return k;
}

KernelBlocks build_kernel(double h, double gamma) {
  require(h > 0.0, ErrorKind::invalid_kernel, "step must be positive");
  return detail::transition(h, gamma);
}

Mat2 transform_block(double gamma) { return {1.0, 0.0, 1.0, 2.0 / gamma}; }

PrimedKernelBlocks build_primed_kernel(double h, double gamma) {
  const KernelBlocks k = build_kernel(h, gamma);
  const double x = gamma * h;
  const bool clamp = x > detail::kClampThreshold;
  const double e1 = clamp ? 0.0 : std::exp(-x);
  const double phi = clamp ? 1.0 : -std::expm1(-x);

  PrimedKernelBlocks p;
  p.h = h;
  p.gamma = gamma;
  p.m = transform_block(gamma);
  p.a = {0.5 * (1.0 + e1), 0.5 * phi, 0.5 * phi, 0.5 * (1.0 + e1)};
  p.g_col = {k.g_col.x0, k.g_col.x0 + 2.0 * k.g_col.x1 / gamma};
  // m c m^T expanded; every summand is nonnegative so nothing cancels.
  const double c00 = k.c.m00;
  const double c01 = k.c.m00 + 2.0 * k.c.m01 / gamma;
  const double c11 = k.c.m00 + 4.0 * k.c.m01 / gamma + 4.0 * k.c.m11 / (gamma * gamma);
  p.c = {c00, c01, c01, c11};
  return p;
}

Mat2 sqrt_block(const Mat2& c) {
  const double scale = std::max({std::abs(c.m00), std::abs(c.m11), std::abs(c.m01), std::abs(c.m10)});
  require(std::abs(c.m01 - c.m10) <= 1e-10 * std::max(scale, 1.0), ErrorKind::invalid_covariance,
          "block is not symmetric");
  const double off = 0.5 * (c.m01 + c.m10);
  const double tr = c.m00 + c.m11;
  const double disc = std::sqrt(std::max(0.0, 0.25 * (c.m00 - c.m11) * (c.m00 - c.m11) + off * off));
  const double lmin = 0.5 * tr - disc;
  require(lmin >= -1e-14 * std::max(scale, 1.0), ErrorKind::invalid_covariance,
          "block is not positive semidefinite");
  if (scale == 0.0) return {};
  const double det = std::max(0.0, c.m00 * c.m11 - off * off);
  const double s = std::sqrt(det);
  const double t = std::sqrt(tr + 2.0 * s);
  return {(c.m00 + s) / t, off / t, off / t, (c.m11 + s) / t};
}

SemigroupResidual semigroup_residual(double h1, double h2, double gamma) {
  const KernelBlocks k1 = detail::transition(h1, gamma);
  const KernelBlocks k2 = detail::transition(h2, gamma);
  const KernelBlocks k12 = detail::transition(h1 + h2, gamma);
  SemigroupResidual r;
  r.res_a = (k1.a * k2.a - k12.a).frobenius();
  r.res_g = norm(k2.a * k1.g_col + k2.g_col - k12.g_col);
  return r;
}

SemigroupResidual primed_semigroup_residual(double h1, double h2, double gamma) {
  const PrimedKernelBlocks k1 = build_primed_kernel(h1, gamma);
  const PrimedKernelBlocks k2 = build_primed_kernel(h2, gamma);
  const PrimedKernelBlocks k12 = build_primed_kernel(h1 + h2, gamma);
  SemigroupResidual r;
  r.res_a = (k1.a * k2.a - k12.a).frobenius();
  r.res_g = norm(k2.a * k1.g_col + k2.g_col - k12.g_col);
  return r;
}

double ConjugationResidual::max() const { return std::max({res_a, res_c, res_g}); }

ConjugationResidual conjugation_residual(double h, double gamma) {
  const KernelBlocks k = build_kernel(h, gamma);
  const PrimedKernelBlocks p = build_primed_kernel(h, gamma);
  const Mat2 m = p.m;
  const Mat2 minv = m.inverse();
  ConjugationResidual r;
  r.res_a = (m * k.a * minv - p.a).frobenius();
  const Mat2 c = m * k.c * m.transpose();
  r.res_c = (c - p.c).frobenius() / p.c.frobenius();
  r.res_g = norm(m * k.g_col - p.g_col);
  return r;
}

EigenPair primed_noise_eigenvalues(double h, double gamma) {
  const Mat2 c = build_primed_kernel(h, gamma).c;
  const double half_tr = 0.5 * c.trace();
  const double det = c.det();
  const double disc = std::sqrt(std::max(0.0, half_tr * half_tr - det));
  EigenPair e;
  e.e2 = half_tr + disc;
  // det / e2 keeps the small eigenvalue accurate.
  e.e1 = det / e.e2;
  return e;
}

double primed_noise_e2_series(double h, double gamma) {
  return 8.0 * h / gamma - 4.0 * h * h + 2.5 * gamma * h * h * h;
}

double eigen_expansion_scaled_residual(double h, double gamma) {
  require(gamma * h < 0.1, ErrorKind::precondition, "expansion check needs gamma*h < 0.1");
  const double e2 = primed_noise_eigenvalues(h, gamma).e2;
  return (e2 - primed_noise_e2_series(h, gamma)) / (gamma * gamma * h * h * h * h);
}

double gamma_prime_eigen_expansion_check(double gamma, std::span<const double> h_grid) {
  require(!h_grid.empty(), ErrorKind::precondition, "empty step grid");
  double worst = 0.0;
  for (double h : h_grid) worst = std::max(worst, std::abs(eigen_expansion_scaled_residual(h, gamma)));
  return worst;
}

Mat2 whitened_drift_gram(double h, double gamma) {
  require(h >= 1e-10, ErrorKind::conditioning, "step too small to invert the primed noise covariance");
  const PrimedKernelBlocks p = build_primed_kernel(h, gamma);
  const Mat2& c = p.c;
  const double g0 = p.g_col.x0, g1 = p.g_col.x1;
  const double det = c.det();
  require(det > 0.0, ErrorKind::conditioning, "primed noise covariance is singular");
  const double q = (g0 * g0 * c.m11 - 2.0 * g0 * g1 * c.m01 + g1 * g1 * c.m00) / det;
  return {q, 0.0, 0.0, 0.0};
}

PrimedKernelBlocks printed_primed_kernel(double h, double gamma) {
  require(h > 0.0 && gamma > 0.0, ErrorKind::invalid_kernel, "step and friction must be positive");
  const double x = gamma * h;
  const double e1 = std::exp(-x);
  const double phi = -std::expm1(-x);
  const double phi2 = -std::expm1(-2.0 * x);
  const double g2 = gamma * gamma;
  PrimedKernelBlocks p;
  p.h = h;
  p.gamma = gamma;
  p.m = transform_block(gamma);
  p.a = {0.5 * (1.0 + e1), 0.5 * phi, 0.5 * phi, 0.5 * (1.0 + e1)};
  p.g_col = {(x - phi) / g2, (x + phi) / g2};
  const double c00 = (4.0 * phi - phi2 + 2.0 * x) / g2;
  const double c01 = (2.0 * x - phi2) / g2;
  const double c11 = (4.0 * phi + phi2 + 2.0 * x) / g2;
  p.c = {c00, c01, c01, c11};
  return p;
}

PrintedFormDiscrepancy printed_form_discrepancy(double h, double gamma) {
  const PrimedKernelBlocks truth = build_primed_kernel(h, gamma);
  const PrimedKernelBlocks printed = printed_primed_kernel(h, gamma);
  PrintedFormDiscrepancy d;
  d.g_rel = norm(printed.g_col - truth.g_col) / norm(truth.g_col);
  d.c_rel = (printed.c - truth.c).frobenius() / truth.c.frobenius();
  d.c00_rel = std::abs(printed.c.m00 - truth.c.m00) / std::abs(truth.c.m00);
  return d;
}

}  // namespace plmc
