#pragma once

#include <span>
#include <vector>

namespace plmc {

struct Vec2 {
  double x0 = 0.0;
  double x1 = 0.0;
};

// Row-major 2x2 block. Every underdamped kernel matrix is one of these
// tensored with the d x d identity.
struct Mat2 {
  double m00 = 0.0, m01 = 0.0, m10 = 0.0, m11 = 0.0;

  static Mat2 identity() { return {1.0, 0.0, 0.0, 1.0}; }
  Mat2 transpose() const { return {m00, m10, m01, m11}; }
  double trace() const { return m00 + m11; }
  double det() const { return m00 * m11 - m01 * m10; }
  double frobenius() const;
  Mat2 inverse() const;
  Vec2 operator*(const Vec2& v) const { return {m00 * v.x0 + m01 * v.x1, m10 * v.x0 + m11 * v.x1}; }
};

Mat2 operator*(const Mat2& a, const Mat2& b);
Mat2 operator+(const Mat2& a, const Mat2& b);
Mat2 operator-(const Mat2& a, const Mat2& b);
Mat2 operator*(double s, const Mat2& a);
Vec2 operator+(const Vec2& a, const Vec2& b);
Vec2 operator-(const Vec2& a, const Vec2& b);
double norm(const Vec2& v);

// Exact one-step kernel of the underdamped dynamics
//   dU = V dt,  dV = -gamma V dt - grad F(U) dt + sqrt(2 gamma) dB
// with the drift frozen over the step: X' = A X + G b + N(0, Gamma^2).
struct KernelBlocks {
  double h = 0.0;
  double gamma = 0.0;
  Mat2 a;
  Vec2 g_col;
  Mat2 c;
};

// Same kernel after the change of variables (u, v) -> (u, u + 2v/gamma).
struct PrimedKernelBlocks {
  double h = 0.0;
  double gamma = 0.0;
  Mat2 a;
  Vec2 g_col;
  Mat2 c;
  Mat2 m;
};

KernelBlocks build_kernel(double h, double gamma);
PrimedKernelBlocks build_primed_kernel(double h, double gamma);
Mat2 transform_block(double gamma);

// Principal symmetric square root via trace and determinant.
Mat2 sqrt_block(const Mat2& c);

namespace detail {
// Like build_kernel but also accepts h = 0 (identity kernel).
KernelBlocks transition(double h, double gamma);
// Below this value of gamma*h the cancelling entries are summed as series.
inline constexpr double kSeriesThreshold = 0.5;
// Above this value of gamma*h exp(-gamma*h) is treated as zero.
inline constexpr double kClampThreshold = 30.0;
}  // namespace detail

struct SemigroupResidual {
  double res_a = 0.0;
  double res_g = 0.0;
};

// |A_{h1} A_{h2} - A_{h1+h2}|_F and |A_{h2} g(h1) + g(h2) - g(h1+h2)|.
SemigroupResidual semigroup_residual(double h1, double h2, double gamma);
SemigroupResidual primed_semigroup_residual(double h1, double h2, double gamma);

struct ConjugationResidual {
  double res_a = 0.0;  // |m a m^-1 - a'|_F
  double res_c = 0.0;  // |m c m^T - c'|_F / |c'|_F
  double res_g = 0.0;  // |m g - g'|
  double max() const;
};
ConjugationResidual conjugation_residual(double h, double gamma);

struct EigenPair {
  double e1 = 0.0;  // smaller
  double e2 = 0.0;  // larger
};
EigenPair primed_noise_eigenvalues(double h, double gamma);

// Second-order-in-h expansion of the large eigenvalue of the primed noise
// covariance: 8h/gamma - 4h^2 + 5 gamma h^3 / 2.
double primed_noise_e2_series(double h, double gamma);

// |E2 - series| / (gamma^2 h^4) for one step; gamma*h must be below 0.1.
double eigen_expansion_scaled_residual(double h, double gamma);
double gamma_prime_eigen_expansion_check(double gamma, std::span<const double> h_grid);

// G'^T (Gamma'^2)^{-1} G' as a 2x2 block (second column of G' is zero).
Mat2 whitened_drift_gram(double h, double gamma);

// The primed blocks transcribed literally from their printed closed forms,
// reading the exp(2 gamma h) factors as exp(-2 gamma h). Diagnostic only.
PrimedKernelBlocks printed_primed_kernel(double h, double gamma);

struct PrintedFormDiscrepancy {
  double g_rel = 0.0;    // |g'_printed - m g| / |m g|
  double c_rel = 0.0;    // |c'_printed - m c m^T|_F / |m c m^T|_F
  double c00_rel = 0.0;  // relative error of the printed top-left entry
};
PrintedFormDiscrepancy printed_form_discrepancy(double h, double gamma);

}  // namespace plmc
