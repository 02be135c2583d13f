#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <iosfwd>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

namespace plmc {

using Vector = std::vector<double>;

using GradientFn = std::function<void(std::span<const double> x, std::span<double> grad)>;
using ValueFn = std::function<double(std::span<const double> x)>;

// Target density proportional to exp(-F) with F alpha-strongly convex and
// ell-smooth. The value map is optional; only some diagnostics need it.
struct PotentialSpec {
  std::string name;
  std::size_t dim = 0;
  double alpha = 0.0;
  double ell = 0.0;
  GradientFn gradient;
  ValueFn value;
  std::optional<Vector> optimum;

  double condition_number() const { return ell / alpha; }
  Vector grad(std::span<const double> x) const;
  bool has_value() const { return static_cast<bool>(value); }
};

// Validates the constants and dimension; throws invalid_target.
void validate(const PotentialSpec& spec);

// F(x) = 0.5 * sum_j precision_j (x_j - mean_j)^2.
PotentialSpec make_quadratic(const Vector& precision, const Vector& mean);

// Exact marginal variances of the Gaussian target of a diagonal quadratic.
struct GaussianTarget {
  Vector mean;
  Vector variance;
};
GaussianTarget quadratic_target(const Vector& precision, const Vector& mean);

struct LogisticData {
  std::size_t dim = 0;
  Vector labels;                  // entries in {-1, +1}
  std::vector<Vector> features;   // one row per observation
};

// Rows a_i ~ N(0, I/d), labels drawn from the logistic model at a random
// parameter of unit norm.
LogisticData synthetic_logistic_data(std::size_t n, std::size_t dim, std::uint64_t seed);
void write_logistic_csv(const LogisticData& data, std::ostream& os);
LogisticData read_logistic_csv(std::istream& is);

// Largest eigenvalue of A^T A by power iteration.
double gram_operator_norm(const LogisticData& data, int max_iter = 500, double tol = 1e-13);

// F(x) = alpha/2 |x|^2 + sum_i log(1 + exp(-y_i <a_i, x>)).
// L = alpha + |A^T A| / 4. The optimum is found by Newton iterations.
PotentialSpec make_logistic(const LogisticData& data, double alpha);

struct AssumptionProbe {
  std::size_t n_pairs = 0;
  double min_monotonicity_ratio = 0.0;  // min <g(x)-g(y), x-y> / |x-y|^2
  double max_lipschitz_ratio = 0.0;     // max |g(x)-g(y)| / |x-y|
  bool compliant(const PotentialSpec& spec, double rel_tol = 1e-9) const;
};

AssumptionProbe probe_assumption(const PotentialSpec& spec, std::size_t n_pairs, double radius,
                                 std::uint64_t seed);

}  // namespace plmc
