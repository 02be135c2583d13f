#include "plmc/potential.hpp"

#include <Eigen/Dense>

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

#include "plmc/error.hpp"
#include "plmc/rng.hpp"

namespace plmc {

Vector PotentialSpec::grad(std::span<const double> x) const {
  Vector g(dim);
  gradient(x, g);
  return g;
}

void validate(const PotentialSpec& spec) {
  require(spec.dim > 0, ErrorKind::invalid_target, "dimension must be positive");
  require(spec.alpha > 0.0 && std::isfinite(spec.alpha), ErrorKind::invalid_target,
          "alpha must be positive");
  require(spec.ell >= spec.alpha && std::isfinite(spec.ell), ErrorKind::invalid_target,
          "ell must be finite and at least alpha");
  require(static_cast<bool>(spec.gradient), ErrorKind::invalid_target, "missing gradient");
  if (spec.optimum)
    require(spec.optimum->size() == spec.dim, ErrorKind::invalid_target, "optimum has wrong size");
}

PotentialSpec make_quadratic(const Vector& precision, const Vector& mean) {
  require(!precision.empty(), ErrorKind::invalid_target, "empty precision vector");
  require(precision.size() == mean.size(), ErrorKind::invalid_target,
          "precision and mean lengths differ");
  for (double p : precision)
    require(p > 0.0 && std::isfinite(p), ErrorKind::invalid_target, "precision must be positive");

  auto lam = std::make_shared<const Vector>(precision);
  auto mu = std::make_shared<const Vector>(mean);

  PotentialSpec spec;
  spec.name = "quadratic";
  spec.dim = precision.size();
  spec.alpha = *std::min_element(precision.begin(), precision.end());
  spec.ell = *std::max_element(precision.begin(), precision.end());
  spec.optimum = mean;
  spec.gradient = [lam, mu](std::span<const double> x, std::span<double> g) {
    for (std::size_t j = 0; j < lam->size(); ++j) g[j] = (*lam)[j] * (x[j] - (*mu)[j]);
  };
  spec.value = [lam, mu](std::span<const double> x) {
    double f = 0.0;
    for (std::size_t j = 0; j < lam->size(); ++j) {
      const double r = x[j] - (*mu)[j];
      f += 0.5 * (*lam)[j] * r * r;
    }
    return f;
  };
  return spec;
}

GaussianTarget quadratic_target(const Vector& precision, const Vector& mean) {
  require(precision.size() == mean.size(), ErrorKind::invalid_target,
          "precision and mean lengths differ");
  GaussianTarget t{mean, Vector(precision.size())};
  for (std::size_t j = 0; j < precision.size(); ++j) {
    require(precision[j] > 0.0, ErrorKind::invalid_target, "precision must be positive");
    t.variance[j] = 1.0 / precision[j];
  }
  return t;
}

namespace {

// log(1 + exp(-t)) without overflow.
double softplus_neg(double t) {
  return t > 0 ? std::log1p(std::exp(-t)) : -t + std::log1p(std::exp(t));
}

// 1 / (1 + exp(t))
double sigmoid_neg(double t) {
  if (t >= 0) {
    const double e = std::exp(-t);
    return e / (1.0 + e);
  }
  return 1.0 / (1.0 + std::exp(t));
}

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t j = 0; j < a.size(); ++j) s += a[j] * b[j];
  return s;
}

}  // namespace

LogisticData synthetic_logistic_data(std::size_t n, std::size_t dim, std::uint64_t seed) {
  require(n > 0 && dim > 0, ErrorKind::invalid_target, "logistic data needs n, d > 0");
  RngStream rng(seed, 0);
  Vector theta(dim);
  rng.fill_normal(theta);
  const double norm = std::sqrt(dot(theta, theta));
  for (double& t : theta) t /= norm;

  LogisticData data;
  data.dim = dim;
  const double scale = 1.0 / std::sqrt(static_cast<double>(dim));
  for (std::size_t i = 0; i < n; ++i) {
    Vector a(dim);
    for (double& v : a) v = scale * rng.normal();
    const double p = 1.0 / (1.0 + std::exp(-dot(a, theta)));
    data.labels.push_back(rng.uniform(RngLane::auxiliary) < p ? 1.0 : -1.0);
    data.features.push_back(std::move(a));
  }
  return data;
}

void write_logistic_csv(const LogisticData& data, std::ostream& os) {
  os << "label";
  for (std::size_t j = 0; j < data.dim; ++j) os << ",x" << j;
  os << '\n' << std::setprecision(17);
  for (std::size_t i = 0; i < data.labels.size(); ++i) {
    os << data.labels[i];
    for (double v : data.features[i]) os << ',' << v;
    os << '\n';
  }
}

LogisticData read_logistic_csv(std::istream& is) {
  LogisticData data;
  std::string line;
  require(static_cast<bool>(std::getline(is, line)), ErrorKind::invalid_target,
          "empty logistic csv");
  const auto columns = static_cast<std::size_t>(std::count(line.begin(), line.end(), ','));
  require(columns > 0, ErrorKind::invalid_target, "logistic csv needs feature columns");
  data.dim = columns;
  while (std::getline(is, line)) {
    if (line.empty()) continue;
    std::stringstream ss(line);
    std::string cell;
    Vector row;
    while (std::getline(ss, cell, ',')) row.push_back(std::stod(cell));
    require(row.size() == columns + 1, ErrorKind::invalid_target, "ragged logistic csv row");
    require(row[0] == 1.0 || row[0] == -1.0, ErrorKind::invalid_target, "labels must be +-1");
    data.labels.push_back(row[0]);
    data.features.emplace_back(row.begin() + 1, row.end());
  }
  require(!data.labels.empty(), ErrorKind::invalid_target, "logistic csv has no rows");
  return data;
}

double gram_operator_norm(const LogisticData& data, int max_iter, double tol) {
  const std::size_t d = data.dim;
  Vector v(d, 1.0 / std::sqrt(static_cast<double>(d)));
  double lambda = 0.0;
  for (int it = 0; it < max_iter; ++it) {
    Vector w(d, 0.0);
    for (const Vector& a : data.features) {
      const double s = dot(a, v);
      for (std::size_t j = 0; j < d; ++j) w[j] += s * a[j];
    }
    const double norm = std::sqrt(dot(w, w));
    if (norm == 0.0) return 0.0;
    for (std::size_t j = 0; j < d; ++j) v[j] = w[j] / norm;
    const bool done = std::abs(norm - lambda) <= tol * norm;
    lambda = norm;
    if (done) break;
  }
  return lambda;
}

PotentialSpec make_logistic(const LogisticData& data, double alpha) {
  require(alpha > 0.0, ErrorKind::invalid_target, "ridge alpha must be positive");
  require(data.dim > 0 && !data.labels.empty(), ErrorKind::invalid_target, "empty logistic data");
  auto shared = std::make_shared<const LogisticData>(data);

  PotentialSpec spec;
  spec.name = "logistic";
  spec.dim = data.dim;
  spec.alpha = alpha;
  // Power iteration converges from below; the small inflation keeps ell an
  // upper bound on the Lipschitz constant.
  spec.ell = alpha + 0.25 * gram_operator_norm(data) * (1.0 + 1e-9);
  spec.gradient = [shared, alpha](std::span<const double> x, std::span<double> g) {
    for (std::size_t j = 0; j < shared->dim; ++j) g[j] = alpha * x[j];
    for (std::size_t i = 0; i < shared->labels.size(); ++i) {
      const Vector& a = shared->features[i];
      const double y = shared->labels[i];
      const double w = -y * sigmoid_neg(y * dot(a, x));
      for (std::size_t j = 0; j < shared->dim; ++j) g[j] += w * a[j];
    }
  };
  spec.value = [shared, alpha](std::span<const double> x) {
    double f = 0.5 * alpha * dot(x, x);
    for (std::size_t i = 0; i < shared->labels.size(); ++i)
      f += softplus_neg(shared->labels[i] * dot(shared->features[i], x));
    return f;
  };

  // Newton's method; the objective is strongly convex so this converges fast.
  const auto d = static_cast<Eigen::Index>(data.dim);
  Eigen::VectorXd x = Eigen::VectorXd::Zero(d);
  for (int it = 0; it < 100; ++it) {
    Eigen::VectorXd g(d);
    spec.gradient(std::span<const double>(x.data(), data.dim), std::span<double>(g.data(), data.dim));
    if (g.norm() < 1e-14 * (1.0 + x.norm())) break;
    Eigen::MatrixXd hess = alpha * Eigen::MatrixXd::Identity(d, d);
    for (std::size_t i = 0; i < data.labels.size(); ++i) {
      const Eigen::Map<const Eigen::VectorXd> a(data.features[i].data(), d);
      const double s = sigmoid_neg(data.labels[i] * a.dot(x));
      hess.noalias() += s * (1.0 - s) * a * a.transpose();
    }
    x -= hess.llt().solve(g);
  }
  spec.optimum = Vector(x.data(), x.data() + d);
  return spec;
}

bool AssumptionProbe::compliant(const PotentialSpec& spec, double rel_tol) const {
  return min_monotonicity_ratio >= spec.alpha * (1.0 - rel_tol) &&
         max_lipschitz_ratio <= spec.ell * (1.0 + rel_tol);
}

AssumptionProbe probe_assumption(const PotentialSpec& spec, std::size_t n_pairs, double radius,
                                 std::uint64_t seed) {
  require(spec.dim > 0, ErrorKind::invalid_target, "zero-dimension spec");
  require(n_pairs >= 1, ErrorKind::precondition, "n_pairs must be at least 1");
  require(radius > 0.0, ErrorKind::precondition, "radius must be positive");

  const std::size_t d = spec.dim;
  RngStream rng(seed, 0);
  const Vector center = spec.optimum.value_or(Vector(d, 0.0));

  // Uniform point in the ball: Gaussian direction, radius u^(1/d).
  auto draw = [&](Vector& p) {
    rng.fill_normal(p);
    const double n = std::sqrt(dot(p, p));
    const double r = radius * std::pow(rng.uniform(RngLane::auxiliary), 1.0 / static_cast<double>(d));
    for (std::size_t j = 0; j < d; ++j) p[j] = center[j] + r * p[j] / n;
  };

  AssumptionProbe out;
  out.n_pairs = n_pairs;
  out.min_monotonicity_ratio = std::numeric_limits<double>::infinity();
  out.max_lipschitz_ratio = 0.0;
  Vector x(d), y(d), gx(d), gy(d), dx(d), dg(d);
  for (std::size_t k = 0; k < n_pairs; ++k) {
    double dist2 = 0.0;
    do {
      draw(x);
      draw(y);
      for (std::size_t j = 0; j < d; ++j) dx[j] = x[j] - y[j];
      dist2 = dot(dx, dx);
    } while (dist2 == 0.0);
    spec.gradient(x, gx);
    spec.gradient(y, gy);
    for (std::size_t j = 0; j < d; ++j) dg[j] = gx[j] - gy[j];
    out.min_monotonicity_ratio = std::min(out.min_monotonicity_ratio, dot(dg, dx) / dist2);
    out.max_lipschitz_ratio = std::max(out.max_lipschitz_ratio, std::sqrt(dot(dg, dg) / dist2));
  }
  return out;
}

}  // namespace plmc
