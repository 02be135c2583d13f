#include "plmc/samplers.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>

#include "plmc/error.hpp"

namespace plmc {

namespace {

// a (u, v) + g b; shared by the single step and the batch so that K = 1
// reproduces the step bit for bit.
inline Vec2 affine(const KernelBlocks& k, double u, double v, double b) {
  return {k.a.m00 * u + k.a.m01 * v + k.g_col.x0 * b, k.a.m10 * u + k.a.m11 * v + k.g_col.x1 * b};
}

void require_underdamped(const ChainState& s, const PotentialSpec& spec) {
  require(s.velocity.has_value(), ErrorKind::precondition, "underdamped step needs a velocity");
  require(s.position.size() == spec.dim && s.velocity->size() == spec.dim, ErrorKind::precondition,
          "state dimension mismatch");
}

void require_overdamped(const ChainState& s, const PotentialSpec& spec) {
  require(s.position.size() == spec.dim, ErrorKind::precondition, "state dimension mismatch");
}

// Round up, but do not let representation noise push an integer to the next one.
double ceil_tolerant(double x) {
  const double r = std::round(x);
  if (std::abs(x - r) <= 1e-9 * std::max(1.0, std::abs(x))) return r;
  return std::ceil(x);
}

std::string fmt_double(double x) {
  std::ostringstream os;
  os.precision(6);
  os << x;
  return os.str();
}

}  // namespace

void olmc_step(ChainState& state, const PotentialSpec& spec, double h) {
  Vector z(spec.dim);
  state.rng.fill_normal(z);
  olmc_step(state, spec, h, z);
}

void olmc_step(ChainState& state, const PotentialSpec& spec, double h, std::span<const double> z) {
  require_overdamped(state, spec);
  require(h > 0.0, ErrorKind::precondition, "step must be positive");
  const CountingGradient grad(spec, state.gradient_calls);
  Vector g(spec.dim);
  grad(state.position, g);
  const double sd = std::sqrt(2.0 * h);
  for (std::size_t j = 0; j < spec.dim; ++j) {
    const double noise = sd * z[j];
    state.position[j] = (state.position[j] - h * g[j]) + noise;
  }
}

std::size_t oplmc_batch(ChainState& state, const PotentialSpec& spec, double eta, std::size_t k,
                        InterpolantConvention convention) {
  require_overdamped(state, spec);
  require(eta > 0.0, ErrorKind::precondition, "step must be positive");
  const std::size_t d = spec.dim;
  const CountingGradient grad(spec, state.gradient_calls);
  Vector& x = state.position;

  Vector g0(d);
  grad(x, g0);
  const std::vector<std::size_t> indices = sample_index_set(k, state.rng);
  const BatchPlan plan = sample_overdamped_bridge(k, eta, d, indices, state.rng, convention);

  Vector corr(d, 0.0), xhat(d), ghat(d);
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const double t = eta * static_cast<double>(indices[n]) / static_cast<double>(k);
    for (std::size_t j = 0; j < d; ++j) xhat[j] = x[j] - t * g0[j] + plan.interpolant_noise[n][j];
    grad(xhat, ghat);
    for (std::size_t j = 0; j < d; ++j) corr[j] += g0[j] - ghat[j];
  }
  for (std::size_t j = 0; j < d; ++j) x[j] = ((x[j] - eta * g0[j]) + eta * corr[j]) + plan.end_noise[j];
  return indices.size();
}

std::size_t oplmc_batch_naive(ChainState& state, const PotentialSpec& spec, double eta, std::size_t k,
                              InterpolantConvention convention) {
  require_overdamped(state, spec);
  require(eta > 0.0, ErrorKind::precondition, "step must be positive");
  require(k >= 1, ErrorKind::invalid_batch, "batch size must be at least 1");
  const std::size_t d = spec.dim;
  const CountingGradient grad(spec, state.gradient_calls);
  const Vector x0 = state.position;
  Vector& x = state.position;

  Vector g0(d);
  grad(x0, g0);
  const double p = 1.0 / static_cast<double>(k);
  const double sd = std::sqrt(2.0 * eta / static_cast<double>(k));
  Vector walk(d, 0.0), y(d), xhat(d), ghat(d);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const bool selected = state.rng.uniform(RngLane::selection) < p;
    state.rng.fill_normal(y);
    if (selected) {
      ++hits;
      const double t = eta * static_cast<double>(i) / static_cast<double>(k);
      for (std::size_t j = 0; j < d; ++j) {
        const double noise = convention == InterpolantConvention::exclusive ? walk[j] : walk[j] + sd * y[j];
        xhat[j] = x0[j] - t * g0[j] + noise;
      }
      grad(xhat, ghat);
      for (std::size_t j = 0; j < d; ++j) x[j] += eta * (g0[j] - ghat[j]);
    }
    for (std::size_t j = 0; j < d; ++j) {
      x[j] += -p * eta * g0[j] + sd * y[j];
      walk[j] += sd * y[j];
    }
  }
  return hits;
}

void ulmc_step(ChainState& state, const PotentialSpec& spec, const KernelBlocks& kernel) {
  Vector z(2 * spec.dim);
  for (std::size_t j = 0; j < spec.dim; ++j) {
    z[2 * j] = state.rng.normal();
    z[2 * j + 1] = state.rng.normal();
  }
  ulmc_step(state, spec, kernel, z);
}

void ulmc_step(ChainState& state, const PotentialSpec& spec, const KernelBlocks& kernel,
               std::span<const double> z) {
  require_underdamped(state, spec);
  const CountingGradient grad(spec, state.gradient_calls);
  Vector& u = state.position;
  Vector& v = *state.velocity;
  Vector g(spec.dim);
  grad(u, g);
  const Mat2 s = sqrt_block(kernel.c);
  for (std::size_t j = 0; j < spec.dim; ++j) {
    const Vec2 det = affine(kernel, u[j], v[j], -g[j]);
    const Vec2 noise = s * Vec2{z[2 * j], z[2 * j + 1]};
    u[j] = det.x0 + noise.x0;
    v[j] = det.x1 + noise.x1;
  }
}

std::size_t uplmc_batch(ChainState& state, const PotentialSpec& spec, double eta, std::size_t k,
                        double gamma) {
  require_underdamped(state, spec);
  require(eta > 0.0, ErrorKind::precondition, "step must be positive");
  const std::size_t d = spec.dim;
  const CountingGradient grad(spec, state.gradient_calls);
  Vector& u = state.position;
  Vector& v = *state.velocity;

  Vector g0(d);
  grad(u, g0);
  const std::vector<std::size_t> indices = sample_index_set(k, state.rng);
  const BatchPlan plan = sample_underdamped_bridge(k, eta, gamma, d, indices, state.rng);

  const double h = eta / static_cast<double>(k);
  const KernelBlocks full = detail::transition(eta, gamma);
  const KernelBlocks inner = detail::transition(h, gamma);
  const double kk = static_cast<double>(k);

  Vector cu(d, 0.0), cv(d, 0.0), uhat(d), ghat(d);
  for (std::size_t n = 0; n < indices.size(); ++n) {
    const std::size_t i = indices[n];
    const KernelBlocks to_i = detail::transition(static_cast<double>(i) * h, gamma);
    for (std::size_t j = 0; j < d; ++j)
      uhat[j] = affine(to_i, u[j], v[j], -g0[j]).x0 + plan.interpolant_noise[n][j];
    grad(uhat, ghat);
    // K A_{(K-1-i)h} g_h carries the extra drift at inner step i to the batch end.
    const Mat2 a_rest = detail::transition(static_cast<double>(k - 1 - i) * h, gamma).a;
    const Vec2 w = a_rest * inner.g_col;
    for (std::size_t j = 0; j < d; ++j) {
      const double db = g0[j] - ghat[j];  // b(xhat) - b(x0) with b = -grad F
      cu[j] += kk * w.x0 * db;
      cv[j] += kk * w.x1 * db;
    }
  }
  for (std::size_t j = 0; j < d; ++j) {
    const Vec2 det = affine(full, u[j], v[j], -g0[j]);
    u[j] = (det.x0 + cu[j]) + plan.end_noise[j];
    v[j] = (det.x1 + cv[j]) + plan.end_noise[d + j];
  }
  return indices.size();
}

std::size_t uplmc_batch_naive(ChainState& state, const PotentialSpec& spec, double eta, std::size_t k,
                              double gamma) {
  require_underdamped(state, spec);
  require(eta > 0.0, ErrorKind::precondition, "step must be positive");
  require(k >= 1, ErrorKind::invalid_batch, "batch size must be at least 1");
  const std::size_t d = spec.dim;
  const CountingGradient grad(spec, state.gradient_calls);
  const Vector u0 = state.position;
  const Vector v0 = *state.velocity;
  Vector& u = state.position;
  Vector& v = *state.velocity;

  Vector g0(d);
  grad(u0, g0);
  const double h = eta / static_cast<double>(k);
  const KernelBlocks step = build_kernel(h, gamma);
  const Mat2 s = sqrt_block(step.c);
  const double p = 1.0 / static_cast<double>(k);
  const double kk = static_cast<double>(k);

  Vector wu(d, 0.0), wv(d, 0.0), uhat(d), ghat(d);
  std::vector<Vec2> y(d);
  std::size_t hits = 0;
  for (std::size_t i = 0; i < k; ++i) {
    const bool selected = state.rng.uniform(RngLane::selection) < p;
    for (std::size_t j = 0; j < d; ++j) {
      y[j].x0 = state.rng.normal();
      y[j].x1 = state.rng.normal();
    }
    bool have_hat = false;
    if (selected) {
      ++hits;
      const KernelBlocks to_i = detail::transition(static_cast<double>(i) * h, gamma);
      for (std::size_t j = 0; j < d; ++j) uhat[j] = affine(to_i, u0[j], v0[j], -g0[j]).x0 + wu[j];
      grad(uhat, ghat);
      have_hat = true;
    }
    for (std::size_t j = 0; j < d; ++j) {
      const double b0 = -g0[j];
      const double drift = have_hat ? b0 + kk * (-ghat[j] - b0) : b0;
      const Vec2 noise = s * y[j];
      const Vec2 next = affine(step, u[j], v[j], drift) + noise;
      u[j] = next.x0;
      v[j] = next.x1;
      const Vec2 w = step.a * Vec2{wu[j], wv[j]} + noise;
      wu[j] = w.x0;
      wv[j] = w.x1;
    }
  }
  return hits;
}

void validate(const SamplerConfig& c) {
  require(c.eta > 0.0 && std::isfinite(c.eta), ErrorKind::invalid_schedule, "eta must be positive");
  require(c.k >= 1, ErrorKind::invalid_schedule, "k must be at least 1");
  if (c.dynamics == Dynamics::underdamped)
    require(c.gamma > 0.0 && std::isfinite(c.gamma), ErrorKind::invalid_schedule,
            "underdamped dynamics need gamma > 0");
}

void advance(ChainState& state, const PotentialSpec& spec, const SamplerConfig& c) {
  if (c.dynamics == Dynamics::overdamped) {
    if (c.method == Method::euler)
      olmc_step(state, spec, c.eta);
    else if (c.naive)
      oplmc_batch_naive(state, spec, c.eta, c.k, c.convention);
    else
      oplmc_batch(state, spec, c.eta, c.k, c.convention);
  } else {
    if (c.method == Method::euler)
      ulmc_step(state, spec, build_kernel(c.eta, c.gamma));
    else if (c.naive)
      uplmc_batch_naive(state, spec, c.eta, c.k, c.gamma);
    else
      uplmc_batch(state, spec, c.eta, c.k, c.gamma);
  }
  ++state.batch_index;
}

std::vector<std::string> regime_warnings(const SamplerConfig& c, const PotentialSpec& spec) {
  std::vector<std::string> out;
  const double inner = c.method == Method::euler ? c.eta : c.eta / static_cast<double>(c.k);
  if (c.dynamics == Dynamics::overdamped) {
    if (c.method == Method::poisson && c.eta * spec.ell > 0.125)
      out.push_back("eta*L = " + fmt_double(c.eta * spec.ell) + " exceeds 1/8");
    if (inner * spec.ell > 1.0)
      out.push_back("inner step times L = " + fmt_double(inner * spec.ell) + " exceeds 1");
  } else {
    if (c.gamma < 2.0 * std::sqrt(spec.ell) * (1.0 - 1e-12))
      out.push_back("gamma below 2 sqrt(L)");
    if (c.gamma * c.eta >= 1.0)
      out.push_back("gamma*eta = " + fmt_double(c.gamma * c.eta) + " is not small");
  }
  return out;
}

ChainState initial_state(const PotentialSpec& spec, Dynamics dynamics, RngStream rng,
                         const InitOptions& init) {
  ChainState s;
  s.rng = rng;
  s.position = spec.optimum.value_or(Vector(spec.dim, 0.0));
  for (double& x : s.position) x += init.offset;
  if (dynamics == Dynamics::underdamped) {
    const double sd = 1.0 / std::sqrt(spec.ell);
    for (double& x : s.position) x += sd * s.rng.normal();
    Vector v(spec.dim);
    s.rng.fill_normal(v);
    s.velocity = std::move(v);
  }
  return s;
}

namespace {

void check_inputs(const ScheduleInputs& in) {
  require(in.epsilon > 0.0 && std::isfinite(in.epsilon), ErrorKind::invalid_schedule,
          "epsilon must be positive");
  require(in.alpha > 0.0 && in.ell >= in.alpha, ErrorKind::invalid_schedule,
          "need 0 < alpha <= ell");
  require(in.dim > 0, ErrorKind::invalid_schedule, "dimension must be positive");
  require(in.p >= 0, ErrorKind::invalid_schedule, "p must be nonnegative");
  require(in.c1 > 0 && in.c2 > 0 && in.c3 > 0 && in.c4 > 0 && in.gamma_factor > 0,
          ErrorKind::invalid_schedule, "schedule constants must be positive");
}

void finish(Schedule& s, Method method, double inner_requested) {
  s.inner_step_requested = inner_requested;
  const auto k = static_cast<std::size_t>(std::max(1.0, ceil_tolerant(s.k_real)));
  const auto n = static_cast<std::size_t>(std::max(1.0, ceil_tolerant(s.n_real)));
  s.config.method = method;
  if (method == Method::poisson) {
    s.config.eta = s.eta_requested;
    s.config.k = k;
    s.config.n_batches = n;
    s.inner_step_realized = s.eta_requested / static_cast<double>(k);
  } else {
    // Plain Euler at the inner step, run for the same number of inner steps.
    s.config.eta = inner_requested;
    s.config.k = 1;
    s.config.n_batches = n * k;
    s.inner_step_realized = inner_requested;
  }
}

}  // namespace

Schedule overdamped_schedule(const ScheduleInputs& in, Method method) {
  check_inputs(in);
  const double eps = in.epsilon, a = in.alpha, L = in.ell, d = static_cast<double>(in.dim);
  const double kappa = L / a;
  Schedule s;
  s.config.dynamics = Dynamics::overdamped;
  s.eta_requested = in.c1 * std::min(std::cbrt(a) * std::pow(eps, 2.0 / 3.0) / std::pow(L, 4.0 / 3.0),
                                     std::pow(eps, 2.0 / 3.0) / (std::cbrt(d) * L));
  s.k_real = 4.0 * s.eta_requested * L / (eps * eps);
  s.n_real = in.c2 * (std::pow(kappa, 4.0 / 3.0) + kappa * std::cbrt(d)) / std::pow(eps, 2.0 / 3.0);
  finish(s, method, eps * eps / (4.0 * L));

  const double eps_max = std::min({1.0, std::pow(kappa, -0.25), std::pow(d, -0.25)});
  if (eps > eps_max)
    s.warnings.push_back("epsilon above min(1, kappa^-1/4, d^-1/4) = " + fmt_double(eps_max));
  if (s.eta_requested * L > 0.125)
    s.warnings.push_back("eta*L = " + fmt_double(s.eta_requested * L) + " exceeds 1/8");
  return s;
}

Schedule underdamped_schedule(const ScheduleInputs& in, Method method) {
  check_inputs(in);
  const double eps = in.epsilon, a = in.alpha, L = in.ell, d = static_cast<double>(in.dim);
  const double kappa = L / a, p = in.p;
  const double sqrt_l = std::sqrt(L);
  Schedule s;
  s.config.dynamics = Dynamics::underdamped;
  s.config.gamma = in.gamma_factor * sqrt_l;

  const double e_exp = (p + 2.0) / (4.0 * p + 3.0);
  const double d_exp = p / (4.0 * p + 3.0);
  const double eta1 = std::cbrt(eps) / (std::pow(kappa, 1.0 / 6.0) * std::pow(d, 1.0 / 6.0) * sqrt_l);
  const double eta2 = std::pow(eps, e_exp) /
                      (std::pow(kappa, 3.0 * p / (8.0 * p + 6.0)) * std::pow(d, d_exp) * sqrt_l);
  s.eta_requested = in.c3 * std::min(eta1, eta2);
  const double inner = 0.94 * eps * std::sqrt(a) / (L * std::sqrt(2.0));
  s.k_real = s.eta_requested / inner;
  s.n_real = in.c4 * (std::pow(kappa, 7.0 / 6.0) * std::pow(d, 1.0 / 6.0) / std::cbrt(eps) +
                      std::pow(kappa, (11.0 * p + 6.0) / (8.0 * p + 6.0)) * std::pow(d, d_exp) /
                          std::pow(eps, e_exp));
  finish(s, method, inner);

  const double eps_max =
      std::min({1.0, kappa / std::sqrt(d),
                std::pow(kappa, (p + 3.0) / (2.0 * (3.0 * p + 1.0))) * std::pow(d, -p / (3.0 * p + 1.0))});
  if (eps > eps_max) s.warnings.push_back("epsilon above the corollary's range " + fmt_double(eps_max));
  if (s.config.gamma * s.eta_requested >= 1.0)
    s.warnings.push_back("gamma*eta = " + fmt_double(s.config.gamma * s.eta_requested) + " is not small");
  return s;
}

GradientSumReport gradient_sum_diagnostic(const std::vector<std::vector<Vector>>& traces,
                                          const PotentialSpec& spec, double eta, double constant) {
  require(spec.has_value(), ErrorKind::diagnostic_unavailable, "target has no value map");
  require(!traces.empty() && !traces.front().empty(), ErrorKind::precondition, "empty trace");
  require(eta > 0.0 && eta * spec.ell <= 0.125 * (1.0 + 1e-12), ErrorKind::precondition,
          "gradient-sum diagnostic needs eta*L <= 1/8");
  const std::size_t snapshots = traces.front().size();
  const std::size_t n = snapshots - 1;
  Vector g(spec.dim);
  double sum_sq = 0.0, drop = 0.0;
  for (const auto& trace : traces) {
    require(trace.size() == snapshots, ErrorKind::precondition, "traces have different lengths");
    for (std::size_t t = 0; t < n; ++t) {
      spec.gradient(trace[t], g);
      for (double x : g) sum_sq += x * x;
    }
    drop += spec.value(trace.front()) - spec.value(trace.back());
  }
  const double chains = static_cast<double>(traces.size());
  GradientSumReport r;
  r.sum_sq_grad = sum_sq / chains;
  r.drift_term = drop / chains / eta;
  r.noise_term = spec.ell * static_cast<double>(spec.dim) * static_cast<double>(n);
  r.bound = constant * (r.drift_term + r.noise_term);
  r.within_bound = r.sum_sq_grad <= r.bound;
  return r;
}

double transformed_step_norm(double lambda, double h, double gamma) {
  const KernelBlocks k = build_kernel(h, gamma);
  const Mat2 b = {k.a.m00 - k.g_col.x0 * lambda, k.a.m01, k.a.m10 - k.g_col.x1 * lambda, k.a.m11};
  const Mat2 m = transform_block(gamma);
  const Mat2 t = m * b * m.inverse();
  const Mat2 tt = t.transpose() * t;
  const double half_tr = 0.5 * tt.trace();
  const double disc = std::sqrt(std::max(0.0, half_tr * half_tr - tt.det()));
  return std::sqrt(half_tr + disc);
}

}  // namespace plmc
