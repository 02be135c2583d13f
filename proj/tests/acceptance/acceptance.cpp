// Acceptance checks. Prints one PASS/FAIL line per criterion. With arguments,
// runs only the listed criterion numbers.

#include <chrono>
#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <functional>
#include <set>
#include <string>
#include <vector>

#include "plmc/experiment.hpp"
#include "plmc/kernel.hpp"
#include "plmc/lemma_lab.hpp"
#include "plmc/metrics.hpp"
#include "plmc/noise_bridge.hpp"
#include "plmc/samplers.hpp"

using namespace plmc;

namespace {

struct Outcome {
  bool ok = false;
  std::string detail;
};

std::string fmt(const char* f, double x) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, x);
  return buf;
}

// ---------------------------------------------------------------------------

Outcome whitened_gram() {
  double worst = 0.0, off = 0.0;
  for (double gamma : {1.0, 2.0, 4.0})
    for (double h : {1e-4, 1e-3, 1e-2}) {
      const Mat2 g = whitened_drift_gram(h, gamma);
      const double target = h / (2 * gamma);
      worst = std::max(worst, std::abs(g.m00 - target) / target);
      off = std::max({off, std::abs(g.m01), std::abs(g.m10), std::abs(g.m11)});
    }
  return {worst <= 1e-9, "max rel err " + fmt("%.3g", worst) + ", max zero-block entry " + fmt("%.3g", off)};
}

Outcome eigen_expansion() {
  bool ok = true;
  std::string detail;
  const std::vector<double> grid = parse_grid("1e-4:1e-2:9");
  for (double gamma : {1.0, 2.0}) {
    const double coarse = std::abs(eigen_expansion_scaled_residual(grid.back(), gamma));
    const double worst = gamma_prime_eigen_expansion_check(gamma, grid);
    ok = ok && worst <= 10 * coarse;
    detail += "gamma=" + fmt("%g", gamma) + ": max scaled residual " + fmt("%.4g", worst) + " vs coarse " +
              fmt("%.4g", coarse) + "; ";
  }
  // leading order of the large eigenvalue at gamma h <= 1e-3
  double lo = 1e300, hi = -1e300;
  for (double gamma : {1.0, 2.0})
    for (double h : {1e-5, 1e-4, 5e-4 / gamma}) {
      const double r = primed_noise_eigenvalues(h, gamma).e2 * gamma / h;
      lo = std::min(lo, r);
      hi = std::max(hi, r);
    }
  const bool leading = lo >= 3.8 && hi <= 4.2;
  detail += "E2*gamma/h in [" + fmt("%.6f", lo) + ", " + fmt("%.6f", hi) + "] (required [3.8, 4.2])";
  return {ok && leading, detail};
}

Outcome semigroup_conjugation() {
  std::vector<double> grid;
  for (int i = 0; i < 10; ++i) grid.push_back(1e-4 * std::pow(2500.0, i / 9.0));  // up to 0.25
  double worst_sg = 0.0, worst_conj = 0.0;
  for (double gamma : {1.0, 2.0})
    for (double h1 : grid)
      for (double h2 : grid) {
        const SemigroupResidual a = semigroup_residual(h1, h2, gamma);
        const SemigroupResidual b = primed_semigroup_residual(h1, h2, gamma);
        worst_sg = std::max({worst_sg, a.res_a, a.res_g, b.res_a, b.res_g});
        worst_conj = std::max({worst_conj, conjugation_residual(h1, gamma).max(),
                               conjugation_residual(h1 + h2, gamma).max()});
      }
  return {worst_sg <= 1e-12 && worst_conj <= 1e-12,
          "semigroup " + fmt("%.3g", worst_sg) + ", conjugation " + fmt("%.3g", worst_conj)};
}

Outcome k_one_degeneracy() {
  const PotentialSpec f = make_quadratic({1.0, 3.0, 0.5}, {0.5, -2.0, 1.0});
  const KernelBlocks kern = build_kernel(0.07, 2.0);
  RngStream draw(101, 0);
  std::size_t mismatches = 0;
  for (std::size_t r = 0; r < 1000; ++r) {
    Vector x(3), v(3);
    for (auto& e : x) e = 3 * draw.normal();
    for (auto& e : v) e = draw.normal();
    ChainState a{x, std::nullopt, 0, 0, RngStream(5, r)};
    ChainState b = a;
    oplmc_batch(a, f, 0.07, 1);
    olmc_step(b, f, 0.07);
    mismatches += a.position != b.position || !(a.rng == b.rng);
    ChainState c{x, v, 0, 0, RngStream(6, r)};
    ChainState d = c;
    uplmc_batch(c, f, 0.07, 1, 2.0);
    ulmc_step(d, f, kern);
    mismatches += c.position != d.position || *c.velocity != *d.velocity;
  }
  return {mismatches == 0, std::to_string(mismatches) + " mismatches over 2000 paired steps"};
}

// Largest |difference| / combined standard error over mean and covariance entries.
double law_gap(const std::vector<Vector>& a, const std::vector<Vector>& b) {
  const MomentEstimate ea = estimate_moments(a, CovarianceMode::full);
  const MomentEstimate eb = estimate_moments(b, CovarianceMode::full);
  double worst = 0.0;
  for (std::size_t j = 0; j < ea.mean.size(); ++j)
    worst = std::max(worst, std::abs(ea.mean[j] - eb.mean[j]) / std::hypot(ea.mean_std_error[j], eb.mean_std_error[j]));
  for (Eigen::Index r = 0; r < ea.cov.rows(); ++r)
    for (Eigen::Index c = r; c < ea.cov.cols(); ++c)
      worst = std::max(worst, std::abs(ea.cov(r, c) - eb.cov(r, c)) /
                                  std::hypot(ea.cov_std_error(r, c), eb.cov_std_error(r, c)));
  return worst;
}

Outcome skip_ahead() {
  const PotentialSpec f = make_quadratic({1.0, 4.0}, {1.0, -1.0});
  const std::size_t chains = 10000, batches = 5;
  double worst = 0.0;
  std::string detail;
  for (auto dyn : {Dynamics::overdamped, Dynamics::underdamped})
    for (std::size_t k : {2, 4, 8}) {
      const double eta = dyn == Dynamics::overdamped ? 0.1 : 0.2;
      std::vector<Vector> fast, slow;
      for (std::size_t c = 0; c < chains; ++c) {
        ChainState a{{3.0, 3.0}, std::nullopt, 0, 0, RngStream(11, c)};
        if (dyn == Dynamics::underdamped) a.velocity = Vector{0.0, 1.0};
        ChainState b = a;
        b.rng = RngStream(12, c);
        for (std::size_t t = 0; t < batches; ++t) {
          if (dyn == Dynamics::overdamped) {
            oplmc_batch(a, f, eta, k);
            oplmc_batch_naive(b, f, eta, k);
          } else {
            uplmc_batch(a, f, eta, k, 2.0);
            uplmc_batch_naive(b, f, eta, k, 2.0);
          }
        }
        Vector xa = a.position, xb = b.position;
        if (a.velocity) {
          xa.insert(xa.end(), a.velocity->begin(), a.velocity->end());
          xb.insert(xb.end(), b.velocity->begin(), b.velocity->end());
        }
        fast.push_back(xa);
        slow.push_back(xb);
      }
      const double gap = law_gap(fast, slow);
      worst = std::max(worst, gap);
      detail += std::string(dyn == Dynamics::overdamped ? "over" : "under") + " K=" + std::to_string(k) + ": " +
                fmt("%.2f", gap) + " se; ";
    }
  return {worst <= 3.0, detail + "max " + fmt("%.2f", worst) + " se"};
}

Outcome cost_accounting() {
  const PotentialSpec f = make_quadratic({1.0, 1.0}, {0.0, 0.0});
  const std::size_t n = 100000;
  bool ok = true;
  std::string detail;
  for (auto dyn : {Dynamics::overdamped, Dynamics::underdamped}) {
    ChainState s{{0.0, 0.0}, std::nullopt, 0, 0, RngStream(21, dyn == Dynamics::overdamped ? 0 : 1)};
    if (dyn == Dynamics::underdamped) s.velocity = Vector{0.0, 0.0};
    double sum = 0, sum2 = 0;
    for (std::size_t i = 0; i < n; ++i) {
      const std::uint64_t before = s.gradient_calls;
      if (dyn == Dynamics::overdamped)
        oplmc_batch(s, f, 0.01, 100);
      else
        uplmc_batch(s, f, 0.01, 100, 2.0);
      const double calls = static_cast<double>(s.gradient_calls - before);
      sum += calls;
      sum2 += calls * calls;
    }
    const double mean = sum / n;
    const double sigma = std::sqrt((sum2 / n - mean * mean) / n);
    ok = ok && std::abs(mean - 2.0) <= 3 * sigma;
    detail += std::string(dyn == Dynamics::overdamped ? "over" : "under") + " mean " + fmt("%.5f", mean) +
              " (sigma " + fmt("%.5f", sigma) + "); ";
  }
  return {ok, detail};
}

Outcome coupling() {
  CouplingVerifyOptions o;  // beta grid {0, 0.01, 0.05, 0.1, 0.3, 1, 2}, n_quad 1e5
  const RunReport r = verify_coupling(o);
  double worst_err = 0.0, min_margin = 1e300;
  bool all = true;
  for (const auto& row : r.json["rows"]) {
    all = all && row["pass"].get<bool>();
    worst_err = std::max(worst_err, row["quadrature_error_bound"].get<double>());
    min_margin = std::min(min_margin, row["margin"].get<double>());
  }
  return {all && worst_err < 1e-8, std::to_string(r.json["rows"].size()) + " certificates, all pass: " +
                                       (all ? "yes" : "no") + ", max error bound " + fmt("%.3g", worst_err) +
                                       ", min margin " + fmt("%.3g", min_margin)};
}

Outcome stationary_accuracy() {
  ExperimentConfig c;
  c.target.precision = {1, 1, 1, 1};
  c.target.mean = {0, 0, 0, 0};
  c.epsilon = 0.3;
  c.n_chains = 2000;
  c.seed = 8;
  const RunReport r = run_sample(c);
  const double w = r.json["w2_moment"].get<double>();
  const auto& s = r.json["schedule"];
  return {w <= 0.36, "eta " + fmt("%.4f", s["eta"].get<double>()) + ", K " + std::to_string(s["k"].get<int>()) +
                         ", N " + std::to_string(s["n_batches"].get<int>()) + ", moment-W2^2 " + fmt("%.4g", w) +
                         " vs 0.36"};
}

Outcome complexity_scaling() {
  struct Case {
    const char* name;
    Method method;
    Dynamics dynamics;
    double target, tol;
  };
  const Case cases[] = {{"LMC", Method::euler, Dynamics::overdamped, 2.0, 0.3},
                        {"overdamped PLMC", Method::poisson, Dynamics::overdamped, 0.67, 0.25},
                        {"underdamped PLMC", Method::poisson, Dynamics::underdamped, 0.33, 0.25}};
  bool ok = true;
  std::string detail;
  for (const Case& cs : cases) {
    ExperimentConfig c;
    c.method = cs.method;
    c.dynamics = cs.dynamics;
    c.n_chains = 2000;
    c.init_offset = 1e4;
    c.seed = 9;
    const RunReport r = run_sweep(c);
    const bool fitted = !r.json["fit"].is_null() && r.json["fit"]["points"] == 5;
    const double slope = fitted ? r.json["fit"]["slope"].get<double>() : std::nan("");
    const bool pass = fitted && std::abs(slope - cs.target) <= cs.tol;
    ok = ok && pass;
    detail += std::string(cs.name) + " slope " + fmt("%.3f", slope) + " (" + fmt("%.2f", cs.target) + " +- " +
              fmt("%.2f", cs.tol) + "); ";
  }
  return {ok, detail};
}

Outcome gradient_sum() {
  bool ok = true;
  std::string detail;
  for (std::size_t d : {2, 8}) {
    const PotentialSpec f = make_quadratic(Vector(d, 1.0), Vector(d, 0.0));
    std::vector<std::vector<Vector>> traces;
    for (std::size_t c = 0; c < 1000; ++c) {
      ChainState s{Vector(d, 3.0), std::nullopt, 0, 0, RngStream(31, c)};
      std::vector<Vector> tr = {s.position};
      for (int t = 0; t < 200; ++t) {
        oplmc_batch(s, f, 1e-2, 10);
        tr.push_back(s.position);
      }
      traces.push_back(std::move(tr));
    }
    const GradientSumReport g = gradient_sum_diagnostic(traces, f, 1e-2);
    ok = ok && g.within_bound;
    detail += "d=" + std::to_string(d) + ": sum " + fmt("%.4g", g.sum_sq_grad) + " <= bound " + fmt("%.4g", g.bound) +
              "; ";
  }
  return {ok, detail};
}

Outcome bridge_covariance() {
  double worst = 0.0;
  std::size_t cases = 0;
  for (double gamma : {0.5, 2.0, 8.0})
    for (double gh : {0.01, 0.1}) {
      BridgeVerifyOptions o;
      o.k_max = 8;
      o.gamma = gamma;
      o.eta = gh / gamma;
      const RunReport r = verify_bridge(o);
      worst = std::max(worst, r.json["max_underdamped_residual"].get<double>());
      cases += r.csv_rows.size();
    }
  return {worst <= 1e-10, std::to_string(cases) + " index sets, max relative residual " + fmt("%.3g", worst)};
}

struct Criterion {
  int id;
  const char* title;
  double budget_s;
  std::function<Outcome()> run;
};

}  // namespace

int main(int argc, char** argv) {
  const std::vector<Criterion> all = {
      {1, "whitened drift gram identity", 1, whitened_gram},
      {2, "primed noise eigenvalue expansion", 1, eigen_expansion},
      {3, "semigroup and conjugation residuals", 1, semigroup_conjugation},
      {4, "K=1 degeneracy", 5, k_one_degeneracy},
      {5, "skip-ahead equivalence", 120, skip_ahead},
      {6, "cost accounting", 30, cost_accounting},
      {7, "coupling certificates", 60, coupling},
      {8, "stationary accuracy", 300, stationary_accuracy},
      {9, "complexity scaling", 1800, complexity_scaling},
      {10, "gradient-sum diagnostic", 120, gradient_sum},
      {11, "bridge covariance", 10, bridge_covariance},
  };
  std::set<int> wanted;
  for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));

  int failures = 0;
  for (const Criterion& c : all) {
    if (!wanted.empty() && !wanted.count(c.id)) continue;
    const auto t0 = std::chrono::steady_clock::now();
    Outcome o;
    try {
      o = c.run();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
    const bool in_time = secs < c.budget_s;
    const bool pass = o.ok && in_time;
    failures += !pass;
    std::printf("%s %2d %s: %s [%.2fs of %.0fs%s]\n", pass ? "PASS" : "FAIL", c.id, c.title, o.detail.c_str(), secs,
                c.budget_s, in_time ? "" : ", over budget");
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
