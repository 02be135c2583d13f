#include "plmc/experiment.hpp"

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>
#include <thread>

#include "plmc/error.hpp"
#include "plmc/kernel.hpp"
#include "plmc/lemma_lab.hpp"
#include "plmc/metrics.hpp"
#include "plmc/noise_bridge.hpp"

namespace plmc {

using nlohmann::json;

// ---------------------------------------------------------------------------
// config

namespace {

const char* dynamics_name(Dynamics d) { return d == Dynamics::overdamped ? "overdamped" : "underdamped"; }
const char* method_name(Method m) { return m == Method::euler ? "euler" : "poisson"; }
const char* convention_name(InterpolantConvention c) {
  return c == InterpolantConvention::exclusive ? "exclusive" : "inclusive";
}

Dynamics parse_dynamics(const std::string& s) {
  if (s == "overdamped" || s == "over") return Dynamics::overdamped;
  if (s == "underdamped" || s == "under") return Dynamics::underdamped;
  throw Error(ErrorKind::config, "unknown dynamics '" + s + "'");
}

Method parse_method(const std::string& s) {
  if (s == "euler") return Method::euler;
  if (s == "poisson") return Method::poisson;
  throw Error(ErrorKind::config, "unknown method '" + s + "'");
}

InterpolantConvention parse_convention(const std::string& s) {
  if (s == "exclusive") return InterpolantConvention::exclusive;
  if (s == "inclusive") return InterpolantConvention::inclusive;
  throw Error(ErrorKind::config, "unknown interpolant convention '" + s + "'");
}

void reject_unknown(const json& j, std::initializer_list<const char*> keys, const std::string& where) {
  require(j.is_object(), ErrorKind::config, where + " must be an object");
  const std::set<std::string> allowed(keys.begin(), keys.end());
  for (auto it = j.begin(); it != j.end(); ++it)
    require(allowed.count(it.key()) == 1, ErrorKind::config, "unknown key '" + it.key() + "' in " + where);
}

template <class T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception& e) {
    throw Error(ErrorKind::config, std::string("bad value for '") + key + "': " + e.what());
  }
}

}  // namespace

json to_json(const ExperimentConfig& c) {
  json t;
  t["name"] = c.target.name;
  if (c.target.name == "quadratic") {
    t["precision"] = c.target.precision;
    t["mean"] = c.target.mean;
  } else {
    t["n_obs"] = c.target.n_obs;
    t["dim"] = c.target.dim;
    t["alpha"] = c.target.alpha;
    t["data_seed"] = c.target.data_seed;
    t["data_path"] = c.target.data_path;
  }
  json j;
  j["target"] = t;
  j["dynamics"] = dynamics_name(c.dynamics);
  j["method"] = method_name(c.method);
  j["convention"] = convention_name(c.convention);
  if (c.schedule) {
    const ScheduleConstants& s = *c.schedule;
    j["schedule"] = {{"p", s.p}, {"c1", s.c1}, {"c2", s.c2}, {"c3", s.c3}, {"c4", s.c4},
                     {"gamma_factor", s.gamma_factor}};
  }
  if (c.sampler) {
    const ExplicitSampler& s = *c.sampler;
    j["sampler"] = {{"eta", s.eta}, {"k", s.k}, {"gamma", s.gamma}, {"n_batches", s.n_batches}};
  }
  j["epsilon"] = c.epsilon ? json(*c.epsilon) : json(nullptr);
  j["epsilons"] = c.epsilons;
  j["n_chains"] = c.n_chains;
  j["seed"] = c.seed;
  j["output_path"] = c.output_path;
  j["estimators"] = c.estimators;
  j["covariance_mode"] = c.covariance_mode;
  j["n_directions"] = c.n_directions;
  j["init_offset"] = c.init_offset;
  j["budget_factor"] = c.budget_factor;
  j["checkpoints"] = c.checkpoints;
  j["threads"] = c.threads;
  j["record_timing"] = c.record_timing;
  return j;
}

ExperimentConfig config_from_json(const json& j) {
  reject_unknown(j,
                 {"target", "dynamics", "method", "convention", "schedule", "sampler", "epsilon", "epsilons",
                  "n_chains", "seed", "output_path", "estimators", "covariance_mode", "n_directions",
                  "init_offset", "budget_factor", "checkpoints", "threads", "record_timing"},
                 "config");
  ExperimentConfig c;
  if (j.contains("target")) {
    const json& t = j.at("target");
    reject_unknown(t, {"name", "precision", "mean", "n_obs", "dim", "alpha", "data_seed", "data_path"}, "target");
    read(t, "name", c.target.name);
    read(t, "precision", c.target.precision);
    read(t, "mean", c.target.mean);
    read(t, "n_obs", c.target.n_obs);
    read(t, "dim", c.target.dim);
    read(t, "alpha", c.target.alpha);
    read(t, "data_seed", c.target.data_seed);
    read(t, "data_path", c.target.data_path);
    if (c.target.name == "quadratic" && t.contains("precision") && !t.contains("mean"))
      c.target.mean.assign(c.target.precision.size(), 0.0);
  }
  std::string s;
  if (j.contains("dynamics")) {
    read(j, "dynamics", s);
    c.dynamics = parse_dynamics(s);
  }
  if (j.contains("method")) {
    read(j, "method", s);
    c.method = parse_method(s);
  }
  if (j.contains("convention")) {
    read(j, "convention", s);
    c.convention = parse_convention(s);
  }
  const bool has_schedule = j.contains("schedule") && !j.at("schedule").is_null();
  const bool has_sampler = j.contains("sampler") && !j.at("sampler").is_null();
  if (has_sampler) {
    const json& e = j.at("sampler");
    reject_unknown(e, {"eta", "k", "gamma", "n_batches"}, "sampler");
    ExplicitSampler x;
    read(e, "eta", x.eta);
    read(e, "k", x.k);
    read(e, "gamma", x.gamma);
    read(e, "n_batches", x.n_batches);
    c.sampler = x;
    c.schedule.reset();
  }
  if (has_schedule) {
    const json& e = j.at("schedule");
    reject_unknown(e, {"p", "c1", "c2", "c3", "c4", "gamma_factor"}, "schedule");
    ScheduleConstants x;
    read(e, "p", x.p);
    read(e, "c1", x.c1);
    read(e, "c2", x.c2);
    read(e, "c3", x.c3);
    read(e, "c4", x.c4);
    read(e, "gamma_factor", x.gamma_factor);
    c.schedule = x;
  }
  if (j.contains("epsilon")) {
    if (j.at("epsilon").is_null())
      c.epsilon.reset();
    else {
      double e = 0.0;
      read(j, "epsilon", e);
      c.epsilon = e;
    }
  }
  read(j, "epsilons", c.epsilons);
  read(j, "n_chains", c.n_chains);
  read(j, "seed", c.seed);
  read(j, "output_path", c.output_path);
  read(j, "estimators", c.estimators);
  read(j, "covariance_mode", c.covariance_mode);
  read(j, "n_directions", c.n_directions);
  read(j, "init_offset", c.init_offset);
  read(j, "budget_factor", c.budget_factor);
  read(j, "checkpoints", c.checkpoints);
  read(j, "threads", c.threads);
  read(j, "record_timing", c.record_timing);
  return c;
}

void validate(const ExperimentConfig& c) {
  require(c.schedule.has_value() != c.sampler.has_value(), ErrorKind::config,
          "exactly one of 'schedule' and 'sampler' must be given");
  require(c.n_chains >= 1, ErrorKind::config, "n_chains must be at least 1");
  require(c.target.name == "quadratic" || c.target.name == "logistic", ErrorKind::config,
          "unknown target '" + c.target.name + "'");
  require(c.covariance_mode == "diagonal" || c.covariance_mode == "full", ErrorKind::config,
          "covariance_mode must be diagonal or full");
  for (const std::string& e : c.estimators)
    require(e == "moment" || e == "sliced", ErrorKind::config, "unknown estimator '" + e + "'");
  require(c.n_directions >= 1, ErrorKind::config, "n_directions must be at least 1");
  require(c.budget_factor >= 1.0, ErrorKind::config, "budget_factor must be at least 1");
  require(c.checkpoints >= 1, ErrorKind::config, "checkpoints must be at least 1");
  if (c.schedule) require(c.epsilon.has_value(), ErrorKind::config, "a schedule needs 'epsilon'");
  if (c.epsilon) require(*c.epsilon > 0.0, ErrorKind::config, "epsilon must be positive");
  if (c.sampler) {
    require(c.sampler->eta > 0.0 && c.sampler->k >= 1, ErrorKind::config, "sampler needs eta > 0 and k >= 1");
    if (c.dynamics == Dynamics::underdamped)
      require(c.sampler->gamma > 0.0, ErrorKind::config, "underdamped sampler needs gamma > 0");
  }
}

PotentialSpec build_target(const TargetConfig& t) {
  if (t.name == "quadratic") return make_quadratic(t.precision, t.mean);
  if (t.name == "logistic") {
    LogisticData data;
    if (!t.data_path.empty()) {
      std::ifstream in(t.data_path);
      require(in.good(), ErrorKind::config, "cannot open logistic data '" + t.data_path + "'");
      data = read_logistic_csv(in);
    } else {
      data = synthetic_logistic_data(t.n_obs, t.dim, t.data_seed);
    }
    return make_logistic(data, t.alpha);
  }
  throw Error(ErrorKind::config, "unknown target '" + t.name + "'");
}

// ---------------------------------------------------------------------------
// plumbing

std::string format_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", x);
  return buf;
}

std::string RunReport::csv() const {
  std::ostringstream os;
  auto line = [&](const std::vector<std::string>& cells) {
    for (std::size_t i = 0; i < cells.size(); ++i) os << (i ? "," : "") << cells[i];
    os << '\n';
  };
  line(csv_header);
  for (const auto& r : csv_rows) line(r);
  return os.str();
}

void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& f) {
  if (threads == 0) threads = std::max(1u, std::thread::hardware_concurrency());
  threads = std::min(threads, n);
  if (threads <= 1) {
    for (std::size_t i = 0; i < n; ++i) f(i);
    return;
  }
  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::atomic<bool> failed{false};
  std::vector<std::thread> pool;
  for (std::size_t t = 0; t < threads; ++t)
    pool.emplace_back([&] {
      while (!failed.load()) {
        const std::size_t i = next.fetch_add(1);
        if (i >= n) return;
        try {
          f(i);
        } catch (...) {
          if (!failed.exchange(true)) failure = std::current_exception();
        }
      }
    });
  for (auto& th : pool) th.join();
  if (failure) std::rethrow_exception(failure);
}

namespace {

// Reference draws for sliced estimates use stream ids far from chain ids.
constexpr std::uint64_t kReferenceStream = 0x8000'0000'0000'0000ull;
constexpr std::uint64_t kSliceStream = 0x8000'0000'0000'0001ull;

struct Resolved {
  PotentialSpec spec;
  SamplerConfig sampler;
  std::optional<Schedule> schedule;
  std::optional<GaussianTarget> target;  // quadratic targets only
  std::optional<double> threshold;       // eps^2 d / alpha
  std::vector<std::string> warnings;
};

Resolved resolve(const ExperimentConfig& c, std::optional<double> epsilon) {
  validate(c);
  Resolved r;
  r.spec = build_target(c.target);
  validate(r.spec);
  if (c.target.name == "quadratic") r.target = quadratic_target(c.target.precision, c.target.mean);
  if (c.schedule) {
    require(epsilon.has_value(), ErrorKind::config, "a schedule needs epsilon");
    ScheduleInputs in;
    in.epsilon = *epsilon;
    in.alpha = r.spec.alpha;
    in.ell = r.spec.ell;
    in.dim = r.spec.dim;
    in.p = c.schedule->p;
    in.c1 = c.schedule->c1;
    in.c2 = c.schedule->c2;
    in.c3 = c.schedule->c3;
    in.c4 = c.schedule->c4;
    in.gamma_factor = c.schedule->gamma_factor;
    r.schedule = c.dynamics == Dynamics::overdamped ? overdamped_schedule(in, c.method)
                                                    : underdamped_schedule(in, c.method);
    r.sampler = r.schedule->config;
    r.warnings = r.schedule->warnings;
  } else {
    r.sampler.eta = c.sampler->eta;
    r.sampler.k = c.method == Method::euler ? 1 : c.sampler->k;
    r.sampler.gamma = c.sampler->gamma;
    r.sampler.n_batches = c.sampler->n_batches;
    r.sampler.dynamics = c.dynamics;
    r.sampler.method = c.method;
  }
  r.sampler.convention = c.convention;
  validate(r.sampler);
  for (auto& w : regime_warnings(r.sampler, r.spec)) r.warnings.push_back(w);
  if (epsilon) r.threshold = (*epsilon) * (*epsilon) * static_cast<double>(r.spec.dim) / r.spec.alpha;
  return r;
}

bool wants(const ExperimentConfig& c, const std::string& estimator) {
  return std::find(c.estimators.begin(), c.estimators.end(), estimator) != c.estimators.end();
}

void check_estimators(const ExperimentConfig& c, const Resolved& r) {
  if (!r.target)
    require(c.estimators.empty(), ErrorKind::estimator_mismatch,
            "W2 estimators need a target with a known law; use an empty estimator list for '" +
                c.target.name + "'");
}

struct Evaluation {
  std::optional<double> w2_moment;
  std::optional<double> w2_sliced;
  double std_error = std::nan("");
};

Evaluation evaluate(const ExperimentConfig& c, const Resolved& r, const std::vector<Vector>& samples,
                    bool include_sliced) {
  Evaluation ev;
  if (!r.target) return ev;
  const CovarianceMode mode = c.covariance_mode == "full" ? CovarianceMode::full : CovarianceMode::diagonal;
  if (wants(c, "moment")) {
    const MomentEstimate est = estimate_moments(samples, mode);
    ev.w2_moment = moment_w2(est, r.target->mean, r.target->variance);
    if (samples.size() > 1) ev.std_error = moment_w2_std_error(est, r.target->mean, r.target->variance);
  }
  if (include_sliced && wants(c, "sliced")) {
    RngStream ref_rng(c.seed, kReferenceStream);
    std::vector<Vector> reference(samples.size(), Vector(r.spec.dim));
    for (Vector& x : reference)
      for (std::size_t j = 0; j < x.size(); ++j)
        x[j] = r.target->mean[j] + std::sqrt(r.target->variance[j]) * ref_rng.normal();
    RngStream dir_rng(c.seed, kSliceStream);
    const W2Estimate w = w2_sliced(samples, reference, c.n_directions, dir_rng);
    ev.w2_sliced = w.value_sq;
    if (!ev.w2_moment) ev.std_error = w.std_error;
  }
  return ev;
}

std::string opt_cell(const std::optional<double>& x) { return x ? format_double(*x) : "nan"; }
json opt_json(const std::optional<double>& x) { return x ? json(*x) : json(nullptr); }

std::vector<ChainState> start_chains(const ExperimentConfig& c, const Resolved& r) {
  std::vector<ChainState> chains(c.n_chains);
  InitOptions init;
  init.offset = c.init_offset;
  parallel_for(c.n_chains, c.threads, [&](std::size_t i) {
    chains[i] = initial_state(r.spec, r.sampler.dynamics, RngStream(c.seed, i), init);
  });
  return chains;
}

void advance_chains(const ExperimentConfig& c, const Resolved& r, std::vector<ChainState>& chains,
                    std::size_t batches) {
  parallel_for(chains.size(), c.threads, [&](std::size_t i) {
    for (std::size_t b = 0; b < batches; ++b) advance(chains[i], r.spec, r.sampler);
  });
}

std::uint64_t total_calls(const std::vector<ChainState>& chains) {
  std::uint64_t total = 0;
  for (const ChainState& s : chains) total += s.gradient_calls;
  return total;
}

std::vector<Vector> positions(const std::vector<ChainState>& chains) {
  std::vector<Vector> out;
  out.reserve(chains.size());
  for (const ChainState& s : chains) out.push_back(s.position);
  return out;
}

json schedule_json(const Resolved& r) {
  json j = {{"eta", r.sampler.eta},
            {"k", r.sampler.k},
            {"gamma", r.sampler.gamma},
            {"n_batches", r.sampler.n_batches},
            {"dynamics", dynamics_name(r.sampler.dynamics)},
            {"method", method_name(r.sampler.method)}};
  if (r.schedule) {
    j["eta_requested"] = r.schedule->eta_requested;
    j["k_real"] = r.schedule->k_real;
    j["n_real"] = r.schedule->n_real;
    j["inner_step_requested"] = r.schedule->inner_step_requested;
    j["inner_step_realized"] = r.schedule->inner_step_realized;
  }
  j["warnings"] = r.warnings;
  return j;
}

const std::vector<std::string> kRunHeader = {"epsilon",   "eta",       "k",      "n_batches",
                                             "total_gradient_calls", "gradient_calls_per_chain",
                                             "mean_set_size", "w2_moment", "w2_sliced", "stderr", "attained"};

// |S| per batch, from the counter: every Poisson batch costs 1 + |S| calls.
double mean_set_size(const SamplerConfig& s, double per_chain, std::size_t batches) {
  if (s.method != Method::poisson || batches == 0) return 0.0;
  return (per_chain - static_cast<double>(batches)) / static_cast<double>(batches);
}

}  // namespace

RunReport run_sample(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  const Resolved r = resolve(c, c.epsilon);
  check_estimators(c, r);

  std::vector<ChainState> chains = start_chains(c, r);
  advance_chains(c, r, chains, r.sampler.n_batches);

  const std::vector<Vector> samples = positions(chains);
  const Evaluation ev = evaluate(c, r, samples, true);
  const std::uint64_t calls = total_calls(chains);
  const double per_chain = static_cast<double>(calls) / static_cast<double>(chains.size());
  std::optional<bool> attained;
  if (r.threshold && ev.w2_moment) attained = *ev.w2_moment <= *r.threshold;

  RunReport rep;
  rep.csv_header = kRunHeader;
  const double mean_s = mean_set_size(r.sampler, per_chain, r.sampler.n_batches);
  rep.csv_rows.push_back({opt_cell(c.epsilon), format_double(r.sampler.eta), std::to_string(r.sampler.k),
                          std::to_string(r.sampler.n_batches), std::to_string(calls), format_double(per_chain),
                          format_double(mean_s), opt_cell(ev.w2_moment),
                          opt_cell(ev.w2_sliced), format_double(ev.std_error),
                          attained ? (*attained ? "1" : "0") : "nan"});
  rep.json = {{"config", to_json(c)},
              {"schedule", schedule_json(r)},
              {"total_gradient_calls", calls},
              {"gradient_calls_per_chain", per_chain},
              {"mean_index_set_size", mean_s},
              {"w2_moment", opt_json(ev.w2_moment)},
              {"w2_sliced", opt_json(ev.w2_sliced)},
              {"std_error", std::isnan(ev.std_error) ? json(nullptr) : json(ev.std_error)},
              {"threshold", opt_json(r.threshold)},
              {"attained", attained ? json(*attained) : json(nullptr)}};
  if (c.record_timing)
    rep.json["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  return rep;
}

RunReport run_sweep(const ExperimentConfig& c) {
  const auto t0 = std::chrono::steady_clock::now();
  require(c.epsilons.size() >= 3, ErrorKind::config, "a sweep needs at least three epsilons");
  require(c.schedule.has_value(), ErrorKind::config, "a sweep needs a schedule, not an explicit sampler");
  require(wants(c, "moment"), ErrorKind::config, "first passage is measured with the moment estimator");

  RunReport rep;
  rep.csv_header = kRunHeader;
  json rows = json::array();
  std::vector<double> inv_eps, calls_at_passage;
  bool all_attained = true;

  for (double eps : c.epsilons) {
    const Resolved r = resolve(c, eps);
    check_estimators(c, r);
    const std::size_t n = r.sampler.n_batches;
    const std::size_t cadence = std::max<std::size_t>(1, (n + c.checkpoints - 1) / c.checkpoints);
    const auto budget = static_cast<std::size_t>(std::ceil(c.budget_factor * static_cast<double>(n)));

    std::vector<ChainState> chains = start_chains(c, r);
    std::size_t done = 0;
    bool attained = false;
    Evaluation ev;
    while (done < budget) {
      const std::size_t step = std::min(cadence, budget - done);
      advance_chains(c, r, chains, step);
      done += step;
      ev = evaluate(c, r, positions(chains), false);
      if (*ev.w2_moment <= *r.threshold) {
        attained = true;
        break;
      }
    }
    ev = evaluate(c, r, positions(chains), true);
    const double per_chain = static_cast<double>(total_calls(chains)) / static_cast<double>(chains.size());
    if (attained) {
      inv_eps.push_back(1.0 / eps);
      calls_at_passage.push_back(per_chain);
    } else {
      all_attained = false;
    }
    const std::uint64_t calls = total_calls(chains);
    rep.csv_rows.push_back({format_double(eps), format_double(r.sampler.eta), std::to_string(r.sampler.k),
                            std::to_string(done), std::to_string(calls), format_double(per_chain),
                            format_double(mean_set_size(r.sampler, per_chain, done)), opt_cell(ev.w2_moment),
                            opt_cell(ev.w2_sliced), format_double(ev.std_error), attained ? "1" : "0"});
    rows.push_back({{"epsilon", eps},
                    {"schedule", schedule_json(r)},
                    {"batches_run", done},
                    {"checkpoint_cadence", cadence},
                    {"budget_batches", budget},
                    {"gradient_calls_per_chain", per_chain},
                    {"total_gradient_calls", calls},
                    {"w2_moment", opt_json(ev.w2_moment)},
                    {"w2_sliced", opt_json(ev.w2_sliced)},
                    {"threshold", *r.threshold},
                    {"attained", attained}});
  }

  rep.json = {{"config", to_json(c)}, {"rows", rows}};
  if (inv_eps.size() >= 2) {
    const LogLogFit fit = fit_loglog(inv_eps, calls_at_passage);
    rep.json["fit"] = {{"slope", fit.slope}, {"intercept", fit.intercept}, {"residual", fit.residual},
                       {"points", inv_eps.size()}};
  } else {
    rep.json["fit"] = nullptr;
  }
  if (c.record_timing)
    rep.json["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
  rep.exit_code = all_attained ? exit_ok : exit_not_attained;
  return rep;
}

// ---------------------------------------------------------------------------
// verification suites

std::vector<double> parse_grid(const std::string& spec) {
  std::vector<std::string> parts;
  std::stringstream ss(spec);
  std::string item;
  while (std::getline(ss, item, ':')) parts.push_back(item);
  require(parts.size() == 3, ErrorKind::config, "grid must look like a:b:n");
  double a = 0.0, b = 0.0;
  long n = 0;
  try {
    a = std::stod(parts[0]);
    b = std::stod(parts[1]);
    n = std::stol(parts[2]);
  } catch (const std::exception&) {
    throw Error(ErrorKind::config, "cannot parse grid '" + spec + "'");
  }
  require(a > 0.0 && b > 0.0 && n >= 1, ErrorKind::config, "grid needs positive endpoints and n >= 1");
  std::vector<double> out;
  if (n == 1) return {a};
  const double la = std::log(a), lb = std::log(b);
  for (long i = 0; i < n; ++i) out.push_back(std::exp(la + (lb - la) * static_cast<double>(i) / static_cast<double>(n - 1)));
  out.front() = a;
  out.back() = b;
  return out;
}

RunReport verify_kernels(const KernelVerifyOptions& o) {
  std::vector<double> grid = o.h_grid.empty() ? parse_grid("1e-4:1e-2:9") : o.h_grid;
  RunReport rep;
  rep.csv_header = {"h", "res_semigroup", "res_conjugation", "res_gram", "eigen_residual_scaled"};
  bool ok = true;
  json rows = json::array();
  for (double h : grid) {
    const SemigroupResidual sg = semigroup_residual(0.5 * h, 0.5 * h, o.gamma);
    const SemigroupResidual sgp = primed_semigroup_residual(0.5 * h, 0.5 * h, o.gamma);
    const double res_sg = std::max({sg.res_a, sg.res_g, sgp.res_a, sgp.res_g});
    const double res_conj = conjugation_residual(h, o.gamma).max();
    const double target = h / (2.0 * o.gamma);
    const Mat2 gram = whitened_drift_gram(h, o.gamma);
    const double res_gram = std::abs(gram.m00 - target) / target;
    const double eig = o.gamma * h < 0.1 ? eigen_expansion_scaled_residual(h, o.gamma) : std::nan("");
    const bool row_ok = (o.gamma * h > 1.0 || res_sg <= 1e-12) && res_conj <= 1e-12 && res_gram <= 1e-9 &&
                        (std::isnan(eig) || std::abs(eig) <= 10.0);
    ok = ok && row_ok;
    rep.csv_rows.push_back({format_double(h), format_double(res_sg), format_double(res_conj), format_double(res_gram),
                            format_double(eig)});
    rows.push_back({{"h", h}, {"res_semigroup", res_sg}, {"res_conjugation", res_conj}, {"res_gram", res_gram},
                    {"eigen_residual_scaled", std::isnan(eig) ? json(nullptr) : json(eig)}, {"pass", row_ok}});
  }
  rep.json = {{"suite", "kernels"}, {"gamma", o.gamma}, {"rows", rows}, {"pass", ok}};
  rep.exit_code = ok ? exit_ok : exit_verification;
  return rep;
}

RunReport verify_bridge(const BridgeVerifyOptions& o) {
  require(o.k_max >= 1 && o.k_max <= 16, ErrorKind::config, "k_max must be in [1, 16]");
  RunReport rep;
  rep.csv_header = {"k", "gamma", "eta", "index_set", "overdamped_residual", "underdamped_residual"};
  bool ok = true;
  double worst_over = 0.0, worst_under = 0.0;
  for (std::size_t k = 1; k <= o.k_max; ++k) {
    for (std::size_t mask = 0; mask < (std::size_t{1} << k); ++mask) {
      std::vector<std::size_t> s;
      std::string label;
      for (std::size_t i = 0; i < k; ++i)
        if (mask & (std::size_t{1} << i)) {
          s.push_back(i);
          label += (label.empty() ? "" : ";") + std::to_string(i);
        }
      const double ro = max_relative_difference(overdamped_bridge_covariance(k, o.eta, s),
                                                overdamped_bridge_covariance_bruteforce(k, o.eta, s));
      const double ru = max_relative_difference(underdamped_bridge_covariance(k, o.eta, o.gamma, s),
                                                underdamped_bridge_covariance_bruteforce(k, o.eta, o.gamma, s));
      worst_over = std::max(worst_over, ro);
      worst_under = std::max(worst_under, ru);
      ok = ok && ro <= 1e-10 && ru <= 1e-10;
      rep.csv_rows.push_back({std::to_string(k), format_double(o.gamma), format_double(o.eta),
                              label.empty() ? "none" : label, format_double(ro), format_double(ru)});
    }
  }
  rep.json = {{"suite", "bridge"}, {"k_max", o.k_max}, {"gamma", o.gamma}, {"eta", o.eta},
              {"max_overdamped_residual", worst_over}, {"max_underdamped_residual", worst_under}, {"pass", ok}};
  rep.exit_code = ok ? exit_ok : exit_verification;
  return rep;
}

RunReport verify_coupling(const CouplingVerifyOptions& o) {
  RunReport rep;
  rep.csv_header = {"lemma", "beta", "nu", "lhs", "rhs", "margin", "pass"};
  bool ok = true;
  json rows = json::array();
  auto emit = [&](const std::string& name, const W2Certificate& c) {
    ok = ok && c.pass();
    rep.csv_rows.push_back({name, format_double(c.beta), format_double(c.nu), format_double(c.lhs),
                            format_double(c.rhs), format_double(c.margin), c.pass() ? "1" : "0"});
    rows.push_back({{"lemma", name}, {"beta", c.beta}, {"nu", c.nu}, {"lhs", c.lhs}, {"rhs", c.rhs},
                    {"margin", c.margin}, {"quadrature_error_bound", c.quadrature_error_bound}, {"pass", c.pass()}});
  };
  RngStream rng(0, 0);
  for (double beta : o.betas) {
    const PerturbationSpec spec = PerturbationSpec::two_point(beta);
    emit("lemma1", certify_lemma1(spec, o.n_quad));
    emit("lemmaA2", certify_lemmaA2(spec, o.n_quad));
    emit("zhai", certify_zhai(beta, o.zhai_n, 1, o.n_quad, 0, rng));
  }
  rep.json = {{"suite", "coupling"}, {"n_quad", o.n_quad}, {"zhai_n", o.zhai_n}, {"rows", rows}, {"pass", ok}};
  rep.exit_code = ok ? exit_ok : exit_verification;
  return rep;
}

RunReport verify_assumption(const ExperimentConfig& c, const AssumptionVerifyOptions& o) {
  const PotentialSpec spec = build_target(c.target);
  validate(spec);
  const AssumptionProbe p = probe_assumption(spec, o.n_pairs, o.radius, c.seed);
  const bool ok = p.compliant(spec);
  RunReport rep;
  rep.csv_header = {"target", "alpha", "ell", "min_monotonicity_ratio", "max_lipschitz_ratio", "pass"};
  rep.csv_rows.push_back({spec.name, format_double(spec.alpha), format_double(spec.ell),
                          format_double(p.min_monotonicity_ratio), format_double(p.max_lipschitz_ratio),
                          ok ? "1" : "0"});
  rep.json = {{"suite", "assumption"},
              {"config", to_json(c)},
              {"n_pairs", o.n_pairs},
              {"radius", o.radius},
              {"alpha", spec.alpha},
              {"ell", spec.ell},
              {"min_monotonicity_ratio", p.min_monotonicity_ratio},
              {"max_lipschitz_ratio", p.max_lipschitz_ratio},
              {"pass", ok}};
  rep.exit_code = ok ? exit_ok : exit_verification;
  return rep;
}

}  // namespace plmc
