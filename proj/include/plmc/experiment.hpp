#pragma once

#include "json.hpp"

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "plmc/potential.hpp"
#include "plmc/samplers.hpp"

namespace plmc {

struct TargetConfig {
  std::string name = "quadratic";  // quadratic | logistic
  Vector precision = {1.0, 1.0};
  Vector mean = {0.0, 0.0};
  // logistic
  std::size_t n_obs = 200;
  std::size_t dim = 2;
  double alpha = 1.0;
  std::uint64_t data_seed = 1;
  std::string data_path;  // CSV to load instead of generating

  bool operator==(const TargetConfig&) const = default;
};

struct ScheduleConstants {
  int p = 3;
  double c1 = 1.0, c2 = 1.0, c3 = 1.0, c4 = 1.0;
  double gamma_factor = 2.0;

  bool operator==(const ScheduleConstants&) const = default;
};

struct ExplicitSampler {
  double eta = 0.1;
  std::size_t k = 1;
  double gamma = 2.0;
  std::size_t n_batches = 100;

  bool operator==(const ExplicitSampler&) const = default;
};

struct ExperimentConfig {
  TargetConfig target;
  Dynamics dynamics = Dynamics::overdamped;
  Method method = Method::poisson;
  InterpolantConvention convention = InterpolantConvention::exclusive;
  std::optional<ScheduleConstants> schedule = ScheduleConstants{};
  std::optional<ExplicitSampler> sampler;
  std::optional<double> epsilon = 0.3;
  std::vector<double> epsilons = {0.4, 0.3, 0.2, 0.15, 0.1};
  std::size_t n_chains = 1000;
  std::uint64_t seed = 1;
  std::string output_path;
  std::vector<std::string> estimators = {"moment"};
  std::string covariance_mode = "diagonal";
  std::size_t n_directions = 64;
  double init_offset = 0.0;
  double budget_factor = 20.0;
  std::size_t checkpoints = 20;
  std::size_t threads = 0;  // 0 = hardware concurrency
  bool record_timing = false;

  bool operator==(const ExperimentConfig&) const = default;
};

nlohmann::json to_json(const ExperimentConfig& c);
// Missing keys keep their defaults; unknown keys are rejected.
ExperimentConfig config_from_json(const nlohmann::json& j);
void validate(const ExperimentConfig& c);

PotentialSpec build_target(const TargetConfig& t);

// Exit codes shared by the library entry points and the command-line tool.
enum ExitCode : int { exit_ok = 0, exit_usage = 1, exit_verification = 2, exit_not_attained = 3 };

struct RunReport {
  nlohmann::json json;  // config echo plus results
  std::vector<std::string> csv_header;
  std::vector<std::vector<std::string>> csv_rows;
  int exit_code = exit_ok;

  std::string csv() const;
};

// Runs f(i) for i in [0, n) on a bounded pool. f must only touch slot i.
void parallel_for(std::size_t n, std::size_t threads, const std::function<void(std::size_t)>& f);

std::string format_double(double x);  // 17 significant digits

RunReport run_sample(const ExperimentConfig& c);
RunReport run_sweep(const ExperimentConfig& c);

struct KernelVerifyOptions {
  double gamma = 2.0;
  std::vector<double> h_grid;
};
struct BridgeVerifyOptions {
  std::size_t k_max = 8;
  double gamma = 2.0;
  double eta = 0.05;
};
struct CouplingVerifyOptions {
  std::vector<double> betas = {0.0, 0.01, 0.05, 0.1, 0.3, 1.0, 2.0};
  std::size_t n_quad = 100000;
  double zhai_n = 10.0;
};
struct AssumptionVerifyOptions {
  std::size_t n_pairs = 10000;
  double radius = 5.0;
};

// "a:b:n" -> n log-spaced points from a to b.
std::vector<double> parse_grid(const std::string& spec);

RunReport verify_kernels(const KernelVerifyOptions& o);
RunReport verify_bridge(const BridgeVerifyOptions& o);
RunReport verify_coupling(const CouplingVerifyOptions& o);
RunReport verify_assumption(const ExperimentConfig& c, const AssumptionVerifyOptions& o);

}  // namespace plmc
