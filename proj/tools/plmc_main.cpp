#include <cstdio>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "json.hpp"

#include "plmc/error.hpp"
#include "plmc/experiment.hpp"

namespace {

using plmc::ExperimentConfig;
using plmc::RunReport;

struct Overrides {
  std::string config_path;
  std::optional<std::uint64_t> seed;
  std::string out;
  std::optional<std::size_t> chains;
  std::string epsilons;
  std::string method;
  std::string dynamics;
  std::optional<int> p;
};

void add_common(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_path, "JSON config file");
  sub->add_option("--seed", o.seed, "master seed");
  sub->add_option("--out", o.out, "output prefix; writes PREFIX.csv and PREFIX.json");
  sub->add_option("--chains", o.chains, "number of independent chains");
  sub->add_option("--epsilons", o.epsilons, "comma-separated accuracy targets for sweep");
  sub->add_option("--method", o.method, "euler|poisson")->check(CLI::IsMember({"euler", "poisson"}));
  sub->add_option("--dynamics", o.dynamics, "over|under")
      ->check(CLI::IsMember({"over", "under", "overdamped", "underdamped"}));
  sub->add_option("--p", o.p, "order parameter of the underdamped schedule");
}

ExperimentConfig effective_config(const Overrides& o) {
  nlohmann::json j = nlohmann::json::object();
  if (!o.config_path.empty()) {
    std::ifstream in(o.config_path);
    if (!in) throw plmc::Error(plmc::ErrorKind::config, "cannot open config '" + o.config_path + "'");
    try {
      in >> j;
    } catch (const nlohmann::json::exception& e) {
      throw plmc::Error(plmc::ErrorKind::config, std::string("malformed config: ") + e.what());
    }
  }
  if (o.seed) j["seed"] = *o.seed;
  if (o.chains) j["n_chains"] = *o.chains;
  if (!o.method.empty()) j["method"] = o.method;
  if (!o.dynamics.empty()) j["dynamics"] = o.dynamics;
  if (!o.out.empty()) j["output_path"] = o.out;
  if (!o.epsilons.empty()) {
    std::vector<double> eps;
    std::stringstream ss(o.epsilons);
    std::string item;
    while (std::getline(ss, item, ',')) {
      try {
        eps.push_back(std::stod(item));
      } catch (const std::exception&) {
        throw plmc::Error(plmc::ErrorKind::config, "bad epsilon '" + item + "'");
      }
    }
    j["epsilons"] = eps;
  }
  ExperimentConfig c = plmc::config_from_json(j);
  if (o.p) {
    if (!c.schedule) throw plmc::Error(plmc::ErrorKind::config, "--p needs a schedule");
    c.schedule->p = *o.p;
  }
  return c;
}

int emit(const RunReport& rep, const std::string& out) {
  const std::string csv = rep.csv();
  std::fwrite(csv.data(), 1, csv.size(), stdout);
  if (!out.empty()) {
    std::ofstream(out + ".csv") << csv;
    std::ofstream(out + ".json") << rep.json.dump(2) << '\n';
  }
  return rep.exit_code;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Langevin Monte Carlo samplers with Poisson midpoint batches"};
  app.require_subcommand(1);

  Overrides o;
  auto* sample = app.add_subcommand("sample", "run chains to the scheduled horizon");
  auto* sweep = app.add_subcommand("sweep", "first-passage gradient counts over a grid of epsilons");
  auto* vk = app.add_subcommand("verify-kernels", "kernel identities on an h grid");
  auto* vb = app.add_subcommand("verify-bridge", "joint noise covariance against brute force");
  auto* vc = app.add_subcommand("verify-coupling", "quadrature certificates for the coupling bounds");
  auto* va = app.add_subcommand("verify-assumption", "probe monotonicity and Lipschitz ratios of the target");
  for (auto* s : {sample, sweep, vk, vb, vc, va}) add_common(s, o);

  plmc::KernelVerifyOptions ko;
  std::string h_grid;
  vk->add_option("--gamma", ko.gamma, "friction");
  vk->add_option("--h-grid", h_grid, "a:b:n, log spaced");

  plmc::BridgeVerifyOptions bo;
  vb->add_option("--k-max", bo.k_max, "largest K; all index sets are enumerated");
  vb->add_option("--gamma", bo.gamma, "friction");
  vb->add_option("--eta", bo.eta, "outer step");

  plmc::CouplingVerifyOptions co;
  std::string beta_grid;
  vc->add_option("--grid", beta_grid, "comma-separated beta values");
  vc->add_option("--n-quad", co.n_quad, "quadrature panels");

  plmc::AssumptionVerifyOptions ao;
  va->add_option("--pairs", ao.n_pairs, "number of sampled pairs");
  va->add_option("--radius", ao.radius, "sampling radius around the optimum");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? plmc::exit_ok : plmc::exit_usage;
  }

  try {
    const ExperimentConfig c = effective_config(o);
    const std::string out = c.output_path;
    if (*sample) return emit(plmc::run_sample(c), out);
    if (*sweep) return emit(plmc::run_sweep(c), out);
    if (*vk) {
      if (!h_grid.empty()) ko.h_grid = plmc::parse_grid(h_grid);
      return emit(plmc::verify_kernels(ko), out);
    }
    if (*vb) return emit(plmc::verify_bridge(bo), out);
    if (*vc) {
      if (!beta_grid.empty()) {
        co.betas.clear();
        std::stringstream ss(beta_grid);
        std::string item;
        while (std::getline(ss, item, ',')) co.betas.push_back(std::stod(item));
      }
      return emit(plmc::verify_coupling(co), out);
    }
    if (*va) return emit(plmc::verify_assumption(c, ao), out);
  } catch (const plmc::Error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return plmc::exit_usage;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return plmc::exit_usage;
  }
  return plmc::exit_usage;
}
