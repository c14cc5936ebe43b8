#include <iostream>
#include <variant>

#include <CLI11.hpp>
#include <spdlog/spdlog.h>

#include "mixmps/driver/config.h"
#include "mixmps/driver/oracle_runner.h"
#include "mixmps/driver/runner.h"

extern "C" void openblas_set_num_threads(int num_threads);

namespace {

using namespace mixmps;
using namespace mixmps::driver;

void describe(const SimConfig& cfg) {
  std::cout << "name: " << cfg.name << "\n";
  int k = 0;
  for (const Phase& p : cfg.phases) {
    std::cout << "  " << ++k << ". " << phase_name(p);
    if (const auto* c = std::get_if<CreateStatePhase>(&p)) {
      std::cout << " rep=" << rep_name(c->rep) << " sites=" << c->system.size();
    } else if (const auto* e = std::get_if<EvolvePhase>(&p)) {
      std::cout << " duration=" << e->duration << " time_step=" << e->time_step
                << " order=" << e->order << " maxdim=" << e->limits.maxdim
                << " files=" << e->measures.size();
    }
    std::cout << "\n";
  }
}

// Loads a config; returns nullopt after reporting a config error.
std::optional<SimConfig> load(const std::string& path) {
  try {
    return load_config(path);
  } catch (const ConfigError& e) {
    spdlog::error("{}: {}", path, e.what());
    return std::nullopt;
  }
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Pure and mixed state MPS simulator"};
  app.require_subcommand(0, 1);

  std::string config_path;
  RunOptions opt;
  int threads = 1;
  bool dry_run = false;
  auto add_common = [&](CLI::App* a) {
    a->add_option("--out", opt.out_root, "Output root directory")->capture_default_str();
    a->add_option("--threads", threads, "BLAS threads")->check(CLI::PositiveNumber)->capture_default_str();
    a->add_option("--log-level", opt.log_level, "Console log level")
        ->check(CLI::IsMember({"trace", "debug", "info", "warn", "error", "critical", "off"}))
        ->capture_default_str();
  };
  app.add_option("config", config_path, "Simulation config (JSON)");
  add_common(&app);
  app.add_flag("--dry-run", dry_run, "Validate the config and list its phases");

  auto* oracle = app.add_subcommand("test-oracles", "Reference runs with the exact oracles");
  oracle->require_subcommand(1);

  auto* dense = oracle->add_subcommand("dense", "Run a config on the full Hilbert space");
  std::string dense_config;
  dense->add_option("config", dense_config, "Simulation config (JSON)")->required();
  add_common(dense);

  auto* cov = oracle->add_subcommand("covariance", "Quasi-free chain via the covariance equations");
  CovarianceRun cr;
  cov->add_option("--model", cr.model, "Model")
      ->check(CLI::IsMember({"fermion-dephasing", "fermion-source", "boson-source", "xx-boundary"}))
      ->capture_default_str();
  cov->add_option("--name", cr.name, "Output directory name")->capture_default_str();
  cov->add_option("--n", cr.n, "Number of sites")->capture_default_str();
  cov->add_option("--gamma", cr.gamma, "Dephasing strength or source rate")->capture_default_str();
  cov->add_option("--site", cr.site, "Source site")->capture_default_str();
  cov->add_option("--eps-l", cr.eps_l)->capture_default_str();
  cov->add_option("--mu-l", cr.mu_l)->capture_default_str();
  cov->add_option("--eps-r", cr.eps_r)->capture_default_str();
  cov->add_option("--mu-r", cr.mu_r)->capture_default_str();
  cov->add_option("--occupation", cr.occupation, "Initial occupations, repeated along the chain")
      ->delimiter(',');
  cov->add_option("--duration", cr.duration)->capture_default_str();
  cov->add_option("--time-step", cr.time_step)->capture_default_str();
  cov->add_option("--measure-period", cr.measure_period)->capture_default_str();
  add_common(cov);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? kExitOk : kExitConfigError;
  }
  openblas_set_num_threads(threads);
  spdlog::set_level(spdlog::level::from_str(opt.log_level));

  if (*dense) {
    const auto cfg = load(dense_config);
    return cfg ? run_dense(*cfg, opt) : kExitConfigError;
  }
  if (*cov) return run_covariance(cr, opt);

  if (config_path.empty()) {
    std::cerr << app.help();
    return kExitConfigError;
  }
  const auto cfg = load(config_path);
  if (!cfg) return kExitConfigError;
  if (dry_run) {
    describe(*cfg);
    return kExitOk;
  }
  return run(*cfg, opt);
}
