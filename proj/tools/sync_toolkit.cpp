#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "tempsync/cli.hpp"

int main(int argc, char** argv) {
  CLI::App app{"Simulation and synchronization certificates for temporal networks"};
  app.require_subcommand(1);
  tsync::CliConfig cfg;

  double t_end = 0, dt = 0, c = 0, epsilon = 0, bound_M = 0;
  std::uint64_t seed = 0;
  auto add_common = [&](CLI::App* sub) {
    sub->add_option("--config", cfg.config_path, "JSON config file")->required();
    sub->add_option("--out", cfg.out_dir, "output directory")->capture_default_str();
    sub->add_option("--seed", seed, "64-bit seed (default 0)");
    sub->add_option("--t-end", t_end, "override the final time / horizon");
    sub->add_option("--dt", dt, "override the integration step");
    sub->add_option("--c", c, "override the global coupling");
    sub->add_option("--epsilon", epsilon, "override the certificate epsilon");
    sub->add_option("--bound-M", bound_M, "override the bound M");
    sub->add_option("--workers", cfg.workers, "worker threads (SYNC_TOOLKIT_WORKERS fallback)");
  };
  for (const char* name : {"simulate", "certify", "cluster-certify", "threshold", "pullback-check"})
    add_common(app.add_subcommand(name));
  auto* scenario = app.add_subcommand("scenario", "run a reference experiment");
  scenario->add_option("name", cfg.scenario_name, "vdp | ring | fhn | lorenz")->required();
  add_common(scenario);

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : tsync::kExitUsage;
  }
  CLI::App* sub = app.get_subcommands().front();
  cfg.command = sub->get_name();
  auto given = [&](const char* opt) { return sub->count(opt) > 0; };
  if (given("--seed")) cfg.seed = seed;
  if (given("--t-end")) cfg.t_end = t_end;
  if (given("--dt")) cfg.dt = dt;
  if (given("--c")) cfg.c = c;
  if (given("--epsilon")) cfg.epsilon = epsilon;
  if (given("--bound-M")) cfg.bound_M = bound_M;
  return tsync::dispatch(cfg, std::cout, std::cerr);
}
