#include <CLI11.hpp>

#include <cstdlib>
#include <iostream>
#include <string>
#include <thread>
#include <vector>

#include "tpg/cli.hpp"

namespace {

std::string env_or(const char* name, std::string fallback) {
  const char* v = std::getenv(name);
  return v && *v ? std::string(v) : fallback;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Target-partaker-guardian reaction-advection-diffusion simulator"};
  app.require_subcommand(1);

  std::string config;
  std::string out_dir = env_or("TPG_OUT", "out");
  int threads = std::stoi(env_or("TPG_THREADS", std::to_string(std::max(1u, std::thread::hardware_concurrency()))));
  std::vector<std::string> axes;

  auto* run = app.add_subcommand("run", "Run a simulation from a config or manifest");
  run->add_option("--config", config, "YAML config or run manifest")->required();
  run->add_option("--out", out_dir, "Output directory (env TPG_OUT)");

  auto* stability = app.add_subcommand("stability", "Linear stability report for a config");
  stability->add_option("--config", config, "YAML config")->required();
  std::string stability_out;
  stability->add_option("--out", stability_out, "Also write stability.txt into this directory");

  auto* sweep = app.add_subcommand("sweep", "Run a parameter sweep");
  sweep->add_option("--config", config, "YAML config")->required();
  sweep->add_option("--out", out_dir, "Output directory (env TPG_OUT)");
  sweep->add_option("--threads", threads, "Worker threads (env TPG_THREADS)")->check(CLI::PositiveNumber);
  sweep->add_option("--axis", axes, "NAME=START:STOP:COUNT or NAME=a,b,c; repeat for a second axis")->required();

  app.add_subcommand("presets", "List the built-in models and their parameters");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : tpg::kExitConfig;
  }

  if (*run) return tpg::cmd_run(config, out_dir, std::cout, std::cerr);
  if (*stability) return tpg::cmd_stability(config, stability_out, std::cout, std::cerr);
  if (*sweep) return tpg::cmd_sweep(config, axes, out_dir, threads, std::cout, std::cerr);
  return tpg::cmd_presets(std::cout);
}
