#include <cstdint>
#include <iostream>
#include <string>

#include <CLI11.hpp>

#include "riswb/cli.hpp"
#include "riswb/common.hpp"

int main(int argc, char** argv) {
  CLI::App app{"RIS smart-environment workbench"};
  app.set_version_flag("--version", riswb::kVersion);
  app.require_subcommand(1);

  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 1;
  int workers = -1;

  CLI::App* run = app.add_subcommand("run", "Execute the experiment described by a config file");
  run->add_option("--config", config_path, "JSON config path")->required();
  run->add_option("--seed", seed, "Master RNG seed (default 1)");
  run->add_option("--out", out_dir, "Output directory (overrides the config)");
  run->add_option("--workers", workers,
                  "Worker threads (0 = hardware; RISWB_WORKERS overrides)");

  CLI::App* validate = app.add_subcommand("validate", "Check a config file and report problems");
  validate->add_option("--config", config_path, "JSON config path")->required();

  CLI::App* list =
      app.add_subcommand("list-experiments", "Show the known experiment kinds");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) {
      riswb::CliConfig cfg = riswb::load_config(config_path);
      if (!out_dir.empty()) cfg.plan.out_dir = out_dir;
      if (workers >= 0) cfg.workers = workers;
      const std::vector<std::string> files = riswb::run_experiment(cfg, seed);
      for (const std::string& f : files)
        std::cout << cfg.plan.out_dir << "/" << f << "\n";
    } else if (validate->parsed()) {
      const riswb::CliConfig cfg = riswb::load_config(config_path);
      std::cout << "OK: " << riswb::describe_config(cfg) << "\n";
    } else if (list->parsed()) {
      std::cout << riswb::list_experiments();
    }
  } catch (const riswb::Error& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
