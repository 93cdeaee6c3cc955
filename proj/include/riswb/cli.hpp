#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include <json.hpp>

#include "riswb/neuroevo.hpp"
#include "riswb/sca.hpp"
#include "riswb/scenario.hpp"

namespace riswb {

enum class ExperimentKind { kScaSweep, kNeTrain, kBaselines };
enum class SweepAxis { kPowerDbm, kNRis, kNTx };

std::string to_string(ExperimentKind kind);
std::string to_string(SweepAxis axis);

struct ExperimentPlan {
  ExperimentKind kind = ExperimentKind::kScaSweep;
  SweepAxis axis = SweepAxis::kPowerDbm;
  std::vector<double> axis_values;
  std::vector<std::string> modes;
  int mc_runs = 1;
  std::string out_dir = "results";

  void validate() const;
};

// Fully resolved experiment description: the plan plus every parameter block
// it can reference. `raw` keeps the parsed document for the manifest.
struct CliConfig {
  ExperimentPlan plan;
  ScenarioConfig wideband;
  SolverOptions solver;
  NarrowbandConfig narrowband;
  ArchitectureSpec arch;
  CosyneParams cosyne;
  int bes_blocks = 4;
  std::uint64_t bes_cap = 4194304;
  int workers = 0;
  nlohmann::json raw;
};

// Parses and fully validates a config file. Diagnostics name the offending
// field by its dotted path.
CliConfig load_config(const std::string& path);

// One-line human summary, printed by the validate subcommand.
std::string describe_config(const CliConfig& cfg);

// Executes the plan and returns the files written under plan.out_dir
// (manifest.json last). Deterministic for fixed (config, seed).
std::vector<std::string> run_experiment(const CliConfig& cfg, std::uint64_t seed);

std::string list_experiments();

}  // namespace riswb
