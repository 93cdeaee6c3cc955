#include "riswb/cli.hpp"

#include <algorithm>
#include <cmath>
#include <filesystem>
#include <fstream>
#include <initializer_list>
#include <sstream>
#include <utility>

#include "riswb/assignment.hpp"
#include "riswb/common.hpp"
#include "riswb/metrics.hpp"
#include "riswb/parallel.hpp"

namespace riswb {

namespace {

using nlohmann::json;

[[noreturn]] void fail_at(const std::string& path, const std::string& msg) {
  throw ValidationError("config: " + path + ": " + msg);
}

void check_keys(const json& obj, const std::string& path,
                std::initializer_list<const char*> allowed) {
  for (auto it = obj.begin(); it != obj.end(); ++it) {
    bool known = false;
    for (const char* k : allowed)
      if (it.key() == k) {
        known = true;
        break;
      }
    if (!known) fail_at(path + "." + it.key(), "unknown field");
  }
}

const json& require_object(const json& obj, const std::string& path) {
  if (!obj.is_object()) fail_at(path, "must be an object");
  return obj;
}

double require_number(const json& v, const std::string& path) {
  if (!v.is_number()) fail_at(path, "must be a number");
  return v.get<double>();
}

int require_int(const json& v, const std::string& path) {
  if (!v.is_number_integer()) fail_at(path, "must be an integer");
  return v.get<int>();
}

double get_number(const json& obj, const std::string& path, const char* key,
                  double fallback) {
  if (!obj.contains(key)) return fallback;
  return require_number(obj.at(key), path + "." + key);
}

int get_int(const json& obj, const std::string& path, const char* key,
            int fallback) {
  if (!obj.contains(key)) return fallback;
  return require_int(obj.at(key), path + "." + key);
}

bool get_bool(const json& obj, const std::string& path, const char* key,
              bool fallback) {
  if (!obj.contains(key)) return fallback;
  const json& v = obj.at(key);
  if (!v.is_boolean()) fail_at(path + "." + key, "must be a boolean");
  return v.get<bool>();
}

double required_number(const json& obj, const std::string& path,
                       const char* key) {
  if (!obj.contains(key)) fail_at(path + "." + key, "missing required field");
  return require_number(obj.at(key), path + "." + key);
}

int required_int(const json& obj, const std::string& path, const char* key) {
  if (!obj.contains(key)) fail_at(path + "." + key, "missing required field");
  return require_int(obj.at(key), path + "." + key);
}

std::vector<double> number_array(const json& v, const std::string& path) {
  if (!v.is_array() || v.empty()) fail_at(path, "must be a non-empty array");
  std::vector<double> out;
  out.reserve(v.size());
  for (std::size_t i = 0; i < v.size(); ++i)
    out.push_back(require_number(v[i], path + "[" + std::to_string(i) + "]"));
  return out;
}

Vec3 vec3_at(const json& v, const std::string& path) {
  const std::vector<double> a = number_array(v, path);
  if (a.size() != 3) fail_at(path, "must hold exactly 3 coordinates");
  return Vec3(a[0], a[1], a[2]);
}

std::array<double, 3> triple_at(const json& v, const std::string& path) {
  const std::vector<double> a = number_array(v, path);
  if (a.size() != 3) fail_at(path, "must hold exactly 3 values");
  return {a[0], a[1], a[2]};
}

ExperimentKind parse_kind(const std::string& s, const std::string& path) {
  if (s == "sca-sweep") return ExperimentKind::kScaSweep;
  if (s == "ne-train") return ExperimentKind::kNeTrain;
  if (s == "baselines") return ExperimentKind::kBaselines;
  fail_at(path, "unknown kind '" + s +
                    "' (expected sca-sweep | ne-train | baselines)");
}

SweepAxis parse_axis(const std::string& s, const std::string& path) {
  if (s == "power_dbm") return SweepAxis::kPowerDbm;
  if (s == "n_ris") return SweepAxis::kNRis;
  if (s == "n_tx") return SweepAxis::kNTx;
  fail_at(path, "unknown axis '" + s + "' (expected power_dbm | n_ris | n_tx)");
}

std::vector<std::string> default_modes(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kScaSweep:
      return {"coop-bd", "coop-diag", "noncoop-bd", "noncoop-diag"};
    case ExperimentKind::kNeTrain:
      return {"mbacnn"};
    case ExperimentKind::kBaselines:
      return {"bes", "random", "no-ris"};
  }
  return {};
}

std::vector<std::string> allowed_modes(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kScaSweep:
      return {"coop-bd", "coop-diag", "noncoop-bd", "noncoop-diag"};
    case ExperimentKind::kNeTrain:
      return {"mbacnn", "neff"};
    case ExperimentKind::kBaselines:
      return {"bes", "random", "no-ris"};
  }
  return {};
}

void parse_experiment(const json& doc, ExperimentPlan& plan) {
  if (!doc.contains("experiment"))
    fail_at("experiment", "missing required section");
  const json& e = require_object(doc.at("experiment"), "experiment");
  check_keys(e, "experiment",
             {"kind", "axis", "axis_values", "modes", "mc_runs", "out_dir"});
  if (!e.contains("kind")) fail_at("experiment.kind", "missing required field");
  if (!e.at("kind").is_string())
    fail_at("experiment.kind", "must be a string");
  plan.kind = parse_kind(e.at("kind").get<std::string>(), "experiment.kind");
  if (e.contains("axis")) {
    if (!e.at("axis").is_string()) fail_at("experiment.axis", "must be a string");
    plan.axis = parse_axis(e.at("axis").get<std::string>(), "experiment.axis");
  }
  if (!e.contains("axis_values"))
    fail_at("experiment.axis_values", "missing required field");
  plan.axis_values = number_array(e.at("axis_values"), "experiment.axis_values");
  if (e.contains("modes")) {
    const json& m = e.at("modes");
    if (!m.is_array() || m.empty())
      fail_at("experiment.modes", "must be a non-empty array");
    plan.modes.clear();
    for (std::size_t i = 0; i < m.size(); ++i) {
      const std::string p = "experiment.modes[" + std::to_string(i) + "]";
      if (!m[i].is_string()) fail_at(p, "must be a string");
      plan.modes.push_back(m[i].get<std::string>());
    }
  } else {
    plan.modes = default_modes(plan.kind);
  }
  plan.mc_runs = get_int(e, "experiment", "mc_runs", 1);
  if (e.contains("out_dir")) {
    if (!e.at("out_dir").is_string())
      fail_at("experiment.out_dir", "must be a string");
    plan.out_dir = e.at("out_dir").get<std::string>();
  }
}

void parse_wideband(const json& doc, ScenarioConfig& wb) {
  if (!doc.contains("wideband")) return;
  const json& w = require_object(doc.at("wideband"), "wideband");
  check_keys(w, "wideband",
             {"n_tx", "n_ris", "bs_positions", "ris_positions",
              "ue_cluster_centers", "cluster_radius", "ue_counts_per_cell",
              "ue_height", "ofdm", "circuit", "power"});
  wb.n_tx = get_int(w, "wideband", "n_tx", wb.n_tx);
  wb.n_ris = get_int(w, "wideband", "n_ris", wb.n_ris);
  if (w.contains("bs_positions")) {
    const json& a = w.at("bs_positions");
    if (!a.is_array() || a.empty())
      fail_at("wideband.bs_positions", "must be a non-empty array");
    wb.geometry.bs_positions.clear();
    for (std::size_t i = 0; i < a.size(); ++i)
      wb.geometry.bs_positions.push_back(
          vec3_at(a[i], "wideband.bs_positions[" + std::to_string(i) + "]"));
  }
  if (w.contains("ris_positions")) {
    const json& a = w.at("ris_positions");
    if (!a.is_array() || a.empty())
      fail_at("wideband.ris_positions", "must be a non-empty array");
    wb.geometry.ris_positions.clear();
    for (std::size_t i = 0; i < a.size(); ++i)
      wb.geometry.ris_positions.push_back(
          vec3_at(a[i], "wideband.ris_positions[" + std::to_string(i) + "]"));
  }
  if (w.contains("ue_cluster_centers")) {
    const json& a = w.at("ue_cluster_centers");
    if (!a.is_array() || a.empty())
      fail_at("wideband.ue_cluster_centers", "must be a non-empty array");
    wb.geometry.ue_cluster_centers.clear();
    for (std::size_t i = 0; i < a.size(); ++i) {
      const std::string p =
          "wideband.ue_cluster_centers[" + std::to_string(i) + "]";
      const std::vector<double> c = number_array(a[i], p);
      if (c.size() != 2) fail_at(p, "must hold exactly 2 coordinates");
      wb.geometry.ue_cluster_centers.emplace_back(c[0], c[1]);
    }
  }
  wb.geometry.cluster_radius =
      get_number(w, "wideband", "cluster_radius", wb.geometry.cluster_radius);
  if (w.contains("ue_counts_per_cell")) {
    const json& a = w.at("ue_counts_per_cell");
    if (!a.is_array() || a.empty())
      fail_at("wideband.ue_counts_per_cell", "must be a non-empty array");
    wb.geometry.ue_counts_per_cell.clear();
    for (std::size_t i = 0; i < a.size(); ++i)
      wb.geometry.ue_counts_per_cell.push_back(require_int(
          a[i], "wideband.ue_counts_per_cell[" + std::to_string(i) + "]"));
  }
  wb.geometry.ue_height =
      get_number(w, "wideband", "ue_height", wb.geometry.ue_height);

  // The grouped physics blocks must be complete when present.
  if (w.contains("ofdm")) {
    const json& o = require_object(w.at("ofdm"), "wideband.ofdm");
    check_keys(o, "wideband.ofdm",
               {"f_c", "bandwidth", "n_sub", "n_taps", "cyclic_prefix"});
    wb.ofdm.f_c = required_number(o, "wideband.ofdm", "f_c");
    wb.ofdm.bandwidth = required_number(o, "wideband.ofdm", "bandwidth");
    wb.ofdm.n_sub = required_int(o, "wideband.ofdm", "n_sub");
    wb.ofdm.n_taps = required_int(o, "wideband.ofdm", "n_taps");
    wb.ofdm.cyclic_prefix = required_int(o, "wideband.ofdm", "cyclic_prefix");
  }
  if (w.contains("circuit")) {
    const json& c = require_object(w.at("circuit"), "wideband.circuit");
    check_keys(c, "wideband.circuit", {"l1", "l2", "r", "z0", "c_min", "c_max"});
    wb.circuit.l1 = required_number(c, "wideband.circuit", "l1");
    wb.circuit.l2 = required_number(c, "wideband.circuit", "l2");
    wb.circuit.r = required_number(c, "wideband.circuit", "r");
    wb.circuit.z0 = required_number(c, "wideband.circuit", "z0");
    wb.circuit.c_min = required_number(c, "wideband.circuit", "c_min");
    wb.circuit.c_max = required_number(c, "wideband.circuit", "c_max");
  }
  if (!w.contains("power")) {
    // Keep one budget entry per configured BS when the block is omitted.
    const double p0 = wb.power.p_max_per_bs.empty() ? dbm_to_watt(30.0)
                                                    : wb.power.p_max_per_bs[0];
    wb.power.p_max_per_bs.assign(wb.geometry.n_cells(), p0);
  } else {
    const json& p = require_object(w.at("power"), "wideband.power");
    check_keys(p, "wideband.power",
               {"p_max_dbm", "noise_dbm", "pathloss_exponents"});
    if (!p.contains("p_max_dbm"))
      fail_at("wideband.power.p_max_dbm", "missing required field");
    const json& pm = p.at("p_max_dbm");
    wb.power.p_max_per_bs.clear();
    if (pm.is_number()) {
      wb.power.p_max_per_bs.assign(wb.geometry.n_cells(),
                                   dbm_to_watt(pm.get<double>()));
    } else {
      const std::vector<double> vals =
          number_array(pm, "wideband.power.p_max_dbm");
      for (double v : vals) wb.power.p_max_per_bs.push_back(dbm_to_watt(v));
    }
    wb.power.noise_variance =
        dbm_to_watt(required_number(p, "wideband.power", "noise_dbm"));
    if (!p.contains("pathloss_exponents"))
      fail_at("wideband.power.pathloss_exponents", "missing required field");
    wb.power.pathloss_exponents =
        triple_at(p.at("pathloss_exponents"), "wideband.power.pathloss_exponents");
  }
}

void parse_solver(const json& doc, SolverOptions& s) {
  if (!doc.contains("solver")) return;
  const json& j = require_object(doc.at("solver"), "solver");
  check_keys(j, "solver",
             {"tau", "epsilon", "max_iterations", "step_a", "step_b",
              "bisection_rel_tol", "bisection_max_iters"});
  s.tau = get_number(j, "solver", "tau", s.tau);
  s.epsilon = get_number(j, "solver", "epsilon", s.epsilon);
  s.max_iterations = get_int(j, "solver", "max_iterations", s.max_iterations);
  s.step_a = get_number(j, "solver", "step_a", s.step_a);
  s.step_b = get_number(j, "solver", "step_b", s.step_b);
  s.bisection_rel_tol =
      get_number(j, "solver", "bisection_rel_tol", s.bisection_rel_tol);
  s.bisection_max_iters =
      get_int(j, "solver", "bisection_max_iters", s.bisection_max_iters);
}

void parse_narrowband(const json& doc, NarrowbandConfig& nb) {
  if (!doc.contains("narrowband")) return;
  const json& j = require_object(doc.at("narrowband"), "narrowband");
  check_keys(j, "narrowband",
             {"n_tx", "n_ris", "n_ue", "n_surfaces", "bs_position",
              "ris_positions", "ue_mean_positions", "ue_position_std",
              "kappa_db", "direct_blocked", "direct_kappa_db",
              "direct_extra_loss_db", "f_c", "pathloss_exponents",
              "tx_power_dbm", "noise_dbm"});
  nb.n_tx = get_int(j, "narrowband", "n_tx", nb.n_tx);
  nb.n_ris = get_int(j, "narrowband", "n_ris", nb.n_ris);
  nb.n_ue = get_int(j, "narrowband", "n_ue", nb.n_ue);
  nb.n_ris_surfaces = get_int(j, "narrowband", "n_surfaces", nb.n_ris_surfaces);
  if (j.contains("bs_position"))
    nb.bs_position = vec3_at(j.at("bs_position"), "narrowband.bs_position");
  if (j.contains("ris_positions")) {
    const json& a = j.at("ris_positions");
    if (!a.is_array() || a.empty())
      fail_at("narrowband.ris_positions", "must be a non-empty array");
    nb.ris_positions.clear();
    for (std::size_t i = 0; i < a.size(); ++i)
      nb.ris_positions.push_back(
          vec3_at(a[i], "narrowband.ris_positions[" + std::to_string(i) + "]"));
  }
  if (j.contains("ue_mean_positions")) {
    const json& a = j.at("ue_mean_positions");
    if (!a.is_array() || a.empty())
      fail_at("narrowband.ue_mean_positions", "must be a non-empty array");
    nb.ue_mean_positions.clear();
    for (std::size_t i = 0; i < a.size(); ++i)
      nb.ue_mean_positions.push_back(vec3_at(
          a[i], "narrowband.ue_mean_positions[" + std::to_string(i) + "]"));
  }
  nb.ue_position_std =
      get_number(j, "narrowband", "ue_position_std", nb.ue_position_std);
  nb.kappa_db = get_number(j, "narrowband", "kappa_db", nb.kappa_db);
  nb.direct_blocked =
      get_bool(j, "narrowband", "direct_blocked", nb.direct_blocked);
  nb.direct_kappa_db =
      get_number(j, "narrowband", "direct_kappa_db", nb.direct_kappa_db);
  nb.direct_extra_loss_db = get_number(j, "narrowband", "direct_extra_loss_db",
                                       nb.direct_extra_loss_db);
  nb.f_c = get_number(j, "narrowband", "f_c", nb.f_c);
  if (j.contains("pathloss_exponents"))
    nb.pathloss_exponents = triple_at(j.at("pathloss_exponents"),
                                      "narrowband.pathloss_exponents");
  if (j.contains("tx_power_dbm"))
    nb.tx_power = dbm_to_watt(
        require_number(j.at("tx_power_dbm"), "narrowband.tx_power_dbm"));
  if (j.contains("noise_dbm"))
    nb.noise_variance =
        dbm_to_watt(require_number(j.at("noise_dbm"), "narrowband.noise_dbm"));
}

void parse_architecture(const json& doc, ArchitectureSpec& a) {
  if (!doc.contains("architecture")) return;
  const json& j = require_object(doc.at("architecture"), "architecture");
  check_keys(j, "architecture",
             {"n_bands", "phase_bits", "conv_channels", "conv_kernel",
              "ris_hidden", "prec_hidden", "ff_hidden"});
  a.n_bands = get_int(j, "architecture", "n_bands", a.n_bands);
  a.phase_bits = get_int(j, "architecture", "phase_bits", a.phase_bits);
  if (j.contains("conv_channels")) {
    const std::vector<double> c =
        number_array(j.at("conv_channels"), "architecture.conv_channels");
    if (c.size() != 3)
      fail_at("architecture.conv_channels", "must hold exactly 3 values");
    for (std::size_t i = 0; i < 3; ++i) {
      if (c[i] != std::floor(c[i]))
        fail_at("architecture.conv_channels[" + std::to_string(i) + "]",
                "must be an integer");
      a.conv_channels[i] = static_cast<int>(c[i]);
    }
  }
  a.conv_kernel = get_int(j, "architecture", "conv_kernel", a.conv_kernel);
  a.ris_hidden = get_int(j, "architecture", "ris_hidden", a.ris_hidden);
  a.prec_hidden = get_int(j, "architecture", "prec_hidden", a.prec_hidden);
  a.ff_hidden = get_int(j, "architecture", "ff_hidden", a.ff_hidden);
}

void parse_cosyne(const json& doc, CosyneParams& c) {
  if (!doc.contains("cosyne")) return;
  const json& j = require_object(doc.at("cosyne"), "cosyne");
  check_keys(j, "cosyne",
             {"population", "generations", "mutation_prob", "mutation_var",
              "elite_fraction", "n_episodes", "horizon"});
  c.population = get_int(j, "cosyne", "population", c.population);
  c.generations = get_int(j, "cosyne", "generations", c.generations);
  c.mutation_prob = get_number(j, "cosyne", "mutation_prob", c.mutation_prob);
  c.mutation_var = get_number(j, "cosyne", "mutation_var", c.mutation_var);
  c.elite_fraction =
      get_number(j, "cosyne", "elite_fraction", c.elite_fraction);
  c.n_episodes = get_int(j, "cosyne", "n_episodes", c.n_episodes);
  c.horizon = get_int(j, "cosyne", "horizon", c.horizon);
}

void parse_baselines(const json& doc, CliConfig& cfg) {
  if (!doc.contains("baselines")) return;
  const json& j = require_object(doc.at("baselines"), "baselines");
  check_keys(j, "baselines", {"n_blk", "max_candidates"});
  cfg.bes_blocks = get_int(j, "baselines", "n_blk", cfg.bes_blocks);
  const int cap = get_int(j, "baselines", "max_candidates",
                          static_cast<int>(cfg.bes_cap));
  if (cap < 1) fail_at("baselines.max_candidates", "must be positive");
  cfg.bes_cap = static_cast<std::uint64_t>(cap);
}

// ---- sweep-axis application ------------------------------------------------

ScenarioConfig wideband_at(const CliConfig& cfg, double v) {
  ScenarioConfig wb = cfg.wideband;
  switch (cfg.plan.axis) {
    case SweepAxis::kPowerDbm:
      for (double& p : wb.power.p_max_per_bs) p = dbm_to_watt(v);
      break;
    case SweepAxis::kNRis:
      wb.n_ris = static_cast<int>(v);
      break;
    case SweepAxis::kNTx:
      wb.n_tx = static_cast<int>(v);
      break;
  }
  return wb;
}

void narrowband_at(const CliConfig& cfg, double v, NarrowbandConfig& nb,
                   ArchitectureSpec& arch) {
  nb = cfg.narrowband;
  arch = cfg.arch;
  switch (cfg.plan.axis) {
    case SweepAxis::kPowerDbm:
      nb.tx_power = dbm_to_watt(v);
      break;
    case SweepAxis::kNRis:
      nb.n_ris = static_cast<int>(v);
      arch.n_ris = nb.n_ris;
      break;
    case SweepAxis::kNTx:
      nb.n_tx = static_cast<int>(v);
      arch.n_tx = nb.n_tx;
      arch.codebook_size = nb.n_tx;
      break;
  }
}

std::pair<double, double> mean_stderr(const std::vector<double>& v) {
  const int n = static_cast<int>(v.size());
  double mean = 0.0;
  for (double x : v) mean += x;
  mean /= n;
  if (n < 2) return {mean, 0.0};
  double ss = 0.0;
  for (double x : v) ss += (x - mean) * (x - mean);
  return {mean, std::sqrt(ss / (n - 1) / n)};
}

std::string axis_tag(int axis_index) { return std::to_string(axis_index); }

const std::vector<std::string> kSummaryHeader = {
    "axis_value", "mean_sum_rate", "stderr", "n_runs", "converged_fraction"};

std::vector<std::string> summary_row(double axis_value, double mean, double se,
                                     int n, double frac) {
  return {format_double(axis_value), format_double(mean), format_double(se),
          std::to_string(n), format_double(frac)};
}

std::string join_path(const std::string& dir, const std::string& name) {
  return (std::filesystem::path(dir) / name).string();
}

void run_sca_sweep(const CliConfig& cfg, std::uint64_t seed, int workers,
                   std::vector<std::string>& files) {
  const ExperimentPlan& plan = cfg.plan;
  for (const std::string& mode : plan.modes) {
    SolverOptions opt = cfg.solver;
    opt.cooperative = mode.rfind("coop-", 0) == 0;
    opt.bd = mode.size() >= 2 && mode.substr(mode.size() - 2) == "bd";
    std::vector<std::vector<std::string>> rows;
    for (std::size_t ai = 0; ai < plan.axis_values.size(); ++ai) {
      const ScenarioConfig wb = wideband_at(cfg, plan.axis_values[ai]);
      std::vector<double> rates(plan.mc_runs, 0.0);
      std::vector<std::uint8_t> conv(plan.mc_runs, 0);
      parallel_for_indexed(plan.mc_runs, workers, [&](int r) {
        // Scenario seed shared by every mode: paired comparisons.
        const std::uint64_t s =
            derive_stream_seed(seed, "scenario-axis" + axis_tag(ai), r);
        const WidebandScenario scen = build_scenario(wb, s);
        const SolverResult res = run_algorithm1(scen, opt);
        rates[r] = res.state.objective;
        conv[r] = res.converged ? 1 : 0;
      });
      const auto [mean, se] = mean_stderr(rates);
      double frac = 0.0;
      for (std::uint8_t c : conv) frac += c;
      frac /= plan.mc_runs;
      rows.push_back(
          summary_row(plan.axis_values[ai], mean, se, plan.mc_runs, frac));
    }
    const std::string name = mode + ".csv";
    write_csv(join_path(plan.out_dir, name), kSummaryHeader, rows);
    files.push_back(name);
  }
}

void run_ne_train(const CliConfig& cfg, std::uint64_t seed, int workers,
                  std::vector<std::string>& files) {
  const ExperimentPlan& plan = cfg.plan;
  CosyneParams params = cfg.cosyne;
  params.workers = workers;
  for (const std::string& mode : plan.modes) {
    const bool ff = mode == "neff";
    std::vector<std::vector<std::string>> rows;
    for (std::size_t ai = 0; ai < plan.axis_values.size(); ++ai) {
      NarrowbandConfig nb;
      ArchitectureSpec arch;
      narrowband_at(cfg, plan.axis_values[ai], nb, arch);
      const GenomeLayout layout = genome_layout(arch, ff);
      const std::uint64_t train_seed =
          derive_stream_seed(seed, "train-" + mode + "-axis" + axis_tag(ai), 0);
      const TrainResult tr = train(arch, nb, params, train_seed, ff);

      std::vector<std::vector<std::string>> curve;
      for (const GenerationStats& s : tr.curve)
        curve.push_back({std::to_string(s.generation), format_double(s.best),
                         format_double(s.mean)});
      const std::string fit_name =
          "fitness_" + mode + "_" + axis_tag(ai) + ".csv";
      write_csv(join_path(plan.out_dir, fit_name),
                {"generation", "best_fitness", "mean_fitness"}, curve);
      files.push_back(fit_name);

      const std::string ck_name =
          "checkpoint_" + mode + "_" + axis_tag(ai) + ".json";
      save_checkpoint(join_path(plan.out_dir, ck_name),
                      {arch, ff, tr.best, tr.best_fitness, tr.curve});
      files.push_back(ck_name);

      // Held-out per-step sum rates on fresh channel draws.
      std::vector<double> rates(plan.mc_runs, 0.0);
      parallel_for_indexed(plan.mc_runs, workers, [&](int r) {
        const std::uint64_t s = derive_stream_seed(
            seed, "holdout-" + mode + "-axis" + axis_tag(ai), r);
        rates[r] = evaluate_genome(tr.best, layout, arch, nb, 1, 1, s);
      });
      const auto [mean, se] = mean_stderr(rates);
      rows.push_back(
          summary_row(plan.axis_values[ai], mean, se, plan.mc_runs, 1.0));
    }
    const std::string name = mode + ".csv";
    write_csv(join_path(plan.out_dir, name), kSummaryHeader, rows);
    files.push_back(name);
  }
}

double best_rate_without_ris(const NarrowbandChannelSet& ch,
                             const PrecoderCodebook& codebook, double sigma2,
                             double p) {
  const int n_ue = static_cast<int>(ch.h_direct.cols());
  std::vector<Eigen::RowVectorXcd> m_rows(n_ue);
  for (int u = 0; u < n_ue; ++u) m_rows[u] = ch.h_direct.col(u).adjoint();
  const int card = codebook.card();
  std::vector<int> combo(n_ue, 0);
  double best = -std::numeric_limits<double>::infinity();
  while (true) {
    Eigen::MatrixXcd v(codebook.columns.rows(), n_ue);
    for (int u = 0; u < n_ue; ++u) v.col(u) = codebook.codeword(combo[u]);
    best = std::max(best, sum_rate_narrowband(m_rows, v, sigma2, p));
    int digit = n_ue - 1;
    while (digit >= 0 && ++combo[digit] == card) combo[digit--] = 0;
    if (digit < 0) break;
  }
  return best;
}

void run_baselines(const CliConfig& cfg, std::uint64_t seed, int workers,
                   std::vector<std::string>& files) {
  const ExperimentPlan& plan = cfg.plan;
  const bool want_bes =
      std::find(plan.modes.begin(), plan.modes.end(), "bes") != plan.modes.end();
  const bool want_random = std::find(plan.modes.begin(), plan.modes.end(),
                                     "random") != plan.modes.end();
  const bool want_direct = std::find(plan.modes.begin(), plan.modes.end(),
                                     "no-ris") != plan.modes.end();
  const std::vector<cxd> phase_set = phase_set_for_bits(1);

  std::vector<std::vector<std::vector<std::string>>> rows(plan.modes.size());
  for (std::size_t ai = 0; ai < plan.axis_values.size(); ++ai) {
    NarrowbandConfig nb;
    ArchitectureSpec arch;
    narrowband_at(cfg, plan.axis_values[ai], nb, arch);
    const PrecoderCodebook codebook = dft_codebook(nb.n_tx);
    const int n_blk = cfg.bes_blocks;
    const int bs = nb.n_ris / n_blk;
    std::vector<double> bes_r(plan.mc_runs, 0.0), rnd_r(plan.mc_runs, 0.0),
        dir_r(plan.mc_runs, 0.0);
    parallel_for_indexed(plan.mc_runs, workers, [&](int r) {
      RngStream rng(
          derive_stream_seed(seed, "baseline-axis" + axis_tag(ai), r));
      const NarrowbandChannelSet ch = sample_narrowband(nb, rng);
      if (want_bes)
        bes_r[r] =
            bes_baseline(ch, nb, n_blk, codebook, cfg.bes_cap).sum_rate;
      if (want_random) {
        // Uniform draw over the same blocked search space.
        BandedRisConfig rc;
        rc.n_ris = nb.n_ris;
        rc.n_b = 0;
        rc.diag_states.resize(nb.n_ris);
        for (int blk = 0; blk < n_blk; ++blk) {
          const int state = rng.uniform_int(0, 1);
          for (int i = 0; i < bs; ++i) rc.diag_states[blk * bs + i] = state;
        }
        Eigen::MatrixXcd v(nb.n_tx, nb.n_ue);
        for (int u = 0; u < nb.n_ue; ++u)
          v.col(u) = codebook.codeword(rng.uniform_int(0, codebook.card() - 1));
        rnd_r[r] = broadcast_sum_rate(ch, {banded_phi(rc, phase_set)}, v,
                                      nb.noise_variance, nb.tx_power);
      }
      if (want_direct)
        dir_r[r] = best_rate_without_ris(ch, codebook, nb.noise_variance,
                                         nb.tx_power);
    });
    for (std::size_t mi = 0; mi < plan.modes.size(); ++mi) {
      const std::vector<double>& src = plan.modes[mi] == "bes"      ? bes_r
                                       : plan.modes[mi] == "random" ? rnd_r
                                                                    : dir_r;
      const auto [mean, se] = mean_stderr(src);
      rows[mi].push_back(
          summary_row(plan.axis_values[ai], mean, se, plan.mc_runs, 1.0));
    }
  }
  for (std::size_t mi = 0; mi < plan.modes.size(); ++mi) {
    const std::string name = plan.modes[mi] + ".csv";
    write_csv(join_path(plan.out_dir, name), kSummaryHeader, rows[mi]);
    files.push_back(name);
  }
}

}  // namespace

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::kScaSweep:
      return "sca-sweep";
    case ExperimentKind::kNeTrain:
      return "ne-train";
    case ExperimentKind::kBaselines:
      return "baselines";
  }
  return "?";
}

std::string to_string(SweepAxis axis) {
  switch (axis) {
    case SweepAxis::kPowerDbm:
      return "power_dbm";
    case SweepAxis::kNRis:
      return "n_ris";
    case SweepAxis::kNTx:
      return "n_tx";
  }
  return "?";
}

void ExperimentPlan::validate() const {
  if (axis_values.empty())
    throw ValidationError("config: experiment.axis_values: must be non-empty");
  for (std::size_t i = 0; i < axis_values.size(); ++i) {
    const double v = axis_values[i];
    const std::string p = "experiment.axis_values[" + std::to_string(i) + "]";
    if (!std::isfinite(v)) throw ValidationError("config: " + p + ": not finite");
    if (axis != SweepAxis::kPowerDbm && (v < 1 || v != std::floor(v)))
      throw ValidationError("config: " + p + ": must be a positive integer");
  }
  if (mc_runs < 1)
    throw ValidationError("config: experiment.mc_runs: must be >= 1");
  if (modes.empty())
    throw ValidationError("config: experiment.modes: must be non-empty");
  const std::vector<std::string> allowed = allowed_modes(kind);
  for (std::size_t i = 0; i < modes.size(); ++i) {
    const std::string p = "experiment.modes[" + std::to_string(i) + "]";
    if (std::find(allowed.begin(), allowed.end(), modes[i]) == allowed.end()) {
      std::string opts;
      for (const std::string& a : allowed)
        opts += (opts.empty() ? "" : " | ") + a;
      throw ValidationError("config: " + p + ": unknown mode '" + modes[i] +
                            "' (expected " + opts + ")");
    }
    for (std::size_t k = 0; k < i; ++k)
      if (modes[k] == modes[i])
        throw ValidationError("config: " + p + ": duplicate mode");
  }
  if (out_dir.empty())
    throw ValidationError("config: experiment.out_dir: must be non-empty");
}

CliConfig load_config(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  std::stringstream buf;
  buf << in.rdbuf();

  CliConfig cfg;
  cfg.wideband = default_wideband_config();
  try {
    cfg.raw = json::parse(buf.str());
  } catch (const json::parse_error& e) {
    // nlohmann reports line and column in the message.
    throw ValidationError(path + ": " + e.what());
  }
  const json& doc = require_object(cfg.raw, "<root>");
  check_keys(doc, "<root>",
             {"experiment", "wideband", "solver", "narrowband", "architecture",
              "cosyne", "baselines", "workers"});

  parse_experiment(doc, cfg.plan);
  parse_wideband(doc, cfg.wideband);
  parse_solver(doc, cfg.solver);
  parse_narrowband(doc, cfg.narrowband);
  parse_architecture(doc, cfg.arch);
  parse_cosyne(doc, cfg.cosyne);
  parse_baselines(doc, cfg);
  cfg.workers = get_int(doc, "<root>", "workers", 0);
  if (cfg.workers < 0) fail_at("workers", "must be >= 0");

  // Controller dimensions mirror the scenario; only the free fields live in
  // the architecture section.
  cfg.arch.n_tx = cfg.narrowband.n_tx;
  cfg.arch.n_ue = cfg.narrowband.n_ue;
  cfg.arch.n_ris = cfg.narrowband.n_ris;
  cfg.arch.n_surfaces = cfg.narrowband.n_ris_surfaces;
  cfg.arch.direct_blocked = cfg.narrowband.direct_blocked;
  cfg.arch.codebook_size = cfg.narrowband.n_tx;

  cfg.plan.validate();
  switch (cfg.plan.kind) {
    case ExperimentKind::kScaSweep:
      cfg.wideband.validate();
      cfg.solver.validate();
      break;
    case ExperimentKind::kNeTrain:
      cfg.narrowband.validate();
      cfg.arch.validate();
      cfg.cosyne.validate();
      break;
    case ExperimentKind::kBaselines: {
      cfg.narrowband.validate();
      if (cfg.narrowband.n_ris_surfaces != 1)
        fail_at("narrowband.n_surfaces",
                "baselines require a single surface");
      if (cfg.bes_blocks < 1) fail_at("baselines.n_blk", "must be >= 1");
      for (std::size_t i = 0; i < cfg.plan.axis_values.size(); ++i) {
        const int n_ris = cfg.plan.axis == SweepAxis::kNRis
                              ? static_cast<int>(cfg.plan.axis_values[i])
                              : cfg.narrowband.n_ris;
        if (n_ris % cfg.bes_blocks != 0)
          fail_at("experiment.axis_values[" + std::to_string(i) + "]",
                  "N_ris must be a multiple of baselines.n_blk");
        if (cfg.plan.axis != SweepAxis::kNRis) break;
      }
      break;
    }
  }
  return cfg;
}

std::string describe_config(const CliConfig& cfg) {
  std::string s = to_string(cfg.plan.kind) + " over " +
                  to_string(cfg.plan.axis) + " (" +
                  std::to_string(cfg.plan.axis_values.size()) + " values), " +
                  std::to_string(cfg.plan.modes.size()) + " modes, mc_runs=" +
                  std::to_string(cfg.plan.mc_runs);
  return s;
}

std::vector<std::string> run_experiment(const CliConfig& cfg,
                                        std::uint64_t seed) {
  cfg.plan.validate();
  std::error_code ec;
  std::filesystem::create_directories(cfg.plan.out_dir, ec);
  if (ec)
    throw IoError("cannot create output directory " + cfg.plan.out_dir + ": " +
                  ec.message());
  const int workers = resolve_worker_count(cfg.workers);

  std::vector<std::string> files;
  switch (cfg.plan.kind) {
    case ExperimentKind::kScaSweep:
      run_sca_sweep(cfg, seed, workers, files);
      break;
    case ExperimentKind::kNeTrain:
      run_ne_train(cfg, seed, workers, files);
      break;
    case ExperimentKind::kBaselines:
      run_baselines(cfg, seed, workers, files);
      break;
  }

  json manifest;
  manifest["version"] = kVersion;
  manifest["seed"] = seed;
  manifest["kind"] = to_string(cfg.plan.kind);
  manifest["axis"] = to_string(cfg.plan.axis);
  manifest["axis_values"] = cfg.plan.axis_values;
  manifest["modes"] = cfg.plan.modes;
  manifest["mc_runs"] = cfg.plan.mc_runs;
  manifest["files"] = files;
  manifest["config"] = cfg.raw;
  const std::string mpath = join_path(cfg.plan.out_dir, "manifest.json");
  std::ofstream out(mpath, std::ios::binary);
  if (!out) throw IoError("cannot open " + mpath + " for writing");
  out << manifest.dump(2) << "\n";
  if (!out) throw IoError("failed while writing " + mpath);
  files.push_back("manifest.json");
  return files;
}

std::string list_experiments() {
  return "sca-sweep   iterative multi-cell beamforming sweep over power_dbm | "
         "n_ris | n_tx; one summary CSV per mode\n"
         "ne-train    evolutionary controller training; fitness curve, "
         "checkpoint, and held-out summary per variant\n"
         "baselines   exhaustive blocked search vs random and RIS-off "
         "references on narrowband channel draws\n";
}

}  // namespace riswb
