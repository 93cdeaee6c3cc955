#pragma once

#include <Eigen/Dense>
#include <array>
#include <cstdint>
#include <vector>

#include "riswb/channel.hpp"
#include "riswb/circuit.hpp"
#include "riswb/common.hpp"
#include "riswb/rng.hpp"

namespace riswb {

using Vec3 = Eigen::Vector3d;

struct Geometry {
  std::vector<Vec3> bs_positions;          // includes BS height
  std::vector<Vec3> ris_positions;         // includes RIS height
  std::vector<Eigen::Vector2d> ue_cluster_centers;
  double cluster_radius = 3.0;             // m
  std::vector<int> ue_counts_per_cell;     // L_k
  double ue_height = 1.5;                  // m
  Vec3 bs_array_axis = Vec3(1, 0, 0);      // ULA line, xz-plane by default
  Vec3 ris_array_axis_1 = Vec3(1, 0, 0);   // UPA plane spanned by axes 1 and 2
  Vec3 ris_array_axis_2 = Vec3(0, 0, 1);

  int n_cells() const { return static_cast<int>(bs_positions.size()); }
  void validate() const;
};

struct PowerNoiseConfig {
  std::vector<double> p_max_per_bs;              // W
  double noise_variance = 1e-11;                 // W  (-80 dBm)
  std::array<double, 3> pathloss_exponents = {3.7, 2.6, 2.2};  // BS-UE, BS-RIS, RIS-UE

  void validate(int k_cells) const;
};

struct ScenarioConfig {
  int n_tx = 8;
  int n_ris = 16;
  Geometry geometry;
  OfdmParams ofdm;
  RisCircuitParams circuit;
  PowerNoiseConfig power;

  void validate() const;
};

// Element coordinates at half-wavelength spacing, centered on the node
// position. A UPA of N elements uses the largest divisor <= sqrt(N) as its
// first grid dimension.
std::vector<Vec3> ula_element_positions(const Vec3& center, int n,
                                        double lambda_c, const Vec3& axis);
std::vector<Vec3> upa_element_positions(const Vec3& center, int n,
                                        double lambda_c, const Vec3& axis1,
                                        const Vec3& axis2);

// Unit-modulus steering vector of an array toward a far-field point:
// entry m = exp(j 2 pi / lambda * <unit_dir, element_m - center>).
Eigen::VectorXcd steering_vector(const std::vector<Vec3>& elements,
                                 const Vec3& center, const Vec3& target,
                                 double lambda_c);

// Fully instantiated wideband multi-cell scenario (frequency-domain channels).
struct WidebandScenario {
  ScenarioConfig config;
  std::vector<double> subcarrier_freqs;
  std::vector<Vec3> ue_positions;       // global UE list
  std::vector<int> ue_cell;             // owning cell per global UE
  std::vector<std::vector<int>> cell_ues;  // global indices per cell

  // h_direct[j][u]   : N_tx  x N_sub   (BS_j -> UE u)
  // h_bs_ris[j][n]   : N_ris x N_tx    (BS_j -> RIS_j at subcarrier n)
  // g_ris_ue[j][u]   : N_ris x N_sub   (RIS_j -> UE u)
  std::vector<std::vector<Eigen::MatrixXcd>> h_direct;
  std::vector<std::vector<Eigen::MatrixXcd>> h_bs_ris;
  std::vector<std::vector<Eigen::MatrixXcd>> g_ris_ue;

  int n_cells() const { return config.geometry.n_cells(); }
  int n_ues() const { return static_cast<int>(ue_positions.size()); }
  int n_tx() const { return config.n_tx; }
  int n_ris() const { return config.n_ris; }
  int n_sub() const { return config.ofdm.n_sub; }
  int global_ue(int cell, int local) const { return cell_ues[cell][local]; }
};

WidebandScenario build_scenario(const ScenarioConfig& config, std::uint64_t seed);

// Paper-default §5.3 layout: K=4, 60 x 120 m rectangle, L=(2,3,4,5).
ScenarioConfig default_wideband_config();

// ---- Narrowband broadcast scenario (single BS, K RISs) -------------------

struct NarrowbandConfig {
  int n_tx = 16;
  int n_ris = 400;
  int n_ue = 1;
  int n_ris_surfaces = 1;  // K
  Vec3 bs_position = Vec3(0, 0, 2.0);
  std::vector<Vec3> ris_positions = {Vec3(0, 3, 2.0)};
  std::vector<Vec3> ue_mean_positions = {Vec3(8, 10, 1.5)};
  double ue_position_std = 0.0;       // >0 resamples positions each draw
  double kappa_db = 10.0;             // RIS-link Ricean factor
  bool direct_blocked = true;
  double direct_kappa_db = 10.0;
  double direct_extra_loss_db = 10.0;
  double f_c = 2.4e9;
  std::array<double, 3> pathloss_exponents = {3.7, 2.6, 2.2};
  double tx_power = dbm_to_watt(10.0);     // P per UE stream, W (10 dBm)
  double noise_variance = dbm_to_watt(-50.0);  // W

  void validate() const;
};

struct NarrowbandChannelSet {
  Eigen::MatrixXcd h_direct;                  // N_tx x N_ue
  std::vector<Eigen::MatrixXcd> h_bs_ris;     // K of N_tx x N_ris
  std::vector<Eigen::MatrixXcd> h_ris_ue;     // K of N_ris x N_ue
};

NarrowbandChannelSet sample_narrowband(const NarrowbandConfig& cfg,
                                       RngStream& rng);

}  // namespace riswb
