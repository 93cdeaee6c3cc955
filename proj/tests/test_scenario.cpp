#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "riswb/scenario.hpp"

using namespace riswb;

TEST_CASE("array element layouts") {
  const double lambda = 0.125;
  const auto ula = ula_element_positions(Vec3(1, 2, 3), 4, lambda, Vec3(2, 0, 0));
  REQUIRE(ula.size() == 4);
  Vec3 mean = Vec3::Zero();
  for (const auto& p : ula) mean += p;
  CHECK((mean / 4 - Vec3(1, 2, 3)).norm() < 1e-12);
  CHECK((ula[1] - ula[0] - Vec3(lambda / 2, 0, 0)).norm() < 1e-12);

  const auto upa =
      upa_element_positions(Vec3::Zero(), 16, lambda, Vec3(1, 0, 0), Vec3(0, 0, 1));
  REQUIRE(upa.size() == 16);
  // 16 elements form a 4 x 4 grid spanning 3 half-wavelengths per side.
  double max_x = 0, max_z = 0;
  for (const auto& p : upa) {
    max_x = std::max(max_x, std::abs(p.x()));
    max_z = std::max(max_z, std::abs(p.z()));
    CHECK(p.y() == 0.0);
  }
  CHECK(max_x == doctest::Approx(1.5 * lambda / 2));
  CHECK(max_z == doctest::Approx(1.5 * lambda / 2));

  // 6 elements: largest divisor <= sqrt(6) is 2, so a 2 x 3 grid.
  const auto upa6 =
      upa_element_positions(Vec3::Zero(), 6, lambda, Vec3(1, 0, 0), Vec3(0, 0, 1));
  double mx = 0, mz = 0;
  for (const auto& p : upa6) {
    mx = std::max(mx, std::abs(p.x()));
    mz = std::max(mz, std::abs(p.z()));
  }
  CHECK(mx == doctest::Approx(0.5 * lambda / 2));
  CHECK(mz == doctest::Approx(1.0 * lambda / 2));
}

TEST_CASE("steering vectors") {
  const double lambda = 0.125;
  const Vec3 center(0, 0, 0);
  const auto el = ula_element_positions(center, 8, lambda, Vec3(1, 0, 0));

  // Broadside: direction orthogonal to the array line gives zero phase.
  const Eigen::VectorXcd bs = steering_vector(el, center, Vec3(0, 50, 0), lambda);
  CHECK((bs - Eigen::VectorXcd::Ones(8)).cwiseAbs().maxCoeff() < 1e-12);

  // Endfire: half-wavelength spacing steps the phase by pi per element. With
  // the even-length array centered, every entry sits at an odd multiple of
  // pi/2 and is purely imaginary.
  const Eigen::VectorXcd ef = steering_vector(el, center, Vec3(50, 0, 0), lambda);
  for (int m = 0; m < 8; ++m) CHECK(std::abs(ef(m).real()) < 1e-10);
  for (int m = 1; m < 8; ++m)
    CHECK(std::abs(ef(m) + ef(m - 1)) < 1e-10);

  for (int m = 0; m < 8; ++m)
    CHECK(std::abs(std::abs(ef(m)) - 1.0) < 1e-12);
}

TEST_CASE("wideband scenario construction") {
  ScenarioConfig cfg = default_wideband_config();
  cfg.validate();

  const WidebandScenario sc = build_scenario(cfg, 1234);
  CHECK(sc.n_cells() == 4);
  CHECK(sc.n_ues() == 14);  // 2 + 3 + 4 + 5
  CHECK(sc.n_sub() == cfg.ofdm.n_sub);
  REQUIRE(sc.subcarrier_freqs.size() == static_cast<std::size_t>(sc.n_sub()));
  CHECK(sc.subcarrier_freqs.front() < cfg.ofdm.f_c);
  CHECK(sc.subcarrier_freqs.back() > cfg.ofdm.f_c);

  // Cluster containment and the global/local index maps.
  int next = 0;
  for (int k = 0; k < sc.n_cells(); ++k) {
    REQUIRE(sc.cell_ues[k].size() ==
            static_cast<std::size_t>(cfg.geometry.ue_counts_per_cell[k]));
    for (std::size_t l = 0; l < sc.cell_ues[k].size(); ++l) {
      const int u = sc.cell_ues[k][l];
      CHECK(u == next++);
      CHECK(sc.ue_cell[u] == k);
      CHECK(sc.global_ue(k, static_cast<int>(l)) == u);
      const Eigen::Vector2d xy = sc.ue_positions[u].head<2>();
      CHECK((xy - cfg.geometry.ue_cluster_centers[k]).norm() <=
            cfg.geometry.cluster_radius + 1e-12);
      CHECK(sc.ue_positions[u].z() == cfg.geometry.ue_height);
    }
  }

  // Channel tensor shapes.
  for (int j = 0; j < sc.n_cells(); ++j) {
    REQUIRE(sc.h_bs_ris[j].size() == static_cast<std::size_t>(sc.n_sub()));
    CHECK(sc.h_bs_ris[j][0].rows() == sc.n_ris());
    CHECK(sc.h_bs_ris[j][0].cols() == sc.n_tx());
    for (int u = 0; u < sc.n_ues(); ++u) {
      CHECK(sc.h_direct[j][u].rows() == sc.n_tx());
      CHECK(sc.h_direct[j][u].cols() == sc.n_sub());
      CHECK(sc.g_ris_ue[j][u].rows() == sc.n_ris());
      CHECK(sc.g_ris_ue[j][u].cols() == sc.n_sub());
    }
  }

  // Same seed reproduces the draw; a different seed does not.
  const WidebandScenario sc2 = build_scenario(cfg, 1234);
  CHECK(sc2.ue_positions[5] == sc.ue_positions[5]);
  CHECK(sc2.h_direct[1][3] == sc.h_direct[1][3]);
  CHECK(sc2.h_bs_ris[2][1] == sc.h_bs_ris[2][1]);
  CHECK(sc2.g_ris_ue[0][7] == sc.g_ris_ue[0][7]);
  const WidebandScenario sc3 = build_scenario(cfg, 1235);
  CHECK(sc3.h_direct[1][3] != sc.h_direct[1][3]);
}

TEST_CASE("scenario validation rejects inconsistent layouts") {
  ScenarioConfig cfg = default_wideband_config();
  cfg.geometry.ris_positions.pop_back();
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = default_wideband_config();
  cfg.geometry.ue_counts_per_cell[2] = 0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = default_wideband_config();
  cfg.power.p_max_per_bs.resize(2);
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = default_wideband_config();
  cfg.geometry.bs_positions[1] = cfg.geometry.bs_positions[0];
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}

TEST_CASE("narrowband sampling shapes and determinism") {
  NarrowbandConfig cfg;
  cfg.n_tx = 4;
  cfg.n_ris = 8;
  cfg.n_ue = 2;
  cfg.n_ris_surfaces = 2;
  cfg.ris_positions = {Vec3(0, 3, 2.0), Vec3(2, 3, 2.0)};
  cfg.ue_mean_positions = {Vec3(8, 10, 1.5), Vec3(6, 9, 1.5)};

  RngStream rng(99);
  const NarrowbandChannelSet set = sample_narrowband(cfg, rng);
  REQUIRE(set.h_bs_ris.size() == 2);
  REQUIRE(set.h_ris_ue.size() == 2);
  CHECK(set.h_direct.rows() == 4);
  CHECK(set.h_direct.cols() == 2);
  CHECK(set.h_bs_ris[0].rows() == 4);
  CHECK(set.h_bs_ris[0].cols() == 8);
  CHECK(set.h_ris_ue[1].rows() == 8);
  CHECK(set.h_ris_ue[1].cols() == 2);
  CHECK(set.h_direct.cwiseAbs().maxCoeff() == 0.0);  // blocked by default

  RngStream rng2(99);
  const NarrowbandChannelSet rep = sample_narrowband(cfg, rng2);
  CHECK(rep.h_bs_ris[1] == set.h_bs_ris[1]);
  CHECK(rep.h_ris_ue[0] == set.h_ris_ue[0]);

  cfg.direct_blocked = false;
  RngStream rng3(100);
  const NarrowbandChannelSet open = sample_narrowband(cfg, rng3);
  CHECK(open.h_direct.cwiseAbs().minCoeff() > 0.0);
}

TEST_CASE("narrowband link power tracks the pathloss model") {
  NarrowbandConfig cfg;
  cfg.n_tx = 4;
  cfg.n_ris = 16;
  cfg.n_ue = 1;
  cfg.kappa_db = 0.0;

  const double d = (cfg.ris_positions[0] - cfg.bs_position).norm();
  const double expect = pathloss(d, cfg.pathloss_exponents[1], cfg.f_c);

  RngStream rng(7);
  double p = 0.0;
  const int trials = 400;
  for (int t = 0; t < trials; ++t) {
    const NarrowbandChannelSet set = sample_narrowband(cfg, rng);
    p += set.h_bs_ris[0].squaredNorm() / (4.0 * 16.0);
  }
  p /= trials;
  CHECK(p == doctest::Approx(expect).epsilon(0.1));
}

TEST_CASE("narrowband validation") {
  NarrowbandConfig cfg;
  cfg.n_ris_surfaces = 2;  // only one ris position configured
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = NarrowbandConfig{};
  cfg.n_ue = 3;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);

  cfg = NarrowbandConfig{};
  cfg.tx_power = 0.0;
  CHECK_THROWS_AS(cfg.validate(), ConfigError);
}
