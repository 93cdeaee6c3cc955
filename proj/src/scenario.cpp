#include "riswb/scenario.hpp"

#include <cmath>

namespace riswb {

void Geometry::validate() const {
  const int k = n_cells();
  if (k == 0) throw ConfigError("geometry.bs_positions must be non-empty");
  if (static_cast<int>(ris_positions.size()) != k)
    throw ConfigError("geometry.ris_positions must have one RIS per BS");
  if (static_cast<int>(ue_cluster_centers.size()) != k)
    throw ConfigError("geometry.ue_cluster_centers must have one cluster per BS");
  if (static_cast<int>(ue_counts_per_cell.size()) != k)
    throw ConfigError("geometry.ue_counts_per_cell must have one entry per BS");
  if (!(cluster_radius >= 0.0) || !std::isfinite(cluster_radius))
    throw ConfigError("geometry.cluster_radius must be finite and >= 0");
  for (const auto& p : bs_positions)
    if (!p.allFinite()) throw ConfigError("geometry.bs_positions has non-finite entry");
  for (const auto& p : ris_positions)
    if (!p.allFinite()) throw ConfigError("geometry.ris_positions has non-finite entry");
  for (const auto& p : ue_cluster_centers)
    if (!p.allFinite())
      throw ConfigError("geometry.ue_cluster_centers has non-finite entry");
  for (int l : ue_counts_per_cell)
    if (l < 1) throw ConfigError("geometry.ue_counts_per_cell entries must be >= 1");
  for (int a = 0; a < k; ++a)
    for (int b = a + 1; b < k; ++b) {
      if ((bs_positions[a] - bs_positions[b]).norm() == 0.0)
        throw ConfigError("geometry.bs_positions contains duplicate positions");
      if ((ris_positions[a] - ris_positions[b]).norm() == 0.0)
        throw ConfigError("geometry.ris_positions contains duplicate positions");
    }
  if (bs_array_axis.norm() == 0.0 || ris_array_axis_1.norm() == 0.0 ||
      ris_array_axis_2.norm() == 0.0)
    throw ConfigError("geometry array axes must be nonzero");
}

void PowerNoiseConfig::validate(int k_cells) const {
  if (static_cast<int>(p_max_per_bs.size()) != k_cells)
    throw ConfigError("power.p_max_per_bs must have one entry per BS");
  for (double p : p_max_per_bs)
    if (!(p > 0.0)) throw ConfigError("power.p_max_per_bs entries must be > 0");
  if (!(noise_variance > 0.0)) throw ConfigError("power.noise_variance must be > 0");
  for (double e : pathloss_exponents)
    if (!(e >= 2.0)) throw ConfigError("power.pathloss_exponents must be >= 2");
}

void ScenarioConfig::validate() const {
  if (n_tx < 1) throw ConfigError("dims.n_tx must be >= 1");
  if (n_ris < 1) throw ConfigError("dims.n_ris must be >= 1");
  geometry.validate();
  ofdm.validate();
  circuit.validate();
  power.validate(geometry.n_cells());
}

std::vector<Vec3> ula_element_positions(const Vec3& center, int n,
                                        double lambda_c, const Vec3& axis) {
  const Vec3 dir = axis.normalized();
  const double d = lambda_c / 2.0;
  std::vector<Vec3> out(n);
  for (int m = 0; m < n; ++m)
    out[m] = center + dir * d * (m - 0.5 * (n - 1));
  return out;
}

std::vector<Vec3> upa_element_positions(const Vec3& center, int n,
                                        double lambda_c, const Vec3& axis1,
                                        const Vec3& axis2) {
  int n1 = 1;
  for (int d = 1; d * d <= n; ++d)
    if (n % d == 0) n1 = d;
  const int n2 = n / n1;
  const Vec3 a1 = axis1.normalized(), a2 = axis2.normalized();
  const double d = lambda_c / 2.0;
  std::vector<Vec3> out;
  out.reserve(n);
  for (int i = 0; i < n1; ++i)
    for (int j = 0; j < n2; ++j)
      out.push_back(center + a1 * d * (i - 0.5 * (n1 - 1)) +
                    a2 * d * (j - 0.5 * (n2 - 1)));
  return out;
}

Eigen::VectorXcd steering_vector(const std::vector<Vec3>& elements,
                                 const Vec3& center, const Vec3& target,
                                 double lambda_c) {
  const Vec3 dir = (target - center).normalized();
  Eigen::VectorXcd a(static_cast<Eigen::Index>(elements.size()));
  const double k_wave = 2.0 * kPi / lambda_c;
  for (std::size_t m = 0; m < elements.size(); ++m) {
    const double phase = k_wave * dir.dot(elements[m] - center);
    a[static_cast<Eigen::Index>(m)] = cxd(std::cos(phase), std::sin(phase));
  }
  return a;
}

namespace {

Eigen::MatrixXd pairwise_gain(const std::vector<Vec3>& rx,
                              const std::vector<Vec3>& tx, double exponent,
                              double f_c) {
  Eigen::MatrixXd g(static_cast<Eigen::Index>(rx.size()),
                    static_cast<Eigen::Index>(tx.size()));
  for (std::size_t i = 0; i < rx.size(); ++i)
    for (std::size_t j = 0; j < tx.size(); ++j)
      g(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          pathloss((rx[i] - tx[j]).norm(), exponent, f_c);
  return g;
}

std::uint64_t link_index(int a, int b) {
  return (static_cast<std::uint64_t>(a) << 32) | static_cast<std::uint64_t>(b);
}

}  // namespace

WidebandScenario build_scenario(const ScenarioConfig& config, std::uint64_t seed) {
  config.validate();
  WidebandScenario sc;
  sc.config = config;
  sc.subcarrier_freqs = subcarrier_frequencies(config.ofdm);

  const Geometry& geo = config.geometry;
  const int K = geo.n_cells();
  const double lambda_c = kSpeedOfLight / config.ofdm.f_c;

  // UE placement: uniform over each cluster disc.
  sc.cell_ues.resize(K);
  for (int k = 0; k < K; ++k) {
    RngStream pos_rng(derive_stream_seed(seed, "ue-positions", k));
    for (int l = 0; l < geo.ue_counts_per_cell[k]; ++l) {
      const double r = geo.cluster_radius * std::sqrt(pos_rng.uniform());
      const double th = 2.0 * kPi * pos_rng.uniform();
      Vec3 p(geo.ue_cluster_centers[k].x() + r * std::cos(th),
             geo.ue_cluster_centers[k].y() + r * std::sin(th), geo.ue_height);
      sc.cell_ues[k].push_back(sc.n_ues());
      sc.ue_positions.push_back(p);
      sc.ue_cell.push_back(k);
    }
  }

  // Element coordinates (per-element pathloss).
  std::vector<std::vector<Vec3>> bs_el(K), ris_el(K);
  for (int k = 0; k < K; ++k) {
    bs_el[k] = ula_element_positions(geo.bs_positions[k], config.n_tx, lambda_c,
                                     geo.bs_array_axis);
    ris_el[k] = upa_element_positions(geo.ris_positions[k], config.n_ris,
                                      lambda_c, geo.ris_array_axis_1,
                                      geo.ris_array_axis_2);
  }

  const auto& alpha = config.power.pathloss_exponents;
  const int U = sc.n_ues();
  sc.h_direct.assign(K, std::vector<Eigen::MatrixXcd>(U));
  sc.g_ris_ue.assign(K, std::vector<Eigen::MatrixXcd>(U));
  sc.h_bs_ris.resize(K);

  for (int j = 0; j < K; ++j) {
    for (int u = 0; u < U; ++u) {
      const std::vector<Vec3> ue{sc.ue_positions[u]};
      {
        RngStream rng(derive_stream_seed(seed, "h-direct", link_index(j, u)));
        const Eigen::MatrixXd gain =
            pairwise_gain(ue, bs_el[j], alpha[0], config.ofdm.f_c);
        // stored as N_tx x N_sub: column n is h_{j,u,n}
        const TapChannel tc =
            gen_wideband_taps(gain.transpose(), config.ofdm.n_taps, rng);
        const auto freq = taps_to_frequency(tc, config.ofdm);
        Eigen::MatrixXcd h(config.n_tx, config.ofdm.n_sub);
        for (int n = 0; n < config.ofdm.n_sub; ++n) h.col(n) = freq[n];
        sc.h_direct[j][u] = std::move(h);
      }
      {
        RngStream rng(derive_stream_seed(seed, "g-ris-ue", link_index(j, u)));
        const Eigen::MatrixXd gain =
            pairwise_gain(ue, ris_el[j], alpha[2], config.ofdm.f_c);
        const TapChannel tc =
            gen_wideband_taps(gain.transpose(), config.ofdm.n_taps, rng);
        const auto freq = taps_to_frequency(tc, config.ofdm);
        Eigen::MatrixXcd g(config.n_ris, config.ofdm.n_sub);
        for (int n = 0; n < config.ofdm.n_sub; ++n) g.col(n) = freq[n];
        sc.g_ris_ue[j][u] = std::move(g);
      }
    }
    RngStream rng(derive_stream_seed(seed, "h-bs-ris", j));
    const Eigen::MatrixXd gain =
        pairwise_gain(ris_el[j], bs_el[j], alpha[1], config.ofdm.f_c);
    const TapChannel tc = gen_wideband_taps(gain, config.ofdm.n_taps, rng);
    sc.h_bs_ris[j] = taps_to_frequency(tc, config.ofdm);
  }
  return sc;
}

ScenarioConfig default_wideband_config() {
  ScenarioConfig c;
  c.n_tx = 8;
  c.n_ris = 16;
  c.geometry.bs_positions = {Vec3(0, 0, 5), Vec3(60, 0, 5), Vec3(0, 120, 5),
                             Vec3(60, 120, 5)};
  c.geometry.ris_positions = {Vec3(22.5, 63.75, 3), Vec3(37.5, 63.75, 3),
                              Vec3(22.5, 56.25, 3), Vec3(37.5, 56.25, 3)};
  c.geometry.ue_cluster_centers = {Eigen::Vector2d(20, 60),
                                   Eigen::Vector2d(40, 60),
                                   Eigen::Vector2d(25, 60),
                                   Eigen::Vector2d(35, 60)};
  c.geometry.cluster_radius = 3.0;
  c.geometry.ue_counts_per_cell = {2, 3, 4, 5};
  c.power.p_max_per_bs = std::vector<double>(4, dbm_to_watt(30.0));
  c.power.noise_variance = dbm_to_watt(-80.0);
  return c;
}

void NarrowbandConfig::validate() const {
  if (n_tx < 1) throw ConfigError("broadcast.n_tx must be >= 1");
  if (n_ris < 1) throw ConfigError("broadcast.n_ris must be >= 1");
  if (n_ue < 1) throw ConfigError("broadcast.n_ue must be >= 1");
  if (n_ris_surfaces < 1) throw ConfigError("broadcast.n_ris_surfaces must be >= 1");
  if (static_cast<int>(ris_positions.size()) != n_ris_surfaces)
    throw ConfigError("broadcast.ris_positions must have n_ris_surfaces entries");
  if (static_cast<int>(ue_mean_positions.size()) != n_ue)
    throw ConfigError("broadcast.ue_mean_positions must have n_ue entries");
  if (!(ue_position_std >= 0.0))
    throw ConfigError("broadcast.ue_position_std must be >= 0");
  if (!(tx_power > 0.0)) throw ConfigError("broadcast.tx_power must be > 0");
  if (!(noise_variance > 0.0))
    throw ConfigError("broadcast.noise_variance must be > 0");
  if (!(f_c > 0.0)) throw ConfigError("broadcast.f_c must be > 0");
}

NarrowbandChannelSet sample_narrowband(const NarrowbandConfig& cfg,
                                       RngStream& rng) {
  cfg.validate();
  const double lambda_c = kSpeedOfLight / cfg.f_c;
  const int K = cfg.n_ris_surfaces;

  std::vector<Vec3> ue_pos(cfg.n_ue);
  for (int u = 0; u < cfg.n_ue; ++u) {
    Vec3 jitter = Vec3::Zero();
    if (cfg.ue_position_std > 0.0)
      jitter = cfg.ue_position_std *
               Vec3(rng.gaussian(), rng.gaussian(), rng.gaussian());
    ue_pos[u] = cfg.ue_mean_positions[u] + jitter;
  }

  const auto bs_el = ula_element_positions(cfg.bs_position, cfg.n_tx, lambda_c,
                                           Vec3(1, 0, 0));
  NarrowbandChannelSet set;
  set.h_direct.resize(cfg.n_tx, cfg.n_ue);
  if (cfg.direct_blocked) {
    set.h_direct.setZero();
  } else {
    for (int u = 0; u < cfg.n_ue; ++u) {
      const double d = std::max(1.0, (ue_pos[u] - cfg.bs_position).norm());
      const double gain = pathloss(d, cfg.pathloss_exponents[0], cfg.f_c) *
                          db_to_linear(-cfg.direct_extra_loss_db);
      const Eigen::MatrixXcd steer =
          steering_vector(bs_el, cfg.bs_position, ue_pos[u], lambda_c);
      set.h_direct.col(u) =
          gen_ricean(cfg.n_tx, 1, cfg.direct_kappa_db, gain, steer, rng);
    }
  }

  for (int k = 0; k < K; ++k) {
    const auto ris_el = upa_element_positions(cfg.ris_positions[k], cfg.n_ris,
                                              lambda_c, Vec3(1, 0, 0),
                                              Vec3(0, 0, 1));
    {
      const double d =
          std::max(1.0, (cfg.ris_positions[k] - cfg.bs_position).norm());
      const double gain = pathloss(d, cfg.pathloss_exponents[1], cfg.f_c);
      const Eigen::VectorXcd a_bs =
          steering_vector(bs_el, cfg.bs_position, cfg.ris_positions[k], lambda_c);
      const Eigen::VectorXcd a_ris = steering_vector(
          ris_el, cfg.ris_positions[k], cfg.bs_position, lambda_c);
      const Eigen::MatrixXcd steer = a_bs * a_ris.adjoint();  // N_tx x N_ris
      set.h_bs_ris.push_back(
          gen_ricean(cfg.n_tx, cfg.n_ris, cfg.kappa_db, gain, steer, rng));
    }
    Eigen::MatrixXcd h2(cfg.n_ris, cfg.n_ue);
    for (int u = 0; u < cfg.n_ue; ++u) {
      const double d =
          std::max(1.0, (ue_pos[u] - cfg.ris_positions[k]).norm());
      const double gain = pathloss(d, cfg.pathloss_exponents[2], cfg.f_c);
      const Eigen::MatrixXcd steer = steering_vector(
          ris_el, cfg.ris_positions[k], ue_pos[u], lambda_c);
      h2.col(u) = gen_ricean(cfg.n_ris, 1, cfg.kappa_db, gain, steer, rng);
    }
    set.h_ris_ue.push_back(std::move(h2));
  }
  return set;
}

}  // namespace riswb
