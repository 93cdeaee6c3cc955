#include "riswb/channel.hpp"

#include <cmath>

namespace riswb {

void OfdmParams::validate() const {
  if (!(f_c > 0.0)) throw ConfigError("ofdm.f_c must be > 0");
  if (!(bandwidth > 0.0)) throw ConfigError("ofdm.bandwidth must be > 0");
  if (n_sub < 1) throw ConfigError("ofdm.n_sub must be >= 1");
  if (n_taps < 1) throw ConfigError("ofdm.n_taps must be >= 1");
  if (cyclic_prefix < 0) throw ConfigError("ofdm.cyclic_prefix must be >= 0");
  if (cyclic_prefix > 0 && n_taps > cyclic_prefix + 1)
    throw ConfigError("ofdm.n_taps must be <= cyclic_prefix + 1");
}

std::vector<double> subcarrier_frequencies(const OfdmParams& ofdm) {
  ofdm.validate();
  std::vector<double> f(ofdm.n_sub);
  const double step = ofdm.bandwidth / ofdm.n_sub;
  for (int n = 1; n <= ofdm.n_sub; ++n)
    f[n - 1] = ofdm.f_c + step * (n - 0.5 * (ofdm.n_sub + 1));
  return f;
}

double pathloss(double distance_m, double exponent, double f_c_hz) {
  if (distance_m < 1.0)
    throw DomainError("pathloss: distance below the 1 m reference");
  const double lambda_c = kSpeedOfLight / f_c_hz;
  const double pl0 = std::pow(lambda_c / (4.0 * kPi), 2);
  return pl0 * std::pow(distance_m, -exponent);
}

Eigen::MatrixXcd gen_ricean(int rows, int cols, double kappa_db, double gain,
                            const Eigen::MatrixXcd& steering, RngStream& rng) {
  if (steering.rows() != rows || steering.cols() != cols)
    throw DimensionError("gen_ricean: steering shape mismatch");
  const double kappa = db_to_linear(kappa_db);
  const double wlos = std::sqrt(kappa / (1.0 + kappa));
  const double wnlos = std::sqrt(1.0 / (1.0 + kappa));
  const double amp = std::sqrt(gain);
  Eigen::MatrixXcd h(rows, cols);
  for (int i = 0; i < rows; ++i)
    for (int j = 0; j < cols; ++j)
      h(i, j) = amp * (wlos * steering(i, j) + wnlos * rng.cgaussian());
  return h;
}

TapChannel gen_wideband_taps(int rows, int cols, int n_taps, double gain,
                             RngStream& rng) {
  return gen_wideband_taps(Eigen::MatrixXd::Constant(rows, cols, gain), n_taps,
                           rng);
}

TapChannel gen_wideband_taps(const Eigen::MatrixXd& entry_gain, int n_taps,
                             RngStream& rng) {
  if (n_taps < 1) throw ConfigError("gen_wideband_taps: n_taps must be >= 1");
  const Eigen::MatrixXd amp =
      (entry_gain / static_cast<double>(n_taps)).cwiseSqrt();
  TapChannel tc;
  tc.taps.reserve(n_taps);
  for (int d = 0; d < n_taps; ++d) {
    Eigen::MatrixXcd t(entry_gain.rows(), entry_gain.cols());
    for (Eigen::Index i = 0; i < t.rows(); ++i)
      for (Eigen::Index j = 0; j < t.cols(); ++j)
        t(i, j) = amp(i, j) * rng.cgaussian();
    tc.taps.push_back(std::move(t));
  }
  return tc;
}

std::vector<Eigen::MatrixXcd> taps_to_frequency(const TapChannel& tc,
                                                const OfdmParams& ofdm) {
  if (tc.n_taps() > ofdm.n_sub)
    throw ConfigError("taps_to_frequency: n_taps exceeds n_sub");
  std::vector<Eigen::MatrixXcd> freq(ofdm.n_sub);
  for (int n = 0; n < ofdm.n_sub; ++n) {
    Eigen::MatrixXcd acc =
        Eigen::MatrixXcd::Zero(tc.taps[0].rows(), tc.taps[0].cols());
    for (int d = 0; d < tc.n_taps(); ++d) {
      const double ang = -2.0 * kPi * d * n / ofdm.n_sub;
      acc += tc.taps[d] * cxd(std::cos(ang), std::sin(ang));
    }
    freq[n] = std::move(acc);
  }
  return freq;
}

TapChannel frequency_to_taps(const std::vector<Eigen::MatrixXcd>& freq,
                             int n_taps) {
  const int n_sub = static_cast<int>(freq.size());
  if (n_sub == 0) throw DimensionError("frequency_to_taps: empty response");
  if (n_taps > n_sub)
    throw ConfigError("frequency_to_taps: n_taps exceeds n_sub");
  TapChannel tc;
  tc.taps.reserve(n_taps);
  for (int d = 0; d < n_taps; ++d) {
    Eigen::MatrixXcd acc =
        Eigen::MatrixXcd::Zero(freq[0].rows(), freq[0].cols());
    for (int n = 0; n < n_sub; ++n) {
      const double ang = 2.0 * kPi * d * n / n_sub;
      acc += freq[n] * cxd(std::cos(ang), std::sin(ang));
    }
    tc.taps.push_back(acc / static_cast<double>(n_sub));
  }
  return tc;
}

Eigen::RowVectorXcd effective_channel_narrowband(
    const Eigen::VectorXcd& h_n,
    const std::vector<NarrowbandContribution>& contributions) {
  Eigen::RowVectorXcd m = h_n.adjoint();
  for (const auto& c : contributions) {
    if (c.phi.rows() != c.phi.cols() || c.h_ris_ue.size() != c.phi.rows() ||
        c.h_bs_ris.cols() != c.phi.rows() || c.h_bs_ris.rows() != h_n.size())
      throw DimensionError("effective_channel_narrowband: shape mismatch");
    m += c.h_ris_ue.adjoint() * c.phi * c.h_bs_ris.adjoint();
  }
  return m;
}

Eigen::VectorXcd composite_channel_wideband(const Eigen::VectorXcd& h,
                                            const Eigen::VectorXcd& g,
                                            const SwitchMatrix& S,
                                            const Eigen::VectorXcd& phi_diag,
                                            const Eigen::MatrixXcd& H) {
  const Eigen::Index n_ris = g.size();
  if (S.size() != n_ris || phi_diag.size() != n_ris || H.rows() != n_ris ||
      H.cols() != h.size())
    throw DimensionError("composite_channel_wideband: shape mismatch");
  // f = h + H^H Phi^H S^T g
  const Eigen::VectorXcd t = S.apply_transpose(g);
  const Eigen::VectorXcd u = phi_diag.conjugate().cwiseProduct(t);
  return h + H.adjoint() * u;
}

}  // namespace riswb
