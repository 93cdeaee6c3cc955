#pragma once

#include <Eigen/Dense>
#include <vector>

#include "riswb/common.hpp"
#include "riswb/rng.hpp"
#include "riswb/switches.hpp"

namespace riswb {

struct OfdmParams {
  double f_c = 2.4e9;       // Hz
  double bandwidth = 1e8;   // Hz
  int n_sub = 16;
  int n_taps = 16;          // D
  int cyclic_prefix = 16;   // N_cp; 0 switches narrowband mode

  void validate() const;
};

std::vector<double> subcarrier_frequencies(const OfdmParams& ofdm);

// PL = PL0 * d^(-alpha), PL0 = (lambda_c / 4 pi)^2, reference distance 1 m.
double pathloss(double distance_m, double exponent, double f_c_hz);

// H = sqrt(gain) * ( sqrt(kappa/(1+kappa)) * steering
//                  + sqrt(1/(1+kappa))     * W ),  W iid CN(0,1).
Eigen::MatrixXcd gen_ricean(int rows, int cols, double kappa_db, double gain,
                            const Eigen::MatrixXcd& steering, RngStream& rng);

// Tap-domain impulse response; taps[d] holds the d-th delay coefficient matrix.
struct TapChannel {
  std::vector<Eigen::MatrixXcd> taps;

  int n_taps() const { return static_cast<int>(taps.size()); }
};

// D iid complex-Gaussian taps with uniform power-delay profile; the per-entry
// power summed across taps equals the per-entry gain.
TapChannel gen_wideband_taps(int rows, int cols, int n_taps, double gain,
                             RngStream& rng);
TapChannel gen_wideband_taps(const Eigen::MatrixXd& entry_gain, int n_taps,
                             RngStream& rng);

// Per-subcarrier response: entry n = sum_d taps[d] * exp(-j 2 pi d n / N_sub),
// n = 0..N_sub-1.
std::vector<Eigen::MatrixXcd> taps_to_frequency(const TapChannel& tc,
                                                const OfdmParams& ofdm);
// Inverse transform (first n_taps delay bins).
TapChannel frequency_to_taps(const std::vector<Eigen::MatrixXcd>& freq,
                             int n_taps);

// m_n^H = h_n^H + sum_k h2_k^H Phi_k H1_k^H, returned as the row vector m_n^H.
struct NarrowbandContribution {
  Eigen::VectorXcd h_ris_ue;   // h_{2,n,k}, N_ris
  Eigen::MatrixXcd phi;        // N_ris x N_ris
  Eigen::MatrixXcd h_bs_ris;   // H_{1,k}, N_tx x N_ris
};
Eigen::RowVectorXcd effective_channel_narrowband(
    const Eigen::VectorXcd& h_n,
    const std::vector<NarrowbandContribution>& contributions);

// f^H = h^H + g^H S Phi H, returned as the column vector f (so products use
// f.adjoint()). phi_diag is the diagonal of Phi_{j,n}.
Eigen::VectorXcd composite_channel_wideband(const Eigen::VectorXcd& h,
                                            const Eigen::VectorXcd& g,
                                            const SwitchMatrix& S,
                                            const Eigen::VectorXcd& phi_diag,
                                            const Eigen::MatrixXcd& H);

}  // namespace riswb
