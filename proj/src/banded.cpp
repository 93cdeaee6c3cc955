#include "riswb/banded.hpp"

#include <cmath>

namespace riswb {

void BandedRisConfig::validate(int n_phase_states) const {
  if (n_ris <= 0) throw ValidationError("BandedRisConfig: n_ris must be positive");
  if (n_b < 0) throw ValidationError("BandedRisConfig: n_b must be >= 0");
  if (static_cast<int>(diag_states.size()) != n_ris)
    throw ValidationError("BandedRisConfig: diag_states size mismatch");
  if (static_cast<int>(band_switches.size()) != 2 * n_b * n_ris)
    throw ValidationError("BandedRisConfig: band_switches size mismatch");
  for (int i = 0; i < n_ris; ++i)
    if (diag_states[i] < 0 || diag_states[i] >= n_phase_states)
      throw ValidationError("BandedRisConfig: phase state index out of range at element " +
                            std::to_string(i));
}

std::vector<cxd> phase_set_for_bits(int b) {
  if (b < 1) throw ValidationError("phase_set_for_bits: b must be >= 1");
  const int n = 1 << b;
  std::vector<cxd> states(n);
  for (int i = 0; i < n; ++i) {
    const double ang = 2.0 * kPi * i / n;
    states[i] = cxd(std::cos(ang), std::sin(ang));
  }
  if (b == 1) states = {cxd(1.0, 0.0), cxd(-1.0, 0.0)};  // exact, no sin(pi) residue
  return states;
}

Eigen::MatrixXcd banded_phi(const BandedRisConfig& cfg,
                            const std::vector<cxd>& phase_set) {
  cfg.validate(static_cast<int>(phase_set.size()));
  const int n = cfg.n_ris;
  Eigen::MatrixXcd phi = Eigen::MatrixXcd::Zero(n, n);
  for (int i = 0; i < n; ++i) phi(i, i) = phase_set[cfg.diag_states[i]];
  for (int d = 1; d <= cfg.n_b; ++d) {
    const int sup = (2 * (d - 1)) * n;
    const int sub = (2 * (d - 1) + 1) * n;
    for (int i = 0; i + d < n; ++i) {
      if (cfg.band_switches[sup + i])
        phi(i, i + d) = phase_set[cfg.diag_states[i + d]];
      if (cfg.band_switches[sub + i])
        phi(i + d, i) = phase_set[cfg.diag_states[i]];
    }
  }
  return phi;
}

}  // namespace riswb
