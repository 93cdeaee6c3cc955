#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <vector>

#include "riswb/common.hpp"

namespace riswb {

// Banded BD-RIS state: a discrete phase state per diagonal element plus
// ON/OFF couplings on the n_b sub- and super-diagonals.
//
// band_switches layout, one N_ris-long segment per (offset, side):
//   segment 2*(d-1)   : superdiagonal d, position i gates entry (i, i+d)
//   segment 2*(d-1)+1 : subdiagonal  d, position i gates entry (i+d, i)
// for d = 1..n_b; positions with i+d >= n_ris are padding and ignored.
// (The segments are N_ris long so the layout matches the controller head's
// (2*N_B+1)*N_ris output block.)
struct BandedRisConfig {
  int n_ris = 0;
  int n_b = 0;
  std::vector<int> diag_states;            // size n_ris, values in [0, 2^b)
  std::vector<std::uint8_t> band_switches; // size 2*n_b*n_ris

  void validate(int n_phase_states) const;
};

// 2^b uniformly spaced unit-modulus states, exp(j*2*pi*i/2^b);
// b = 1 gives {+1, -1}.
std::vector<cxd> phase_set_for_bits(int b);

// Materializes Phi: diagonal entries are the selected states; an ON switch at
// (i, j) places the phase state of element j at entry (i, j); everything else 0.
Eigen::MatrixXcd banded_phi(const BandedRisConfig& cfg,
                            const std::vector<cxd>& phase_set);

}  // namespace riswb
