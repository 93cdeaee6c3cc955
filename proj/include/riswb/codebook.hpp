#pragma once

#include <Eigen/Dense>

#include "riswb/common.hpp"

namespace riswb {

// Columns of the normalized N_tx-point DFT matrix, used as the discrete
// precoder set V.
struct PrecoderCodebook {
  Eigen::MatrixXcd columns;  // n_tx x card(V)

  int card() const { return static_cast<int>(columns.cols()); }
  Eigen::VectorXcd codeword(int i) const { return columns.col(i); }
};

PrecoderCodebook dft_codebook(int n_tx);

}  // namespace riswb
