#include "riswb/codebook.hpp"

#include <cmath>

namespace riswb {

PrecoderCodebook dft_codebook(int n_tx) {
  if (n_tx < 1) throw ConfigError("dft_codebook: n_tx must be >= 1");
  PrecoderCodebook cb;
  cb.columns.resize(n_tx, n_tx);
  const double scale = 1.0 / std::sqrt(static_cast<double>(n_tx));
  for (int m = 0; m < n_tx; ++m)
    for (int k = 0; k < n_tx; ++k) {
      const double ang = -2.0 * kPi * m * k / n_tx;
      cb.columns(m, k) = scale * cxd(std::cos(ang), std::sin(ang));
    }
  return cb;
}

}  // namespace riswb
