#pragma once

#include <Eigen/Dense>

#include "riswb/common.hpp"

namespace riswb {

// Varactor-based equivalent circuit of one reflecting element.
struct RisCircuitParams {
  double l1 = 2.5e-9;    // H
  double l2 = 0.7e-9;    // H
  double r = 1.0;        // Ohm
  double z0 = 50.0;      // Ohm
  double c_min = 0.2e-12;  // F
  double c_max = 3.0e-12;  // F

  void validate() const;
};

// phi(f, C) = (Z - Z0)/(Z + Z0), evaluated through the equivalent
// numerator/denominator polynomials N and D (phi = (D - N)/(D + N)).
cxd reflection_coefficient(double f_hz, double c_farad, const RisCircuitParams& p);

// d(phi*)/dC at (f, C).
cxd reflection_derivative(double f_hz, double c_farad, const RisCircuitParams& p);

// The N(f,C) and D(f,C) polynomials of the tractable reflection form,
// exposed for the solver's derivative bookkeeping.
cxd circuit_numerator(double f_hz, double c_farad, const RisCircuitParams& p);
cxd circuit_denominator(double f_hz, double c_farad, const RisCircuitParams& p);

// Diagonal of Phi_{k,n}: entry m = reflection_coefficient(f_n, c[m]).
Eigen::VectorXcd phase_profile(const Eigen::VectorXd& c, double f_hz,
                               const RisCircuitParams& p);

}  // namespace riswb
