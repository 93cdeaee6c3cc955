#include "riswb/circuit.hpp"

#include <cmath>

namespace riswb {

namespace {
constexpr cxd kJ{0.0, 1.0};
constexpr double kKappa = 2.0 * kPi;  // omega = kKappa * f
}  // namespace

void RisCircuitParams::validate() const {
  if (!(l1 > 0.0)) throw ConfigError("circuit.l1 must be > 0");
  if (!(l2 > 0.0)) throw ConfigError("circuit.l2 must be > 0");
  if (!(r >= 0.0)) throw ConfigError("circuit.r must be >= 0");
  if (!(z0 > 0.0)) throw ConfigError("circuit.z0 must be > 0");
  if (!(c_min > 0.0)) throw ConfigError("circuit.c_min must be > 0");
  if (!(c_min < c_max)) throw ConfigError("circuit.c_min must be < circuit.c_max");
}

cxd circuit_numerator(double f, double c, const RisCircuitParams& p) {
  const double kf = kKappa * f;
  return 1.0 - kf * kf * (p.l1 + p.l2) * c + kJ * (kf * p.r * c);
}

cxd circuit_denominator(double f, double c, const RisCircuitParams& p) {
  const double kf = kKappa * f;
  return kJ * (kf * p.l1 / p.z0) * (1.0 - kf * kf * p.l2 * c + kJ * (kf * p.r * c));
}

cxd reflection_coefficient(double f, double c, const RisCircuitParams& p) {
  if (!(f > 0.0)) throw DomainError("reflection_coefficient: frequency must be > 0");
  const cxd n = circuit_numerator(f, c, p);
  const cxd d = circuit_denominator(f, c, p);
  const cxd denom = n + d;  // proportional to Z + Z0
  if (std::abs(denom) == 0.0)
    throw DomainError("reflection_coefficient: Z + Z0 vanished");
  return (d - n) / denom;
}

cxd reflection_derivative(double f, double c, const RisCircuitParams& p) {
  if (!(f > 0.0)) throw DomainError("reflection_derivative: frequency must be > 0");
  const double kf = kKappa * f;
  const cxd nc = std::conj(circuit_numerator(f, c, p));
  const cxd dc = std::conj(circuit_denominator(f, c, p));
  const cxd dnc = cxd(-kf * kf * (p.l1 + p.l2), -kf * p.r);
  const cxd ddc = -kJ * (kf * p.l1 / p.z0) * cxd(-kf * kf * p.l2, -kf * p.r);
  const cxd denom = nc + dc;
  if (std::abs(denom) == 0.0)
    throw DomainError("reflection_derivative: Z + Z0 vanished");
  return -2.0 / (denom * denom) * (dnc * dc - nc * ddc);
}

Eigen::VectorXcd phase_profile(const Eigen::VectorXd& c, double f,
                               const RisCircuitParams& p) {
  Eigen::VectorXcd phi(c.size());
  for (Eigen::Index m = 0; m < c.size(); ++m)
    phi[m] = reflection_coefficient(f, c[m], p);
  return phi;
}

}  // namespace riswb
