#pragma once

#include <complex>
#include <stdexcept>
#include <string>

namespace riswb {

inline constexpr const char* kVersion = "0.1.0";

using cxd = std::complex<double>;

inline constexpr double kSpeedOfLight = 299792458.0;  // m/s
inline constexpr double kPi = 3.14159265358979323846;

// Error taxonomy: configuration problems name the offending field, structural
// errors are shape/layout mismatches, domain errors are out-of-range numerics.
struct Error : std::runtime_error {
  using std::runtime_error::runtime_error;
};
struct ConfigError : Error {
  using Error::Error;
};
struct DimensionError : Error {
  using Error::Error;
};
struct DomainError : Error {
  using Error::Error;
};
struct ValidationError : Error {
  using Error::Error;
};
struct SolverError : Error {
  using Error::Error;
};
struct IoError : Error {
  using Error::Error;
};

inline double dbm_to_watt(double dbm) { return 1e-3 * std::pow(10.0, dbm / 10.0); }
inline double watt_to_dbm(double w) { return 10.0 * std::log10(w / 1e-3); }
inline double db_to_linear(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace riswb
