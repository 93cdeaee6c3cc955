#pragma once

#include <cstdint>
#include <random>
#include <string_view>

#include "riswb/common.hpp"

namespace riswb {

// Derives a child seed from (master seed, stream name, index) by hashing, so
// every module draws from its own stream and adding a new consumer never
// shifts the draws of an existing one.
std::uint64_t derive_stream_seed(std::uint64_t master, std::string_view name,
                                 std::uint64_t index = 0);

// Deterministic random stream. Gaussians come from an in-house Box-Muller so
// the byte-level output is independent of the standard library build.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed) : engine_(seed) {}

  std::uint64_t next_u64() { return engine_(); }

  // uniform on [0, 1)
  double uniform();
  // uniform integer on [lo, hi] inclusive
  int uniform_int(int lo, int hi);
  // standard normal
  double gaussian();
  // circularly symmetric complex normal, unit variance: E|z|^2 = 1
  cxd cgaussian();

 private:
  std::mt19937_64 engine_;
  bool has_spare_ = false;
  double spare_ = 0.0;
};

}  // namespace riswb
