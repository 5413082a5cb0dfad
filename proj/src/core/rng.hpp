#pragma once

#include <cstdint>
#include <string_view>
#include <random>

namespace so3rep {

// Deterministic random stream built on std::mt19937_64.
//
// All randomness in the library flows through this class so that results are
// reproducible bit-for-bit from a single master seed.  Distinct consumers use
// named substreams derived from (master_seed, name); adding a new consumer
// with a new name never perturbs the draws seen by existing ones.
//
// Uniform and normal variates are generated with fixed, fully specified
// algorithms (53-bit mantissa scaling and the Marsaglia polar method) instead
// of std::uniform_real_distribution / std::normal_distribution, whose output
// sequences are implementation-defined and would break cross-toolchain
// reproducibility of saved artifacts.
class RngStream {
 public:
  explicit RngStream(std::uint64_t seed);
  RngStream(std::uint64_t master_seed, std::string_view stream_name);

  std::uint64_t next_u64();

  // Uniform on [0, 1) with 53 random mantissa bits.
  double uniform();

  // Standard normal via the Marsaglia polar method (second value cached).
  double normal();

 private:
  std::mt19937_64 engine_;
  double cached_normal_ = 0.0;
  bool has_cached_normal_ = false;
};

// splitmix64 output mixer; used to derive substream seeds.
std::uint64_t splitmix64(std::uint64_t x);

// FNV-1a hash of a string; used to derive substream seeds from names.
std::uint64_t fnv1a64(std::string_view s);

}  // namespace so3rep
