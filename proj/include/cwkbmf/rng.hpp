#pragma once

#include <cstdint>
#include <string_view>
#include <vector>

namespace cwkbmf::rng {

// splitmix64 finalizer; the basis for all hashing and stream generation.
std::uint64_t mix(std::uint64_t a, std::uint64_t b);

// Named sub-stream derivation: every consumer of randomness hashes the
// master seed with a purpose tag (and optional indices) so that adding or
// reordering consumers never shifts anyone else's draws.
std::uint64_t substream(std::uint64_t seed, std::string_view name);
std::uint64_t substream(std::uint64_t seed, std::string_view name, std::uint64_t i);
std::uint64_t substream(std::uint64_t seed, std::string_view name, std::uint64_t i,
                        std::uint64_t j);

// Sequential generator (splitmix64).  Normals use Box-Muller on explicit
// uniform bits, so sequences are identical across platforms and compilers.
class Stream {
 public:
  explicit Stream(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next_u64();
  // uniform on (0, 1), never returns an endpoint
  double next_uniform();
  double next_normal();
  // uniform integer in [0, n), n >= 1
  std::uint64_t next_below(std::uint64_t n);
  // Marsaglia-Tsang; shape > 0, scale > 0
  double next_gamma(double shape, double scale);

  // Fisher-Yates shuffle of {0, .., n-1}
  std::vector<std::size_t> permutation(std::size_t n);

 private:
  std::uint64_t state_;
};

// Counter-based standard normal keyed by (seed, i, j): the value depends
// only on the key, never on draw order.
double keyed_normal(std::uint64_t seed, std::uint64_t i, std::uint64_t j);

}  // namespace cwkbmf::rng
