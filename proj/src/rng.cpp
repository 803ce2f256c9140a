#include "cwkbmf/rng.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace cwkbmf::rng {

namespace {

std::uint64_t finalize(std::uint64_t z) {
  z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ull;
  z = (z ^ (z >> 27)) * 0x94d049bb133111ebull;
  return z ^ (z >> 31);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ull;
  }
  return h;
}

}  // namespace

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
  return finalize(a + 0x9e3779b97f4a7c15ull * (b + 0x165667b19e3779f9ull));
}

std::uint64_t substream(std::uint64_t seed, std::string_view name) {
  return mix(seed, fnv1a(name));
}

std::uint64_t substream(std::uint64_t seed, std::string_view name, std::uint64_t i) {
  return mix(substream(seed, name), i);
}

std::uint64_t substream(std::uint64_t seed, std::string_view name, std::uint64_t i,
                        std::uint64_t j) {
  return mix(substream(seed, name, i), j);
}

std::uint64_t Stream::next_u64() {
  state_ += 0x9e3779b97f4a7c15ull;
  return finalize(state_);
}

double Stream::next_uniform() {
  // 53 random bits shifted into (0, 1)
  return (static_cast<double>(next_u64() >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::next_normal() {
  const double u1 = next_uniform();
  const double u2 = next_uniform();
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

std::uint64_t Stream::next_below(std::uint64_t n) {
  if (n == 0) throw std::invalid_argument("next_below: n must be positive");
  // Lemire's multiply-shift with rejection of the biased zone.
  std::uint64_t x = next_u64();
  __uint128_t m = static_cast<__uint128_t>(x) * n;
  auto lo = static_cast<std::uint64_t>(m);
  if (lo < n) {
    const std::uint64_t threshold = (0 - n) % n;
    while (lo < threshold) {
      x = next_u64();
      m = static_cast<__uint128_t>(x) * n;
      lo = static_cast<std::uint64_t>(m);
    }
  }
  return static_cast<std::uint64_t>(m >> 64);
}

double Stream::next_gamma(double shape, double scale) {
  if (shape <= 0.0 || scale <= 0.0)
    throw std::invalid_argument("next_gamma: shape and scale must be positive");
  if (shape < 1.0) {
    // boost via Gamma(shape+1) and a uniform power
    const double u = next_uniform();
    return next_gamma(shape + 1.0, scale) * std::pow(u, 1.0 / shape);
  }
  const double d = shape - 1.0 / 3.0;
  const double c = 1.0 / std::sqrt(9.0 * d);
  while (true) {
    double x = next_normal();
    double v = 1.0 + c * x;
    if (v <= 0.0) continue;
    v = v * v * v;
    const double u = next_uniform();
    const double x2 = x * x;
    if (u < 1.0 - 0.0331 * x2 * x2) return d * v * scale;
    if (std::log(u) < 0.5 * x2 + d * (1.0 - v + std::log(v))) return d * v * scale;
  }
}

std::vector<std::size_t> Stream::permutation(std::size_t n) {
  std::vector<std::size_t> idx(n);
  for (std::size_t i = 0; i < n; ++i) idx[i] = i;
  for (std::size_t i = n; i > 1; --i) {
    const std::size_t j = static_cast<std::size_t>(next_below(i));
    std::swap(idx[i - 1], idx[j]);
  }
  return idx;
}

double keyed_normal(std::uint64_t seed, std::uint64_t i, std::uint64_t j) {
  const std::uint64_t key = mix(mix(seed, i), j);
  const double u1 = (static_cast<double>(finalize(key + 0x9e3779b97f4a7c15ull) >> 11) + 0.5) *
                    0x1.0p-53;
  const double u2 =
      (static_cast<double>(finalize(key + 2 * 0x9e3779b97f4a7c15ull) >> 11) + 0.5) * 0x1.0p-53;
  return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
}

}  // namespace cwkbmf::rng
