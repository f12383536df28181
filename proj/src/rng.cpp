#include "rcdemand/rng.hpp"

#include <cmath>

#include "rcdemand/common.hpp"
#include "rcdemand/normal.hpp"

namespace rcd {

namespace {
constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;
}

std::uint64_t mix64(std::uint64_t z) {
  z ^= z >> 30;
  z *= 0xbf58476d1ce4e5b9ULL;
  z ^= z >> 27;
  z *= 0x94d049bb133111ebULL;
  z ^= z >> 31;
  return z;
}

Stream::Stream(std::uint64_t seed, std::uint64_t stream_id)
    : base_(mix64(seed + kGolden * (stream_id + 1))) {}

std::uint64_t Stream::bits(std::uint64_t counter) const {
  return mix64(base_ + kGolden * counter);
}

double Stream::uniform(std::uint64_t counter) const {
  // 53 significant bits, shifted to the open interval.
  return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
}

double Stream::normal(std::uint64_t counter) const {
  return norm_quantile(uniform(counter));
}

double Stream::gumbel(std::uint64_t counter) const {
  return -std::log(-std::log(uniform(counter)));
}

double halton(std::uint64_t index, int base) {
  require_config(base >= 2, "halton: base must be >= 2");
  double f = 1.0, r = 0.0;
  while (index > 0) {
    f /= base;
    r += f * static_cast<double>(index % base);
    index /= base;
  }
  return r;
}

int nth_prime(int i) {
  static const int primes[] = {2,  3,  5,  7,  11, 13, 17, 19,
                               23, 29, 31, 37, 41, 43, 47, 53};
  require_config(i >= 0 && i < static_cast<int>(sizeof(primes) / sizeof(int)),
                 "nth_prime: index out of range");
  return primes[i];
}

void halton_normal(std::uint64_t index, int dim, double* out) {
  for (int d = 0; d < dim; ++d) {
    double u = halton(index, nth_prime(d));
    // Guard the open interval; the radical inverse never hits 1 and hits 0
    // only at index 0, which callers skip.
    u = std::min(std::max(u, 1e-12), 1.0 - 1e-12);
    out[d] = norm_quantile(u);
  }
}

}  // namespace rcd
