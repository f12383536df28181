// Counter-based random number generation.
//
// Draw i of stream s under a given seed is a pure function of (seed, s, i):
// results are bit-identical for any thread count, chunking, or evaluation
// order.  The generator is the SplitMix64 finalizer applied to an affine
// counter, which is statistically solid for simulation workloads.

#pragma once

#include <cstdint>

namespace rcd {

std::uint64_t mix64(std::uint64_t z);

class Stream {
 public:
  Stream(std::uint64_t seed, std::uint64_t stream_id);

  std::uint64_t bits(std::uint64_t counter) const;
  // Uniform on the open interval (0,1).
  double uniform(std::uint64_t counter) const;
  // Standard normal via inverse-CDF (one uniform per variate).
  double normal(std::uint64_t counter) const;
  // Standard type-I extreme value (Gumbel), location 0 scale 1.
  double gumbel(std::uint64_t counter) const;

 private:
  std::uint64_t base_;
};

// Radical-inverse (Halton) sequence value for 1-based index in the given
// prime base.
double halton(std::uint64_t index, int base);

// d-dimensional Halton point (bases = first d primes), mapped through the
// normal quantile.  Used for quasi-random normal draws.
void halton_normal(std::uint64_t index, int dim, double* out);

int nth_prime(int i);  // 0 -> 2, 1 -> 3, ...

}  // namespace rcd
