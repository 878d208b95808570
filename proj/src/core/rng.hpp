// Copyright Contributors to the TriGrid Inversion Project
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic random source used everywhere randomness is needed.
// xoshiro256++ with splitmix64 seeding; the normal draw is a plain
// Box-Muller that always consumes two uniforms (no cached spare), so a
// stream's state is exactly its four words and serializes losslessly.

#pragma once

#include <array>
#include <cstdint>
#include <string_view>

namespace tg {

class Rng {
 public:
  // default state is an arbitrary fixed nonzero word set; prefer seeded()
  Rng()
      : s_{0x9e3779b97f4a7c15ull, 0xd1b54a32d192ed03ull,
           0x8ebc6af09c88c6e3ull, 0x589965cc75374cc3ull} {}

  // Independent stream derived from (seed, stream tag). Different tags give
  // decorrelated streams for the same master seed.
  static Rng seeded(std::uint64_t seed, std::string_view stream);

  std::uint64_t next_u64();
  double uniform();                      // [0, 1)
  double uniform(double lo, double hi);  // [lo, hi)
  double normal();                       // standard normal, Box-Muller
  std::uint64_t below(std::uint64_t n);  // [0, n), unbiased

  std::array<std::uint64_t, 4> state() const { return s_; }
  void set_state(const std::array<std::uint64_t, 4>& s) { s_ = s; }

 private:
  std::array<std::uint64_t, 4> s_;
};

}  // namespace tg
