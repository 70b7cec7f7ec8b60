// Copyright 2026 The qspace Authors. All Rights Reserved.
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//    http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#ifndef QSPACE_RANDOM_HPP
#define QSPACE_RANDOM_HPP

#include <cmath>
#include <cstdint>
#include <numbers>

namespace qspace {

// SplitMix64 (Steele, Lea & Flood). Used both as a small sequential
// generator and as the mixing function of the counter-based generator below.
inline std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9E3779B97F4A7C15ull;
  x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
  x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
  return x ^ (x >> 31);
}

// Maps 64 random bits to a double in [0, 1).
inline double bits_to_unit(std::uint64_t bits) {
  return static_cast<double>(bits >> 11) * 0x1.0p-53;
}

class SplitMix64 {
 public:
  explicit SplitMix64(std::uint64_t seed) : state_(seed) {}

  std::uint64_t next() {
    state_ += 0x9E3779B97F4A7C15ull;
    std::uint64_t z = state_;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
  }

  double uniform() { return bits_to_unit(next()); }

 private:
  std::uint64_t state_;
};

// Stateless generator: every (seed, key...) tuple maps to an independent
// stream of bits, so draws do not depend on evaluation order.
inline std::uint64_t counter_hash(std::uint64_t seed, std::uint64_t a, std::uint64_t b = 0,
                                  std::uint64_t c = 0, std::uint64_t d = 0,
                                  std::uint64_t e = 0) {
  std::uint64_t h = splitmix64(seed);
  h = splitmix64(h ^ a);
  h = splitmix64(h ^ b);
  h = splitmix64(h ^ c);
  h = splitmix64(h ^ d);
  return splitmix64(h ^ e);
}

// Two independent standard normals from two uniform words (Box-Muller).
inline void box_muller(std::uint64_t bits_a, std::uint64_t bits_b, double& z0, double& z1) {
  const double u1 = 1.0 - bits_to_unit(bits_a);  // (0, 1]
  const double u2 = bits_to_unit(bits_b);
  const double r = std::sqrt(-2.0 * std::log(u1));
  z0 = r * std::cos(2.0 * std::numbers::pi * u2);
  z1 = r * std::sin(2.0 * std::numbers::pi * u2);
}

}  // namespace qspace

#endif  // QSPACE_RANDOM_HPP
