// SPDX-License-Identifier: Apache-2.0
//
// pincast — pinched-waveguide antenna array simulator and max-min rate optimizer
// Copyright (C) 2026 pincast contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
// http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.
// ------------------------------------------------------------------------

#ifndef PINCAST_RNG_HPP
#define PINCAST_RNG_HPP

#include <cmath>
#include <cstdint>
#include <initializer_list>

namespace pincast::rng {

// Generator id "pincast-rng-v1": xoshiro256** seeded through splitmix64.
// Uniform doubles use the 53-bit mantissa construction, so the stream is
// bit-identical across platforms and compilers.
inline constexpr const char* kGeneratorId = "pincast-rng-v1";

inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9E3779B97F4A7C15ull);
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

class Stream {
  public:
    explicit Stream(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& word : s_)
            word = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[1] * 5, 7) * 9;
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // Uniform in [0, 1).
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Standard normal via Box-Muller (polar-free variant, deterministic).
    double normal();

  private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

inline double Stream::normal() {
    // Box-Muller on two fresh uniforms; the cached half is intentionally not
    // kept so that the stream position is a pure function of the call count.
    double u1 = uniform();
    while (u1 <= 0.0)
        u1 = uniform();
    const double u2 = uniform();
    constexpr double two_pi = 6.283185307179586476925287;
    return std::sqrt(-2.0 * std::log(u1)) * std::cos(two_pi * u2);
}

// Derives an independent substream from (seed, path...). Streams for distinct
// paths never collide in practice; adding new purposes leaves existing ones
// untouched.
inline Stream substream(std::uint64_t seed, std::initializer_list<std::uint64_t> path) {
    std::uint64_t h = seed ^ 0xA0761D6478BD642Full;
    for (std::uint64_t part : path) {
        h ^= splitmix64(part);
        h = splitmix64(h);
    }
    return Stream(h);
}

} // namespace pincast::rng

#endif
