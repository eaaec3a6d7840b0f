// Copyright (c) 2026 adgen authors
// SPDX-License-Identifier: Apache-2.0
//
// Deterministic random streams. std::mt19937_64 supplies the bits; the
// value mappings are implemented here so that draws are identical across
// standard library implementations.

#pragma once

#include <cstdint>
#include <random>
#include <stdexcept>

namespace adgen {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

class Rng {
public:
    explicit Rng(std::uint64_t seed) : seed_(seed), engine_(seed) {}

    std::uint64_t seed() const { return seed_; }

    std::uint64_t next_u64() { return engine_(); }

    // [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // [0, n), unbiased via power-of-two rejection.
    int uniform_int(int n) {
        if (n <= 0) {
            throw std::invalid_argument("Rng::uniform_int: n must be positive");
        }
        const auto un = static_cast<std::uint64_t>(n);
        std::uint64_t mask = un - 1;
        mask |= mask >> 1;
        mask |= mask >> 2;
        mask |= mask >> 4;
        mask |= mask >> 8;
        mask |= mask >> 16;
        mask |= mask >> 32;
        for (;;) {
            const std::uint64_t v = next_u64() & mask;
            if (v < un) {
                return static_cast<int>(v);
            }
        }
    }

    bool bernoulli(double p) { return uniform() < p; }

    // Independent child stream; children with distinct ids never collide.
    Rng fork(std::uint64_t stream) const {
        return Rng(splitmix64(seed_ ^ (0x9E3779B97F4A7C15ULL * (stream + 1))));
    }

private:
    std::uint64_t seed_;
    std::mt19937_64 engine_;
};

} // namespace adgen
