#pragma once

#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>
#include <string_view>

namespace reactgen {

// Counter-based splittable RNG (splitmix64 core). Every random decision in
// the project derives from a seed plus a chain of fold() calls, so any
// subsequence can be reproduced without replaying the streams before it.
// std:: distributions are implementation-defined and never used.
class Rng {
public:
    Rng() = default;
    explicit Rng(std::uint64_t seed) : state_(seed * 0x9E3779B97F4A7C15ull + 0x2545F4914F6CDD1Dull) {}

    std::uint64_t next_u64() {
        std::uint64_t z = (state_ += 0x9E3779B97F4A7C15ull);
        z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
        z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
        return z ^ (z >> 31);
    }

    // Uniform in (0, 1]; never returns 0 so it is safe under log().
    double uniform() {
        return (static_cast<double>(next_u64() >> 11) + 1.0) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Box-Muller; two uniforms per draw, no cached state.
    double normal() {
        double u1 = uniform();
        double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    // Inclusive bounds.
    std::int64_t uniform_int(std::int64_t lo, std::int64_t hi) {
        const std::uint64_t span = static_cast<std::uint64_t>(hi - lo) + 1;
        return lo + static_cast<std::int64_t>(next_u64() % span);
    }

    std::uint64_t state() const { return state_; }
    static Rng from_state(std::uint64_t s) {
        Rng r;
        r.state_ = s;
        return r;
    }

private:
    std::uint64_t state_ = 0x853C49E6748FEA9Bull;
};

inline std::uint64_t fold_u64(std::uint64_t h, std::uint64_t x) {
    h ^= x + 0x9E3779B97F4A7C15ull + (h << 6) + (h >> 2);
    std::uint64_t z = h;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

inline std::uint64_t hash_str(std::string_view s) {
    std::uint64_t h = 0xCBF29CE484222325ull; // FNV-1a 64
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001B3ull;
    }
    return h;
}

// Derive an independent stream from a seed and a chain of labels/indices.
inline Rng make_stream(std::uint64_t seed, std::string_view label,
                       std::initializer_list<std::uint64_t> idx = {}) {
    std::uint64_t h = fold_u64(seed, hash_str(label));
    for (std::uint64_t i : idx) h = fold_u64(h, i);
    return Rng(h);
}

} // namespace reactgen
