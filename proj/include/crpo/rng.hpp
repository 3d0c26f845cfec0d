#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace crpo {

// Deterministic seed derivation: master seed -> named stream -> counter.
// Sweeps rely on this so that every sweep point sees identical world draws.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline std::uint64_t fnv1a64(std::string_view s) {
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

inline std::uint64_t derive_seed(std::uint64_t master, std::string_view purpose,
                                 std::uint64_t counter = 0) {
    return splitmix64(splitmix64(master ^ fnv1a64(purpose)) + counter);
}

// mt19937_64 wrapper with bit-level draws so sampled values are identical
// across platforms and standard libraries (std distributions are not).
class Rng {
public:
    explicit Rng(std::uint64_t seed = 0) : engine_(splitmix64(seed ^ 0x6a09e667f3bcc908ULL)) {}

    static Rng stream(std::uint64_t master, std::string_view purpose, std::uint64_t counter = 0) {
        return Rng(derive_seed(master, purpose, counter));
    }

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 bits of precision.
    double next_double() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    // Unbiased uniform integer in [0, n).
    std::uint64_t next_below(std::uint64_t n) {
        const std::uint64_t threshold = (0 - n) % n;  // 2^64 mod n
        for (;;) {
            const std::uint64_t r = next_u64();
            if (r >= threshold) return r % n;
        }
    }

    int next_index(std::size_t n) { return static_cast<int>(next_below(n)); }

    bool next_bool(double p) { return next_double() < p; }

private:
    std::mt19937_64 engine_;
};

}  // namespace crpo
