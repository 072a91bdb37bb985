#pragma once

#include <cstdint>
#include <random>

namespace xenopower {

/// splitmix64 finalizer; a bijective 64-bit mix.
constexpr std::uint64_t mix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

/// Stateless key for replicate r of cell (n, m). Every (cell, replicate)
/// pair gets its own stream, so scheduling order never affects the draws.
constexpr std::uint64_t replicate_key(std::uint64_t seed, int n, int m, int r) {
    std::uint64_t h = mix64(seed);
    h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(n)));
    h = mix64(h ^ (static_cast<std::uint64_t>(static_cast<std::uint32_t>(m)) << 32));
    h = mix64(h ^ static_cast<std::uint64_t>(static_cast<std::uint32_t>(r)) * 0xd1342543de82ef95ULL);
    return h;
}

class RandomStream {
public:
    explicit RandomStream(std::uint64_t key) : engine_(key) {}

    /// Uniform on the open interval (0, 1).
    double uniform() {
        return (static_cast<double>(engine_() >> 11) + 0.5) * 0x1.0p-53;
    }

    double normal(double mean, double sd) {
        return mean + sd * standard_(engine_);
    }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> standard_{0.0, 1.0};
};

} // namespace xenopower
