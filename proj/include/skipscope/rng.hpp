#pragma once

#include <cmath>
#include <cstdint>
#include <numbers>

namespace skipscope {

// SplitMix64 mixer; used to derive independent per-instance seeds.
constexpr std::uint64_t mix_seed(std::uint64_t x) noexcept
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

constexpr std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) noexcept
{
    return mix_seed(mix_seed(a) ^ (b + 0x632be59bd9b4e019ULL));
}

// Small deterministic generator (xoshiro256**). The standard distributions
// are implementation-defined, so all sampling helpers live here to keep
// generated fixtures identical across toolchains.
class Rng {
public:
    explicit Rng(std::uint64_t seed) noexcept
    {
        std::uint64_t s = seed;
        for (auto& word : state_) {
            s = mix_seed(s);
            word = s;
        }
    }

    std::uint64_t next() noexcept
    {
        const std::uint64_t result = rotl(state_[1] * 5, 7) * 9;
        const std::uint64_t t = state_[1] << 17;
        state_[2] ^= state_[0];
        state_[3] ^= state_[1];
        state_[1] ^= state_[2];
        state_[0] ^= state_[3];
        state_[2] ^= t;
        state_[3] = rotl(state_[3], 45);
        return result;
    }

    // Uniform on [0, 1).
    double uniform() noexcept { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    // Uniform integer in [0, n). n must be > 0.
    std::uint64_t below(std::uint64_t n) noexcept
    {
        // Lemire's multiply-shift; the bias is below 2^-64 * n and irrelevant here.
        __extension__ using u128 = unsigned __int128;
        return static_cast<std::uint64_t>((static_cast<u128>(next()) * n) >> 64);
    }

    double normal() noexcept
    {
        // Box-Muller, one draw per call.
        double u1 = uniform();
        while (u1 <= 0.0) {
            u1 = uniform();
        }
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    static constexpr std::uint64_t rotl(std::uint64_t x, int k) noexcept { return (x << k) | (x >> (64 - k)); }

    std::uint64_t state_[4]{};
};

} // namespace skipscope
