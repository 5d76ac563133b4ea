#pragma once

#include <cmath>
#include <cstdint>
#include <limits>

namespace allelic {

// splitmix64, used for seeding and for deriving per-replicate seeds.
inline std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

// Replicate r of a run seeded with `base` uses derive_seed(base, r), so
// replicate fan-out over any number of workers reproduces the serial streams.
inline std::uint64_t derive_seed(std::uint64_t base, std::uint64_t replicate) {
    std::uint64_t s = base ^ 0x6a09e667f3bcc909ULL;
    splitmix64(s);
    s ^= replicate + 0x9e3779b97f4a7c15ULL + (s << 6) + (s >> 2);
    std::uint64_t out = splitmix64(s);
    return out ? out : 0x2545f4914f6cdd1dULL;
}

// xoshiro256++ with splitmix64 seeding.
class Rng {
public:
    explicit Rng(std::uint64_t seed) {
        std::uint64_t sm = seed;
        for (auto& w : s_) w = splitmix64(sm);
    }

    std::uint64_t next_u64() {
        const std::uint64_t result = rotl(s_[0] + s_[3], 23) + s_[0];
        const std::uint64_t t = s_[1] << 17;
        s_[2] ^= s_[0];
        s_[3] ^= s_[1];
        s_[1] ^= s_[2];
        s_[0] ^= s_[3];
        s_[2] ^= t;
        s_[3] = rotl(s_[3], 45);
        return result;
    }

    // uniform in (0,1); 0 is rejected so -log(u) is always finite
    double uniform() {
        double u;
        do {
            u = static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
        } while (u == 0.0);
        return u;
    }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    // unbiased integer in [0, n)
    std::uint64_t uniform_below(std::uint64_t n) {
        const std::uint64_t limit = std::numeric_limits<std::uint64_t>::max() - (std::numeric_limits<std::uint64_t>::max() % n);
        std::uint64_t x;
        do {
            x = next_u64();
        } while (x >= limit);
        return x % n;
    }

    std::int64_t poisson(double mean);

private:
    static std::uint64_t rotl(std::uint64_t x, int k) { return (x << k) | (x >> (64 - k)); }
    std::uint64_t s_[4];
};

} // namespace allelic
