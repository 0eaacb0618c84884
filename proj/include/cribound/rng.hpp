#pragma once

#include <cmath>
#include <cstdint>
#include <random>

namespace cri {

// SplitMix64 finalizer. Used only for seed derivation, never as the sampling
// generator itself.
inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

// Child seed for a numbered stream (replication block, oracle instance,
// experiment cell). Two rounds of mixing keep adjacent stream indices from
// producing correlated mt19937_64 states.
inline std::uint64_t derive_seed(std::uint64_t master, std::uint64_t stream) {
    return splitmix64(splitmix64(master) + stream);
}

// Seeded generator with hand-rolled output transforms. mt19937_64's raw
// stream is pinned by the standard, but std::uniform_real_distribution and
// std::normal_distribution are implementation-defined, so relying on them
// would break the byte-identical-rerun contract across toolchains. The
// uniform is the usual 53-bit mantissa construction; normals come from the
// Marsaglia polar transform.
class rng {
public:
    explicit rng(std::uint64_t seed) : eng_(seed) {}

    std::uint64_t next_u64() { return eng_(); }

    // Uniform on [0, 1).
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    // Standard normal draw.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        double u, v, s;
        do {
            u = 2.0 * uniform() - 1.0;
            v = 2.0 * uniform() - 1.0;
            s = u * u + v * v;
        } while (s >= 1.0 || s == 0.0);
        const double f = std::sqrt(-2.0 * std::log(s) / s);
        spare_ = v * f;
        have_spare_ = true;
        return u * f;
    }

private:
    std::mt19937_64 eng_;
    bool have_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace cri
