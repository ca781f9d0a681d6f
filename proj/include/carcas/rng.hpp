#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace carcas {

// splitmix64, used as the seed-mixing function everywhere a derived
// seed is needed (per-game seeds, per-player streams, fitness slots).
inline constexpr std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

inline constexpr std::uint64_t mix_seed(std::uint64_t base, std::uint64_t salt) {
    return splitmix64(base ^ splitmix64(salt));
}

// Seeded generator with hand-rolled integer draws and shuffle so that
// results do not depend on the standard library's distribution
// implementations.
class Rng {
public:
    Rng() : gen_(0xc0ffee) {}
    explicit Rng(std::uint64_t seed) : gen_(seed) {}

    std::uint64_t next() { return gen_(); }

    // Uniform integer in [0, n). n must be > 0.
    int uniform_int(int n) {
        // Lemire's multiply-and-shift; bias is rejected.
        const std::uint64_t bound = static_cast<std::uint64_t>(n);
        while (true) {
            const std::uint64_t x = gen_();
            const __uint128_t m = static_cast<__uint128_t>(x) * bound;
            const std::uint64_t lo = static_cast<std::uint64_t>(m);
            if (lo >= bound || lo >= (-bound) % bound) {
                return static_cast<int>(static_cast<std::uint64_t>(m >> 64));
            }
        }
    }

    double uniform01() {
        return static_cast<double>(gen_() >> 11) * 0x1.0p-53;
    }

    template <typename T>
    void shuffle(std::vector<T>& v) {
        for (int i = static_cast<int>(v.size()) - 1; i > 0; --i) {
            const int j = uniform_int(i + 1);
            std::swap(v[static_cast<std::size_t>(i)], v[static_cast<std::size_t>(j)]);
        }
    }

    template <typename T>
    const T& pick(const std::vector<T>& v) {
        return v[static_cast<std::size_t>(uniform_int(static_cast<int>(v.size())))];
    }

private:
    std::mt19937_64 gen_;
};

}  // namespace carcas
