#pragma once

// Deterministic random-number utilities. The standard <random> distributions
// are implementation-defined, so seeded runs would not be byte-identical
// across compilers. Everything random in the library (clause sampling, NMF
// jitter, test data generation) goes through these explicitly coded routines.

#include <algorithm>
#include <cstdint>
#include <numeric>
#include <vector>

namespace fairrep {

// splitmix64: tiny, well-mixed, and fully specified.
class DetRng {
public:
    explicit DetRng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, bound) without modulo bias (rejection on the tail).
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) return 0;
        const std::uint64_t limit = UINT64_MAX - UINT64_MAX % bound;
        std::uint64_t v;
        do {
            v = next();
        } while (v >= limit);
        return v % bound;
    }

    // Inclusive range.
    long long range(long long lo, long long hi) {
        return lo + static_cast<long long>(below(static_cast<std::uint64_t>(hi - lo + 1)));
    }

    double unit() {  // [0,1)
        return static_cast<double>(next() >> 11) * 0x1.0p-53;
    }

    // k distinct indices from [0, n), ascending. Partial Fisher-Yates then sort.
    std::vector<std::size_t> sample_without_replacement(std::size_t n, std::size_t k) {
        if (k > n) k = n;
        std::vector<std::size_t> pool(n);
        std::iota(pool.begin(), pool.end(), std::size_t{0});
        for (std::size_t i = 0; i < k; ++i) {
            const std::size_t j = i + static_cast<std::size_t>(below(n - i));
            std::swap(pool[i], pool[j]);
        }
        pool.resize(k);
        std::sort(pool.begin(), pool.end());
        return pool;
    }

private:
    std::uint64_t state_;
};

// Stable way to derive independent substreams (for example one per stratum).
inline std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t stream) {
    DetRng rng(seed ^ (0x6a09e667f3bcc909ULL + stream * 0x9e3779b97f4a7c15ULL));
    rng.next();
    return rng.next();
}

}  // namespace fairrep
