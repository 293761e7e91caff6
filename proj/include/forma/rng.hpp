#pragma once

#include <cstdint>
#include <random>
#include <vector>

namespace forma {

// Uniform draw from [0, n) using multiply-shift rejection. Fully specified,
// unlike std::uniform_int_distribution, so seeded runs reproduce across
// platforms and standard libraries.
inline uint64_t bounded_rand(std::mt19937_64& rng, uint64_t n) {
    if (n <= 1) return 0;
    while (true) {
        uint64_t x = rng();
        __uint128_t m = static_cast<__uint128_t>(x) * n;
        uint64_t lo = static_cast<uint64_t>(m);
        if (lo >= n || lo >= (uint64_t(0) - n) % n) return static_cast<uint64_t>(m >> 64);
    }
}

// k distinct indices from [0, n), ascending. Partial Fisher-Yates over an
// index table; deterministic for a given seed.
inline std::vector<size_t> sample_indices(size_t n, size_t k, uint64_t seed) {
    if (k > n) k = n;
    std::vector<size_t> idx(n);
    for (size_t i = 0; i < n; ++i) idx[i] = i;
    std::mt19937_64 rng(seed);
    for (size_t i = 0; i < k; ++i) {
        size_t j = i + static_cast<size_t>(bounded_rand(rng, n - i));
        std::swap(idx[i], idx[j]);
    }
    idx.resize(k);
    std::sort(idx.begin(), idx.end());
    return idx;
}

}  // namespace forma
