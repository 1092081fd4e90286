// Copyright 2026 The cvepr Authors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//      http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

// Counter-based random numbers. Every draw is a pure function of
// (key, counter), so any record can be regenerated independently and
// parallel generation gives the same stream regardless of worker count.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <numbers>
#include <thread>
#include <utility>
#include <vector>

namespace cvepr::rng {

/// Philox4x32 with 10 rounds (Salmon et al., SC'11).
class Philox4x32 {
   public:
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit constexpr Philox4x32(Key key) noexcept : key_(key) {}
    explicit constexpr Philox4x32(std::uint64_t seed) noexcept
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)} {}

    constexpr Counter operator()(Counter ctr) const noexcept {
        Key key = key_;
        for (int round = 0; round < 10; ++round) {
            if (round > 0) {
                key[0] += kWeyl0;
                key[1] += kWeyl1;
            }
            ctr = single_round(ctr, key);
        }
        return ctr;
    }

    /// Counter layout used throughout the library: 64-bit record index plus a
    /// 32-bit stream tag and a 32-bit sub-draw index.
    constexpr Counter operator()(std::uint64_t index, std::uint32_t stream, std::uint32_t draw = 0) const noexcept {
        return (*this)(Counter{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32), stream, draw});
    }

   private:
    static constexpr std::uint32_t kMul0 = 0xD2511F53u;
    static constexpr std::uint32_t kMul1 = 0xCD9E8D57u;
    static constexpr std::uint32_t kWeyl0 = 0x9E3779B9u;
    static constexpr std::uint32_t kWeyl1 = 0xBB67AE85u;

    static constexpr Counter single_round(const Counter& c, const Key& k) noexcept {
        const std::uint64_t p0 = static_cast<std::uint64_t>(kMul0) * c[0];
        const std::uint64_t p1 = static_cast<std::uint64_t>(kMul1) * c[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32);
        const auto lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32);
        const auto lo1 = static_cast<std::uint32_t>(p1);
        return Counter{hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    Key key_;
};

/// SplitMix64 finalizer; used as a cheap stateless hash for resampling weights.
constexpr std::uint64_t splitmix64(std::uint64_t x) noexcept {
    x += 0x9E3779B97F4A7C15ull;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ull;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBull;
    return x ^ (x >> 31);
}

/// Derive an independent 64-bit seed for a named sub-stream.
constexpr std::uint64_t derive_seed(std::uint64_t seed, std::uint64_t tag) noexcept {
    return splitmix64(seed ^ splitmix64(tag + 0x632BE59BD9B4E019ull));
}

/// Uniform in the open interval (0, 1) from 64 random bits.
constexpr double to_open_unit(std::uint64_t bits) noexcept {
    return (static_cast<double>(bits >> 12) + 0.5) * 0x1.0p-52;
}

constexpr std::uint64_t join(std::uint32_t lo, std::uint32_t hi) noexcept {
    return static_cast<std::uint64_t>(lo) | (static_cast<std::uint64_t>(hi) << 32);
}

/// Two independent standard normals from one Philox block (Box-Muller).
inline std::pair<double, double> normal_pair(const Philox4x32::Counter& block) noexcept {
    const double u1 = to_open_unit(join(block[0], block[1]));
    const double u2 = to_open_unit(join(block[2], block[3]));
    const double rad = std::sqrt(-2.0 * std::log(u1));
    const double ang = 2.0 * std::numbers::pi * u2;
    return {rad * std::cos(ang), rad * std::sin(ang)};
}

/// Number of draws k for a Poisson(1) variable, by inverse CDF on a 32-bit uniform.
constexpr std::uint32_t poisson1(std::uint32_t bits) noexcept {
    // Cumulative Poisson(1) probabilities scaled to 2^32.
    constexpr std::array<std::uint64_t, 10> cdf{
        1580030169ull, 3160060337ull, 3950075422ull, 4213413783ull, 4279248374ull,
        4292415292ull, 4294609778ull, 4294923276ull, 4294962463ull, 4294966817ull};
    std::uint32_t k = 0;
    while (k < cdf.size() && bits >= cdf[k]) ++k;
    return k;
}

inline unsigned resolve_workers(unsigned workers) noexcept {
    if (workers != 0) return workers;
    const unsigned hw = std::thread::hardware_concurrency();
    return hw == 0 ? 1 : hw;
}

/// Run body(begin, end) over [0, n) split into contiguous blocks, one per worker.
/// Callers must make body's output depend only on the index, never on the split.
template <class Body>
void parallel_for(std::size_t n, unsigned workers, Body&& body) {
    workers = resolve_workers(workers);
    if (workers <= 1 || n < 2 * static_cast<std::size_t>(workers)) {
        body(std::size_t{0}, n);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(workers);
    const std::size_t chunk = (n + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
        const std::size_t begin = std::min(n, w * chunk);
        const std::size_t end = std::min(n, begin + chunk);
        if (begin == end) break;
        pool.emplace_back([&body, begin, end] { body(begin, end); });
    }
    for (auto& t : pool) t.join();
}

}  // namespace cvepr::rng
