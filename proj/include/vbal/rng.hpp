#pragma once

#include <array>
#include <cmath>
#include <cstdint>
#include <initializer_list>
#include <numbers>

namespace vbal {

/// Philox4x32-10 block function (Salmon et al., "Parallel random numbers: as easy as 1, 2, 3").
inline std::array<std::uint32_t, 4> philox4x32_10(std::array<std::uint32_t, 4> ctr,
                                                   std::array<std::uint32_t, 2> key) {
    constexpr std::uint32_t kM0 = 0xD2511F53u, kM1 = 0xCD9E8D57u;
    constexpr std::uint32_t kW0 = 0x9E3779B9u, kW1 = 0xBB67AE85u;
    for (int round = 0; round < 10; ++round) {
        if (round > 0) {
            key[0] += kW0;
            key[1] += kW1;
        }
        const std::uint64_t p0 = std::uint64_t{kM0} * ctr[0];
        const std::uint64_t p1 = std::uint64_t{kM1} * ctr[2];
        const auto hi0 = static_cast<std::uint32_t>(p0 >> 32), lo0 = static_cast<std::uint32_t>(p0);
        const auto hi1 = static_cast<std::uint32_t>(p1 >> 32), lo1 = static_cast<std::uint32_t>(p1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
    }
    return ctr;
}

inline std::uint64_t splitmix64(std::uint64_t z) {
    z += 0x9E3779B97F4A7C15ull;
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

/// Counter-based random stream addressed by (master seed, stream id, draw counter).
/// One "draw" is one 64-bit output; every sampler documents how many it consumes.
/// Streams are cheap values; concurrent tasks each derive their own.
class RngStream {
public:
    RngStream(std::uint64_t master_seed, std::uint64_t stream_id) : seed_(master_seed), stream_(stream_id) {}

    std::uint64_t master_seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_; }
    std::uint64_t draws() const noexcept { return counter_; }

    /// Child stream keyed by this stream's id and `tag`; independent of the parent's counter.
    RngStream derive(std::uint64_t tag) const {
        return RngStream(seed_, splitmix64(stream_ ^ splitmix64(tag + 0x632BE59BD9B4E019ull)));
    }

    RngStream derive(std::initializer_list<std::uint64_t> tags) const {
        RngStream s = *this;
        for (auto t : tags) s = s.derive(t);
        return s;
    }

    /// Output number `index` of this stream, without advancing it.
    std::uint64_t at(std::uint64_t index) const {
        const std::uint64_t block = index >> 1;
        const auto out = philox4x32_10(
            {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
             static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
            {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
        return (index & 1u) ? (std::uint64_t{out[3]} << 32 | out[2]) : (std::uint64_t{out[1]} << 32 | out[0]);
    }

    /// One draw.
    std::uint64_t next_u64() {
        const std::uint64_t block = counter_ >> 1;
        if (block != cached_block_ || !cache_valid_) {
            cache_ = philox4x32_10(
                {static_cast<std::uint32_t>(block), static_cast<std::uint32_t>(block >> 32),
                 static_cast<std::uint32_t>(stream_), static_cast<std::uint32_t>(stream_ >> 32)},
                {static_cast<std::uint32_t>(seed_), static_cast<std::uint32_t>(seed_ >> 32)});
            cached_block_ = block;
            cache_valid_ = true;
        }
        const bool odd = counter_ & 1u;
        ++counter_;
        return odd ? (std::uint64_t{cache_[3]} << 32 | cache_[2]) : (std::uint64_t{cache_[1]} << 32 | cache_[0]);
    }

    /// Uniform on [0, 1) with 53 random bits. One draw.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Uniform on [lo, hi). One draw.
    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    /// +1 or -1 with equal probability. One draw.
    int sign() { return (next_u64() >> 63) ? -1 : 1; }

    /// Standard normal via Box-Muller (cosine branch). Two draws.
    double normal() {
        const double u1 = 1.0 - uniform();  // (0, 1]
        const double u2 = uniform();
        return std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    }

    /// Two independent standard normals from one Box-Muller pair. Two draws.
    std::array<double, 2> normal_pair() {
        const double u1 = 1.0 - uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 2.0 * std::numbers::pi * u2;
        return {r * std::cos(a), r * std::sin(a)};
    }

    /// Uniform integer in [0, bound). Lemire's multiply-shift with rejection;
    /// one draw except on the rare rejection.
    std::uint64_t below(std::uint64_t bound) {
        if (bound <= 1) {
            (void)next_u64();
            return 0;
        }
        __uint128_t prod = static_cast<__uint128_t>(next_u64()) * bound;
        auto low = static_cast<std::uint64_t>(prod);
        if (low < bound) {
            const std::uint64_t threshold = (0 - bound) % bound;
            while (low < threshold) {
                prod = static_cast<__uint128_t>(next_u64()) * bound;
                low = static_cast<std::uint64_t>(prod);
            }
        }
        return static_cast<std::uint64_t>(prod >> 64);
    }

private:
    std::uint64_t seed_;
    std::uint64_t stream_;
    std::uint64_t counter_ = 0;
    std::uint64_t cached_block_ = 0;
    bool cache_valid_ = false;
    std::array<std::uint32_t, 4> cache_{};
};

}  // namespace vbal
