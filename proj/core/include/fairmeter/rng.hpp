#pragma once

#include <cmath>
#include <cstdint>
#include <array>

namespace fairmeter {

/**
 * Philox4x64-10 counter-based generator.
 *
 * Every stream is identified by (seed, stream). Jumping to a stream is O(1),
 * so replications draw from independent streams derived from one master seed
 * without any sequential dependence on thread scheduling:
 *
 *   key     = (seed, stream)
 *   counter = (block index, purpose, 0, 0)
 *
 * `stream` is by convention the replication index and `purpose` separates
 * independent uses inside one replication (arrivals vs. noise vs. sampling),
 * so adding draws to one purpose never shifts another.
 */
class Philox {
public:
    Philox() : Philox(0, 0, 0) {}
    Philox(std::uint64_t seed, std::uint64_t stream = 0, std::uint64_t purpose = 0)
        : key_{seed, stream}, ctr_{0, purpose, 0, 0} {}

    /// Raw 64-bit draw.
    std::uint64_t next_u64() {
        if (idx_ == 4) {
            block_ = round10(ctr_, key_);
            ++ctr_[0];
            idx_ = 0;
        }
        return block_[idx_++];
    }

    /// Uniform on (0,1]; never returns 0 so log() is always finite.
    double uniform() {
        const std::uint64_t x = next_u64();
        return (static_cast<double>(x >> 11) + 1.0) * 0x1.0p-53;
    }

    /// Uniform on [0,1).
    double uniform_co() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    double exponential(double rate) { return -std::log(uniform()) / rate; }

    /// Standard normal via Box-Muller; the sine twin is cached.
    double normal() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = uniform();
        const double u2 = uniform_co();
        const double r = std::sqrt(-2.0 * std::log(u1));
        const double a = 6.283185307179586476925286766559 * u2;
        spare_ = r * std::sin(a);
        have_spare_ = true;
        return r * std::cos(a);
    }

    double normal(double mean, double stddev) { return mean + stddev * normal(); }

    /// Uniform integer in [0, n).
    std::uint64_t below(std::uint64_t n) {
        // multiply-shift; bias is negligible for n << 2^64
        #ifdef __SIZEOF_INT128__
        return static_cast<std::uint64_t>(
            (static_cast<unsigned __int128>(next_u64()) * n) >> 64);
        #else
        return next_u64() % n;
        #endif
    }

    /// One Philox block, exposed for known-answer tests.
    static std::array<std::uint64_t, 4> round10(std::array<std::uint64_t, 4> ctr,
                                                std::array<std::uint64_t, 2> key) {
        for (int r = 0; r < 10; ++r) {
            if (r > 0) {
                key[0] += 0x9E3779B97F4A7C15ull;
                key[1] += 0xBB67AE8584CAA73Bull;
            }
            ctr = round_once(ctr, key);
        }
        return ctr;
    }

private:
    static std::array<std::uint64_t, 4> round_once(const std::array<std::uint64_t, 4>& c,
                                                   const std::array<std::uint64_t, 2>& k) {
        const auto [lo0, hi0] = mulhilo(0xD2E7470EE14C6C93ull, c[0]);
        const auto [lo1, hi1] = mulhilo(0xCA5A826395121157ull, c[2]);
        return {hi1 ^ c[1] ^ k[0], lo1, hi0 ^ c[3] ^ k[1], lo0};
    }

    static std::pair<std::uint64_t, std::uint64_t> mulhilo(std::uint64_t a, std::uint64_t b) {
        #ifdef __SIZEOF_INT128__
        const unsigned __int128 p = static_cast<unsigned __int128>(a) * b;
        return {static_cast<std::uint64_t>(p), static_cast<std::uint64_t>(p >> 64)};
        #else
        #error "128-bit multiply required"
        #endif
    }

    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 4> ctr_;
    std::array<std::uint64_t, 4> block_{};
    int idx_ = 4;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

}  // namespace fairmeter
