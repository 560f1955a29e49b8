#ifndef STEPINF_RNG_HPP
#define STEPINF_RNG_HPP

#include <cmath>
#include <cstdint>

namespace stepinf {

/// Philox4x32-10 counter-based generator (Salmon et al. constants).
/// Streams are addressed by (seed, stream) and advance a 64-bit block
/// counter, so per-replication streams derived from one master seed are
/// independent and the draw sequence does not depend on scheduling order.
/// The algorithm is fixed; identical seeds give identical output on any
/// platform with IEEE doubles.
class Philox {
public:
    Philox(std::uint64_t seed, std::uint64_t stream) : ctr_hi_(stream) {
        key_[0] = static_cast<std::uint32_t>(seed);
        key_[1] = static_cast<std::uint32_t>(seed >> 32);
    }

    std::uint32_t next_u32() {
        if (have_ == 0) {
            fill_block();
            ++block_;
        }
        return out_[4 - have_--];
    }

    std::uint64_t next_u64() {
        std::uint64_t hi = next_u32();
        return (hi << 32) | next_u32();
    }

    /// Uniform double in [0, 1), 53 random bits.
    double uniform() { return static_cast<double>(next_u64() >> 11) * 0x1.0p-53; }

    /// Standard normal via Box-Muller; pairs are cached.
    double normal() {
        if (have_normal_) {
            have_normal_ = false;
            return cached_normal_;
        }
        double u1 = static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;  // (0, 1]
        double u2 = uniform();
        double rad = std::sqrt(-2.0 * std::log(u1));
        double ang = 6.283185307179586476925286766559 * u2;
        cached_normal_ = rad * std::sin(ang);
        have_normal_ = true;
        return rad * std::cos(ang);
    }

    /// Uniform integer in [0, bound) by rejection; bound >= 1.
    std::uint64_t below(std::uint64_t bound) {
        std::uint64_t threshold = (~bound + 1) % bound;  // 2^64 mod bound
        for (;;) {
            std::uint64_t v = next_u64();
            if (v >= threshold) return v % bound;
        }
    }

private:
    static std::uint32_t mulhi(std::uint32_t a, std::uint32_t b, std::uint32_t& lo) {
        std::uint64_t prod = static_cast<std::uint64_t>(a) * b;
        lo = static_cast<std::uint32_t>(prod);
        return static_cast<std::uint32_t>(prod >> 32);
    }

    void fill_block() {
        std::uint32_t c0 = static_cast<std::uint32_t>(block_);
        std::uint32_t c1 = static_cast<std::uint32_t>(block_ >> 32);
        std::uint32_t c2 = static_cast<std::uint32_t>(ctr_hi_);
        std::uint32_t c3 = static_cast<std::uint32_t>(ctr_hi_ >> 32);
        std::uint32_t k0 = key_[0], k1 = key_[1];
        for (int round = 0; round < 10; ++round) {
            std::uint32_t lo0, lo1;
            std::uint32_t hi0 = mulhi(0xD2511F53u, c0, lo0);
            std::uint32_t hi1 = mulhi(0xCD9E8D57u, c2, lo1);
            std::uint32_t n0 = hi1 ^ c1 ^ k0;
            std::uint32_t n1 = lo1;
            std::uint32_t n2 = hi0 ^ c3 ^ k1;
            std::uint32_t n3 = lo0;
            c0 = n0; c1 = n1; c2 = n2; c3 = n3;
            k0 += 0x9E3779B9u;
            k1 += 0xBB67AE85u;
        }
        out_[0] = c0; out_[1] = c1; out_[2] = c2; out_[3] = c3;
        have_ = 4;
    }

    std::uint32_t key_[2];
    std::uint64_t ctr_hi_ = 0;
    std::uint64_t block_ = 0;
    std::uint32_t out_[4] = {};
    int have_ = 0;
    bool have_normal_ = false;
    double cached_normal_ = 0.0;
};

} // namespace stepinf

#endif
