#pragma once

#include <array>
#include <cmath>
#include <cstdint>

namespace ehsim {

// Philox4x64-10 counter-based generator (Salmon et al., "Parallel random
// numbers: as easy as 1, 2, 3"). An output block is a pure function of
// (key, counter), so streams with distinct ids never share a block and
// replications can be fanned out across workers without coordination.
namespace philox {

inline constexpr std::uint64_t kMul0 = 0xD2E7470EE14C6C93ull;
inline constexpr std::uint64_t kMul1 = 0xCA5A826395121157ull;
inline constexpr std::uint64_t kWeyl0 = 0x9E3779B97F4A7C15ull;
inline constexpr std::uint64_t kWeyl1 = 0xBB67AE8584CAA73Bull;

inline void mulhilo(std::uint64_t a, std::uint64_t b, std::uint64_t& hi, std::uint64_t& lo) {
    const unsigned __int128 prod = static_cast<unsigned __int128>(a) * b;
    hi = static_cast<std::uint64_t>(prod >> 64);
    lo = static_cast<std::uint64_t>(prod);
}

inline std::array<std::uint64_t, 4> block(std::array<std::uint64_t, 4> ctr,
                                          std::array<std::uint64_t, 2> key) {
    for (int round = 0; round < 10; ++round) {
        std::uint64_t hi0, lo0, hi1, lo1;
        mulhilo(kMul0, ctr[0], hi0, lo0);
        mulhilo(kMul1, ctr[2], hi1, lo1);
        ctr = {hi1 ^ ctr[1] ^ key[0], lo1, hi0 ^ ctr[3] ^ key[1], lo0};
        key[0] += kWeyl0;
        key[1] += kWeyl1;
    }
    return ctr;
}

} // namespace philox

// One logical random stream. Equal (seed, stream) pairs reproduce the same
// sequence bit for bit; distinct stream ids occupy disjoint counter blocks.
// A stream is single-owner mutable state: one per worker, never shared.
class RngStream {
  public:
    RngStream(std::uint64_t seed, std::uint64_t stream)
        : key_{seed, stream}, block_index_(0), buffer_pos_(4) {}

    std::uint64_t seed() const { return key_[0]; }
    std::uint64_t stream() const { return key_[1]; }

    std::uint64_t next_u64() {
        if (buffer_pos_ == 4) {
            buffer_ = philox::block({block_index_, 0, 0, 0}, key_);
            ++block_index_;
            buffer_pos_ = 0;
        }
        return buffer_[buffer_pos_++];
    }

    // Uniform on (0, 1]: never returns 0, so log() is always finite.
    double next_unit() {
        return static_cast<double>((next_u64() >> 11) + 1) * 0x1.0p-53;
    }

    // Inverse-CDF exponential with the given rate (mean 1/rate).
    double next_exponential(double rate) {
        return -std::log(next_unit()) / rate;
    }

  private:
    std::array<std::uint64_t, 2> key_;
    std::array<std::uint64_t, 4> buffer_{};
    std::uint64_t block_index_;
    int buffer_pos_;
};

} // namespace ehsim
