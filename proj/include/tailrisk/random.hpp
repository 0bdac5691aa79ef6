#pragma once

#include <array>
#include <cstdint>

namespace tailrisk {

/// Philox4x32-10 counter-based generator: a keyed bijection of a 128-bit
/// counter. Same algorithm and constants as std::philox4x32 (C++26).
struct Philox4x32 {
    using Counter = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    static Counter block(Counter c, Key k) {
        for (int round = 0; round < 10; ++round) {
            const std::uint64_t p0 = std::uint64_t{0xD2511F53u} * c[0];
            const std::uint64_t p1 = std::uint64_t{0xCD9E8D57u} * c[2];
            c = {static_cast<std::uint32_t>(p1 >> 32) ^ c[1] ^ k[0], static_cast<std::uint32_t>(p1),
                 static_cast<std::uint32_t>(p0 >> 32) ^ c[3] ^ k[1], static_cast<std::uint32_t>(p0)};
            k[0] += 0x9E3779B9u;
            k[1] += 0xBB67AE85u;
        }
        return c;
    }
};

/// Seedable uniform stream. Every sampler in the library takes one of these
/// explicitly; there is no global generator.
///
/// Stream (seed, index) keys Philox with the seed and puts the index in the
/// high half of the counter, so any substream is available in O(1) and
/// results never depend on how work is split over threads.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : RandomStream(seed, 0) {}

    RandomStream(std::uint64_t seed, std::uint64_t index)
        : key_{static_cast<std::uint32_t>(seed), static_cast<std::uint32_t>(seed >> 32)},
          index_{static_cast<std::uint32_t>(index), static_cast<std::uint32_t>(index >> 32)} {}

    /// Uniform on the open interval (0, 1), 53-bit resolution.
    double uniform() { return (static_cast<double>(bits() >> 11) + 0.5) * 0x1.0p-53; }

    std::uint64_t bits() {
        if (used_ == 2) {
            refill();
        }
        return buffer_[used_++];
    }

private:
    void refill() {
        const auto out = Philox4x32::block({static_cast<std::uint32_t>(counter_), static_cast<std::uint32_t>(counter_ >> 32),
                                            index_[0], index_[1]},
                                           key_);
        ++counter_;
        buffer_[0] = (std::uint64_t{out[1]} << 32) | out[0];
        buffer_[1] = (std::uint64_t{out[3]} << 32) | out[2];
        used_ = 0;
    }

    Philox4x32::Key key_;
    std::array<std::uint32_t, 2> index_;
    std::uint64_t counter_ = 0;
    std::array<std::uint64_t, 2> buffer_{};
    int used_ = 2;
};

}  // namespace tailrisk
