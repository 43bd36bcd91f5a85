#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>

namespace slidewin {

/// Philox4x32-10 counter-based generator (Salmon et al., SC'11). The 128-bit
/// counter is split into a 64-bit block index (words 0-1) and a 64-bit
/// stream id (words 2-3); the 64-bit seed forms the key. Streams with
/// different ids never overlap, which gives cheap splitting.
class Philox4x32 {
public:
    using result_type = std::uint32_t;
    using Block = std::array<std::uint32_t, 4>;
    using Key = std::array<std::uint32_t, 2>;

    explicit Philox4x32(std::uint64_t seed = 0, std::uint64_t stream = 0);

    /// The raw bijection: ten rounds applied to `ctr` under `key`.
    static Block block(Block ctr, Key key);

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }
    result_type operator()();

    /// Independent generator with the same seed and a different stream id.
    Philox4x32 split(std::uint64_t stream) const { return Philox4x32(seed_, stream); }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream() const noexcept { return stream_; }

    /// Uniform double in [0, 1) with 53 random bits.
    double uniform01();

    /// Index drawn with probability proportional to p (p need not be normalized).
    std::size_t categorical(std::span<const double> p);

private:
    std::uint64_t seed_, stream_;
    std::uint64_t index_ = 0;
    Block buffer_{};
    unsigned used_ = 4;
};

} // namespace slidewin
