/**
 * @file rng.hpp
 * @brief Counter-addressable SplitMix64 streams.
 *
 * Draw number i of a stream is mix(key + (i + 1) * golden), i.e. exactly the
 * i-th output of a SplitMix64 generator seeded with `key`. Any draw can be
 * produced without generating the ones before it, so chunked or parallel
 * sampling reproduces the sequential stream.
 */
#pragma once

#include <cstdint>
#include <string_view>

namespace drm {

inline constexpr std::string_view kRngAlgorithm = "splitmix64-counter";

inline constexpr std::uint64_t splitmix64_mix(std::uint64_t z)
{
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

class CounterRng {
public:
    static constexpr std::uint64_t kGolden = 0x9e3779b97f4a7c15ULL;

    explicit constexpr CounterRng(std::uint64_t key) : key_(key) {}

    /// Independent child stream; `tag` distinguishes purposes (domain, boundary, init...).
    constexpr CounterRng derive(std::uint64_t tag) const
    {
        return CounterRng(splitmix64_mix(key_ ^ splitmix64_mix(tag + kGolden)));
    }

    constexpr std::uint64_t bits(std::uint64_t counter) const
    {
        return splitmix64_mix(key_ + (counter + 1) * kGolden);
    }

    /// Uniform on the open interval (0, 1).
    constexpr double uniform(std::uint64_t counter) const
    {
        return (static_cast<double>(bits(counter) >> 11) + 0.5) * 0x1.0p-53;
    }

    /// Uniform integer in [0, n) by rejection-free multiply-shift (bias < 2^-32 for n < 2^32).
    std::uint64_t below(std::uint64_t counter, std::uint64_t n) const
    {
        const unsigned __int128 prod = static_cast<unsigned __int128>(bits(counter)) * n;
        return static_cast<std::uint64_t>(prod >> 64);
    }

    constexpr std::uint64_t key() const { return key_; }

private:
    std::uint64_t key_;
};

/// Stream tags used across the library.
namespace stream {
inline constexpr std::uint64_t domain = 1;
inline constexpr std::uint64_t boundary = 2;
inline constexpr std::uint64_t init = 3;
inline constexpr std::uint64_t batch = 4;
inline constexpr std::uint64_t quadrature = 5;
inline constexpr std::uint64_t probe = 6;
}  // namespace stream

}  // namespace drm
