#ifndef DKQL_RNG_HPP
#define DKQL_RNG_HPP

#include <cmath>
#include <cstdint>
#include <limits>
#include <string_view>

namespace dkql {

/// SplitMix64: a counter-based generator. The n-th output is a bijective
/// mix of (key + n * gamma), so streams are addressable and can be split
/// into independent children by deriving new keys.
///
/// Satisfies UniformRandomBitGenerator, but the samplers below are used
/// instead of <random> distributions so that draws are identical across
/// standard library implementations.
class SplitMix64 {
public:
    using result_type = std::uint64_t;

    constexpr explicit SplitMix64(std::uint64_t key = 0) noexcept : key_(key) {}

    static constexpr result_type min() noexcept { return 0; }
    static constexpr result_type max() noexcept { return std::numeric_limits<result_type>::max(); }

    constexpr result_type operator()() noexcept {
        ++counter_;
        return mix(key_ + counter_ * kGamma);
    }

    /// Child stream `index`. Does not advance this stream.
    [[nodiscard]] constexpr SplitMix64 split(std::uint64_t index) const noexcept {
        return SplitMix64(mix(key_ ^ mix(index + kGamma)) + kGamma);
    }

    /// Child stream named by a short label ("train", "eval", ...).
    [[nodiscard]] constexpr SplitMix64 split(std::string_view label) const noexcept {
        std::uint64_t h = 0xcbf29ce484222325ULL;  // FNV-1a
        for (char c : label) {
            h ^= static_cast<unsigned char>(c);
            h *= 0x100000001b3ULL;
        }
        return split(h);
    }

    [[nodiscard]] constexpr std::uint64_t key() const noexcept { return key_; }
    [[nodiscard]] constexpr std::uint64_t counter() const noexcept { return counter_; }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() noexcept { return static_cast<double>((*this)() >> 11) * 0x1.0p-53; }

    /// Uniform on the open interval (0, 1).
    double uniform_open() noexcept {
        return (static_cast<double>((*this)() >> 11) + 0.5) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) noexcept { return lo + (hi - lo) * uniform(); }

    /// Exponential with the given mean, by inversion.
    double exponential(double mean) noexcept { return -mean * std::log(uniform_open()); }

    /// Uniform integer in [0, n). Lemire's multiply-shift, rejection-free
    /// bias is below 2^-40 for the small n used here.
    std::uint64_t below(std::uint64_t n) noexcept {
        const auto wide = static_cast<unsigned __int128>((*this)()) * n;
        return static_cast<std::uint64_t>(wide >> 64);
    }

    bool bernoulli(double p) noexcept { return uniform() < p; }

private:
    static constexpr std::uint64_t kGamma = 0x9e3779b97f4a7c15ULL;

    static constexpr std::uint64_t mix(std::uint64_t z) noexcept {
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    std::uint64_t key_;
    std::uint64_t counter_ = 0;
};

}  // namespace dkql

#endif  // DKQL_RNG_HPP
