#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace nurf {

inline std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

/// FNV-1a; stable across platforms and runs (unlike std::hash).
inline std::uint64_t stable_hash(std::string_view text)
{
    std::uint64_t h = 0xCBF29CE484222325ULL;
    for (unsigned char ch : text) {
        h ^= ch;
        h *= 0x100000001B3ULL;
    }
    return h;
}

inline std::uint64_t hash_combine(std::uint64_t a, std::uint64_t b)
{
    return splitmix64(a ^ (splitmix64(b) + 0x9E3779B97F4A7C15ULL + (a << 6) + (a >> 2)));
}

/// Seedable random stream. Equal (seed, stream_id) pairs reproduce identical
/// draws; sub-streams derive fresh ids without touching the parent state.
class RngStream {
  public:
    using result_type = std::mt19937_64::result_type;

    RngStream(std::uint64_t seed, std::uint64_t stream_id) : seed_(seed), stream_id_(stream_id)
    {
        std::seed_seq seq{static_cast<std::uint32_t>(splitmix64(seed)),
                          static_cast<std::uint32_t>(splitmix64(seed) >> 32),
                          static_cast<std::uint32_t>(splitmix64(stream_id ^ 0xA5A5A5A5ULL)),
                          static_cast<std::uint32_t>(splitmix64(stream_id ^ 0xA5A5A5A5ULL) >> 32)};
        engine_.seed(seq);
    }

    std::uint64_t seed() const noexcept { return seed_; }
    std::uint64_t stream_id() const noexcept { return stream_id_; }

    RngStream substream(std::uint64_t tag) const { return RngStream(seed_, hash_combine(stream_id_, tag)); }

    static constexpr result_type min() { return std::mt19937_64::min(); }
    static constexpr result_type max() { return std::mt19937_64::max(); }
    result_type operator()() { return engine_(); }

    /// Uniform on [0, 1) with 53 random bits.
    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    double normal() { return normal_(engine_); }

    int sign() { return (engine_() >> 63) != 0U ? -1 : 1; }

  private:
    std::uint64_t seed_;
    std::uint64_t stream_id_;
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

} // namespace nurf
