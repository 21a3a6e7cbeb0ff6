#pragma once

#include <cstdint>
#include <limits>
#include <random>

namespace srf {

inline std::uint64_t mix64(std::uint64_t x)
{
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

// Counter-based generator: the i-th draw of (seed, stream) depends only on i.
class CounterRng {
public:
    using result_type = std::uint64_t;

    CounterRng(std::uint64_t seed, std::uint64_t stream)
        : key_(mix64(seed) ^ mix64(stream * 0xD1B54A32D192ED03ULL + 0x632BE59BD9B4E019ULL))
    {
    }

    static constexpr result_type min() { return 0; }
    static constexpr result_type max() { return std::numeric_limits<result_type>::max(); }

    result_type operator()() { return mix64(key_ + 0x9E3779B97F4A7C15ULL * ++counter_); }

    double uniform() { return double((*this)() >> 11) * 0x1.0p-53; }

    double normal() { return normal_(*this); }

    std::uint64_t counter() const { return counter_; }

private:
    std::uint64_t key_;
    std::uint64_t counter_ = 0;
    std::normal_distribution<double> normal_;
};

// Fixed stream ids so each random object is reproducible on its own.
enum Stream : std::uint64_t {
    kStreamW0 = 1,
    kStreamA0 = 2,
    kStreamTarget = 3,
    kStreamX0 = 4,
    kStreamX = 5,
    kStreamTest = 6,
};

} // namespace srf
