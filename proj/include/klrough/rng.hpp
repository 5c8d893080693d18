#pragma once

// Counter-based substreams: every Monte Carlo sample owns an engine seeded from
// (master seed, sample index), so results do not depend on how samples are scheduled.
//
//   stream_seed(master, index) = splitmix64(master + 0x9E3779B97F4A7C15 * (index + 1))
//
// The engine is std::mt19937_64 and normals come from std::normal_distribution<double>.

#include <cstdint>
#include <random>

namespace klrough {

inline std::uint64_t splitmix64(std::uint64_t x) {
    x += 0x9E3779B97F4A7C15ULL;
    x = (x ^ (x >> 30)) * 0xBF58476D1CE4E5B9ULL;
    x = (x ^ (x >> 27)) * 0x94D049BB133111EBULL;
    return x ^ (x >> 31);
}

inline std::uint64_t stream_seed(std::uint64_t master, std::uint64_t index) {
    return splitmix64(master + 0x9E3779B97F4A7C15ULL * (index + 1));
}

class NormalStream {
public:
    NormalStream(std::uint64_t master, std::uint64_t index) : engine_(stream_seed(master, index)) {}
    double operator()() { return normal_(engine_); }
    std::mt19937_64& engine() { return engine_; }

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_{0.0, 1.0};
};

}  // namespace klrough
