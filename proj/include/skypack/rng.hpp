#pragma once

#include <cstdint>
#include <random>
#include <string_view>

namespace skypack {

/// Seeded random stream. Only the raw mt19937_64 output is used (distributions are
/// implemented here) so draws are identical across standard library vendors.
class RandomStream {
public:
    explicit RandomStream(std::uint64_t seed) : engine_(seed) {}

    /// Independent substream keyed by name, so adding a draw site never shifts another.
    static RandomStream derive(std::uint64_t seed, std::string_view name);

    std::uint64_t next_u64() { return engine_(); }
    double uniform();
    double normal(double mean, double sigma);
    bool bernoulli(double p) { return uniform() < p; }
    std::uint64_t below(std::uint64_t n);

private:
    std::mt19937_64 engine_;
};

std::uint64_t splitmix64(std::uint64_t x);
std::uint64_t fnv1a(std::string_view s);

} // namespace skypack
