#include "skypack/rng.hpp"

#include <cmath>
#include <numbers>

namespace skypack {

std::uint64_t splitmix64(std::uint64_t x)
{
    x += 0x9e3779b97f4a7c15ULL;
    x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
    x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
    return x ^ (x >> 31);
}

std::uint64_t fnv1a(std::string_view s)
{
    std::uint64_t h = 0xcbf29ce484222325ULL;
    for (unsigned char c : s) {
        h ^= c;
        h *= 0x100000001b3ULL;
    }
    return h;
}

RandomStream RandomStream::derive(std::uint64_t seed, std::string_view name)
{
    return RandomStream(splitmix64(splitmix64(seed) ^ fnv1a(name)));
}

double RandomStream::uniform()
{
    return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
}

double RandomStream::normal(double mean, double sigma)
{
    // Box-Muller, one variate per call.
    double u1 = uniform();
    while (u1 <= 0.0)
        u1 = uniform();
    const double u2 = uniform();
    const double z = std::sqrt(-2.0 * std::log(u1)) * std::cos(2.0 * std::numbers::pi * u2);
    return mean + sigma * z;
}

std::uint64_t RandomStream::below(std::uint64_t n)
{
    if (n == 0)
        return 0;
    const std::uint64_t limit = UINT64_MAX - UINT64_MAX % n;
    std::uint64_t v = engine_();
    while (v >= limit)
        v = engine_();
    return v % n;
}

} // namespace skypack
