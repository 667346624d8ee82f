#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace ssde {

/// SplitMix64 finalizer (Steele, Lea, Flood 2014):
///   z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9
///   z = (z ^ (z >> 27)) * 0x94d049bb133111eb
///   z ^= z >> 31
std::uint64_t splitmix64(std::uint64_t z) noexcept;

/// Seed of substream j: splitmix64(master ^ (j * 0x9e3779b97f4a7c15)).
std::uint64_t substream_seed(std::uint64_t master, std::uint64_t j) noexcept;

/// Standard normal quantile. Acklam's rational approximation refined by one
/// Halley step against erfc, accurate to a few ulps on (0, 1).
double normal_quantile(double u);

/// Standard normals by inversion of 53-bit uniforms drawn from mt19937_64.
/// Both pieces are fully specified, so a given seed yields the same numbers
/// on every conforming platform.
class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed) : engine_(seed) {}

    double uniform_open();
    double next() { return normal_quantile(uniform_open()); }
    void fill(std::span<double> out) {
        for (auto& v : out) v = next();
    }

private:
    std::mt19937_64 engine_;
};

} // namespace ssde
