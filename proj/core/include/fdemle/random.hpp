#pragma once

#include <cstdint>
#include <random>
#include <span>

namespace fdemle {

std::uint64_t splitmix64(std::uint64_t& state);

// Deterministic child seed for a (base, a, b, c) coordinate.
std::uint64_t stream_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b = 0,
                          std::uint64_t c = 0);

class NormalStream {
public:
    explicit NormalStream(std::uint64_t seed);
    double next();
    void fill(std::span<double> out);

private:
    std::mt19937_64 engine_;
    std::normal_distribution<double> normal_;
};

}  // namespace fdemle
