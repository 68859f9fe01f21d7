#include "fdemle/random.hpp"

namespace fdemle {

std::uint64_t splitmix64(std::uint64_t& state) {
    std::uint64_t z = (state += 0x9e3779b97f4a7c15ULL);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::uint64_t stream_seed(std::uint64_t base, std::uint64_t a, std::uint64_t b, std::uint64_t c) {
    std::uint64_t state = base;
    std::uint64_t h = splitmix64(state);
    for (std::uint64_t part : {a, b, c}) {
        state = h ^ (part + 0x632be59bd9b4e019ULL);
        h = splitmix64(state);
    }
    return h;
}

NormalStream::NormalStream(std::uint64_t seed) : engine_(seed), normal_(0.0, 1.0) {}

double NormalStream::next() { return normal_(engine_); }

void NormalStream::fill(std::span<double> out) {
    for (double& x : out) x = normal_(engine_);
}

}  // namespace fdemle
