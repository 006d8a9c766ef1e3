#pragma once

#include <cstdint>

namespace fwdsat {

// SplitMix64 stream. Used for every seeded draw in the library so that
// results are identical across platforms and standard-library versions.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : state_(seed) {}

    std::uint64_t next() {
        std::uint64_t z = (state_ += 0x9e3779b97f4a7c15ULL);
        z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
        z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
        return z ^ (z >> 31);
    }

    // Uniform in [0, 1) with 53 bits of randomness.
    double uniform01() { return static_cast<double>(next() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform01(); }

    // Derive an independent stream, e.g. one per batch element.
    static std::uint64_t derive(std::uint64_t seed, std::uint64_t index) {
        Rng r(seed ^ (0xd1b54a32d192ed03ULL * (index + 1)));
        return r.next();
    }

private:
    std::uint64_t state_;
};

// Van der Corput radical inverse; bases 2,3,5,... give a Halton sequence.
inline double halton(std::uint64_t index, std::uint32_t base) {
    double f = 1.0;
    double r = 0.0;
    std::uint64_t i = index + 1; // skip the all-zero first element
    while (i > 0) {
        f /= static_cast<double>(base);
        r += f * static_cast<double>(i % base);
        i /= base;
    }
    return r;
}

} // namespace fwdsat
