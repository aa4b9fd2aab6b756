#ifndef CRYOREDUCE_RNG_HPP
#define CRYOREDUCE_RNG_HPP

#include <cmath>
#include <cstdint>
#include <numbers>
#include <random>

namespace cryoreduce {

// mt19937_64 with hand-rolled variate transforms. The standard library's
// distribution objects are implementation-defined, so seeded outputs drawn
// through them would not be stable across toolchains; these are.
class Rng {
public:
    explicit Rng(std::uint64_t seed) : engine_(seed) {}

    std::uint64_t next_u64() { return engine_(); }

    // Uniform in [0, 1) with 53 random bits.
    double uniform() {
        return static_cast<double>(engine_() >> 11) * 0x1.0p-53;
    }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    std::uint64_t uniform_index(std::uint64_t n) {  // [0, n)
        return n == 0 ? 0 : engine_() % n;
    }

    // Box-Muller; one value per call, the companion variate is discarded to
    // keep the draw sequence position-independent.
    double normal(double mean = 0.0, double stddev = 1.0) {
        double u1 = uniform();
        while (u1 <= 0.0) u1 = uniform();
        const double u2 = uniform();
        const double r = std::sqrt(-2.0 * std::log(u1));
        return mean + stddev * r * std::cos(2.0 * std::numbers::pi * u2);
    }

private:
    std::mt19937_64 engine_;
};

}  // namespace cryoreduce

#endif
