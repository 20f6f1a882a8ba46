#pragma once

#include <cstdint>
#include <random>

#include "tdsr/tensor.hpp"

namespace tdsr {

// Deterministic random source. Uniform and normal variates are derived from
// the mt19937_64 stream with explicit formulas (no std distributions, whose
// output is implementation-defined), so sequences are identical across
// standard libraries and platforms.
class Rng {
public:
    explicit Rng(uint64_t seed) : eng_(seed) {}

    // Uniform in [0, 1) with 53-bit resolution.
    double uniform() { return static_cast<double>(eng_() >> 11) * 0x1.0p-53; }

    double uniform(double lo, double hi) { return lo + (hi - lo) * uniform(); }

    // Integer in [0, n), n >= 1. Modulo bias is irrelevant at toy scales but
    // avoided anyway via rejection.
    uint64_t below(uint64_t n);

    // Standard normal via Box-Muller (cached pair).
    double normal();

    Tensor normal_tensor(int h, int w, int c);
    void fill_normal(Tensor& t);

private:
    std::mt19937_64 eng_;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

// Stable seed derivation for substreams (splitmix64 finalizer).
uint64_t mix_seed(uint64_t seed, uint64_t stream);

}  // namespace tdsr
