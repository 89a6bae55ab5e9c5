#pragma once

#include <cstdint>

namespace ecnp {

/// Counter-based pseudo-random generator.
///
/// Each (seed, stream) pair defines an independent sequence; the i-th draw is
/// a pure function of (seed, stream, i), so streams can be consumed in any
/// order or in parallel without changing the values they produce. The
/// construction is the splitmix64 finalizer applied to a per-stream base
/// advanced by the 64-bit golden-ratio increment:
///
///   base       = mix(seed ^ mix(stream + GOLDEN))
///   draw(i)    = mix(base + (i + 1) * GOLDEN)
///   mix(z)     = splitmix64 finalizer (Steele, Lea, Flood 2014)
class CounterRng {
public:
    CounterRng(uint64_t seed, uint64_t stream);

    uint64_t next_u64();
    /// Uniform double in [0, 1), 53 random mantissa bits.
    double uniform();
    double uniform(double lo, double hi);
    /// Uniform integer in [lo, hi], both inclusive; unbiased via rejection.
    int64_t uniform_int(int64_t lo, int64_t hi);
    /// Standard normal via Box-Muller; draws two uniforms per pair and
    /// caches the second deviate.
    double gaussian();

    static uint64_t mix(uint64_t z);

private:
    uint64_t base_;
    uint64_t counter_ = 0;
    bool has_spare_ = false;
    double spare_ = 0.0;
};

}  // namespace ecnp
