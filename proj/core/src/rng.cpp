#include "ecnp/rng.hpp"

#include <cmath>
#include <numbers>

namespace ecnp {

namespace {
constexpr uint64_t kGolden = 0x9E3779B97F4A7C15ULL;
}

uint64_t CounterRng::mix(uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ULL;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBULL;
    return z ^ (z >> 31);
}

CounterRng::CounterRng(uint64_t seed, uint64_t stream)
    : base_(mix(seed ^ mix(stream + kGolden))) {}

uint64_t CounterRng::next_u64() {
    ++counter_;
    return mix(base_ + counter_ * kGolden);
}

double CounterRng::uniform() {
    return static_cast<double>(next_u64() >> 11) * 0x1.0p-53;
}

double CounterRng::uniform(double lo, double hi) {
    return lo + (hi - lo) * uniform();
}

int64_t CounterRng::uniform_int(int64_t lo, int64_t hi) {
    uint64_t span = static_cast<uint64_t>(hi - lo) + 1;
    if (span == 0) return static_cast<int64_t>(next_u64());  // full 64-bit range
    uint64_t limit = UINT64_MAX - UINT64_MAX % span;
    uint64_t draw;
    do {
        draw = next_u64();
    } while (draw >= limit);
    return lo + static_cast<int64_t>(draw % span);
}

double CounterRng::gaussian() {
    if (has_spare_) {
        has_spare_ = false;
        return spare_;
    }
    double u1 = 1.0 - uniform();  // (0, 1]
    double u2 = uniform();
    double radius = std::sqrt(-2.0 * std::log(u1));
    double angle = 2.0 * std::numbers::pi * u2;
    spare_ = radius * std::sin(angle);
    has_spare_ = true;
    return radius * std::cos(angle);
}

}  // namespace ecnp
