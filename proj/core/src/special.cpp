#include "ecnp/special.hpp"

#include <cmath>

#include "ecnp/error.hpp"

namespace ecnp {
namespace {

// Lanczos coefficients for g = 7, n = 9.
constexpr double kLanczosG = 7.0;
constexpr double kLanczos[9] = {
    0.99999999999980993,
    676.5203681218851,
    -1259.1392167224028,
    771.32342877765313,
    -176.61502916214059,
    12.507343278686905,
    -0.13857109526572012,
    9.9843695780195716e-6,
    1.5056327351493116e-7,
};

constexpr double kHalfLogTwoPi = 0.91893853320467274178;  // log(2*pi)/2

// Valid for x >= 0.5.
double lgamma_core(double x) {
    const double z = x - 1.0;
    double a = kLanczos[0];
    for (int i = 1; i < 9; ++i) {
        a += kLanczos[i] / (z + static_cast<double>(i));
    }
    const double t = z + kLanczosG + 0.5;
    return kHalfLogTwoPi + (z + 0.5) * std::log(t) - t + std::log(a);
}

}  // namespace

double lgamma_pos(double x) {
    if (!(x > 0.0)) {
        raise(Error::Kind::DomainError, "lgamma_pos requires x > 0");
    }
    if (x < 0.5) {
        // Reflection: log Gamma(x) = log(pi / sin(pi x)) - log Gamma(1 - x).
        return std::log(M_PI / std::sin(M_PI * x)) - lgamma_core(1.0 - x);
    }
    return lgamma_core(x);
}

double digamma_pos(double x) {
    if (!(x > 0.0)) {
        raise(Error::Kind::DomainError, "digamma_pos requires x > 0");
    }
    double acc = 0.0;
    while (x < 6.0) {
        acc -= 1.0 / x;
        x += 1.0;
    }
    // Asymptotic series: psi(x) ~ ln x - 1/(2x) - sum_k B_{2k} / (2k x^{2k}).
    const double inv = 1.0 / x;
    const double inv2 = inv * inv;
    const double series =
        std::log(x) - 0.5 * inv -
        inv2 * (1.0 / 12.0 -
                inv2 * (1.0 / 120.0 -
                        inv2 * (1.0 / 252.0 -
                                inv2 * (1.0 / 240.0 -
                                        inv2 * (1.0 / 132.0 -
                                                inv2 * (691.0 / 32760.0 -
                                                        inv2 / 12.0))))));
    return acc + series;
}

double softplus(double x) {
    if (x > 30.0) return x;
    if (x < -30.0) return std::exp(x);
    return std::log1p(std::exp(x));
}

double sigmoid(double x) {
    if (x >= 0.0) {
        return 1.0 / (1.0 + std::exp(-x));
    }
    const double e = std::exp(x);
    return e / (1.0 + e);
}

}  // namespace ecnp
