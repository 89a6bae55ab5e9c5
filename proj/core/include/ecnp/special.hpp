#pragma once

namespace ecnp {

/// log Γ(x) for x > 0 via the Lanczos approximation (g = 7, 9 coefficients);
/// absolute error below 1e-10 on (0, 100). Raises DomainError for x <= 0.
double lgamma_pos(double x);

/// Digamma ψ(x) for x > 0: recurrence ψ(x) = ψ(x+1) - 1/x up to x >= 6,
/// then the asymptotic series. Raises DomainError for x <= 0.
double digamma_pos(double x);

/// log(1 + e^x), overflow-safe.
double softplus(double x);

/// Logistic sigmoid, the derivative of softplus.
double sigmoid(double x);

}  // namespace ecnp
