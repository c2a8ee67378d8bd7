#pragma once

#include <cstddef>
#include <vector>

#include "macsic/errors.hpp"

namespace macsic {

/// Quadrature rule for the standard Gaussian measure
/// Dx = exp(-x^2/2)/sqrt(2*pi) dx. Nodes are strictly increasing and the
/// weights sum to one, so integrate() of the constant 1 returns 1 exactly
/// up to rounding.
struct QuadratureRule {
    std::vector<double> nodes;
    std::vector<double> weights;

    QuadratureRule(std::vector<double> nodes_, std::vector<double> weights_);

    std::size_t size() const { return nodes.size(); }

    template <typename F>
    double integrate(F&& f) const {
        double acc = 0.0;
        for (std::size_t i = 0; i < nodes.size(); ++i)
            acc += weights[i] * f(nodes[i]);
        return acc;
    }
};

/// Gauss-Hermite rule with n points, rescaled from the physicists'
/// convention (weight exp(-t^2)) to the Gaussian measure Dx: nodes scale
/// by sqrt(2), weights by 1/sqrt(pi). Exact for polynomials of degree
/// <= 2n-1 under Dx. 1 <= n <= 1024.
QuadratureRule gauss_hermite(int n);

/// Tail of the standard normal, Q(x) = Pr{Z > x}. Computed through erfc,
/// relatively accurate deep into the tail (down to x ~ 38 where the
/// result goes subnormal).
double gaussian_q(double x);

/// log Q(x), valid for any finite x including far tails where Q(x)
/// underflows. Uses log1p for x < 0, the erfc route for moderate x and an
/// asymptotic expansion beyond x = 37.
double log_gaussian_q(double x);

/// Inverse of gaussian_q on (0, 1). Rational initial guess refined by
/// Newton steps on log Q, so subnormal p (e.g. 2^-1024) stays accurate.
double gaussian_q_inv(double p);

/// Q(x)^a for a >= 0 without the catastrophic rounding of pow() when
/// Q(x) is within one ulp of 1. For x <= 0 the logarithm of the base is
/// evaluated by the series ln(1-q) = -sum_{i>=1} q^i/i with q = Q(-x),
/// truncated once a term drops below 1e-18 of the partial sum.
double q_pow(double x, double a);

/// log of q_pow; agrees with ln(q_pow(x, a)) wherever the latter is
/// representable and keeps going where it is not.
double log_q_pow(double x, double a);

/// Same as log_q_pow but with an extended-precision exponent, for
/// exponents like 2^K - 1 with K up to 1024 that overflow double.
long double log_q_pow_ld(double x, long double a);

/// Generalized Marcum Q-function Q_order(b, c), evaluated as the
/// survival function of a noncentral chi-square with 2*order degrees of
/// freedom and noncentrality b^2 at threshold c^2. Validation-scale
/// kernel: order <= 1e5 and b, c <= 3e4, beyond which an envelope_error
/// is thrown.
double marcum_q(double order, double b, double c);

/// Lower tail companion of marcum_q, 1 - Q_order(b, c), computed
/// directly so it stays relatively accurate when small.
double marcum_p(double order, double b, double c);

/// Binary entropy in bits, with 0*log(0) := 0.
double binary_entropy(double p);

}  // namespace macsic
