#include "macsic/numerics.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <string>

namespace macsic {

namespace {

constexpr double kSqrt2 = 1.4142135623730951;
constexpr double kLogSqrt2Pi = 0.9189385332046727;  // ln sqrt(2*pi)

void require_finite(double x, const char* name) {
    if (!std::isfinite(x))
        throw std::invalid_argument(std::string(name) + " must be finite");
}

// Q(x) through the complementary error function; accurate until the
// result underflows around x = 37.5.
double q_erfc(double x) { return 0.5 * std::erfc(x / kSqrt2); }

// ln Q(x) for x >= 37 via the Laplace asymptotic series
// Q(x) = phi(x)/x * (1 - 1/x^2 + 3/x^4 - 15/x^6 + ...).
double log_q_asymptotic(double x) {
    static const double dfact[9] = {1.0,      -1.0,      3.0,
                                    -15.0,    105.0,     -945.0,
                                    10395.0,  -135135.0, 2027025.0};
    const double r = 1.0 / (x * x);
    double series = 0.0, rk = 1.0;
    for (int k = 0; k < 9; ++k) {
        series += dfact[k] * rk;
        rk *= r;
    }
    return -0.5 * x * x - std::log(x) - kLogSqrt2Pi + std::log(series);
}

// ln(1 - q) by the power series -sum q^i / i, truncated when a term falls
// below 1e-18 of the partial sum. Requires 0 <= q <= 1/2 so the series
// converges quickly; callers route larger q through log_gaussian_q.
double log_one_minus_series(double q) {
    if (q == 0.0) return 0.0;
    double sum = q, term = q;
    for (int i = 2; i < 256; ++i) {
        term *= q;
        const double inc = term / i;
        sum += inc;
        if (inc < 1e-18 * sum) break;
    }
    return -sum;
}

// Regularized incomplete gamma pair {P(s,x), Q(s,x)}. Series for
// x < s + 1, Lentz continued fraction otherwise.
struct GammaPQ {
    double p;
    double q;
};

GammaPQ gamma_pq(double s, double x) {
    if (x < 0.0 || s <= 0.0)
        throw std::invalid_argument("gamma_pq: bad arguments");
    if (x == 0.0) return {0.0, 1.0};
    const double lpre = s * std::log(x) - x - std::lgamma(s);
    const long max_iter = 1000000;
    if (x < s + 1.0) {
        double ap = s, sum = 1.0 / s, term = sum;
        for (long i = 0; i < max_iter; ++i) {
            ap += 1.0;
            term *= x / ap;
            sum += term;
            if (std::fabs(term) < std::fabs(sum) * 1e-17) break;
        }
        const double p = sum * std::exp(lpre);
        return {p, 1.0 - p};
    }
    const double fpmin = std::numeric_limits<double>::min() / 1e-30;
    double b = x + 1.0 - s, c = 1.0 / fpmin, d = 1.0 / b, h = d;
    for (long i = 1; i < max_iter; ++i) {
        const double an = -static_cast<double>(i) * (i - s);
        b += 2.0;
        d = an * d + b;
        if (std::fabs(d) < fpmin) d = fpmin;
        c = b + an / c;
        if (std::fabs(c) < fpmin) c = fpmin;
        d = 1.0 / d;
        const double delta = d * c;
        h *= delta;
        if (std::fabs(delta - 1.0) < 1e-17) break;
    }
    const double qq = std::exp(lpre) * h;
    return {1.0 - qq, qq};
}

// Both tails of the noncentral chi-square with 2*order dof and
// noncentrality b^2, evaluated at c^2: a Poisson(b^2/2) mixture of
// central gamma tails walked outward from the mode so each tail is
// accumulated from its numerically stable side.
GammaPQ noncentral_chi2_pq(double order, double b, double c) {
    const double half_lambda = 0.5 * b * b;
    const double x = 0.5 * c * c;
    if (x == 0.0) return {0.0, 1.0};
    if (half_lambda == 0.0) return gamma_pq(order, x);

    const long k0 = static_cast<long>(std::floor(half_lambda));
    const double log_p0 = -half_lambda + k0 * std::log(half_lambda) -
                          std::lgamma(static_cast<double>(k0) + 1.0);
    const GammaPQ g0 = gamma_pq(order + static_cast<double>(k0), x);

    // Step term t(s) = x^s e^{-x} / Gamma(s+1) links neighbouring shapes:
    // Q(s+1,x) = Q(s,x) + t(s).
    auto log_step = [&](double s) {
        return s * std::log(x) - x - std::lgamma(s + 1.0);
    };

    // Poisson weights below this cutoff are dropped; with g in [0, 1]
    // the truncation error is bounded by the dropped mass itself, and
    // the remainder is folded back in below.
    const double peak = std::exp(log_p0);
    const double cutoff = std::max(1e-20 * peak, 1e-300);

    double sum_p = 0.0, sum_q = 0.0, mass = 0.0;
    // Upward sweep (Q side grows, added terms positive).
    {
        double pk = peak;
        double gq = g0.q;
        double t = std::exp(log_step(order + static_cast<double>(k0)));
        for (long k = k0;; ++k) {
            sum_q += pk * gq;
            sum_p += pk * (1.0 - gq);
            mass += pk;
            gq += t;
            if (gq > 1.0) gq = 1.0;
            t *= x / (order + static_cast<double>(k) + 1.0);
            pk *= half_lambda / (static_cast<double>(k) + 1.0);
            if (pk < cutoff && k > k0) break;
        }
    }
    // Downward sweep (P side grows, added terms positive).
    if (k0 > 0) {
        double pk = peak * static_cast<double>(k0) / half_lambda;
        double t = std::exp(log_step(order + static_cast<double>(k0) - 1.0));
        double gp = g0.p + t;  // P(s-1,x) = P(s,x) + t(s-1)
        if (gp > 1.0) gp = 1.0;
        for (long k = k0 - 1;; --k) {
            sum_q += pk * (1.0 - gp);
            sum_p += pk * gp;
            mass += pk;
            if (k == 0 || pk < cutoff) break;
            t *= (order + static_cast<double>(k)) / x;
            gp += t;
            if (gp > 1.0) gp = 1.0;
            pk *= static_cast<double>(k) / half_lambda;
        }
    }
    // Poisson mass outside the sweeps is below 1e-14; fold the tiny
    // remainder into whichever tail dominates so p + q stays ~1.
    const double rest = std::max(0.0, 1.0 - mass);
    if (sum_q >= sum_p)
        sum_q += rest;
    else
        sum_p += rest;
    return {std::clamp(sum_p, 0.0, 1.0), std::clamp(sum_q, 0.0, 1.0)};
}

void check_marcum_envelope(double order, double b, double c) {
    if (!(order > 0.0) || !std::isfinite(order) || !(b >= 0.0) ||
        !std::isfinite(b) || !(c >= 0.0) || !std::isfinite(c))
        throw std::invalid_argument("marcum_q: order > 0 and b, c >= 0 required");
    if (order > 1e5 || b > 3e4 || c > 3e4)
        throw envelope_error(
            "marcum_q: arguments outside the supported range "
            "(order <= 1e5, b, c <= 3e4)");
}

// Symmetric tridiagonal QL with implicit shifts, accumulating only the
// first row of the eigenvector matrix (Golub-Welsch weight vector).
// diag/offdiag are overwritten; z starts as e_1.
void tridiag_ql(std::vector<double>& d, std::vector<double>& e,
                std::vector<double>& z) {
    const int n = static_cast<int>(d.size());
    if (n == 1) return;
    for (int i = 1; i < n; ++i) e[i - 1] = e[i];
    e[n - 1] = 0.0;
    for (int l = 0; l < n; ++l) {
        int iter = 0;
        int m;
        do {
            for (m = l; m < n - 1; ++m) {
                const double dd = std::fabs(d[m]) + std::fabs(d[m + 1]);
                if (std::fabs(e[m]) <= std::numeric_limits<double>::epsilon() * dd)
                    break;
            }
            if (m != l) {
                if (++iter == 50)
                    throw std::runtime_error("gauss_hermite: QL failed to converge");
                double g = (d[l + 1] - d[l]) / (2.0 * e[l]);
                double r = std::hypot(g, 1.0);
                g = d[m] - d[l] + e[l] / (g + std::copysign(r, g));
                double s = 1.0, c = 1.0, p = 0.0;
                bool underflowed = false;
                for (int i = m - 1; i >= l; --i) {
                    double f = s * e[i];
                    const double bq = c * e[i];
                    r = std::hypot(f, g);
                    e[i + 1] = r;
                    if (r == 0.0) {
                        d[i + 1] -= p;
                        e[m] = 0.0;
                        underflowed = true;
                        break;
                    }
                    s = f / r;
                    c = g / r;
                    g = d[i + 1] - p;
                    r = (d[i] - g) * s + 2.0 * c * bq;
                    p = s * r;
                    d[i + 1] = g + p;
                    g = c * r - bq;
                    f = z[i + 1];
                    z[i + 1] = s * z[i] + c * f;
                    z[i] = c * z[i] - s * f;
                }
                if (underflowed) continue;
                d[l] -= p;
                e[l] = g;
                e[m] = 0.0;
            }
        } while (m != l);
    }
}

}  // namespace

QuadratureRule::QuadratureRule(std::vector<double> nodes_,
                               std::vector<double> weights_)
    : nodes(std::move(nodes_)), weights(std::move(weights_)) {
    if (nodes.empty() || nodes.size() != weights.size())
        throw std::invalid_argument("QuadratureRule: node/weight size mismatch");
    double sum = 0.0;
    for (std::size_t i = 0; i < nodes.size(); ++i) {
        if (!std::isfinite(nodes[i]) || !(weights[i] >= 0.0))
            throw std::invalid_argument("QuadratureRule: bad node or weight");
        if (i > 0 && !(nodes[i] > nodes[i - 1]))
            throw std::invalid_argument("QuadratureRule: nodes must increase");
        sum += weights[i];
    }
    if (std::fabs(sum - 1.0) > 1e-12)
        throw std::invalid_argument("QuadratureRule: weights must sum to 1");
}

QuadratureRule gauss_hermite(int n) {
    if (n < 1 || n > 1024)
        throw std::invalid_argument("gauss_hermite: n must be in [1, 1024]");
    // Jacobi matrix of the (monic) physicists' Hermite polynomials:
    // zero diagonal, off-diagonal sqrt(j/2), total measure sqrt(pi).
    std::vector<double> d(n, 0.0), e(n, 0.0), z(n, 0.0);
    for (int j = 1; j < n; ++j) e[j] = std::sqrt(0.5 * j);
    z[0] = 1.0;
    tridiag_ql(d, e, z);

    std::vector<int> order(n);
    std::iota(order.begin(), order.end(), 0);
    std::sort(order.begin(), order.end(),
              [&](int a, int b) { return d[a] < d[b]; });

    std::vector<double> nodes(n), weights(n);
    for (int i = 0; i < n; ++i) {
        nodes[i] = d[order[i]] * kSqrt2;  // physicists' t -> Gaussian x
        weights[i] = z[order[i]] * z[order[i]];  // already normalized: sum z^2 = 1
    }
    if (n == 1) {
        nodes[0] = 0.0;
        weights[0] = 1.0;
    }
    return QuadratureRule(std::move(nodes), std::move(weights));
}

double gaussian_q(double x) {
    require_finite(x, "gaussian_q: x");
    if (x > 37.0) return std::exp(log_q_asymptotic(x));
    return q_erfc(x);
}

double log_gaussian_q(double x) {
    require_finite(x, "log_gaussian_q: x");
    if (x < 0.0) return std::log1p(-q_erfc(-x));
    if (x <= 37.0) return std::log(q_erfc(x));
    return log_q_asymptotic(x);
}

double gaussian_q_inv(double p) {
    if (!(p > 0.0) || !(p < 1.0))
        throw std::invalid_argument("gaussian_q_inv: p must be in (0, 1)");
    // Acklam-style rational approximation for Phi^-1, then Newton on
    // log Q so the far tail converges with full relative accuracy.
    static const double a[6] = {-39.69683028665376, 220.9460984245205,
                                -275.9285104469687, 138.3577518672690,
                                -30.66479806614716, 2.506628277459239};
    static const double bb[5] = {-54.47609879822406, 161.5858368580409,
                                 -155.6989798598866, 66.80131188771972,
                                 -13.28068155288572};
    static const double cc[6] = {-7.784894002430293e-03, -3.223964580411365e-01,
                                 -2.400758277161838, -2.549732539343734,
                                 4.374664141464968, 2.938163982698783};
    static const double dd[4] = {7.784695709041462e-03, 3.224671290700398e-01,
                                 2.445134137142996, 3.754408661907416};
    // The rational fits approximate Phi^-1(p); Q^-1(p) = -Phi^-1(p).
    const double pl = 0.02425;
    double x;
    if (p < pl) {
        const double q = std::sqrt(-2.0 * std::log(p));
        x = -((((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) /
              ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0));
    } else if (p > 1.0 - pl) {
        const double q = std::sqrt(-2.0 * std::log(1.0 - p));
        x = (((((cc[0] * q + cc[1]) * q + cc[2]) * q + cc[3]) * q + cc[4]) * q + cc[5]) /
            ((((dd[0] * q + dd[1]) * q + dd[2]) * q + dd[3]) * q + 1.0);
    } else {
        const double q = p - 0.5, r = q * q;
        x = -(((((a[0] * r + a[1]) * r + a[2]) * r + a[3]) * r + a[4]) * r + a[5]) * q /
            (((((bb[0] * r + bb[1]) * r + bb[2]) * r + bb[3]) * r + bb[4]) * r + 1.0);
    }
    const double target = std::log(p);
    for (int it = 0; it < 60; ++it) {
        const double lq = log_gaussian_q(x);
        // d/dx log Q = -phi/Q
        const double ratio = std::exp(-0.5 * x * x - kLogSqrt2Pi - lq);
        const double step = (lq - target) / ratio;
        x += step;
        if (std::fabs(step) < 1e-15 * (1.0 + std::fabs(x))) break;
    }
    return x;
}

double log_q_pow(double x, double a) {
    require_finite(x, "q_pow: x");
    if (!(a >= 0.0) || !std::isfinite(a))
        throw std::invalid_argument("q_pow: a must be finite and >= 0");
    if (a == 0.0) return 0.0;
    const double lq = (x <= 0.0) ? log_one_minus_series(q_erfc(-x))
                                 : log_gaussian_q(x);
    return a * lq;
}

long double log_q_pow_ld(double x, long double a) {
    require_finite(x, "q_pow: x");
    if (!(a >= 0.0L))
        throw std::invalid_argument("q_pow: a must be >= 0");
    if (a == 0.0L) return 0.0L;
    const double lq = (x <= 0.0) ? log_one_minus_series(q_erfc(-x))
                                 : log_gaussian_q(x);
    return a * static_cast<long double>(lq);
}

double q_pow(double x, double a) {
    const double lp = log_q_pow(x, a);
    if (lp < -746.0) return 0.0;
    return std::min(1.0, std::exp(lp));
}

double marcum_q(double order, double b, double c) {
    check_marcum_envelope(order, b, c);
    return noncentral_chi2_pq(order, b, c).q;
}

double marcum_p(double order, double b, double c) {
    check_marcum_envelope(order, b, c);
    return noncentral_chi2_pq(order, b, c).p;
}

double binary_entropy(double p) {
    if (!(p >= 0.0) || !(p <= 1.0))
        throw std::invalid_argument("binary_entropy: p must be in [0, 1]");
    double h = 0.0;
    if (p > 0.0) h -= p * std::log2(p);
    if (p < 1.0) h -= (1.0 - p) * std::log2(1.0 - p);
    return h;
}

}  // namespace macsic
