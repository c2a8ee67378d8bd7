#include "macsic/asymptotic.hpp"

#include <cmath>
#include <stdexcept>

namespace macsic {

namespace {

void require_snr(double s) {
    if (!(s >= 0.0) || !std::isfinite(s))
        throw std::invalid_argument("effective_snr must be finite and >= 0");
}

// exp of a long-double log-probability, clamped into [0, 1].
double exp_clamped(long double lp) {
    if (lp >= 0.0L) return 1.0;
    if (lp < -746.0L) return 0.0;
    return std::exp(static_cast<double>(lp));
}

// -expm1 of a long-double log-probability: 1 - e^lp without cancellation.
double one_minus_exp(long double lp) {
    if (lp >= 0.0L) return 0.0;
    if (lp < -746.0L) return 1.0;
    return -std::expm1(static_cast<double>(lp));
}

// log of 2^K - 1.
double log_competing(int bits) {
    return bits * M_LN2 + std::log1p(-std::exp2(-static_cast<double>(bits)));
}

// log F(x): posterior odds against error given the largest coordinate x,
// at effective SNR s. All probability factors kept in the log domain.
double log_posterior_odds(int bits, double s, double x) {
    const double rs = std::sqrt(s);
    return log_gaussian_q(-x) - 0.5 * (x - rs) * (x - rs) -
           log_gaussian_q(rs - x) + 0.5 * x * x - log_competing(bits);
}

double sigmoid_of_minus(double lf) {
    // 1 / (1 + e^lf), stable for any lf
    if (lf > 36.0) return std::exp(-lf);
    return 1.0 / (1.0 + std::exp(lf));
}

}  // namespace

CodeSpec::CodeSpec(int bits_, double dims_) : bits(bits_), dims(dims_) {
    if (bits < 0 || bits > 1024)
        throw std::invalid_argument("CodeSpec: bits must be in [0, 1024]");
    if (!(dims > 0.0) || !std::isfinite(dims))
        throw std::invalid_argument("CodeSpec: dims must be finite and > 0");
}

long double CodeSpec::competing() const {
    return std::exp2(static_cast<long double>(bits)) - 1.0L;
}

double block_error_prob(const CodeSpec& code, double effective_snr,
                        const QuadratureRule& rule) {
    require_snr(effective_snr);
    if (code.bits == 0) return 0.0;
    const long double a = code.competing();
    const double rs = std::sqrt(effective_snr);
    double p = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const long double lq = log_q_pow_ld(rule.nodes[i] - rs, a);
        p += rule.weights[i] * one_minus_exp(lq);
    }
    return std::min(p, 1.0);
}

double posterior_error_prob(const CodeSpec& code, double effective_snr,
                            double x) {
    require_snr(effective_snr);
    if (code.bits == 0)
        throw std::invalid_argument(
            "posterior_error_prob: undefined for K = 0 (no competing codeword)");
    if (!std::isfinite(x))
        throw std::invalid_argument("posterior_error_prob: x must be finite");
    return sigmoid_of_minus(log_posterior_odds(code.bits, effective_snr, x));
}

double residual_fraction_upper(const CodeSpec& code, double effective_snr,
                               const QuadratureRule& rule) {
    require_snr(effective_snr);
    if (code.bits == 0)
        throw std::invalid_argument(
            "residual_fraction_upper: undefined for K = 0");
    const long double a = code.competing();
    const double rs = std::sqrt(effective_snr);
    // v_u = integral [ (1 - Q(x-rs)^a) + Q(x-rs)^a * p_post(rs-x) ] Dx,
    // each summand nonnegative, so no cancellation at high SNR.
    double v = 0.0;
    for (std::size_t i = 0; i < rule.size(); ++i) {
        const double x = rule.nodes[i];
        const long double lq = log_q_pow_ld(x - rs, a);
        const double correct = exp_clamped(lq);
        const double post =
            sigmoid_of_minus(log_posterior_odds(code.bits, effective_snr, rs - x));
        v += rule.weights[i] * (one_minus_exp(lq) + correct * post);
    }
    return std::min(v, 1.0);
}

double residual_fraction_lower(const CodeSpec& code, double effective_snr,
                               const QuadratureRule& rule) {
    return block_error_prob(code, effective_snr, rule);
}

double single_user_pe(int bits, double ebno, const QuadratureRule& rule) {
    if (!(ebno >= 0.0) || !std::isfinite(ebno))
        throw std::invalid_argument("single_user_pe: ebno must be >= 0");
    return block_error_prob(CodeSpec(bits, 1.0), 2.0 * bits * ebno, rule);
}

double pe_lower_bound(int bits, double ebno) {
    if (!(ebno >= 0.0) || !std::isfinite(ebno))
        throw std::invalid_argument("pe_lower_bound: ebno must be >= 0");
    if (bits < 1 || bits > 1024)
        throw std::invalid_argument("pe_lower_bound: bits must be in [1, 1024]");
    const double q_inv = gaussian_q_inv(std::exp2(-static_cast<double>(bits)));
    return 1.0 - gaussian_q(q_inv - std::sqrt(2.0 * bits * ebno));
}

double conditional_pe_finite(int users, const CodeSpec& code, double power,
                             double r_norm, double z_norm) {
    if (users < 1) throw std::invalid_argument("conditional_pe_finite: users >= 1");
    if (!(power > 0.0) || !std::isfinite(power))
        throw std::invalid_argument("conditional_pe_finite: power must be > 0");
    if (!(r_norm >= 0.0) || !(z_norm >= 0.0))
        throw std::invalid_argument("conditional_pe_finite: norms must be >= 0");
    const double mn = users * code.dims;
    if (std::fabs(mn - std::round(mn)) > 1e-9 || mn < 1.0)
        throw std::invalid_argument("conditional_pe_finite: M*N must be a positive integer");
    if (code.bits == 0) return 0.0;
    const double scale = std::sqrt(power / users);
    const double pm = marcum_p(0.5 * mn, r_norm / scale, z_norm / scale);
    const double lq = (pm < 0.5)
                          ? std::log1p(-pm)
                          : std::log(marcum_q(0.5 * mn, r_norm / scale, z_norm / scale));
    return one_minus_exp(code.competing() * static_cast<long double>(lq));
}

}  // namespace macsic
