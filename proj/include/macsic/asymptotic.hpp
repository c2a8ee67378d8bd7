#pragma once

#include "macsic/numerics.hpp"

namespace macsic {

/// Per-user code parameters: K information bits mapped onto one of 2^K
/// i.i.d. Gaussian codewords of length M*N channel uses. N is a free
/// design parameter; R = K/N is the aggregate spectral efficiency.
struct CodeSpec {
    int bits = 1;          // K, capped at 1024 so 2^K - 1 stays a real exponent
    double dims = 1.0;     // N > 0

    CodeSpec() = default;
    CodeSpec(int bits_, double dims_);

    double rate() const { return bits / dims; }
    /// 2^K - 1 competing codewords, in extended precision (K up to 1024
    /// overflows double).
    long double competing() const;
};

/// Large-system block error probability of a user decoded at effective
/// SNR s = eta*N*P: p = 1 - integral Q(x - sqrt(s))^(2^K-1) Dx. Strictly
/// decreasing in s, with p(0) = 1 - 2^-K.
double block_error_prob(const CodeSpec& code, double effective_snr,
                        const QuadratureRule& rule);

/// Posterior block error probability conditioned on the largest
/// codeword-axis coordinate of the receive word, x = r_max/sqrt(I),
/// at effective SNR s. Evaluated in the log domain; output in (0, 1).
/// K = 0 has no competing codeword and is a domain error.
double posterior_error_prob(const CodeSpec& code, double effective_snr,
                            double x);

/// Upper bound on the fraction of a user's interference power that
/// survives posterior-weighted soft cancellation. Decreasing in s,
/// always >= residual_fraction_lower.
double residual_fraction_upper(const CodeSpec& code, double effective_snr,
                               const QuadratureRule& rule);

/// Genie-aided lower bound: the cancellation residual equals the block
/// error probability itself.
double residual_fraction_lower(const CodeSpec& code, double effective_snr,
                               const QuadratureRule& rule);

/// Single-user error probability at Eb/N0 (linear): the interference-free
/// special case s = 2*K*ebno.
double single_user_pe(int bits, double ebno, const QuadratureRule& rule);

/// Finite-blocklength converse: Pe > 1 - Q(Q^-1(2^-K) - sqrt(2*K*ebno)).
double pe_lower_bound(int bits, double ebno);

/// Exact finite-M block error probability conditioned on the norms of
/// the receive word and of the interference-plus-noise vector, through
/// the generalized Marcum Q-function. Validation bridge only; inherits
/// marcum_q's range envelope.
double conditional_pe_finite(int users, const CodeSpec& code, double power,
                             double r_norm, double z_norm);

}  // namespace macsic
