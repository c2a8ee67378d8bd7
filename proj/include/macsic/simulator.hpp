#pragma once

#include <cstdint>
#include <span>
#include <vector>

#include "macsic/evolution.hpp"

namespace macsic {

/// Finite-user Monte-Carlo setup. M*N must be an integer and every
/// group must hold an integer number of users. Each trial transmits one
/// fresh symbol per user over freshly drawn codebooks.
struct SimConfig {
    int users = 1;  // M
    CodeSpec code{1, 1.0};
    PowerProfile profile{{PowerGroup{1.0, 0.0}}};
    int trials = 1;
    int max_iterations = 30;
    double eta_tol = 1e-4;  // early stop when the efficiency estimate settles
    std::uint64_t seed = 0;
    int threads = 1;
    std::uint64_t memory_budget_bytes = 256ull << 20;
    /// Test mode: replace Gaussian codebooks by exactly orthogonal,
    /// equal-norm codewords (requires M * 2^K <= M*N).
    bool orthogonal_codebooks = false;
    /// Test mode: skip both renormalizations of the interference
    /// estimate (scale factors pinned to 1) to measure their effect.
    bool renormalize = true;

    void validate() const;
    int block_length() const;  // M*N
    std::vector<int> group_sizes() const;
};

struct SimReport {
    double error_rate = 0.0;  // per-user block errors / (users * trials)
    std::int64_t errors = 0;
    std::int64_t decisions = 0;
    /// Mean measured multiuser efficiency per iteration; index 0 is the
    /// pre-cancellation value. Trials that stop early hold their last value.
    std::vector<double> eta_trajectory;
    /// Mean measured residual fraction per iteration and group.
    std::vector<std::vector<double>> residual_trajectory;
    int iterations_used = 0;
};

/// Receiver state of one transmission round: the receive word, current
/// decisions with their posterior error estimates, and the measured
/// interference bookkeeping. Codewords are regenerated on demand from
/// codebook_seed, so the state is self-contained.
struct SimState {
    std::uint64_t codebook_seed = 0;
    std::vector<double> received;            // r, length M*N
    std::vector<int> sent;                   // transmitted indices
    std::vector<int> decisions;
    std::vector<double> statistics;          // per-user max projection
    std::vector<double> error_probs;         // p_m in [0, 1]
    std::vector<double> residual_fractions;  // measured v_j
    double interference_power = 1.0;         // I >= 1
    int iteration = 0;
};

/// Draw codebooks, data and noise for one round and decode every user
/// from the raw receive word.
SimState initial_sim_state(const SimConfig& config, std::uint64_t trial_seed);

/// One soft-cancellation pass: form the doubly renormalized
/// interference estimate from the current decisions and confidences,
/// re-decode every user against its own-term-restored residual and
/// refresh the posterior estimates.
SimState soft_cancel_iteration(const SimState& state, const SimConfig& config);

/// Codebook of user `user`: 2^K codewords of length M*N, flattened
/// row-major. Coordinates are i.i.d. Gaussian with variance
/// group_power / users, deterministic in (seed, user, codeword index).
std::vector<double> generate_codebook(std::uint64_t seed, int user,
                                      const CodeSpec& code, double group_power,
                                      int users);

struct DecodeResult {
    int index = 0;
    double statistic = 0.0;  // <residual, c_win> / ||c_win||
};

/// Maximum-likelihood decision over a flattened codebook:
/// argmax <residual, c_k> - ||c_k||^2 / 2.
DecodeResult decode(std::span<const double> residual,
                    std::span<const double> codebook, int codewords);

/// Iterative soft interference cancellation with the doubly
/// renormalized interference estimate, reporting the per-user block
/// error rate after the final iteration and the measured evolution.
SimReport run_simulation(const SimConfig& config);

}  // namespace macsic
