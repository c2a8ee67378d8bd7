#pragma once

#include <optional>
#include <vector>

#include "macsic/evolution.hpp"

namespace macsic {

/// Dense standard-form LP: minimize c'x subject to A x <= b, E x = f,
/// x >= 0. Infeasible problems are legal inputs.
struct LpProblem {
    std::vector<double> objective;
    std::vector<std::vector<double>> ineq_lhs;
    std::vector<double> ineq_rhs;
    std::vector<std::vector<double>> eq_lhs;
    std::vector<double> eq_rhs;

    std::size_t variables() const { return objective.size(); }
    void validate() const;
};

enum class LpStatus { Optimal, Infeasible, Unbounded };

struct LpSolution {
    LpStatus status = LpStatus::Infeasible;
    std::vector<double> x;
    double objective_value = 0.0;
};

/// Two-phase dense primal simplex. Dantzig pricing with a switch to
/// Bland's rule when the objective stalls, so cycling cannot occur.
LpSolution simplex_solve(const LpProblem& lp);

/// Discrete fading model: amplitude gains sqrt(w_l), level probabilities,
/// mean gain mu = sum Pr(w_l) w_l ... with the default uniform
/// probabilities mu = (1/L) sum w_l.
struct FadingModel {
    std::vector<double> weights;        // strictly decreasing power gains w_l
    std::vector<double> probabilities;  // sum to 1

    FadingModel(std::vector<double> weights_, std::vector<double> probabilities_);

    /// Free-space-like discretization: sqrt(w_l) = 1/l, uniform levels.
    static FadingModel inverse_square(int levels);

    std::size_t levels() const { return weights.size(); }
    double mean_gain() const;
};

/// Multiuser-efficiency interval the LP enforces progress on.
struct EtaGrid {
    double lo = 0.0;
    double hi = 0.0;
    int points = 256;
    double margin = 1e-3;  // epsilon in 1/(eta+eps) - 1

    void validate() const;
    std::vector<double> values() const;
};

/// Assemble the power-allocation LP over candidate powers. Without
/// fading: variables alpha_j, objective sum alpha_j P_j, one progress
/// constraint per grid point and the unit-mass equality. With fading:
/// variables alpha_{jl} (j-major), received powers w_l P_j, and one
/// equality per fading level pinning its probability mass.
/// objective_weights overrides the per-level objective coefficients
/// (default: the fading weights), e.g. unit weights to price transmit
/// power as if all gains were equal.
LpProblem build_power_lp(const CodeSpec& code,
                         const std::vector<double>& power_grid,
                         const EtaGrid& grid, BoundKind bound,
                         const QuadratureRule& rule,
                         const FadingModel* fading = nullptr,
                         const std::vector<double>* objective_weights = nullptr);

/// One nonempty entry of an optimized profile. Without fading,
/// received and transmit power coincide and fade_level is 0; with
/// fading, fade_level is the 1-based level and power = w_l * transmit.
struct ProfileEntry {
    double fraction = 0.0;
    double power = 0.0;           // received power driving the evolution
    double transmit_power = 0.0;  // grid power P_j
    int fade_level = 0;
};

struct OptimizeResult {
    bool feasible = false;
    double total_power = 0.0;  // LP objective: aggregate received power
    double achieved_pe = 1.0;
    double eta_hi = 0.0;
    std::vector<ProfileEntry> entries;
    double binding_eta = 0.0;  // hardest grid point when infeasible

    /// Profile over received powers, suitable for evolve()/final_pe().
    PowerProfile profile() const;
};

struct OptimizeOptions {
    double margin = 1e-3;      // epsilon
    int eta_points = 256;      // G
    int nest_steps = 30;       // interval-nesting depth on eta_hi
    double eta_hi_lo = 0.9;
    double eta_hi_cap = 1.0 - 1e-6;  // additionally capped at 1 - 3*margin
    double support_tol = 1e-9;       // alpha below this counts as empty
    /// After the LP, also bisect a continuous single-power profile and
    /// keep whichever costs less; this removes the power-grid
    /// quantization in the equal-power regime.
    bool single_group_refine = true;
    int evolve_max_iter = 20000;
    double evolve_tol = 1e-9;
};

/// Minimal-power profile meeting the per-user error target, by interval
/// nesting on the upper end of the eta interval with an LP solve inside
/// and an independent evolve() verification of every candidate.
OptimizeResult optimize_profile(const CodeSpec& code, double target_pe,
                                const std::vector<double>& power_grid,
                                BoundKind bound, const QuadratureRule& rule,
                                const FadingModel* fading = nullptr,
                                const OptimizeOptions& options = {});

/// Geometric candidate power grid anchored at the single-user threshold
/// power for the target error probability.
std::vector<double> default_power_grid(const CodeSpec& code, double target_pe,
                                       const QuadratureRule& rule,
                                       int count = 128, double span_db = 30.0);

/// Single-user threshold: the effective SNR s with
/// block_error_prob(code, s) = target.
double threshold_snr(const CodeSpec& code, double target_pe,
                     const QuadratureRule& rule);

struct TradeoffPoint {
    double ebno_db = 0.0;      // grid point (inner-bound operating point)
    bool attained = false;
    double rate = 0.0;         // maximal R under the inner bound
    double ebno_db_inner = 0.0;
    double ebno_db_outer = 0.0;
    double ebno_db_fading_bound = 0.0;  // NaN when no fading model given
};

struct TradeoffOptions {
    OptimizeOptions optimize{};
    double rate_lo = 1e-2;
    double rate_hi = 32.0;
    int rate_bisect_steps = 12;
    int power_grid_size = 128;
    double power_span_db = 30.0;
    int threads = 1;
};

/// Spectral-efficiency / power-efficiency trade-off: for each Eb/N0 grid
/// point, the maximal rate whose optimized profile fits the power budget
/// P = 2*R*ebno under the achievability (upper-residual) map, plus the
/// Eb/N0 the genie (lower-residual) map would need at the same rate.
std::vector<TradeoffPoint> tradeoff_sweep(int bits,
                                          const std::vector<double>& ebno_db_grid,
                                          double target_pe,
                                          const QuadratureRule& rule,
                                          const FadingModel* fading = nullptr,
                                          const TradeoffOptions& options = {});

/// Successive-decoding outer bound on Eb/(mu N0) for rate R under the
/// discrete fading model, with explicit finite-blocklength correction
/// factor a.
double fading_outer_bound_a(double rate, double a, const FadingModel& fading);

/// Same bound with a = 1 - pe - H2(pe)/K.
double fading_outer_bound(double rate, int bits, double pe,
                          const FadingModel& fading);

}  // namespace macsic
