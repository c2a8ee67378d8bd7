#pragma once

#include <span>
#include <vector>

#include "macsic/asymptotic.hpp"

namespace macsic {

/// One user group: a fraction of the population and its per-group power.
struct PowerGroup {
    double fraction = 1.0;  // alpha_j
    double power = 0.0;     // P_j
};

/// Population split into groups with equal power inside each group.
/// Fractions sum to one; powers are nonnegative.
struct PowerProfile {
    std::vector<PowerGroup> groups;

    PowerProfile() = default;
    explicit PowerProfile(std::vector<PowerGroup> groups_);

    std::size_t size() const { return groups.size(); }
    /// Aggregate power P = sum alpha_j P_j.
    double aggregate_power() const;
};

/// Which residual-interference map drives the evolution.
enum class BoundKind {
    UpperResidual,  // posterior-weighted soft cancellation
    LowerResidual,  // genie-aided (residual = block error probability)
};

double residual_fraction(BoundKind kind, const CodeSpec& code,
                         double effective_snr, const QuadratureRule& rule);

/// Snapshot of the eta <-> v dynamical system. eta is consistent with
/// the stored v: eta = 1 / (1 + sum alpha_j v_j P_j).
struct EvolutionState {
    double eta = 1.0;
    std::vector<double> residual_fractions;
    int iteration = 0;
};

struct EvolveOptions {
    BoundKind bound = BoundKind::UpperResidual;
    int max_iter = 10000;
    double tol = 1e-9;
};

/// Multiuser efficiency for given residual fractions,
/// 1 / (1 + sum alpha_j v_j P_j), in (0, 1].
double multiuser_efficiency(const PowerProfile& profile,
                            std::span<const double> residual_fractions);

/// Track the iterative map from full interference (v = 1): each step maps
/// eta to fresh residual fractions through the chosen bound and back.
/// Returns the whole trajectory, eta nondecreasing; stops on |d eta| < tol
/// or max_iter. Stalling is a valid outcome, visible in the trajectory.
std::vector<EvolutionState> evolve(const CodeSpec& code,
                                   const PowerProfile& profile,
                                   const QuadratureRule& rule,
                                   const EvolveOptions& options = {});

/// Per-group block error probabilities at the converged (or stalled)
/// multiuser efficiency of evolve().
std::vector<double> final_pe(const CodeSpec& code, const PowerProfile& profile,
                             const QuadratureRule& rule,
                             const EvolveOptions& options = {});

}  // namespace macsic
