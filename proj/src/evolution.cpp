#include "macsic/evolution.hpp"

#include <cmath>
#include <stdexcept>

namespace macsic {

PowerProfile::PowerProfile(std::vector<PowerGroup> groups_)
    : groups(std::move(groups_)) {
    if (groups.empty())
        throw std::invalid_argument("PowerProfile: at least one group required");
    double total = 0.0;
    for (const auto& g : groups) {
        if (!(g.fraction >= 0.0) || !std::isfinite(g.fraction))
            throw std::invalid_argument("PowerProfile: fractions must be >= 0");
        if (!(g.power >= 0.0) || !std::isfinite(g.power))
            throw std::invalid_argument("PowerProfile: powers must be >= 0");
        total += g.fraction;
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw std::invalid_argument("PowerProfile: fractions must sum to 1");
}

double PowerProfile::aggregate_power() const {
    double p = 0.0;
    for (const auto& g : groups) p += g.fraction * g.power;
    return p;
}

double residual_fraction(BoundKind kind, const CodeSpec& code,
                         double effective_snr, const QuadratureRule& rule) {
    return kind == BoundKind::UpperResidual
               ? residual_fraction_upper(code, effective_snr, rule)
               : residual_fraction_lower(code, effective_snr, rule);
}

double multiuser_efficiency(const PowerProfile& profile,
                            std::span<const double> residual_fractions) {
    if (residual_fractions.size() != profile.size())
        throw std::invalid_argument(
            "multiuser_efficiency: fraction count must match group count");
    double interference = 0.0;
    for (std::size_t j = 0; j < profile.size(); ++j) {
        const double v = residual_fractions[j];
        if (!(v >= 0.0) || !(v <= 1.0))
            throw std::invalid_argument(
                "multiuser_efficiency: residual fractions must be in [0, 1]");
        interference += profile.groups[j].fraction * v * profile.groups[j].power;
    }
    return 1.0 / (1.0 + interference);
}

std::vector<EvolutionState> evolve(const CodeSpec& code,
                                   const PowerProfile& profile,
                                   const QuadratureRule& rule,
                                   const EvolveOptions& options) {
    if (options.max_iter < 1)
        throw std::invalid_argument("evolve: max_iter must be >= 1");
    if (!(options.tol > 0.0))
        throw std::invalid_argument("evolve: tol must be > 0");

    const std::size_t J = profile.size();
    std::vector<double> v(J, 1.0);  // full interference at the start
    std::vector<EvolutionState> trajectory;
    trajectory.push_back({multiuser_efficiency(profile, v), v, 0});

    for (int it = 1; it <= options.max_iter; ++it) {
        const double eta = trajectory.back().eta;
        for (std::size_t j = 0; j < J; ++j)
            v[j] = residual_fraction(options.bound, code,
                                     eta * code.dims * profile.groups[j].power,
                                     rule);
        const double eta_next = multiuser_efficiency(profile, v);
        trajectory.push_back({eta_next, v, it});
        if (std::fabs(eta_next - eta) < options.tol) break;
    }
    return trajectory;
}

std::vector<double> final_pe(const CodeSpec& code, const PowerProfile& profile,
                             const QuadratureRule& rule,
                             const EvolveOptions& options) {
    const double eta = evolve(code, profile, rule, options).back().eta;
    std::vector<double> pe(profile.size());
    for (std::size_t j = 0; j < profile.size(); ++j)
        pe[j] = block_error_prob(code, eta * code.dims * profile.groups[j].power,
                                 rule);
    return pe;
}

}  // namespace macsic
