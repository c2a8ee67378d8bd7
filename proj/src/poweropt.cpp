#include "macsic/poweropt.hpp"

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <cstring>
#include <functional>
#include <limits>
#include <map>
#include <memory>
#include <mutex>
#include <stdexcept>
#include <thread>
#include <tuple>

#include "parallel.hpp"

namespace macsic {

namespace {

const FadingModel& unit_fading() {
    static const FadingModel model({1.0}, {1.0});
    return model;
}

// Cubic-interpolated cache of s -> residual_fraction(bound, code, s) on a
// uniform grid in ln(s). The LP needs tens of thousands of residual
// values per nesting step; one table amortizes them all. Queries outside
// the tabulated range fall back to exact evaluation.
class ResidualTable {
public:
    ResidualTable(const CodeSpec& code, BoundKind bound, QuadratureRule rule,
                  double s_lo, double s_hi)
        : code_(code), bound_(bound), rule_(std::move(rule)) {
        s_lo = std::max(s_lo, 1e-12);
        s_hi = std::max(s_hi * 1.0001, s_lo * 2.0);
        t_lo_ = std::log(s_lo);
        const double t_hi = std::log(s_hi);
        const double target_dt = 1.2e-3;
        const std::size_t n =
            static_cast<std::size_t>((t_hi - t_lo_) / target_dt) + 4;
        dt_ = (t_hi - t_lo_) / static_cast<double>(n - 1);
        values_.resize(n);
        const unsigned hw = std::thread::hardware_concurrency();
        detail::parallel_for(n, hw ? static_cast<int>(hw) : 2, [&](std::size_t i) {
            values_[i] = residual_fraction(
                bound_, code_, std::exp(t_lo_ + dt_ * static_cast<double>(i)),
                rule_);
        });
        v_at_zero_ = residual_fraction(bound_, code_, 0.0, rule_);
    }

    double operator()(double s) const {
        if (s <= 0.0) return v_at_zero_;
        const double t = std::log(s);
        const double u = (t - t_lo_) / dt_;
        if (u < 1.0 || u > static_cast<double>(values_.size() - 3))
            return residual_fraction(bound_, code_, s, rule_);
        const std::size_t i = static_cast<std::size_t>(u);
        const double f = u - static_cast<double>(i);
        // Catmull-Rom through the four surrounding samples
        const double y0 = values_[i - 1], y1 = values_[i], y2 = values_[i + 1],
                     y3 = values_[i + 2];
        const double m1 = 0.5 * (y2 - y0), m2 = 0.5 * (y3 - y1);
        const double f2 = f * f, f3 = f2 * f;
        const double y = (2 * f3 - 3 * f2 + 1) * y1 + (f3 - 2 * f2 + f) * m1 +
                         (-2 * f3 + 3 * f2) * y2 + (f3 - f2) * m2;
        return std::clamp(y, 0.0, 1.0);
    }

private:
    CodeSpec code_;
    BoundKind bound_;
    QuadratureRule rule_;
    double t_lo_ = 0.0, dt_ = 1.0, v_at_zero_ = 1.0;
    std::vector<double> values_;
};

std::uint64_t rule_fingerprint(const QuadratureRule& rule) {
    std::uint64_t h = 1469598103934665603ull;
    auto mix = [&h](const std::vector<double>& v) {
        for (double x : v) {
            std::uint64_t bits;
            static_assert(sizeof(bits) == sizeof(x));
            std::memcpy(&bits, &x, sizeof(bits));
            h ^= bits;
            h *= 1099511628211ull;
        }
    };
    mix(rule.nodes);
    mix(rule.weights);
    return h;
}

// Tables are expensive to build (tens of thousands of quadrature sums) and
// identical across the nesting and rate-bisection loops; share them.
std::shared_ptr<const ResidualTable> shared_residual_table(
    const CodeSpec& code, BoundKind bound, const QuadratureRule& rule,
    double s_lo, double s_hi) {
    // widen the range to power-of-ten buckets so equal keys imply a
    // covering table
    const double lo_bucket = std::floor(std::log10(std::max(s_lo, 1e-12)));
    const double hi_bucket = std::ceil(std::log10(std::max(s_hi, 1e-6)));
    using Key = std::tuple<int, int, std::uint64_t, int, int>;
    static std::mutex mutex;
    static std::map<Key, std::shared_ptr<const ResidualTable>> cache;
    const Key key{code.bits, bound == BoundKind::UpperResidual ? 1 : 0,
                  rule_fingerprint(rule), static_cast<int>(lo_bucket),
                  static_cast<int>(hi_bucket)};
    std::lock_guard<std::mutex> lock(mutex);
    auto& slot = cache[key];
    if (!slot)
        slot = std::make_shared<const ResidualTable>(
            code, bound, rule, std::pow(10.0, lo_bucket),
            std::pow(10.0, hi_bucket));
    return slot;
}

// Shared LP assembly over an arbitrary residual evaluator, so the exact
// build_power_lp and the table-backed optimizer produce identical
// structure.
LpProblem assemble_power_lp(const std::vector<double>& power_grid,
                            const EtaGrid& grid, const FadingModel& fading,
                            const std::function<double(double)>& residual_of_snr,
                            double dims,
                            const std::vector<double>* objective_weights = nullptr) {
    const std::size_t J = power_grid.size();
    const std::size_t L = fading.levels();
    const std::size_t n = J * L;  // variable (j, l) at index j*L + l
    const std::vector<double>& ow =
        objective_weights ? *objective_weights : fading.weights;
    if (ow.size() != L)
        throw std::invalid_argument(
            "build_power_lp: objective weight count must match fading levels");

    LpProblem lp;
    lp.objective.resize(n);
    for (std::size_t j = 0; j < J; ++j)
        for (std::size_t l = 0; l < L; ++l)
            lp.objective[j * L + l] = ow[l] * power_grid[j];

    const std::vector<double> etas = grid.values();
    lp.ineq_lhs.reserve(etas.size());
    lp.ineq_rhs.reserve(etas.size());
    for (double eta : etas) {
        std::vector<double> row(n);
        for (std::size_t j = 0; j < J; ++j) {
            for (std::size_t l = 0; l < L; ++l) {
                const double received = fading.weights[l] * power_grid[j];
                row[j * L + l] = received * residual_of_snr(eta * dims * received);
            }
        }
        lp.ineq_lhs.push_back(std::move(row));
        lp.ineq_rhs.push_back(1.0 / (eta + grid.margin) - 1.0);
    }
    for (std::size_t l = 0; l < L; ++l) {
        std::vector<double> row(n, 0.0);
        for (std::size_t j = 0; j < J; ++j) row[j * L + l] = 1.0;
        lp.eq_lhs.push_back(std::move(row));
        lp.eq_rhs.push_back(fading.probabilities[l]);
    }
    return lp;
}

void check_power_grid(const std::vector<double>& power_grid) {
    if (power_grid.empty())
        throw std::invalid_argument("power grid must not be empty");
    for (std::size_t j = 0; j < power_grid.size(); ++j) {
        if (!(power_grid[j] > 0.0) || !std::isfinite(power_grid[j]))
            throw std::invalid_argument("power grid entries must be positive");
        if (j > 0 && !(power_grid[j] > power_grid[j - 1]))
            throw std::invalid_argument("power grid must be strictly increasing");
    }
}

struct Candidate {
    double eta_hi = 0.0;
    double total_power = 0.0;
    double achieved_pe = 1.0;
    std::vector<ProfileEntry> entries;
};

}  // namespace

FadingModel::FadingModel(std::vector<double> weights_,
                         std::vector<double> probabilities_)
    : weights(std::move(weights_)), probabilities(std::move(probabilities_)) {
    if (weights.empty() || weights.size() != probabilities.size())
        throw std::invalid_argument("FadingModel: weight/probability mismatch");
    double total = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l) {
        if (!(weights[l] > 0.0) || !std::isfinite(weights[l]))
            throw std::invalid_argument("FadingModel: weights must be positive");
        if (l > 0 && !(weights[l] < weights[l - 1]))
            throw std::invalid_argument("FadingModel: weights must decrease");
        if (!(probabilities[l] >= 0.0))
            throw std::invalid_argument("FadingModel: probabilities must be >= 0");
        total += probabilities[l];
    }
    if (std::fabs(total - 1.0) > 1e-9)
        throw std::invalid_argument("FadingModel: probabilities must sum to 1");
}

FadingModel FadingModel::inverse_square(int levels) {
    if (levels < 1) throw std::invalid_argument("FadingModel: levels >= 1");
    std::vector<double> w(levels), pr(levels, 1.0 / levels);
    for (int l = 0; l < levels; ++l) {
        const double amp = 1.0 / (l + 1.0);
        w[l] = amp * amp;
    }
    return FadingModel(std::move(w), std::move(pr));
}

double FadingModel::mean_gain() const {
    double mu = 0.0;
    for (std::size_t l = 0; l < weights.size(); ++l)
        mu += probabilities[l] * weights[l];
    return mu;
}

void EtaGrid::validate() const {
    if (!(lo > 0.0) || !(hi > lo) || !(hi < 1.0))
        throw std::invalid_argument("EtaGrid: need 0 < lo < hi < 1");
    if (points < 2) throw std::invalid_argument("EtaGrid: points >= 2");
    if (!(margin > 0.0)) throw std::invalid_argument("EtaGrid: margin > 0");
}

std::vector<double> EtaGrid::values() const {
    validate();
    std::vector<double> etas(points);
    const double step = (hi - lo) / (points - 1);
    for (int g = 0; g < points; ++g) etas[g] = lo + step * g;
    return etas;
}

LpProblem build_power_lp(const CodeSpec& code,
                         const std::vector<double>& power_grid,
                         const EtaGrid& grid, BoundKind bound,
                         const QuadratureRule& rule, const FadingModel* fading,
                         const std::vector<double>* objective_weights) {
    check_power_grid(power_grid);
    grid.validate();
    const FadingModel& model = fading ? *fading : unit_fading();
    return assemble_power_lp(
        power_grid, grid, model,
        [&](double s) { return residual_fraction(bound, code, s, rule); },
        code.dims, objective_weights);
}

double threshold_snr(const CodeSpec& code, double target_pe,
                     const QuadratureRule& rule) {
    if (!(target_pe > 0.0) || !(target_pe < 0.5))
        throw std::invalid_argument("threshold_snr: target_pe must be in (0, 0.5)");
    if (code.bits < 1)
        throw std::invalid_argument("threshold_snr: bits must be >= 1");
    double hi = 1.0;
    while (block_error_prob(code, hi, rule) > target_pe) {
        hi *= 2.0;
        if (hi > 1e9)
            throw std::runtime_error("threshold_snr: no threshold below s = 1e9");
    }
    double lo = hi * 0.5 > 1.0 ? hi * 0.5 : 0.0;
    for (int i = 0; i < 200 && (hi - lo) > 1e-13 * hi; ++i) {
        const double mid = 0.5 * (lo + hi);
        (block_error_prob(code, mid, rule) > target_pe ? lo : hi) = mid;
    }
    return hi;
}

std::vector<double> default_power_grid(const CodeSpec& code, double target_pe,
                                       const QuadratureRule& rule, int count,
                                       double span_db) {
    if (count < 1) throw std::invalid_argument("default_power_grid: count >= 1");
    if (!(span_db > 0.0))
        throw std::invalid_argument("default_power_grid: span_db > 0");
    const double p_min = threshold_snr(code, target_pe, rule) / code.dims;
    std::vector<double> grid(count);
    for (int j = 0; j < count; ++j) {
        const double db = (count == 1) ? 0.0 : span_db * j / (count - 1);
        grid[j] = p_min * std::pow(10.0, db / 10.0);
    }
    return grid;
}

PowerProfile OptimizeResult::profile() const {
    std::vector<PowerGroup> groups;
    groups.reserve(entries.size());
    for (const auto& e : entries) groups.push_back({e.fraction, e.power});
    return PowerProfile(std::move(groups));
}

OptimizeResult optimize_profile(const CodeSpec& code, double target_pe,
                                const std::vector<double>& power_grid,
                                BoundKind bound, const QuadratureRule& rule,
                                const FadingModel* fading,
                                const OptimizeOptions& options) {
    if (!(target_pe > 0.0) || !(target_pe < 0.5))
        throw std::invalid_argument("optimize_profile: target_pe must be in (0, 0.5)");
    if (!(options.margin > 0.0))
        throw std::invalid_argument("optimize_profile: margin must be > 0");
    check_power_grid(power_grid);
    const FadingModel& model = fading ? *fading : unit_fading();
    const std::size_t L = model.levels();

    const double p_received_max = model.weights.front() * power_grid.back();
    // pre-iteration efficiency under the heaviest admissible profile
    const double eta_lo =
        std::min(1.0 / (1.0 + p_received_max), 0.999 * options.eta_hi_lo);
    const double eta_cap =
        std::min(options.eta_hi_cap, 1.0 - 3.0 * options.margin);
    if (!(eta_cap > options.eta_hi_lo))
        throw std::invalid_argument("optimize_profile: empty eta_hi interval");

    const double s_min =
        eta_lo * code.dims * model.weights.back() * power_grid.front();
    const double s_max = code.dims * p_received_max;
    const auto table_ptr =
        shared_residual_table(code, bound, rule, s_min * 0.5, s_max);
    const ResidualTable& table = *table_ptr;

    const EvolveOptions ev{bound, options.evolve_max_iter, options.evolve_tol};

    auto verify = [&](std::vector<ProfileEntry> entries,
                      double eta_hi) -> Candidate {
        double mass = 0.0;
        for (const auto& e : entries) mass += e.fraction;
        for (auto& e : entries) e.fraction /= mass;
        std::vector<PowerGroup> groups;
        groups.reserve(entries.size());
        for (const auto& e : entries) groups.push_back({e.fraction, e.power});
        const PowerProfile profile{std::move(groups)};
        const std::vector<double> pe = final_pe(code, profile, rule, ev);
        Candidate cand;
        cand.eta_hi = eta_hi;
        cand.entries = std::move(entries);
        cand.achieved_pe = 0.0;
        cand.total_power = 0.0;
        for (std::size_t i = 0; i < pe.size(); ++i) {
            cand.achieved_pe += cand.entries[i].fraction * pe[i];
            cand.total_power += cand.entries[i].fraction * cand.entries[i].power;
        }
        return cand;
    };

    double binding_eta = 0.0;
    auto attempt = [&](double eta_hi) -> std::optional<Candidate> {
        const EtaGrid grid{eta_lo, eta_hi, options.eta_points, options.margin};
        const LpProblem lp = assemble_power_lp(
            power_grid, grid, model, [&](double s) { return table(s); },
            code.dims);
        const LpSolution sol = simplex_solve(lp);
        if (sol.status != LpStatus::Optimal) {
            // diagnostic: grid point hardest to satisfy with pure mass
            const auto etas = grid.values();
            double worst = -1.0;
            for (std::size_t g = 0; g < etas.size(); ++g) {
                double cheapest = std::numeric_limits<double>::infinity();
                for (double c : lp.ineq_lhs[g]) cheapest = std::min(cheapest, c);
                const double difficulty = cheapest / std::max(lp.ineq_rhs[g], 1e-300);
                if (difficulty > worst) {
                    worst = difficulty;
                    binding_eta = etas[g];
                }
            }
            return std::nullopt;
        }
        std::vector<ProfileEntry> entries;
        for (std::size_t j = 0; j < power_grid.size(); ++j) {
            for (std::size_t l = 0; l < L; ++l) {
                const double alpha = sol.x[j * L + l];
                if (alpha <= options.support_tol) continue;
                ProfileEntry e;
                e.fraction = alpha;
                e.transmit_power = power_grid[j];
                e.power = model.weights[l] * power_grid[j];
                e.fade_level = fading ? static_cast<int>(l) + 1 : 0;
                entries.push_back(e);
            }
        }
        if (entries.empty()) return std::nullopt;
        return verify(std::move(entries), eta_hi);
    };

    // Interval nesting: achieved pe falls as eta_hi rises, total power
    // rises with it; take the smallest eta_hi that still meets the target.
    std::optional<Candidate> best;
    {
        auto top = attempt(eta_cap);
        if (top && top->achieved_pe <= target_pe) best = std::move(top);
    }
    if (best) {
        double lo = options.eta_hi_lo, hi = eta_cap;
        for (int step = 0; step < options.nest_steps; ++step) {
            const double mid = 0.5 * (lo + hi);
            auto cand = attempt(mid);
            if (cand && cand->achieved_pe <= target_pe) {
                hi = mid;
                best = std::move(cand);
            } else {
                lo = mid;
            }
        }
    }

    // Continuous single-power polish, free of power-grid quantization.
    // Two shapes: every user at the same transmit power p (received
    // w_l * p per level), and -- under fading -- every user at the same
    // received power q (transmit q / w_l, the channel-inverting profile
    // that adjusts the naturally imbalanced receive powers).
    if (options.single_group_refine) {
        auto single_candidate = [&](double p, bool equal_received) {
            std::vector<ProfileEntry> entries;
            for (std::size_t l = 0; l < L; ++l) {
                if (model.probabilities[l] <= 0.0) continue;
                ProfileEntry e;
                e.fraction = model.probabilities[l];
                if (equal_received) {
                    e.power = p;
                    e.transmit_power = p / model.weights[l];
                } else {
                    e.transmit_power = p;
                    e.power = model.weights[l] * p;
                }
                e.fade_level = fading ? static_cast<int>(l) + 1 : 0;
                entries.push_back(e);
            }
            return verify(std::move(entries), 0.0);
        };
        const int shapes = (fading && L > 1) ? 2 : 1;
        for (int shape = 0; shape < shapes; ++shape) {
            const bool equal_received = shape == 1;
            double hi_p = power_grid.back();
            if (single_candidate(hi_p, equal_received).achieved_pe > target_pe)
                continue;
            double lo_p = power_grid.front() * 0.25;
            for (int i = 0; i < 60 && (hi_p - lo_p) > 1e-12 * hi_p; ++i) {
                const double mid = std::sqrt(lo_p * hi_p);
                (single_candidate(mid, equal_received).achieved_pe <= target_pe
                     ? hi_p
                     : lo_p) = mid;
            }
            Candidate single = single_candidate(hi_p, equal_received);
            std::vector<PowerGroup> groups;
            for (const auto& e : single.entries)
                groups.push_back({e.fraction, e.power});
            single.eta_hi =
                evolve(code, PowerProfile(std::move(groups)), rule, ev).back().eta;
            if (!best || single.total_power < best->total_power)
                best = std::move(single);
        }
    }

    OptimizeResult result;
    if (!best) {
        result.feasible = false;
        result.binding_eta = binding_eta;
        return result;
    }
    result.feasible = true;
    result.total_power = best->total_power;
    result.achieved_pe = best->achieved_pe;
    result.eta_hi = best->eta_hi;
    result.entries = std::move(best->entries);
    return result;
}

std::vector<TradeoffPoint> tradeoff_sweep(int bits,
                                          const std::vector<double>& ebno_db_grid,
                                          double target_pe,
                                          const QuadratureRule& rule,
                                          const FadingModel* fading,
                                          const TradeoffOptions& options) {
    if (ebno_db_grid.empty())
        throw std::invalid_argument("tradeoff_sweep: empty ebno grid");
    if (bits < 1 || bits > 1024)
        throw std::invalid_argument("tradeoff_sweep: bits must be in [1, 1024]");

    auto min_ebno = [&](double rate, BoundKind bound) -> std::optional<double> {
        const CodeSpec code(bits, bits / rate);
        const double extra_db =
            fading ? -10.0 * std::log10(fading->weights.back()) : 0.0;
        const auto grid =
            default_power_grid(code, target_pe, rule, options.power_grid_size,
                               options.power_span_db + extra_db);
        OptimizeOptions oo = options.optimize;
        auto res = optimize_profile(code, target_pe, grid, bound, rule, fading, oo);
        if (!res.feasible) return std::nullopt;
        return res.total_power / (2.0 * rate);
    };

    std::vector<TradeoffPoint> points(ebno_db_grid.size());
    detail::parallel_for(ebno_db_grid.size(), options.threads, [&](std::size_t i) {
        TradeoffPoint& pt = points[i];
        pt.ebno_db = ebno_db_grid[i];
        pt.ebno_db_fading_bound = std::numeric_limits<double>::quiet_NaN();
        const double budget = std::pow(10.0, pt.ebno_db / 10.0);

        auto fits = [&](double rate) {
            const auto need = min_ebno(rate, BoundKind::UpperResidual);
            return need && *need <= budget * (1.0 + 1e-9);
        };
        if (!fits(options.rate_lo)) {
            pt.attained = false;
            return;
        }
        double lo = options.rate_lo, hi = options.rate_hi;
        if (fits(hi)) {
            lo = hi;
        } else {
            for (int step = 0; step < options.rate_bisect_steps; ++step) {
                const double mid = std::sqrt(lo * hi);
                (fits(mid) ? lo : hi) = mid;
            }
        }
        pt.attained = true;
        pt.rate = lo;
        const auto inner = min_ebno(lo, BoundKind::UpperResidual);
        const auto outer = min_ebno(lo, BoundKind::LowerResidual);
        pt.ebno_db_inner =
            inner ? 10.0 * std::log10(*inner) : std::numeric_limits<double>::quiet_NaN();
        pt.ebno_db_outer =
            outer ? 10.0 * std::log10(*outer) : std::numeric_limits<double>::quiet_NaN();
        if (fading)
            pt.ebno_db_fading_bound =
                10.0 * std::log10(fading_outer_bound(lo, bits, target_pe, *fading));
    });
    return points;
}

double fading_outer_bound_a(double rate, double a, const FadingModel& fading) {
    if (!(rate > 0.0) || !std::isfinite(rate))
        throw std::invalid_argument("fading_outer_bound: rate must be > 0");
    if (!std::isfinite(a))
        throw std::invalid_argument("fading_outer_bound: a must be finite");
    const double L = static_cast<double>(fading.levels());
    double sum = 0.0;
    for (std::size_t l = 1; l <= fading.levels(); ++l) {
        const double hi = std::exp2(2.0 * a * rate * static_cast<double>(l) / L);
        const double lo = std::exp2(2.0 * a * rate * (static_cast<double>(l) - 1.0) / L);
        sum += fading.weights[l - 1] * (hi - lo);
    }
    return sum / (2.0 * rate);
}

double fading_outer_bound(double rate, int bits, double pe,
                          const FadingModel& fading) {
    if (!(pe >= 0.0) || !(pe < 1.0))
        throw std::invalid_argument("fading_outer_bound: pe must be in [0, 1)");
    if (bits < 1) throw std::invalid_argument("fading_outer_bound: bits >= 1");
    const double a = 1.0 - pe - binary_entropy(pe) / bits;
    return fading_outer_bound_a(rate, a, fading);
}

}  // namespace macsic
