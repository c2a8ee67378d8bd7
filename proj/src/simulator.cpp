#include "macsic/simulator.hpp"

#include <algorithm>
#include <atomic>
#include <cmath>
#include <limits>
#include <mutex>
#include <numeric>
#include <stdexcept>
#include <thread>

namespace macsic {

namespace {

constexpr double kTwoPi = 6.283185307179586;

std::uint64_t scramble(std::uint64_t z) {
    z = (z ^ (z >> 30)) * 0xBF58476D1CE4E5B9ull;
    z = (z ^ (z >> 27)) * 0x94D049BB133111EBull;
    return z ^ (z >> 31);
}

std::uint64_t mix(std::uint64_t a, std::uint64_t b) {
    return scramble(a + 0x9E3779B97F4A7C15ull * (b + 0x632BE59BD9B4E019ull));
}

/// splitmix64-fed Box-Muller stream; bit-identical across platforms.
class GaussianStream {
public:
    explicit GaussianStream(std::uint64_t seed) : state_(seed) {}

    double next() {
        if (have_spare_) {
            have_spare_ = false;
            return spare_;
        }
        const double u1 = next_unit();
        const double u2 = next_unit();
        const double r = std::sqrt(-2.0 * std::log(u1));
        spare_ = r * std::sin(kTwoPi * u2);
        have_spare_ = true;
        return r * std::cos(kTwoPi * u2);
    }

private:
    double next_unit() {  // uniform in (0, 1)
        state_ += 0x9E3779B97F4A7C15ull;
        return (scramble(state_) >> 11) * 0x1.0p-53 + 0x1.0p-54;
    }

    std::uint64_t state_;
    double spare_ = 0.0;
    bool have_spare_ = false;
};

void fill_codeword(std::uint64_t seed, int user, int index, double sigma,
                   std::span<double> out) {
    GaussianStream g(mix(mix(seed, static_cast<std::uint64_t>(user)),
                         static_cast<std::uint64_t>(index)));
    for (double& x : out) x = sigma * g.next();
}

struct TrialResult {
    std::int64_t errors = 0;
    std::vector<double> eta;                  // per iteration, index 0 initial
    std::vector<std::vector<double>> resid;   // per iteration, per group
};

void check_state(const SimState& state, const SimConfig& cfg) {
    const std::size_t M = static_cast<std::size_t>(cfg.users);
    if (state.received.size() != static_cast<std::size_t>(cfg.block_length()) ||
        state.decisions.size() != M || state.error_probs.size() != M ||
        state.statistics.size() != M || state.sent.size() != M ||
        state.residual_fractions.size() != cfg.profile.size())
        throw std::invalid_argument("SimState: shape does not match SimConfig");
    for (double p : state.error_probs)
        if (!(p >= 0.0) || !(p <= 1.0))
            throw std::invalid_argument("SimState: error_probs must be in [0, 1]");
}

// Per-trial workspace shared across iterations.
struct TrialContext {
    const SimConfig& config;
    std::vector<int> group_of_user;
    std::vector<double> power_of_user;
    std::vector<int> group_size;
    int codewords;
    int length;  // M*N
    bool materialize;

    std::vector<double> books;       // users * codewords * length when materialized
    std::vector<double> norms2;      // users * codewords cached squared norms
    std::uint64_t trial_seed = 0;

    explicit TrialContext(const SimConfig& cfg)
        : config(cfg),
          codewords(1 << cfg.code.bits),
          length(cfg.block_length()) {
        group_size = cfg.group_sizes();
        for (std::size_t j = 0; j < group_size.size(); ++j)
            for (int i = 0; i < group_size[j]; ++i) {
                group_of_user.push_back(static_cast<int>(j));
                power_of_user.push_back(cfg.profile.groups[j].power);
            }
        const std::uint64_t footprint =
            static_cast<std::uint64_t>(cfg.users) * codewords * length *
            sizeof(double);
        materialize = footprint <= cfg.memory_budget_bytes;
        if (materialize)
            books.resize(static_cast<std::size_t>(cfg.users) * codewords * length);
        norms2.resize(static_cast<std::size_t>(cfg.users) * codewords);
    }

    double sigma_of_user(int m) const {
        return std::sqrt(power_of_user[m] / config.users);
    }

    void prepare(std::uint64_t seed) {
        trial_seed = seed;
        if (!materialize) {
            // norms are still cached; regenerate coordinates to get them
            std::vector<double> buf(length);
            for (int m = 0; m < config.users; ++m)
                for (int k = 0; k < codewords; ++k) {
                    codeword(m, k, buf);
                    norms2[static_cast<std::size_t>(m) * codewords + k] =
                        std::inner_product(buf.begin(), buf.end(), buf.begin(), 0.0);
                }
            return;
        }
        for (int m = 0; m < config.users; ++m)
            for (int k = 0; k < codewords; ++k) {
                const auto row = book_row(m, k);
                fill_row(m, k, row);
                norms2[static_cast<std::size_t>(m) * codewords + k] =
                    std::inner_product(row.begin(), row.end(), row.begin(), 0.0);
            }
    }

    std::span<double> book_row(int m, int k) {
        return {books.data() +
                    (static_cast<std::size_t>(m) * codewords + k) * length,
                static_cast<std::size_t>(length)};
    }

    void fill_row(int m, int k, std::span<double> out) const {
        if (config.orthogonal_codebooks) {
            std::fill(out.begin(), out.end(), 0.0);
            const double energy =
                std::sqrt(config.code.dims * power_of_user[m]);
            out[(static_cast<std::size_t>(m) * codewords + k) % out.size()] =
                energy;
            return;
        }
        fill_codeword(trial_seed, m, k, sigma_of_user(m), out);
    }

    // codeword coordinates into buf (copied from the stored book, or
    // regenerated when streaming)
    void codeword(int m, int k, std::span<double> buf) const {
        if (materialize) {
            const double* src =
                books.data() + (static_cast<std::size_t>(m) * codewords + k) * length;
            std::copy(src, src + length, buf.begin());
            return;
        }
        fill_row(m, k, buf);
    }

    DecodeResult decode_user(int m, std::span<const double> residual,
                             std::vector<double>& scratch) {
        if (materialize) {
            std::span<const double> book(
                books.data() + static_cast<std::size_t>(m) * codewords * length,
                static_cast<std::size_t>(codewords) * length);
            return decode_cached(residual, book, m);
        }
        int best = 0;
        double best_metric = -std::numeric_limits<double>::infinity();
        double best_dot = 0.0;
        for (int k = 0; k < codewords; ++k) {
            codeword(m, k, scratch);
            const double dot = std::inner_product(scratch.begin(), scratch.end(),
                                                  residual.begin(), 0.0);
            const double n2 = norms2[static_cast<std::size_t>(m) * codewords + k];
            const double metric = dot - 0.5 * n2;
            if (metric > best_metric) {
                best_metric = metric;
                best = k;
                best_dot = dot;
            }
        }
        const double n = std::sqrt(
            norms2[static_cast<std::size_t>(m) * codewords + best]);
        return {best, n > 0.0 ? best_dot / n : 0.0};
    }

private:
    DecodeResult decode_cached(std::span<const double> residual,
                               std::span<const double> book, int m) {
        int best = 0;
        double best_metric = -std::numeric_limits<double>::infinity();
        double best_dot = 0.0;
        for (int k = 0; k < codewords; ++k) {
            const double* c = book.data() + static_cast<std::size_t>(k) * length;
            double dot = 0.0;
            for (int i = 0; i < length; ++i) dot += c[i] * residual[i];
            const double metric =
                dot - 0.5 * norms2[static_cast<std::size_t>(m) * codewords + k];
            if (metric > best_metric) {
                best_metric = metric;
                best = k;
                best_dot = dot;
            }
        }
        const double n = std::sqrt(
            norms2[static_cast<std::size_t>(m) * codewords + best]);
        return {best, n > 0.0 ? best_dot / n : 0.0};
    }
};

void update_posteriors(SimState& state, TrialContext& ctx) {
    const SimConfig& cfg = ctx.config;
    const double i_pow = state.interference_power;
    for (int m = 0; m < cfg.users; ++m) {
        if (cfg.code.bits == 0) {
            state.error_probs[m] = 0.0;
            continue;
        }
        const double s = cfg.code.dims * ctx.power_of_user[m] / i_pow;
        state.error_probs[m] =
            posterior_error_prob(cfg.code, s,
                                 state.statistics[m] / std::sqrt(i_pow));
    }
}

SimState make_initial_state(TrialContext& ctx, std::uint64_t trial_seed) {
    const SimConfig& cfg = ctx.config;
    const int M = cfg.users;
    const int MN = ctx.length;
    ctx.prepare(trial_seed);

    SimState state;
    state.codebook_seed = trial_seed;
    state.iteration = 0;
    state.received.resize(MN);
    state.sent.resize(M);
    state.decisions.resize(M);
    state.statistics.resize(M);
    state.error_probs.resize(M);
    state.residual_fractions.assign(cfg.profile.size(), 1.0);

    GaussianStream channel(mix(trial_seed, 0xC8A5C5ull));
    for (double& x : state.received) x = channel.next();  // unit noise

    std::vector<double> buf(MN);
    std::uint64_t pick_state = mix(trial_seed, 0xDA7Aull);
    for (int m = 0; m < M; ++m) {
        pick_state += 0x9E3779B97F4A7C15ull;
        state.sent[m] = static_cast<int>(
            scramble(pick_state) % static_cast<std::uint64_t>(ctx.codewords));
        ctx.codeword(m, state.sent[m], buf);
        for (int i = 0; i < MN; ++i) state.received[i] += buf[i];
    }

    state.interference_power = 1.0;
    for (const auto& g : cfg.profile.groups)
        state.interference_power += g.fraction * g.power;

    // initial decode from the raw receive word
    for (int m = 0; m < M; ++m) {
        const DecodeResult d = ctx.decode_user(m, state.received, buf);
        state.decisions[m] = d.index;
        state.statistics[m] = d.statistic;
    }
    update_posteriors(state, ctx);
    return state;
}

// One cancellation pass over an existing state. The codebooks of
// state.codebook_seed must already be prepared in ctx.
void advance(SimState& state, TrialContext& ctx) {
    const SimConfig& cfg = ctx.config;
    const int M = cfg.users;
    const int MN = ctx.length;
    const std::size_t J = cfg.profile.size();

    std::vector<double> buf(MN), conf(M), scale_grp(J), conf2_sum(J, 0.0);

    // group confidences and the measured residual fractions
    for (int m = 0; m < M; ++m) {
        conf[m] = 1.0 - state.error_probs[m];
        conf2_sum[ctx.group_of_user[m]] += conf[m] * conf[m];
    }
    state.interference_power = 1.0;
    for (std::size_t j = 0; j < J; ++j) {
        const double mean_conf2 =
            ctx.group_size[j] > 0 ? conf2_sum[j] / ctx.group_size[j] : 0.0;
        state.residual_fractions[j] = std::clamp(1.0 - mean_conf2, 0.0, 1.0);
        state.interference_power += cfg.profile.groups[j].fraction *
                                    state.residual_fractions[j] *
                                    cfg.profile.groups[j].power;
    }

    // per-group interference estimates with the first renormalization
    std::vector<double> group_sum(J * static_cast<std::size_t>(MN), 0.0);
    for (int m = 0; m < M; ++m) {
        if (conf[m] == 0.0) continue;
        ctx.codeword(m, state.decisions[m], buf);
        double* gs = group_sum.data() +
                     static_cast<std::size_t>(ctx.group_of_user[m]) * MN;
        for (int i = 0; i < MN; ++i) gs[i] += conf[m] * buf[i];
    }
    std::vector<double> estimate(MN, 0.0);
    double est_norm2 = 0.0;
    for (std::size_t j = 0; j < J; ++j) {
        const double* gs = group_sum.data() + j * MN;
        double n2 = 0.0;
        for (int i = 0; i < MN; ++i) n2 += gs[i] * gs[i];
        // target energy (P_j/M) sum conf^2 per coordinate, MN coordinates
        const double target = cfg.profile.groups[j].power /
                              static_cast<double>(M) * conf2_sum[j] * MN;
        scale_grp[j] = cfg.renormalize
                           ? (n2 > 0.0 ? std::sqrt(target / n2) : 0.0)
                           : 1.0;
        for (int i = 0; i < MN; ++i) estimate[i] += scale_grp[j] * gs[i];
    }
    for (int i = 0; i < MN; ++i) est_norm2 += estimate[i] * estimate[i];
    // second renormalization across groups: match the aggregate
    // cancelled power sum_j alpha_j (1 - v_j) P_j
    double cancelled = 0.0;
    for (std::size_t j = 0; j < J; ++j)
        cancelled += cfg.profile.groups[j].fraction *
                     (1.0 - state.residual_fractions[j]) *
                     cfg.profile.groups[j].power;
    const double s_all =
        cfg.renormalize
            ? (est_norm2 > 0.0 ? std::sqrt(cancelled * MN / est_norm2) : 0.0)
            : 1.0;

    // re-decode every user against its own-term-restored residual
    std::vector<double> residual(MN);
    for (int m = 0; m < M; ++m) {
        const double own = s_all * scale_grp[ctx.group_of_user[m]] * conf[m];
        ctx.codeword(m, state.decisions[m], buf);
        for (int i = 0; i < MN; ++i)
            residual[i] = state.received[i] - s_all * estimate[i] + own * buf[i];
        const DecodeResult d = ctx.decode_user(m, residual, buf);
        state.decisions[m] = d.index;
        state.statistics[m] = d.statistic;
    }
    update_posteriors(state, ctx);
    ++state.iteration;
}

TrialResult run_trial(TrialContext& ctx, std::uint64_t trial_seed) {
    const SimConfig& cfg = ctx.config;
    TrialResult out;
    SimState state = make_initial_state(ctx, trial_seed);
    out.eta.push_back(1.0 / state.interference_power);
    out.resid.push_back(state.residual_fractions);

    double eta_prev = 1.0 / state.interference_power;
    for (int it = 1; it <= cfg.max_iterations; ++it) {
        advance(state, ctx);
        const double eta = 1.0 / state.interference_power;
        out.eta.push_back(eta);
        out.resid.push_back(state.residual_fractions);
        if (std::fabs(eta - eta_prev) < cfg.eta_tol) break;
        eta_prev = eta;
    }

    for (int m = 0; m < cfg.users; ++m)
        if (state.decisions[m] != state.sent[m]) ++out.errors;
    return out;
}

}  // namespace

void SimConfig::validate() const {
    if (users < 1) throw std::invalid_argument("SimConfig: users must be >= 1");
    if (trials < 1) throw std::invalid_argument("SimConfig: trials must be >= 1");
    if (max_iterations < 0)
        throw std::invalid_argument("SimConfig: max_iterations must be >= 0");
    const double mn = users * code.dims;
    if (std::fabs(mn - std::round(mn)) > 1e-9 || std::round(mn) < 1.0)
        throw std::invalid_argument("SimConfig: M*N must be a positive integer");
    double total = 0.0;
    for (const auto& g : profile.groups) {
        const double size = g.fraction * users;
        if (std::fabs(size - std::round(size)) > 1e-6)
            throw std::invalid_argument(
                "SimConfig: group sizes alpha_j * M must be integers");
        total += std::round(size);
    }
    if (static_cast<int>(total) != users)
        throw std::invalid_argument("SimConfig: group sizes must sum to M");
    if (orthogonal_codebooks &&
        static_cast<double>(users) * (1 << code.bits) > users * code.dims + 0.5)
        throw std::invalid_argument(
            "SimConfig: orthogonal codebooks need M * 2^K <= M*N");
    if (code.bits > 20)
        throw std::invalid_argument("SimConfig: 2^K codewords too large to simulate");
}

int SimConfig::block_length() const {
    return static_cast<int>(std::llround(users * code.dims));
}

std::vector<int> SimConfig::group_sizes() const {
    std::vector<int> sizes;
    sizes.reserve(profile.size());
    for (const auto& g : profile.groups)
        sizes.push_back(static_cast<int>(std::llround(g.fraction * users)));
    return sizes;
}

std::vector<double> generate_codebook(std::uint64_t seed, int user,
                                      const CodeSpec& code, double group_power,
                                      int users) {
    if (users < 1) throw std::invalid_argument("generate_codebook: users >= 1");
    if (!(group_power >= 0.0))
        throw std::invalid_argument("generate_codebook: power must be >= 0");
    const double mn = users * code.dims;
    if (std::fabs(mn - std::round(mn)) > 1e-9 || std::round(mn) < 1.0)
        throw std::invalid_argument("generate_codebook: M*N must be integral");
    const int length = static_cast<int>(std::llround(mn));
    const int codewords = 1 << code.bits;
    const double sigma = std::sqrt(group_power / users);
    std::vector<double> book(static_cast<std::size_t>(codewords) * length);
    for (int k = 0; k < codewords; ++k)
        fill_codeword(seed, user, k, sigma,
                      {book.data() + static_cast<std::size_t>(k) * length,
                       static_cast<std::size_t>(length)});
    return book;
}

DecodeResult decode(std::span<const double> residual,
                    std::span<const double> codebook, int codewords) {
    if (codewords < 1 || codebook.size() % codewords != 0)
        throw std::invalid_argument("decode: bad codebook shape");
    const std::size_t length = codebook.size() / codewords;
    if (residual.size() != length)
        throw std::invalid_argument("decode: residual length mismatch");
    int best = 0;
    double best_metric = -std::numeric_limits<double>::infinity();
    double best_dot = 0.0, best_norm2 = 0.0;
    for (int k = 0; k < codewords; ++k) {
        const double* c = codebook.data() + static_cast<std::size_t>(k) * length;
        double dot = 0.0, n2 = 0.0;
        for (std::size_t i = 0; i < length; ++i) {
            dot += c[i] * residual[i];
            n2 += c[i] * c[i];
        }
        const double metric = dot - 0.5 * n2;
        if (metric > best_metric) {
            best_metric = metric;
            best = k;
            best_dot = dot;
            best_norm2 = n2;
        }
    }
    return {best, best_norm2 > 0.0 ? best_dot / std::sqrt(best_norm2) : 0.0};
}

SimState initial_sim_state(const SimConfig& config, std::uint64_t trial_seed) {
    config.validate();
    TrialContext ctx(config);
    return make_initial_state(ctx, trial_seed);
}

SimState soft_cancel_iteration(const SimState& state, const SimConfig& config) {
    config.validate();
    check_state(state, config);
    TrialContext ctx(config);
    ctx.prepare(state.codebook_seed);
    SimState next = state;
    advance(next, ctx);
    return next;
}

SimReport run_simulation(const SimConfig& config) {
    config.validate();
    const int threads =
        std::max(1, std::min(config.threads, config.trials));
    std::vector<TrialResult> results(config.trials);
    {
        std::vector<std::thread> pool;
        std::atomic<int> next{0};
        std::exception_ptr error;
        std::mutex error_mutex;
        auto work = [&] {
            TrialContext ctx(config);
            try {
                for (;;) {
                    const int t = next.fetch_add(1);
                    if (t >= config.trials) return;
                    results[t] = run_trial(ctx, mix(config.seed, t + 1));
                }
            } catch (...) {
                std::lock_guard<std::mutex> lock(error_mutex);
                if (!error) error = std::current_exception();
            }
        };
        if (threads == 1) {
            work();
        } else {
            pool.reserve(threads);
            for (int i = 0; i < threads; ++i) pool.emplace_back(work);
            for (auto& th : pool) th.join();
        }
        if (error) std::rethrow_exception(error);
    }

    SimReport report;
    std::size_t longest = 0;
    for (const auto& r : results) longest = std::max(longest, r.eta.size());
    report.eta_trajectory.assign(longest, 0.0);
    report.residual_trajectory.assign(
        longest, std::vector<double>(config.profile.size(), 0.0));
    for (const auto& r : results) {
        report.errors += r.errors;
        for (std::size_t i = 0; i < longest; ++i) {
            const std::size_t idx = std::min(i, r.eta.size() - 1);
            report.eta_trajectory[i] += r.eta[idx];
            for (std::size_t j = 0; j < config.profile.size(); ++j)
                report.residual_trajectory[i][j] += r.resid[idx][j];
        }
    }
    const double inv = 1.0 / config.trials;
    for (auto& e : report.eta_trajectory) e *= inv;
    for (auto& row : report.residual_trajectory)
        for (auto& x : row) x *= inv;
    report.decisions = static_cast<std::int64_t>(config.users) * config.trials;
    report.error_rate = static_cast<double>(report.errors) / report.decisions;
    report.iterations_used = static_cast<int>(longest) - 1;
    return report;
}

}  // namespace macsic
