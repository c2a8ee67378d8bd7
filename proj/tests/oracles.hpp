#pragma once

// Test-side oracles, kept independent of the library code paths they
// check: brute-force Monte-Carlo detectors, an exhaustive LP vertex
// enumerator and small statistics helpers.

#include <algorithm>
#include <cmath>
#include <optional>
#include <random>
#include <vector>

#include "macsic/poweropt.hpp"

namespace oracle {

inline std::vector<double> linspace(double lo, double hi, int n) {
    std::vector<double> out(n);
    for (int i = 0; i < n; ++i)
        out[i] = n == 1 ? lo : lo + (hi - lo) * i / (n - 1);
    return out;
}

struct MonteCarloEstimate {
    double mean = 0.0;
    double stderr = 0.0;
    long samples = 0;
};

/// Two-codeword ML detection at effective SNR s: transmit sqrt(s) * e1
/// against one orthogonal alternative in unit noise; an error occurs
/// when the competing coordinate wins.
inline MonteCarloEstimate two_codeword_ml(double s, long trials,
                                          unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    long errors = 0;
    const double amp = std::sqrt(s);
    for (long t = 0; t < trials; ++t) {
        const double own = amp + normal(rng);
        const double other = normal(rng);
        if (other > own) ++errors;
    }
    MonteCarloEstimate est;
    est.samples = trials;
    est.mean = static_cast<double>(errors) / trials;
    est.stderr = std::sqrt(est.mean * (1.0 - est.mean) / trials);
    return est;
}

/// Posterior error probability among `count` orthogonal signals,
/// conditioned on the largest coordinate falling in [x-delta, x+delta].
/// The runner-up maximum over count-1 noise coordinates is sampled by
/// inverse transform of U^(1/(count-1)).
inline MonteCarloEstimate posterior_conditional(int count, double s, double x,
                                                double delta, long trials,
                                                unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    std::uniform_real_distribution<double> unif(0.0, 1.0);
    const double amp = std::sqrt(s);
    long accepted = 0, errors = 0;
    for (long t = 0; t < trials; ++t) {
        const double own = amp + normal(rng);
        // max of count-1 iid standard normals
        const double u = std::pow(unif(rng), 1.0 / (count - 1));
        const double runner = -macsic::gaussian_q_inv(std::min(
            1.0 - 1e-16, std::max(1e-300, u)));
        const double top = std::max(own, runner);
        if (std::fabs(top - x) > delta) continue;
        ++accepted;
        if (runner > own) ++errors;
    }
    MonteCarloEstimate est;
    est.samples = accepted;
    if (accepted > 0) {
        est.mean = static_cast<double>(errors) / accepted;
        est.stderr = std::sqrt(std::max(est.mean * (1.0 - est.mean), 1e-12) /
                               accepted);
    }
    return est;
}

/// Ensemble-averaged ML block error probability among 2^K Gaussian
/// codewords conditioned on the norms of the receive word and of the
/// noise vector falling in thin shells.
inline MonteCarloEstimate shell_conditional_pe(int users, int bits, int length,
                                               double power, double r_shell,
                                               double z_shell, double delta,
                                               long trials, unsigned seed) {
    std::mt19937_64 rng(seed);
    std::normal_distribution<double> normal;
    const int codewords = 1 << bits;
    const double sigma = std::sqrt(power / users);
    std::vector<double> truth(length), noise(length), rx(length), cand(length);
    long accepted = 0, errors = 0;
    for (long t = 0; t < trials; ++t) {
        double r2 = 0.0, z2 = 0.0;
        for (int i = 0; i < length; ++i) {
            truth[i] = sigma * normal(rng);
            noise[i] = normal(rng);
            rx[i] = truth[i] + noise[i];
            r2 += rx[i] * rx[i];
            z2 += noise[i] * noise[i];
        }
        if (std::fabs(std::sqrt(r2) - r_shell) > delta ||
            std::fabs(std::sqrt(z2) - z_shell) > delta)
            continue;
        ++accepted;
        double best;
        {
            double dot = 0.0, n2 = 0.0;
            for (int i = 0; i < length; ++i) {
                dot += rx[i] * truth[i];
                n2 += truth[i] * truth[i];
            }
            best = dot - 0.5 * n2;
        }
        bool beaten = false;
        for (int k = 1; k < codewords && !beaten; ++k) {
            double dot = 0.0, n2 = 0.0;
            for (int i = 0; i < length; ++i) {
                cand[i] = sigma * normal(rng);
                dot += rx[i] * cand[i];
                n2 += cand[i] * cand[i];
            }
            beaten = (dot - 0.5 * n2) > best;
        }
        if (beaten) ++errors;
    }
    MonteCarloEstimate est;
    est.samples = accepted;
    if (accepted > 0) {
        est.mean = static_cast<double>(errors) / accepted;
        est.stderr = std::sqrt(std::max(est.mean * (1.0 - est.mean), 1e-12) /
                               accepted);
    }
    return est;
}

/// Exhaustive basic-feasible-solution enumeration for a small LP in
/// standard form (same conventions as macsic::LpProblem). Returns the
/// best basic feasible objective, or nothing when infeasible.
inline std::optional<std::pair<double, std::vector<double>>> enumerate_lp(
    const macsic::LpProblem& lp) {
    const std::size_t n = lp.variables();
    // constraints as rows: inequalities get slack; enumerate active sets
    // of size n among {inequality-tight, equality, variable-at-zero}.
    struct Row {
        std::vector<double> a;
        double b;
        bool equality;
    };
    std::vector<Row> rows;
    for (std::size_t i = 0; i < lp.ineq_lhs.size(); ++i)
        rows.push_back({lp.ineq_lhs[i], lp.ineq_rhs[i], false});
    for (std::size_t i = 0; i < lp.eq_lhs.size(); ++i)
        rows.push_back({lp.eq_lhs[i], lp.eq_rhs[i], true});
    for (std::size_t j = 0; j < n; ++j) {
        Row r;
        r.a.assign(n, 0.0);
        r.a[j] = 1.0;
        r.b = 0.0;
        r.equality = false;  // active means x_j = 0
        rows.push_back(r);
    }
    const std::size_t m = rows.size();
    std::optional<std::pair<double, std::vector<double>>> best;

    auto solve_active = [&](const std::vector<std::size_t>& idx)
        -> std::optional<std::vector<double>> {
        std::vector<std::vector<double>> a(n, std::vector<double>(n + 1));
        for (std::size_t r = 0; r < n; ++r) {
            for (std::size_t c = 0; c < n; ++c) a[r][c] = rows[idx[r]].a[c];
            a[r][n] = rows[idx[r]].b;
        }
        for (std::size_t col = 0; col < n; ++col) {
            std::size_t piv = col;
            for (std::size_t r = col + 1; r < n; ++r)
                if (std::fabs(a[r][col]) > std::fabs(a[piv][col])) piv = r;
            if (std::fabs(a[piv][col]) < 1e-10) return std::nullopt;
            std::swap(a[col], a[piv]);
            for (std::size_t r = 0; r < n; ++r) {
                if (r == col) continue;
                const double f = a[r][col] / a[col][col];
                for (std::size_t c = col; c <= n; ++c) a[r][c] -= f * a[col][c];
            }
        }
        std::vector<double> x(n);
        for (std::size_t r = 0; r < n; ++r) x[r] = a[r][n] / a[r][r];
        return x;
    };

    auto feasible = [&](const std::vector<double>& x) {
        for (std::size_t j = 0; j < n; ++j)
            if (x[j] < -1e-8) return false;
        for (std::size_t i = 0; i < lp.ineq_lhs.size(); ++i) {
            double lhs = 0.0;
            for (std::size_t j = 0; j < n; ++j) lhs += lp.ineq_lhs[i][j] * x[j];
            if (lhs > lp.ineq_rhs[i] + 1e-8) return false;
        }
        for (std::size_t i = 0; i < lp.eq_lhs.size(); ++i) {
            double lhs = 0.0;
            for (std::size_t j = 0; j < n; ++j) lhs += lp.eq_lhs[i][j] * x[j];
            if (std::fabs(lhs - lp.eq_rhs[i]) > 1e-8) return false;
        }
        return true;
    };

    // iterate over all n-subsets of rows
    std::vector<std::size_t> comb(n);
    for (std::size_t j = 0; j < n; ++j) comb[j] = j;
    for (;;) {
        // equalities must always be active; skip subsets that drop one
        bool all_eq_present = true;
        for (std::size_t r = 0; r < m; ++r) {
            if (!rows[r].equality) continue;
            if (std::find(comb.begin(), comb.end(), r) == comb.end()) {
                all_eq_present = false;
                break;
            }
        }
        if (all_eq_present) {
            if (auto x = solve_active(comb); x && feasible(*x)) {
                double value = 0.0;
                for (std::size_t j = 0; j < n; ++j)
                    value += lp.objective[j] * (*x)[j];
                if (!best || value < best->first) best = {{value, *x}};
            }
        }
        // next combination
        std::size_t k = n;
        while (k > 0 && comb[k - 1] == m - n + k - 1) --k;
        if (k == 0) break;
        ++comb[k - 1];
        for (std::size_t j = k; j < n; ++j) comb[j] = comb[j - 1] + 1;
    }
    return best;
}

}  // namespace oracle
