#include "macsic/poweropt.hpp"

#include <cmath>
#include <stdexcept>

namespace macsic {

namespace {

constexpr double kCostTol = 1e-9;
constexpr double kPivotTol = 1e-11;

// Dense tableau with an explicit basis. Row 0..m-1 are constraints,
// the cost row is kept separately as reduced costs.
struct Tableau {
    std::size_t rows = 0, cols = 0;
    std::vector<double> a;    // rows x cols, row-major
    std::vector<double> rhs;  // size rows
    std::vector<int> basis;   // basic column per row

    double& at(std::size_t r, std::size_t c) { return a[r * cols + c]; }
    double at(std::size_t r, std::size_t c) const { return a[r * cols + c]; }

    void pivot(std::size_t pr, std::size_t pc) {
        const double piv = at(pr, pc);
        const double inv = 1.0 / piv;
        for (std::size_t c = 0; c < cols; ++c) at(pr, c) *= inv;
        rhs[pr] *= inv;
        at(pr, pc) = 1.0;
        for (std::size_t r = 0; r < rows; ++r) {
            if (r == pr) continue;
            const double f = at(r, pc);
            if (f == 0.0) continue;
            for (std::size_t c = 0; c < cols; ++c) at(r, c) -= f * at(pr, c);
            at(r, pc) = 0.0;
            rhs[r] -= f * rhs[pr];
            if (rhs[r] < 0.0 && rhs[r] > -1e-11) rhs[r] = 0.0;
        }
        basis[pr] = static_cast<int>(pc);
    }
};

// Minimize cost over the tableau with the given active columns.
// Returns false when unbounded.
bool run_simplex(Tableau& t, std::vector<double>& cost, double& value,
                 std::size_t active_cols) {
    // price out basic columns; value tracks the current objective
    for (std::size_t r = 0; r < t.rows; ++r) {
        const int b = t.basis[r];
        const double cb = cost[b];
        if (cb == 0.0) continue;
        for (std::size_t c = 0; c < active_cols; ++c) cost[c] -= cb * t.at(r, c);
        value += cb * t.rhs[r];
    }
    bool bland = false;
    int stalled = 0;
    const int stall_limit = 2 * static_cast<int>(t.rows + active_cols) + 50;
    for (long iter = 0; iter < 200000; ++iter) {
        // entering column
        int enter = -1;
        if (bland) {
            for (std::size_t c = 0; c < active_cols; ++c)
                if (cost[c] < -kCostTol) { enter = static_cast<int>(c); break; }
        } else {
            double best = -kCostTol;
            for (std::size_t c = 0; c < active_cols; ++c)
                if (cost[c] < best) { best = cost[c]; enter = static_cast<int>(c); }
        }
        if (enter < 0) return true;  // optimal

        // ratio test; ties broken toward the smallest basis index
        int leave = -1;
        double best_ratio = 0.0;
        for (std::size_t r = 0; r < t.rows; ++r) {
            const double arc = t.at(r, static_cast<std::size_t>(enter));
            if (arc <= kPivotTol) continue;
            const double ratio = t.rhs[r] / arc;
            if (leave < 0 || ratio < best_ratio - 1e-12 ||
                (std::fabs(ratio - best_ratio) <= 1e-12 &&
                 t.basis[r] < t.basis[leave]))
            {
                leave = static_cast<int>(r);
                best_ratio = ratio;
            }
        }
        if (leave < 0) return false;  // unbounded

        const double before = value;
        const double delta = cost[static_cast<std::size_t>(enter)] * best_ratio;
        t.pivot(static_cast<std::size_t>(leave), static_cast<std::size_t>(enter));
        // update reduced costs for the entering column
        const double ce = cost[static_cast<std::size_t>(enter)];
        if (ce != 0.0) {
            for (std::size_t c = 0; c < active_cols; ++c)
                cost[c] -= ce * t.at(static_cast<std::size_t>(leave), c);
            value += delta;
        }
        if (value > before - 1e-13) {
            if (++stalled > stall_limit) bland = true;
        } else {
            stalled = 0;
        }
    }
    throw std::runtime_error("simplex_solve: iteration limit exceeded");
}

}  // namespace

void LpProblem::validate() const {
    const std::size_t n = objective.size();
    if (n == 0) throw std::invalid_argument("LpProblem: no variables");
    auto check_row = [n](const std::vector<double>& row) {
        if (row.size() != n)
            throw std::invalid_argument("LpProblem: row width mismatch");
        for (double v : row)
            if (!std::isfinite(v))
                throw std::invalid_argument("LpProblem: non-finite entry");
    };
    for (double v : objective)
        if (!std::isfinite(v)) throw std::invalid_argument("LpProblem: bad objective");
    if (ineq_lhs.size() != ineq_rhs.size() || eq_lhs.size() != eq_rhs.size())
        throw std::invalid_argument("LpProblem: lhs/rhs count mismatch");
    for (const auto& row : ineq_lhs) check_row(row);
    for (const auto& row : eq_lhs) check_row(row);
    for (double v : ineq_rhs)
        if (!std::isfinite(v)) throw std::invalid_argument("LpProblem: bad rhs");
    for (double v : eq_rhs)
        if (!std::isfinite(v)) throw std::invalid_argument("LpProblem: bad rhs");
}

LpSolution simplex_solve(const LpProblem& lp) {
    lp.validate();
    const std::size_t n = lp.variables();
    const std::size_t mi = lp.ineq_lhs.size();
    const std::size_t me = lp.eq_lhs.size();
    const std::size_t m = mi + me;

    if (m == 0) {
        // x >= 0 only: bounded iff all costs >= 0, optimum at the origin.
        for (double c : lp.objective)
            if (c < -kCostTol) return {LpStatus::Unbounded, {}, 0.0};
        return {LpStatus::Optimal, std::vector<double>(n, 0.0), 0.0};
    }

    // Columns: n structural, mi slacks, then one artificial per row that
    // needs one (negated-slack inequality rows and all equality rows).
    Tableau t;
    t.rows = m;
    std::vector<int> artificial_of_row(m, -1);
    std::size_t n_art = 0;
    std::vector<bool> negated(m, false);
    for (std::size_t r = 0; r < mi; ++r)
        if (lp.ineq_rhs[r] < 0.0) { negated[r] = true; ++n_art; }
    n_art += me;

    const std::size_t cols = n + mi + n_art;
    t.cols = cols;
    t.a.assign(m * cols, 0.0);
    t.rhs.assign(m, 0.0);
    t.basis.assign(m, -1);

    std::size_t next_art = n + mi;
    for (std::size_t r = 0; r < mi; ++r) {
        const double sgn = negated[r] ? -1.0 : 1.0;
        for (std::size_t c = 0; c < n; ++c) t.at(r, c) = sgn * lp.ineq_lhs[r][c];
        t.at(r, n + r) = sgn;  // slack
        t.rhs[r] = sgn * lp.ineq_rhs[r];
        if (negated[r]) {
            artificial_of_row[r] = static_cast<int>(next_art);
            t.at(r, next_art) = 1.0;
            t.basis[r] = static_cast<int>(next_art);
            ++next_art;
        } else {
            t.basis[r] = static_cast<int>(n + r);
        }
    }
    for (std::size_t k = 0; k < me; ++k) {
        const std::size_t r = mi + k;
        const double sgn = (lp.eq_rhs[k] < 0.0) ? -1.0 : 1.0;
        for (std::size_t c = 0; c < n; ++c) t.at(r, c) = sgn * lp.eq_lhs[k][c];
        t.rhs[r] = sgn * lp.eq_rhs[k];
        artificial_of_row[r] = static_cast<int>(next_art);
        t.at(r, next_art) = 1.0;
        t.basis[r] = static_cast<int>(next_art);
        ++next_art;
    }

    // Phase 1: minimize the sum of artificials.
    {
        std::vector<double> cost(cols, 0.0);
        for (std::size_t c = n + mi; c < cols; ++c) cost[c] = 1.0;
        double value = 0.0;
        run_simplex(t, cost, value, cols);
        if (value > 1e-8) return {LpStatus::Infeasible, {}, 0.0};
        // Drive any artificial still basic (at zero level) out of the basis.
        for (std::size_t r = 0; r < m; ++r) {
            if (t.basis[r] < static_cast<int>(n + mi)) continue;
            std::size_t pc = cols;
            for (std::size_t c = 0; c < n + mi; ++c)
                if (std::fabs(t.at(r, c)) > 1e-8) { pc = c; break; }
            if (pc < cols) t.pivot(r, pc);
            // otherwise the row is redundant; the artificial stays basic
            // at zero and never re-enters because phase 2 ignores it.
        }
    }

    // Phase 2 over structural + slack columns only.
    {
        std::vector<double> cost(cols, 0.0);
        for (std::size_t c = 0; c < n; ++c) cost[c] = lp.objective[c];
        double value = 0.0;
        if (!run_simplex(t, cost, value, n + mi))
            return {LpStatus::Unbounded, {}, 0.0};
    }

    LpSolution sol;
    sol.status = LpStatus::Optimal;
    sol.x.assign(n, 0.0);
    for (std::size_t r = 0; r < m; ++r)
        if (t.basis[r] >= 0 && t.basis[r] < static_cast<int>(n))
            sol.x[static_cast<std::size_t>(t.basis[r])] = std::max(0.0, t.rhs[r]);
    sol.objective_value = 0.0;
    for (std::size_t c = 0; c < n; ++c)
        sol.objective_value += lp.objective[c] * sol.x[c];
    return sol;
}

}  // namespace macsic
