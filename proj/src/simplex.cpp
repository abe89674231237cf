#include "bwksim/simplex.hpp"

#include <cassert>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>

namespace bwksim {

const char* to_string(SolveStatus s) {
    switch (s) {
        case SolveStatus::optimal: return "optimal";
        case SolveStatus::infeasible: return "infeasible";
        case SolveStatus::unbounded: return "unbounded";
        case SolveStatus::iteration_limit: return "iteration_limit";
    }
    return "unknown";
}

void LinearProgram::add_row(std::vector<double> coeffs, double b, RowSense s) {
    if (static_cast<int>(coeffs.size()) != num_vars)
        throw std::invalid_argument("LinearProgram::add_row: coefficient count mismatch");
    rows.push_back(std::move(coeffs));
    rhs.push_back(b);
    sense.push_back(s);
}

void DenseSimplex::pivot(int row, int col) {
    double* prow = &tab_[static_cast<size_t>(row) * width_];
    const double inv = 1.0 / prow[col];
    for (int j = 0; j < width_; ++j) prow[j] *= inv;
    prow[col] = 1.0;
    for (int r = 0; r <= m_; ++r) {
        if (r == row) continue;
        double* rr = &tab_[static_cast<size_t>(r) * width_];
        const double f = rr[col];
        if (f == 0.0) continue;
        for (int j = 0; j < width_; ++j) rr[j] -= f * prow[j];
        rr[col] = 0.0;
    }
    basis_[row] = col;
}

SolveStatus DenseSimplex::iterate(int& iters, int max_iters, int bland_after,
                                  int restrict_cols) {
    const double* obj = &tab_[static_cast<size_t>(m_) * width_];
    while (true) {
        if (iters >= max_iters) return SolveStatus::iteration_limit;
        const bool bland = iters >= bland_after;
        obj = &tab_[static_cast<size_t>(m_) * width_];

        int enter = -1;
        double best = -opts_.opt_tol;
        for (int j = 0; j < ncols_; ++j) {
            if (j >= restrict_cols) break;  // artificials barred in phase 2
            const double rc = obj[j];
            if (rc < best) {
                best = rc;
                enter = j;
                if (bland) break;  // first eligible index
            }
        }
        if (enter < 0) return SolveStatus::optimal;

        // Ratio test; ties broken toward the smallest basis index (Bland-safe).
        int leave = -1;
        double best_ratio = std::numeric_limits<double>::infinity();
        for (int r = 0; r < m_; ++r) {
            const double a = at(r, enter);
            if (a <= opts_.pivot_tol) continue;
            const double ratio = at(r, width_ - 1) / a;
            if (ratio < best_ratio - 1e-12 ||
                (ratio < best_ratio + 1e-12 && (leave < 0 || basis_[r] < basis_[leave]))) {
                best_ratio = ratio;
                leave = r;
            }
        }
        if (leave < 0) return SolveStatus::unbounded;
        pivot(leave, enter);
        ++iters;
    }
}

LpSolve DenseSimplex::solve(const LinearProgram& lp) {
    const int n = lp.num_vars;
    m_ = lp.num_rows();
    LpSolve out;
    out.x.assign(n, 0.0);
    out.row_dual.assign(m_, 0.0);
    if (m_ == 0) {
        // Only x >= 0: optimum at 0 unless some objective coefficient is positive.
        for (int j = 0; j < n; ++j)
            if (lp.objective[j] > opts_.opt_tol) {
                out.status = SolveStatus::unbounded;
                return out;
            }
        out.status = SolveStatus::optimal;
        return out;
    }

    slack_col_.assign(m_, -1);
    art_col_.assign(m_, -1);
    flipped_.assign(m_, 0);

    // Column layout: structurals | slacks/surpluses | artificials | rhs.
    int nslack = 0, nart = 0;
    for (int i = 0; i < m_; ++i) {
        const bool neg = lp.rhs[i] < 0.0;
        flipped_[i] = neg ? 1 : 0;
        if (lp.sense[i] == RowSense::le) {
            ++nslack;
            if (neg) ++nart;  // becomes a >= row
        } else {
            ++nart;
        }
    }
    ncols_ = n + nslack + nart;
    width_ = ncols_ + 1;
    tab_.assign(static_cast<size_t>(m_ + 1) * width_, 0.0);
    basis_.assign(m_, -1);

    int next_slack = n, next_art = n + nslack;
    for (int i = 0; i < m_; ++i) {
        double* row = &tab_[static_cast<size_t>(i) * width_];
        const double sgn = flipped_[i] ? -1.0 : 1.0;
        for (int j = 0; j < n; ++j) row[j] = sgn * lp.rows[i][j];
        row[width_ - 1] = sgn * lp.rhs[i];
        if (lp.sense[i] == RowSense::le) {
            slack_col_[i] = next_slack++;
            row[slack_col_[i]] = sgn;  // surplus (-1) if the row was flipped
        }
        if (lp.sense[i] == RowSense::eq || flipped_[i]) {
            art_col_[i] = next_art++;
            row[art_col_[i]] = 1.0;
            basis_[i] = art_col_[i];
        } else {
            basis_[i] = slack_col_[i];
        }
    }

    const int max_iters =
        opts_.max_iterations > 0 ? opts_.max_iterations : 50 * (m_ + ncols_);
    const int bland_after = max_iters / 2;
    int iters = 0;

    if (nart > 0) {
        // Phase 1: maximize -(sum of artificials); canonicalize against the basis.
        double* obj = &tab_[static_cast<size_t>(m_) * width_];
        for (int i = 0; i < m_; ++i) {
            if (art_col_[i] < 0) continue;
            const double* row = &tab_[static_cast<size_t>(i) * width_];
            for (int j = 0; j < width_; ++j) obj[j] -= row[j];
            obj[art_col_[i]] = 0.0;
        }
        SolveStatus st = iterate(iters, max_iters, bland_after, ncols_);
        if (st == SolveStatus::iteration_limit) {
            out.status = st;
            out.iterations = iters;
            return out;
        }
        double rhs_scale = 1.0;
        for (int i = 0; i < m_; ++i) rhs_scale += std::fabs(at(i, width_ - 1));
        const double phase1 = -tab_[static_cast<size_t>(m_) * width_ + width_ - 1];
        if (phase1 > 1e-8 * rhs_scale) {
            out.status = SolveStatus::infeasible;
            out.iterations = iters;
            return out;
        }
        // Drive remaining artificials out of the basis where possible.
        for (int r = 0; r < m_; ++r) {
            if (basis_[r] < n + nslack) continue;
            int col = -1;
            for (int j = 0; j < n + nslack; ++j)
                if (std::fabs(at(r, j)) > 1e-8) { col = j; break; }
            if (col >= 0) pivot(r, col);
            // else: redundant row; artificial stays basic at value ~0
        }
    }

    // Phase 2 objective row: z_j - c_j, canonicalized against the current basis.
    {
        double* obj = &tab_[static_cast<size_t>(m_) * width_];
        std::memset(obj, 0, sizeof(double) * width_);
        for (int j = 0; j < n; ++j) obj[j] = -lp.objective[j];
        for (int r = 0; r < m_; ++r) {
            const int b = basis_[r];
            if (b < n && lp.objective[b] != 0.0) {
                const double cb = lp.objective[b];
                const double* row = &tab_[static_cast<size_t>(r) * width_];
                for (int j = 0; j < width_; ++j) obj[j] += cb * row[j];
            }
        }
        for (int r = 0; r < m_; ++r)
            if (basis_[r] < ncols_) obj[basis_[r]] = 0.0;
    }

    SolveStatus st = iterate(iters, max_iters, bland_after, n + nslack);
    out.iterations = iters;
    out.status = st;
    if (st != SolveStatus::optimal) return out;

    for (int r = 0; r < m_; ++r)
        if (basis_[r] < n) out.x[basis_[r]] = at(r, width_ - 1);
    out.value = tab_[static_cast<size_t>(m_) * width_ + width_ - 1];

    // Duals from the reduced costs of each row's slack (or artificial) column,
    // expressed against the original row orientation. A flipped 'le' row stores
    // its surplus column with coefficient -1, which cancels the rhs flip, so the
    // reduced cost is already the original-orientation multiplier.
    const double* obj = &tab_[static_cast<size_t>(m_) * width_];
    for (int i = 0; i < m_; ++i) {
        double y;
        if (slack_col_[i] >= 0) {
            y = obj[slack_col_[i]];
        } else {
            y = obj[art_col_[i]];
            if (flipped_[i]) y = -y;
        }
        out.row_dual[i] = y;
    }
    return out;
}

}  // namespace bwksim
