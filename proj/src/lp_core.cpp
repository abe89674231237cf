#include "bwksim/lp_core.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <string>
#include <unordered_map>

namespace bwksim {

namespace {

constexpr double kDualClamp = 1e-7;

double clamp_nonneg(double v) { return v < 0.0 && v > -kDualClamp ? 0.0 : v; }

bool all_zero_budget(std::span<const double> b) {
    for (double v : b)
        if (v > 0.0) return false;
    return true;
}

bool last_column_is_null(std::span<const double> mu, std::span<const double> cons,
                         int m, int d) {
    if (mu[m - 1] != 0.0) return false;
    for (int j = 0; j < d; ++j)
        if (cons[static_cast<size_t>(j) * m + m - 1] != 0.0) return false;
    return true;
}

void fill_single_step_program(LinearProgram& lp, std::span<const double> mu,
                              std::span<const double> cons, std::span<const double> b) {
    const int m = static_cast<int>(mu.size());
    const int d = static_cast<int>(b.size());
    if (lp.num_vars != m || lp.num_rows() != d + 1) {
        lp = LinearProgram(m);
        for (int j = 0; j < d; ++j)
            lp.add_row(std::vector<double>(m, 0.0), 0.0, RowSense::le);
        lp.add_row(std::vector<double>(m, 1.0), 1.0, RowSense::le);
    }
    std::copy(mu.begin(), mu.end(), lp.objective.begin());
    for (int j = 0; j < d; ++j) {
        std::copy(cons.begin() + static_cast<size_t>(j) * m,
                  cons.begin() + static_cast<size_t>(j + 1) * m, lp.rows[j].begin());
        lp.rhs[j] = b[j];
    }
}

void extract_single_step(const LpSolve& res, std::span<const double> mu,
                         std::span<const double> cons, std::span<const double> b,
                         LpSolution& out) {
    const int m = static_cast<int>(mu.size());
    const int d = static_cast<int>(b.size());
    out.status = res.status == SolveStatus::optimal ? SolveStatus::optimal
                                                    : SolveStatus::iteration_limit;
    out.x.assign(res.x.begin(), res.x.end());
    out.value = res.value;
    out.dual_q.resize(d);
    for (int j = 0; j < d; ++j) out.dual_q[j] = clamp_nonneg(res.row_dual[j]);
    out.dual_alpha = clamp_nonneg(res.row_dual[d]);
    if (last_column_is_null(mu, cons, m, d)) {
        double mass = 0.0;
        for (int i = 0; i + 1 < m; ++i) mass += out.x[i];
        out.x[m - 1] = std::max(0.0, 1.0 - mass);
    }
}

void null_only_solution(int m, int d, bool has_null, LpSolution& out) {
    out.status = SolveStatus::optimal;
    out.x.assign(m, 0.0);
    if (has_null) out.x[m - 1] = 1.0;
    out.value = 0.0;
    out.dual_q.assign(d, 0.0);
    out.dual_alpha = 0.0;
}

// ---- grouped data for the dynamic LP ---------------------------------------

struct GroupedInstance {
    int groups = 0, m = 0, d = 0;
    std::vector<double> mu;      // G x m
    std::vector<double> c;       // G x d x m
    std::vector<double> weight;  // rounds per group

    double mu_at(int g, int i) const { return mu[static_cast<size_t>(g) * m + i]; }
    double c_at(int g, int j, int i) const {
        return c[(static_cast<size_t>(g) * d + j) * m + i];
    }
};

GroupedInstance make_grouped(const BwkInstance& inst, const RoundGrouping& grouping) {
    GroupedInstance g;
    g.groups = static_cast<int>(grouping.representative.size());
    g.m = inst.m;
    g.d = inst.d;
    g.mu.resize(static_cast<size_t>(g.groups) * inst.m);
    g.c.resize(static_cast<size_t>(g.groups) * inst.d * inst.m);
    g.weight.resize(g.groups);
    for (int k = 0; k < g.groups; ++k) {
        const int t = grouping.representative[k];
        g.weight[k] = grouping.count[k];
        for (int i = 0; i < inst.m; ++i) g.mu[static_cast<size_t>(k) * inst.m + i] = inst.mu_at(t, i);
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < inst.m; ++i)
                g.c[(static_cast<size_t>(k) * inst.d + j) * inst.m + i] = inst.c_at(t, j, i);
    }
    return g;
}

// Dual objective phi(q) = B.q + sum_g w_g * max(0, max_i (mu_i - q.C_i)) and a
// subgradient. argmax_out (optional) records the active arm per group (-1 when
// the zero line is active).
double dual_value(const GroupedInstance& g, std::span<const double> budget,
                  std::span<const double> q, std::vector<double>* subgrad,
                  std::vector<int>* argmax_out) {
    double phi = 0.0;
    for (int j = 0; j < g.d; ++j) phi += budget[j] * q[j];
    if (subgrad) {
        subgrad->assign(g.d, 0.0);
        for (int j = 0; j < g.d; ++j) (*subgrad)[j] = budget[j];
    }
    if (argmax_out) argmax_out->assign(g.groups, -1);
    for (int k = 0; k < g.groups; ++k) {
        double best = 0.0;
        int best_i = -1;
        for (int i = 0; i < g.m; ++i) {
            double margin = g.mu_at(k, i);
            for (int j = 0; j < g.d; ++j) margin -= q[j] * g.c_at(k, j, i);
            if (margin > best) {
                best = margin;
                best_i = i;
            }
        }
        phi += g.weight[k] * best;
        if (best_i >= 0 && subgrad)
            for (int j = 0; j < g.d; ++j)
                (*subgrad)[j] -= g.weight[k] * g.c_at(k, j, best_i);
        if (argmax_out) (*argmax_out)[k] = best_i;
    }
    return phi;
}

struct RecoveryResult {
    bool ok = false;
    double value = 0.0;
    std::vector<double> q;        // d
    std::vector<double> alpha;    // per group
    std::vector<double> y;        // flattened candidate mass
    std::vector<int> cand_group;  // column -> group
    std::vector<int> cand_arm;    // column -> arm
};

// Grouped LP restricted to arms whose margin at q_hat is within ctol of the
// group's best; exact once the candidate set covers the optimal support.
RecoveryResult recover_primal(const GroupedInstance& g, std::span<const double> budget,
                              std::span<const double> q_hat, double ctol,
                              const LpCoreOptions& opts) {
    RecoveryResult out;
    for (int k = 0; k < g.groups; ++k) {
        double best = 0.0;
        for (int i = 0; i < g.m; ++i) {
            double margin = g.mu_at(k, i);
            for (int j = 0; j < g.d; ++j) margin -= q_hat[j] * g.c_at(k, j, i);
            best = std::max(best, margin);
        }
        for (int i = 0; i < g.m; ++i) {
            double margin = g.mu_at(k, i);
            for (int j = 0; j < g.d; ++j) margin -= q_hat[j] * g.c_at(k, j, i);
            bool zero_col = g.mu_at(k, i) == 0.0;
            for (int j = 0; zero_col && j < g.d; ++j)
                if (g.c_at(k, j, i) != 0.0) zero_col = false;
            if (!zero_col && margin >= best - ctol) {
                out.cand_group.push_back(k);
                out.cand_arm.push_back(i);
            }
        }
    }
    const int cols = static_cast<int>(out.cand_arm.size());
    const int rows = g.d + g.groups;
    if (static_cast<long long>(rows + 1) * (cols + rows + 1) >
        opts.recovery_size_cap)
        return out;

    LinearProgram lp(cols);
    for (int c = 0; c < cols; ++c)
        lp.objective[c] = g.mu_at(out.cand_group[c], out.cand_arm[c]);
    std::vector<double> row(cols);
    for (int j = 0; j < g.d; ++j) {
        for (int c = 0; c < cols; ++c)
            row[c] = g.c_at(out.cand_group[c], j, out.cand_arm[c]);
        lp.add_row(row, budget[j], RowSense::le);
    }
    for (int k = 0; k < g.groups; ++k) {
        std::fill(row.begin(), row.end(), 0.0);
        for (int c = 0; c < cols; ++c)
            if (out.cand_group[c] == k) row[c] = 1.0;
        lp.add_row(row, g.weight[k], RowSense::le);
    }
    DenseSimplex solver{opts.simplex};
    LpSolve res = solver.solve(lp);
    if (res.status != SolveStatus::optimal) return out;
    out.ok = true;
    out.value = res.value;
    out.y = res.x;
    out.q.resize(g.d);
    for (int j = 0; j < g.d; ++j) out.q[j] = std::max(0.0, res.row_dual[j]);
    out.alpha.resize(g.groups);
    for (int k = 0; k < g.groups; ++k)
        out.alpha[k] = std::max(0.0, res.row_dual[g.d + k]);
    return out;
}

// Exact minimizer of the piecewise-linear convex dual for d=1: the optimum sits
// at a crossing of two margin lines (or a line with zero, or q=0).
double sweep_dual_d1(const GroupedInstance& g, std::span<const double> budget) {
    double cap = 1.0;
    for (int k = 0; k < g.groups; ++k)
        for (int i = 0; i < g.m; ++i) {
            const double ci = g.c_at(k, 0, i);
            if (ci > 1e-12) cap = std::max(cap, g.mu_at(k, i) / ci);
        }
    cap += 1.0;

    std::vector<double> qs{0.0, cap};
    for (int k = 0; k < g.groups; ++k) {
        for (int i = 0; i < g.m; ++i) {
            const double ci = g.c_at(k, 0, i);
            const double mi = g.mu_at(k, i);
            if (ci > 1e-12) {
                const double q = mi / ci;
                if (q > 0.0 && q < cap) qs.push_back(q);
            }
            for (int i2 = i + 1; i2 < g.m; ++i2) {
                const double dc = ci - g.c_at(k, 0, i2);
                if (std::fabs(dc) < 1e-14) continue;
                const double q = (mi - g.mu_at(k, i2)) / dc;
                if (q > 0.0 && q < cap) qs.push_back(q);
            }
        }
    }
    std::sort(qs.begin(), qs.end());
    qs.erase(std::unique(qs.begin(), qs.end()), qs.end());

    double best_q = 0.0, best_phi = std::numeric_limits<double>::infinity();
    std::vector<double> qv(1);
    for (double q : qs) {
        qv[0] = q;
        const double phi = dual_value(g, budget, qv, nullptr, nullptr);
        if (phi < best_phi - 1e-15) {
            best_phi = phi;
            best_q = q;
        }
    }
    return best_q;
}

std::vector<double> subgradient_dual(const GroupedInstance& g,
                                     std::span<const double> budget,
                                     const LpCoreOptions& opts, double tol,
                                     double* primal_hint) {
    std::vector<double> q(g.d, 0.0), best_q(g.d, 0.0), sg;
    double best_phi = dual_value(g, budget, q, &sg, nullptr);
    double delta = std::max(1.0, 0.05 * std::fabs(best_phi));
    bool have_primal = false;
    double primal = 0.0;

    for (int iter = 0; iter < opts.subgradient_max_iters; ++iter) {
        const double phi = dual_value(g, budget, q, &sg, nullptr);
        if (phi < best_phi) {
            best_phi = phi;
            best_q = q;
        }
        double norm2 = 0.0;
        for (double v : sg) norm2 += v * v;
        if (norm2 < 1e-18) break;
        const double target = have_primal ? primal : best_phi - delta;
        double step = (phi - target) / norm2;
        if (step <= 0.0) step = delta / std::sqrt(norm2) * 1e-3 + 1e-12;
        for (int j = 0; j < g.d; ++j) q[j] = std::max(0.0, q[j] - step * sg[j]);

        if ((iter + 1) % 400 == 0) {
            RecoveryResult rec = recover_primal(g, budget, best_q, 1e-7, opts);
            if (rec.ok) {
                have_primal = true;
                primal = std::max(primal, rec.value);
                if (best_phi - primal <= tol) break;
                q = rec.q;  // restart from the recovered prices
            }
            delta *= 0.5;
            if (delta < tol * 1e-3) delta = tol * 1e-3;
        }
    }
    if (primal_hint) *primal_hint = have_primal ? primal : -1.0;
    return best_q;
}

}  // namespace

LpSolution solve_single_step_lp(std::span<const double> mu, std::span<const double> cons,
                                std::span<const double> b, const LpCoreOptions& opts) {
    const int m = static_cast<int>(mu.size());
    const int d = static_cast<int>(b.size());
    if (m < 1 || d < 1 || cons.size() != static_cast<size_t>(m) * d)
        throw std::invalid_argument("solve_single_step_lp: dimension mismatch");
    LpSolution out;
    if (all_zero_budget(b)) {
        null_only_solution(m, d, last_column_is_null(mu, cons, m, d), out);
        return out;
    }
    LinearProgram lp(0);
    fill_single_step_program(lp, mu, cons, b);
    DenseSimplex solver{opts.simplex};
    LpSolve res = solver.solve(lp);
    extract_single_step(res, mu, cons, b, out);
    return out;
}

LpSolution& SingleStepLpSolver::solve(std::span<const double> mu,
                                      std::span<const double> cons,
                                      std::span<const double> b) {
    const int m = static_cast<int>(mu.size());
    const int d = static_cast<int>(b.size());
    if (all_zero_budget(b)) {
        null_only_solution(m, d, last_column_is_null(mu, cons, m, d), sol_);
        return sol_;
    }
    fill_single_step_program(lp_, mu, cons, b);
    LpSolve res = simplex_.solve(lp_);
    extract_single_step(res, mu, cons, b, sol_);
    return sol_;
}

RoundGrouping group_rounds(const BwkInstance& inst) {
    RoundGrouping out;
    out.group_of_round.resize(inst.T);
    std::unordered_map<std::string, int> seen;
    const size_t mu_bytes = sizeof(double) * inst.m;
    const size_t c_bytes = sizeof(double) * inst.d * inst.m;
    std::string key(mu_bytes + c_bytes, '\0');
    for (int t = 1; t <= inst.T; ++t) {
        std::memcpy(key.data(), &inst.mu[static_cast<size_t>(t - 1) * inst.m], mu_bytes);
        std::memcpy(key.data() + mu_bytes,
                    &inst.c[static_cast<size_t>(t - 1) * inst.d * inst.m], c_bytes);
        auto [it, inserted] = seen.emplace(key, static_cast<int>(out.representative.size()));
        if (inserted) {
            out.representative.push_back(t);
            out.count.push_back(0);
        }
        out.group_of_round[t - 1] = it->second;
        ++out.count[it->second];
    }
    return out;
}

DynamicLpSolution solve_dynamic_lp(const BwkInstance& inst, const LpCoreOptions& opts) {
    inst.validate();
    DynamicLpSolution out;
    out.dual_q.assign(inst.d, 0.0);
    out.dual_alphas.assign(inst.T, 0.0);
    if (all_zero_budget(inst.budget)) {
        out.xs.assign(inst.T, [&] {
            std::vector<double> x(inst.m, 0.0);
            x[inst.m - 1] = 1.0;
            return x;
        }());
        return out;
    }

    const double tol = opts.dyn_gap_tol_per_round * inst.T;
    const RoundGrouping grouping = group_rounds(inst);
    const GroupedInstance g = make_grouped(inst, grouping);

    std::vector<double> q_hat;
    if (inst.d == 1) {
        q_hat.assign(1, sweep_dual_d1(g, inst.budget));
    } else {
        q_hat = subgradient_dual(g, inst.budget, opts, tol, nullptr);
    }

    RecoveryResult rec;
    double gap = std::numeric_limits<double>::infinity();
    // The last rung restricts nothing: the full grouped LP, exact whenever it
    // fits the size cap.
    for (double ctol : {1e-9, 1e-7, 1e-5, 1e-3, 1e-1, 1e9}) {
        rec = recover_primal(g, inst.budget, q_hat, ctol, opts);
        if (!rec.ok) continue;
        gap = dual_value(g, inst.budget, rec.q, nullptr, nullptr) - rec.value;
        if (gap <= tol) break;
    }
    if (!rec.ok || gap > tol) {
        out.status = SolveStatus::iteration_limit;
        if (rec.ok) {
            out.value = rec.value;
            out.duality_gap = gap;
        }
        return out;
    }

    out.value = rec.value;
    out.duality_gap = gap;
    out.dual_q = rec.q;
    std::vector<std::vector<double>> group_x(
        g.groups, std::vector<double>(inst.m, 0.0));
    for (size_t c = 0; c < rec.cand_arm.size(); ++c)
        group_x[rec.cand_group[c]][rec.cand_arm[c]] += rec.y[c] / g.weight[rec.cand_group[c]];
    for (int k = 0; k < g.groups; ++k) {
        double mass = 0.0;
        for (int i = 0; i + 1 < inst.m; ++i) mass += group_x[k][i];
        group_x[k][inst.m - 1] = std::max(0.0, 1.0 - mass);  // null absorbs the rest
    }
    out.xs.resize(inst.T);
    for (int t = 1; t <= inst.T; ++t) {
        const int k = grouping.group_of_round[t - 1];
        out.xs[t - 1] = group_x[k];
        out.dual_alphas[t - 1] = rec.alpha[k];
    }
    return out;
}

DynamicLpSolution solve_dynamic_lp_dense(const BwkInstance& inst,
                                         const LpCoreOptions& opts) {
    inst.validate();
    DynamicLpSolution out;
    const int T = inst.T, m = inst.m, d = inst.d;
    LinearProgram lp(T * m);
    for (int t = 1; t <= T; ++t)
        for (int i = 0; i < m; ++i)
            lp.objective[(t - 1) * m + i] = inst.mu_at(t, i);
    std::vector<double> row(static_cast<size_t>(T) * m);
    for (int j = 0; j < d; ++j) {
        std::fill(row.begin(), row.end(), 0.0);
        for (int t = 1; t <= T; ++t)
            for (int i = 0; i < m; ++i) row[(t - 1) * m + i] = inst.c_at(t, j, i);
        lp.add_row(row, inst.budget[j], RowSense::le);
    }
    for (int t = 1; t <= T; ++t) {
        std::fill(row.begin(), row.end(), 0.0);
        for (int i = 0; i < m; ++i) row[(t - 1) * m + i] = 1.0;
        lp.add_row(row, 1.0, RowSense::le);
    }
    DenseSimplex solver{opts.simplex};
    LpSolve res = solver.solve(lp);
    out.status = res.status;
    out.value = res.value;
    out.dual_q.resize(d);
    for (int j = 0; j < d; ++j) out.dual_q[j] = clamp_nonneg(res.row_dual[j]);
    out.dual_alphas.resize(T);
    for (int t = 0; t < T; ++t) out.dual_alphas[t] = clamp_nonneg(res.row_dual[d + t]);
    out.xs.assign(T, std::vector<double>(m, 0.0));
    for (int t = 0; t < T; ++t) {
        double mass = 0.0;
        for (int i = 0; i < m; ++i) {
            out.xs[t][i] = res.x[static_cast<size_t>(t) * m + i];
            if (i + 1 < m) mass += out.xs[t][i];
        }
        out.xs[t][m - 1] = std::max(0.0, 1.0 - mass);
    }
    out.duality_gap = 0.0;
    return out;
}

LpSolution solve_static_lp(const BwkInstance& inst, const LpCoreOptions& opts) {
    inst.validate();
    std::vector<double> mu_bar(inst.m, 0.0), c_bar(static_cast<size_t>(inst.d) * inst.m, 0.0);
    for (int t = 1; t <= inst.T; ++t) {
        for (int i = 0; i < inst.m; ++i) mu_bar[i] += inst.mu_at(t, i);
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < inst.m; ++i)
                c_bar[static_cast<size_t>(j) * inst.m + i] += inst.c_at(t, j, i);
    }
    for (double& v : mu_bar) v /= inst.T;
    for (double& v : c_bar) v /= inst.T;
    LpSolution sol = solve_single_step_lp(mu_bar, c_bar, inst.per_round_budget, opts);
    sol.value *= inst.T;
    sol.dual_alpha *= inst.T;
    return sol;
}

SandwichReport check_lp_sandwich(const BwkInstance& inst, const LpCoreOptions& opts,
                                 double tolerance) {
    inst.validate();
    SandwichReport rep;
    const double tol = tolerance >= 0.0 ? tolerance : 1e-6 * inst.T;

    const RoundGrouping grouping = group_rounds(inst);
    const GroupedInstance g = make_grouped(inst, grouping);
    double qbar = 0.0;
    std::vector<double> mu_row(inst.m), c_block(static_cast<size_t>(inst.d) * inst.m);
    for (int k = 0; k < g.groups; ++k) {
        for (int i = 0; i < inst.m; ++i) mu_row[i] = g.mu_at(k, i);
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < inst.m; ++i)
                c_block[static_cast<size_t>(j) * inst.m + i] = g.c_at(k, j, i);
        LpSolution sol = solve_single_step_lp(mu_row, c_block, inst.per_round_budget, opts);
        rep.sum_single += g.weight[k] * sol.value;
        for (double qj : sol.dual_q) qbar = std::max(qbar, qj);
    }

    DynamicLpSolution dyn = solve_dynamic_lp(inst, opts);
    rep.dynamic = dyn.value;
    for (double qj : dyn.dual_q) qbar = std::max(qbar, qj);
    rep.qbar = qbar;

    // W1, W2 against the time averages, with the footnote's matrix norm
    // (max over arms of the per-arm column sum of absolute deviations).
    std::vector<double> mu_bar(inst.m, 0.0), c_bar(static_cast<size_t>(inst.d) * inst.m, 0.0);
    for (int t = 1; t <= inst.T; ++t) {
        for (int i = 0; i < inst.m; ++i) mu_bar[i] += inst.mu_at(t, i);
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < inst.m; ++i)
                c_bar[static_cast<size_t>(j) * inst.m + i] += inst.c_at(t, j, i);
    }
    for (double& v : mu_bar) v /= inst.T;
    for (double& v : c_bar) v /= inst.T;
    for (int t = 1; t <= inst.T; ++t) {
        double dev_mu = 0.0;
        for (int i = 0; i < inst.m; ++i)
            dev_mu = std::max(dev_mu, std::fabs(inst.mu_at(t, i) - mu_bar[i]));
        rep.w1 += dev_mu;
        double dev_c = 0.0;
        for (int i = 0; i < inst.m; ++i) {
            double col = 0.0;
            for (int j = 0; j < inst.d; ++j)
                col += std::fabs(inst.c_at(t, j, i) - c_bar[static_cast<size_t>(j) * inst.m + i]);
            dev_c = std::max(dev_c, col);
        }
        rep.w2 += dev_c;
    }

    LpSolution stat = solve_static_lp(inst, opts);
    rep.averaged_plus_w = stat.value + rep.w1 + rep.qbar * rep.w2;
    rep.sum_single_plus_2w = rep.sum_single + 2.0 * (rep.w1 + rep.qbar * rep.w2);
    double bmin = std::numeric_limits<double>::infinity();
    for (double bj : inst.per_round_budget) bmin = std::min(bmin, bj);
    rep.qbar_bound = bmin > 0.0 ? 1.0 / bmin : std::numeric_limits<double>::infinity();

    auto check = [&](int idx, double lhs, double rhs, double tol_local) {
        const double viol = lhs - rhs;
        if (viol > tol_local && rep.violated_inequality == 0) rep.violated_inequality = idx;
        rep.max_violation = std::max(rep.max_violation, viol);
    };
    check(1, rep.sum_single, rep.dynamic, tol);
    check(2, rep.dynamic, rep.averaged_plus_w, tol);
    check(3, rep.averaged_plus_w, rep.sum_single_plus_2w, tol);
    check(4, rep.qbar, rep.qbar_bound, 1e-9);
    return rep;
}

}  // namespace bwksim
