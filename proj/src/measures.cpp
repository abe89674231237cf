#include "bwksim/measures.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace bwksim {

namespace {

// Both refined measures reduce to
//   min over anchor  sum_g w_g * (max over arms of a signed-combination bound)
// which we solve through the LP dual: one equality row per group (mass w_g)
// plus one equality row per anchor coordinate (signed weights balance). The
// row multipliers of the dual are exactly the primal minimizers.
struct RefinedLpSpec {
    int groups = 0;
    int coords = 0;     // anchor dimension (m' for W1, d*m' for W2)
    int signs = 0;      // 2 for W1, 2^d for W2
    std::vector<double> weight;
    // value(g, column-of-(i, sigma)) and the sigma pattern applied per coordinate
    std::vector<double> col_obj;          // groups x (m' * signs)
    std::vector<std::vector<int>> col_coord;   // per (i,sigma): touched coordinates
    std::vector<std::vector<double>> col_sign;
};

struct RefinedLpResult {
    double value = 0.0;
    std::vector<double> deviation;  // per group
    std::vector<double> anchor;     // per coordinate
};

RefinedLpResult solve_refined_lp(const RefinedLpSpec& spec, const MeasuresOptions& opts) {
    const int per_group = static_cast<int>(spec.col_coord.size());
    const long long cols = static_cast<long long>(spec.groups) * per_group;
    const long long rows = spec.groups + spec.coords;
    if (cols > opts.refined_size_cap || (rows + 1) * (cols + 2 * rows + 1) > 20000000)
        throw std::invalid_argument("refined_budgets: size cap exceeded");

    LinearProgram lp(static_cast<int>(cols));
    for (int g = 0; g < spec.groups; ++g)
        for (int c = 0; c < per_group; ++c)
            lp.objective[static_cast<size_t>(g) * per_group + c] =
                spec.col_obj[static_cast<size_t>(g) * per_group + c];

    std::vector<double> row(cols, 0.0);
    for (int g = 0; g < spec.groups; ++g) {
        std::fill(row.begin(), row.end(), 0.0);
        for (int c = 0; c < per_group; ++c) row[static_cast<size_t>(g) * per_group + c] = 1.0;
        lp.add_row(row, spec.weight[g], RowSense::eq);
    }
    for (int k = 0; k < spec.coords; ++k) {
        std::fill(row.begin(), row.end(), 0.0);
        for (int g = 0; g < spec.groups; ++g)
            for (int c = 0; c < per_group; ++c) {
                const auto& touched = spec.col_coord[c];
                for (size_t idx = 0; idx < touched.size(); ++idx)
                    if (touched[idx] == k)
                        row[static_cast<size_t>(g) * per_group + c] = spec.col_sign[c][idx];
            }
        lp.add_row(row, 0.0, RowSense::eq);
    }

    SimplexOptions sopts = opts.lp.simplex;
    sopts.max_iterations = std::max(200000, 50 * (spec.groups + spec.coords +
                                                  static_cast<int>(cols)));
    DenseSimplex solver{sopts};
    LpSolve res = solver.solve(lp);
    if (res.status != SolveStatus::optimal)
        throw std::runtime_error("refined_budgets: simplex failed: " +
                                 std::string(to_string(res.status)));

    RefinedLpResult out;
    out.value = res.value;
    out.deviation.assign(res.row_dual.begin(), res.row_dual.begin() + spec.groups);
    out.anchor.assign(res.row_dual.begin() + spec.groups, res.row_dual.end());
    return out;
}

}  // namespace

LocalBudgets local_budgets(const BwkInstance& inst) {
    LocalBudgets out;
    out.v2_per_resource.assign(inst.d, 0.0);
    for (int t = 1; t < inst.T; ++t) {
        double dmu = 0.0;
        for (int i = 0; i < inst.m; ++i)
            dmu = std::max(dmu, std::fabs(inst.mu_at(t, i) - inst.mu_at(t + 1, i)));
        out.v1 += dmu;
        for (int j = 0; j < inst.d; ++j) {
            double dc = 0.0;
            for (int i = 0; i < inst.m; ++i)
                dc = std::max(dc, std::fabs(inst.c_at(t, j, i) - inst.c_at(t + 1, j, i)));
            out.v2_per_resource[j] += dc;
        }
    }
    for (double v : out.v2_per_resource) out.v2 = std::max(out.v2, v);
    return out;
}

GlobalBudgets global_budgets(const BwkInstance& inst) {
    GlobalBudgets out;
    std::vector<double> mu_bar(inst.m, 0.0);
    std::vector<double> c_bar(static_cast<size_t>(inst.d) * inst.m, 0.0);
    for (int t = 1; t <= inst.T; ++t) {
        for (int i = 0; i < inst.m; ++i) mu_bar[i] += inst.mu_at(t, i);
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < inst.m; ++i)
                c_bar[static_cast<size_t>(j) * inst.m + i] += inst.c_at(t, j, i);
    }
    for (double& v : mu_bar) v /= inst.T;
    for (double& v : c_bar) v /= inst.T;
    for (int t = 1; t <= inst.T; ++t) {
        double dev = 0.0;
        for (int i = 0; i < inst.m; ++i)
            dev = std::max(dev, std::fabs(inst.mu_at(t, i) - mu_bar[i]));
        out.w1 += dev;
        double devc = 0.0;
        for (int i = 0; i < inst.m; ++i) {
            double col = 0.0;
            for (int j = 0; j < inst.d; ++j)
                col += std::fabs(inst.c_at(t, j, i) -
                                 c_bar[static_cast<size_t>(j) * inst.m + i]);
            devc = std::max(devc, col);
        }
        out.w2 += devc;
    }
    return out;
}

RefinedBudgets refined_budgets(const BwkInstance& inst, const MeasuresOptions& opts) {
    inst.validate();
    if (static_cast<long long>(inst.T) * inst.m > opts.refined_size_cap)
        throw std::invalid_argument("refined_budgets: T*m exceeds the size cap");
    if (inst.d > 8) throw std::invalid_argument("refined_budgets: d > 8 unsupported");

    const RoundGrouping grouping = group_rounds(inst);
    const int G = static_cast<int>(grouping.representative.size());
    const int ma = inst.m - 1;  // null arm dropped: its optimal anchor entry is 0
    RefinedBudgets out;
    out.mu_star.assign(inst.m, 0.0);
    out.c_star.assign(static_cast<size_t>(inst.d) * inst.m, 0.0);
    if (ma == 0) return out;

    // W1_min: columns (arm i, sign +-1), coordinate i touched with that sign.
    {
        RefinedLpSpec spec;
        spec.groups = G;
        spec.coords = ma;
        spec.signs = 2;
        spec.weight.assign(G, 0.0);
        for (int g = 0; g < G; ++g) spec.weight[g] = grouping.count[g];
        for (int i = 0; i < ma; ++i)
            for (int s = 0; s < 2; ++s) {
                spec.col_coord.push_back({i});
                spec.col_sign.push_back({s == 0 ? 1.0 : -1.0});
            }
        const int per_group = 2 * ma;
        spec.col_obj.resize(static_cast<size_t>(G) * per_group);
        for (int g = 0; g < G; ++g) {
            const int t = grouping.representative[g];
            for (int i = 0; i < ma; ++i)
                for (int s = 0; s < 2; ++s)
                    spec.col_obj[static_cast<size_t>(g) * per_group + 2 * i + s] =
                        (s == 0 ? 1.0 : -1.0) * inst.mu_at(t, i);
        }
        RefinedLpResult res = solve_refined_lp(spec, opts);
        out.w1_min = res.value;
        for (int i = 0; i < ma; ++i) {
            double lo = 1.0, hi = 0.0;
            for (int g = 0; g < G; ++g) {
                const double v = inst.mu_at(grouping.representative[g], i);
                lo = std::min(lo, v);
                hi = std::max(hi, v);
            }
            out.mu_star[i] = std::clamp(res.anchor[i], lo, hi);
        }
        // Clamping into the coordinate-wise box never increases any deviation;
        // recompute and require agreement with the LP value.
        double check = 0.0;
        for (int g = 0; g < G; ++g) {
            const int t = grouping.representative[g];
            double dev = 0.0;
            for (int i = 0; i < ma; ++i)
                dev = std::max(dev, std::fabs(inst.mu_at(t, i) - out.mu_star[i]));
            check += grouping.count[g] * dev;
        }
        if (std::fabs(check - out.w1_min) > 1e-6 * std::max(1.0, std::fabs(out.w1_min)))
            throw std::runtime_error("refined_budgets: W1_min minimizer mismatch");
    }

    // W2_min: columns (arm i, sign pattern over resources); coordinate (j,i).
    {
        RefinedLpSpec spec;
        spec.groups = G;
        spec.coords = inst.d * ma;
        spec.signs = 1 << inst.d;
        spec.weight.assign(G, 0.0);
        for (int g = 0; g < G; ++g) spec.weight[g] = grouping.count[g];
        for (int i = 0; i < ma; ++i)
            for (int mask = 0; mask < spec.signs; ++mask) {
                std::vector<int> coords(inst.d);
                std::vector<double> sgns(inst.d);
                for (int j = 0; j < inst.d; ++j) {
                    coords[j] = j * ma + i;
                    sgns[j] = (mask >> j) & 1 ? -1.0 : 1.0;
                }
                spec.col_coord.push_back(std::move(coords));
                spec.col_sign.push_back(std::move(sgns));
            }
        const int per_group = ma * spec.signs;
        spec.col_obj.resize(static_cast<size_t>(G) * per_group);
        for (int g = 0; g < G; ++g) {
            const int t = grouping.representative[g];
            int c = 0;
            for (int i = 0; i < ma; ++i)
                for (int mask = 0; mask < spec.signs; ++mask, ++c) {
                    double v = 0.0;
                    for (int j = 0; j < inst.d; ++j)
                        v += ((mask >> j) & 1 ? -1.0 : 1.0) * inst.c_at(t, j, i);
                    spec.col_obj[static_cast<size_t>(g) * per_group + c] = v;
                }
        }
        RefinedLpResult res = solve_refined_lp(spec, opts);
        out.w2_min = res.value;
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < ma; ++i) {
                double lo = 1.0, hi = 0.0;
                for (int g = 0; g < G; ++g) {
                    const double v = inst.c_at(grouping.representative[g], j, i);
                    lo = std::min(lo, v);
                    hi = std::max(hi, v);
                }
                out.c_star[static_cast<size_t>(j) * inst.m + i] =
                    std::clamp(res.anchor[j * ma + i], lo, hi);
            }
        double check = 0.0;
        for (int g = 0; g < G; ++g) {
            const int t = grouping.representative[g];
            double dev = 0.0;
            for (int i = 0; i < ma; ++i) {
                double col = 0.0;
                for (int j = 0; j < inst.d; ++j)
                    col += std::fabs(inst.c_at(t, j, i) -
                                     out.c_star[static_cast<size_t>(j) * inst.m + i]);
                dev = std::max(dev, col);
            }
            check += grouping.count[g] * dev;
        }
        if (std::fabs(check - out.w2_min) > 1e-6 * std::max(1.0, std::fabs(out.w2_min)))
            throw std::runtime_error("refined_budgets: W2_min minimizer mismatch");
    }
    return out;
}

NonstationarityReport compute_nonstationarity(const BwkInstance& inst,
                                              const MeasuresOptions& opts) {
    NonstationarityReport rep;
    const LocalBudgets lb = local_budgets(inst);
    rep.v1 = lb.v1;
    rep.v2_per_resource = lb.v2_per_resource;
    rep.v2 = lb.v2;
    const GlobalBudgets gb = global_budgets(inst);
    rep.w1 = gb.w1;
    rep.w2 = gb.w2;
    const RefinedBudgets rb = refined_budgets(inst, opts);
    rep.w1_min = rb.w1_min;
    rep.w2_min = rb.w2_min;
    rep.mu_star = rb.mu_star;
    rep.c_star = rb.c_star;
    return rep;
}

}  // namespace bwksim
