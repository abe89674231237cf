#include "bwksim/ocowc.hpp"

#include <algorithm>
#include <cmath>
#include <cstring>
#include <limits>
#include <stdexcept>
#include <unordered_map>

namespace bwksim {

namespace {

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

struct OcoGroups {
    int G = 0;
    std::vector<int> group_of_round;  // 0-based by round-1
    std::vector<int> rep;             // 1-based round
    std::vector<double> weight;
};

OcoGroups group_oco(const OcoInstance& inst) {
    OcoGroups out;
    out.group_of_round.resize(inst.T);
    std::unordered_map<std::string, int> seen;
    std::string key;
    for (int t = 1; t <= inst.T; ++t) {
        key.clear();
        const CostFn& f = inst.f(t);
        auto append = [&key](const double* p, size_t n) {
            key.append(reinterpret_cast<const char*>(p), n * sizeof(double));
        };
        append(f.quad.data(), f.quad.size());
        append(f.slope.data(), f.slope.size());
        append(&f.offset, 1);
        for (int i = 0; i < inst.d; ++i) {
            const AffineFn& g = inst.g(t, i);
            append(g.slope.data(), g.slope.size());
            append(&g.offset, 1);
        }
        auto [it, inserted] = seen.emplace(key, out.G);
        if (inserted) {
            out.rep.push_back(t);
            out.weight.push_back(0.0);
            ++out.G;
        }
        out.group_of_round[t - 1] = it->second;
        out.weight[it->second] += 1.0;
    }
    return out;
}

// ---- box LP helpers (affine costs) ------------------------------------------

// min f(x) s.t. rows of (slope.x + offset <= 0), x in box, via the simplex on
// the shifted variable z = x - lo. Returns min value; x_out/dual_out optional.
struct BoxLpResult {
    SolveStatus status = SolveStatus::optimal;
    double value = 0.0;
    std::vector<double> x;
    std::vector<double> dual;  // one multiplier per affine row, >= 0
};

BoxLpResult solve_box_min(const OcoDomain& box, const CostFn& f,
                          const std::vector<AffineFn>& constraints,
                          const LpCoreOptions& opts) {
    const int n = box.dim;
    LinearProgram lp(n);
    double const_term = f.offset;
    for (int k = 0; k < n; ++k) {
        lp.objective[k] = -f.slope[k];  // maximize -f
        const_term += f.slope[k] * box.lo[k];
    }
    for (const AffineFn& g : constraints) {
        double rhs = -g.offset;
        for (int k = 0; k < n; ++k) rhs -= g.slope[k] * box.lo[k];
        lp.add_row(g.slope, rhs, RowSense::le);
    }
    for (int k = 0; k < n; ++k) {
        std::vector<double> row(n, 0.0);
        row[k] = 1.0;
        lp.add_row(row, box.hi[k] - box.lo[k], RowSense::le);
    }
    DenseSimplex solver{opts.simplex};
    LpSolve res = solver.solve(lp);
    BoxLpResult out;
    out.status = res.status;
    if (res.status != SolveStatus::optimal) return out;
    out.value = -(res.value) + const_term;
    out.x.resize(n);
    for (int k = 0; k < n; ++k) out.x[k] = box.lo[k] + res.x[k];
    out.dual.resize(constraints.size());
    for (size_t r = 0; r < constraints.size(); ++r)
        out.dual[r] = std::max(0.0, res.row_dual[r]);
    return out;
}

// Inner minimum over the box of f_g + q.g_g (affine), plus the per-axis
// candidate endpoints within tie_tol for primal recovery.
double inner_min_box(const OcoDomain& box, const CostFn& f,
                     const AffineFn* gs, int d, std::span<const double> q,
                     std::vector<double>* argmin) {
    double value = f.offset;
    for (int i = 0; i < d; ++i) value += q[i] * gs[i].offset;
    if (argmin) argmin->resize(box.dim);
    for (int k = 0; k < box.dim; ++k) {
        double coef = f.slope[k];
        for (int i = 0; i < d; ++i) coef += q[i] * gs[i].slope[k];
        const double pick = coef >= 0.0 ? box.lo[k] : box.hi[k];
        value += coef * pick;
        if (argmin) (*argmin)[k] = pick;
    }
    return value;
}

struct FluidDual {
    double phi = 0.0;
    std::vector<double> grad;
};

FluidDual fluid_dual_value(const OcoInstance& inst, const OcoGroups& groups,
                           std::span<const double> q) {
    FluidDual out;
    out.grad.assign(inst.d, 0.0);
    std::vector<double> x;
    for (int g = 0; g < groups.G; ++g) {
        const int t = groups.rep[g];
        out.phi += groups.weight[g] *
                   inner_min_box(inst.domain, inst.f(t), &inst.gs[(t - 1) * inst.d],
                                 inst.d, q, &x);
        for (int i = 0; i < inst.d; ++i)
            out.grad[i] += groups.weight[g] * inst.g(t, i).eval(x);
    }
    return out;
}

struct FluidRecovery {
    bool ok = false;
    double value = 0.0;
    std::vector<double> q;
    std::vector<std::vector<double>> group_x;
};

FluidRecovery recover_fluid(const OcoInstance& inst, const OcoGroups& groups,
                            std::span<const double> q_hat, double tie_tol,
                            const LpCoreOptions& opts) {
    FluidRecovery out;
    // Candidate vertices per group: per axis take the argmin endpoint, both on a tie.
    std::vector<std::vector<std::vector<double>>> verts(groups.G);
    std::vector<int> col_group;
    std::vector<std::vector<double>> col_vertex;
    for (int g = 0; g < groups.G; ++g) {
        const int t = groups.rep[g];
        const CostFn& f = inst.f(t);
        std::vector<std::vector<double>> axis_opts(inst.dim);
        for (int k = 0; k < inst.dim; ++k) {
            double coef = f.slope[k];
            for (int i = 0; i < inst.d; ++i)
                coef += q_hat[i] * inst.g(t, i).slope[k];
            if (std::fabs(coef) <= tie_tol)
                axis_opts[k] = {inst.domain.lo[k], inst.domain.hi[k]};
            else
                axis_opts[k] = {coef > 0.0 ? inst.domain.lo[k] : inst.domain.hi[k]};
        }
        std::vector<double> v(inst.dim, 0.0);
        size_t combos = 1;
        for (auto& a : axis_opts) combos *= a.size();
        if (combos > 64) return out;  // pathological tie blow-up
        for (size_t c = 0; c < combos; ++c) {
            size_t rest = c;
            for (int k = 0; k < inst.dim; ++k) {
                v[k] = axis_opts[k][rest % axis_opts[k].size()];
                rest /= axis_opts[k].size();
            }
            col_group.push_back(g);
            col_vertex.push_back(v);
        }
    }
    const int cols = static_cast<int>(col_group.size());
    LinearProgram lp(cols);
    for (int c = 0; c < cols; ++c) {
        const int t = groups.rep[col_group[c]];
        lp.objective[c] = -groups.weight[col_group[c]] * inst.f(t).eval(col_vertex[c]);
    }
    std::vector<double> row(cols);
    for (int i = 0; i < inst.d; ++i) {
        for (int c = 0; c < cols; ++c) {
            const int t = groups.rep[col_group[c]];
            row[c] = groups.weight[col_group[c]] * inst.g(t, i).eval(col_vertex[c]);
        }
        lp.add_row(row, 0.0, RowSense::le);
    }
    for (int g = 0; g < groups.G; ++g) {
        for (int c = 0; c < cols; ++c) row[c] = col_group[c] == g ? 1.0 : 0.0;
        lp.add_row(row, 1.0, RowSense::eq);
    }
    DenseSimplex solver{opts.simplex};
    LpSolve res = solver.solve(lp);
    if (res.status != SolveStatus::optimal) return out;
    out.ok = true;
    out.value = -res.value;
    out.q.resize(inst.d);
    for (int i = 0; i < inst.d; ++i) out.q[i] = std::max(0.0, res.row_dual[i]);
    out.group_x.assign(groups.G, std::vector<double>(inst.dim, 0.0));
    for (int c = 0; c < cols; ++c)
        for (int k = 0; k < inst.dim; ++k)
            out.group_x[col_group[c]][k] += res.x[c] * col_vertex[c][k];
    return out;
}

// Refining grid search for the static benchmarks of non-affine instances.
// objective/feasible are evaluated at exact points; levels shrink around the
// incumbent until the cell size reaches the step target.
template <typename Obj, typename Feas>
bool grid_minimize(const OcoDomain& dom, double step_target, Obj&& objective,
                   Feas&& feasible, double& best_value, std::vector<double>& best_x) {
    const int n = dom.dim;
    if (n > 3) fail("oco grid oracle: dimension must be <= 3");
    std::vector<double> lo(n), hi(n);
    if (dom.kind == OcoDomain::Kind::box) {
        lo = dom.lo;
        hi = dom.hi;
    } else {
        for (int k = 0; k < n; ++k) {
            lo[k] = dom.center[k] - dom.radius;
            hi[k] = dom.center[k] + dom.radius;
        }
    }
    const int pts = 21;
    bool found = false;
    best_value = std::numeric_limits<double>::infinity();
    std::vector<double> x(n);
    for (int level = 0; level < 16; ++level) {
        double cell = 0.0;
        std::vector<int> idx(n, 0);
        bool done = false;
        while (!done) {
            for (int k = 0; k < n; ++k)
                x[k] = lo[k] + (hi[k] - lo[k]) * idx[k] / (pts - 1);
            if (dom.contains(x, 1e-9) && feasible(x)) {
                const double v = objective(x);
                if (!found || v < best_value) {
                    found = true;
                    best_value = v;
                    best_x = x;
                }
            }
            int k = 0;
            while (k < n && ++idx[k] == pts) idx[k++] = 0;
            done = k == n;
        }
        for (int k = 0; k < n; ++k) cell = std::max(cell, (hi[k] - lo[k]) / (pts - 1));
        if (!found) return false;  // no feasible grid point; caller decides
        if (cell <= step_target) break;
        for (int k = 0; k < n; ++k) {
            const double span = 1.5 * (hi[k] - lo[k]) / (pts - 1);
            lo[k] = std::max(lo[k], best_x[k] - span);
            hi[k] = std::min(hi[k], best_x[k] + span);
        }
    }
    return found;
}

// Best common slack of the restricted benchmark program: max_x min_{t,i}
// -g_{t,i}(x). A negative result means the program is infeasible and the
// benchmarks are rejected; a zero slack (constraints touch the boundary only)
// is accepted since the LPs stay solvable, with the slack reported.
double measure_slater(const OcoInstance& inst, const OcoGroups& groups,
                      const OcoOptions& opts) {
    if (inst.domain.kind == OcoDomain::Kind::box) {
        const int n = inst.dim;
        // max s over the shifted box with a free-sign slack split s = s+ - s-.
        LinearProgram lp(n + 2);
        lp.objective[n] = 1.0;
        lp.objective[n + 1] = -1.0;
        for (int g = 0; g < groups.G; ++g) {
            const int t = groups.rep[g];
            for (int i = 0; i < inst.d; ++i) {
                const AffineFn& gf = inst.g(t, i);
                std::vector<double> row(n + 2, 0.0);
                double rhs = -gf.offset;
                for (int k = 0; k < n; ++k) {
                    row[k] = gf.slope[k];
                    rhs -= gf.slope[k] * inst.domain.lo[k];
                }
                row[n] = 1.0;
                row[n + 1] = -1.0;
                lp.add_row(row, rhs, RowSense::le);
            }
        }
        for (int k = 0; k < n; ++k) {
            std::vector<double> row(n + 2, 0.0);
            row[k] = 1.0;
            lp.add_row(row, inst.domain.hi[k] - inst.domain.lo[k], RowSense::le);
        }
        {
            // cap the slack so the LP stays bounded
            std::vector<double> row(n + 2, 0.0);
            row[n] = 1.0;
            lp.add_row(row, 1e6, RowSense::le);
        }
        DenseSimplex solver{opts.lp.simplex};
        LpSolve res = solver.solve(lp);
        if (res.status != SolveStatus::optimal)
            throw std::runtime_error("oco_benchmarks: slack program failed");
        return res.value;
    }
    double best = 0.0;
    std::vector<double> xb;
    const bool found = grid_minimize(
        inst.domain, opts.grid_step,
        [&](const std::vector<double>& x) {
            double worst = -std::numeric_limits<double>::infinity();
            for (int g = 0; g < groups.G; ++g)
                for (int i = 0; i < inst.d; ++i)
                    worst = std::max(worst, inst.g(groups.rep[g], i).eval(x));
            return worst;
        },
        [](const std::vector<double>&) { return true; }, best, xb);
    if (!found) throw std::runtime_error("oco_benchmarks: slack grid failed");
    return -best;
}

}  // namespace

// ---- domain / function primitives -------------------------------------------

OcoDomain OcoDomain::make_box(std::vector<double> lo, std::vector<double> hi) {
    OcoDomain d;
    d.kind = Kind::box;
    d.dim = static_cast<int>(lo.size());
    if (hi.size() != lo.size()) fail("OcoDomain: lo/hi size mismatch");
    for (size_t k = 0; k < lo.size(); ++k)
        if (!(lo[k] <= hi[k])) fail("OcoDomain: empty box");
    d.lo = std::move(lo);
    d.hi = std::move(hi);
    return d;
}

OcoDomain OcoDomain::make_ball(std::vector<double> center, double radius) {
    OcoDomain d;
    d.kind = Kind::ball;
    d.dim = static_cast<int>(center.size());
    if (!(radius > 0.0)) fail("OcoDomain: radius must be positive");
    d.center = std::move(center);
    d.radius = radius;
    return d;
}

void OcoDomain::project(std::vector<double>& x) const {
    if (kind == Kind::box) {
        for (int k = 0; k < dim; ++k) x[k] = std::clamp(x[k], lo[k], hi[k]);
    } else {
        double norm2 = 0.0;
        for (int k = 0; k < dim; ++k) {
            const double dk = x[k] - center[k];
            norm2 += dk * dk;
        }
        if (norm2 > radius * radius) {
            const double f = radius / std::sqrt(norm2);
            for (int k = 0; k < dim; ++k) x[k] = center[k] + f * (x[k] - center[k]);
        }
    }
}

bool OcoDomain::contains(std::span<const double> x, double tol) const {
    if (kind == Kind::box) {
        for (int k = 0; k < dim; ++k)
            if (x[k] < lo[k] - tol || x[k] > hi[k] + tol) return false;
        return true;
    }
    double norm2 = 0.0;
    for (int k = 0; k < dim; ++k) {
        const double dk = x[k] - center[k];
        norm2 += dk * dk;
    }
    return norm2 <= (radius + tol) * (radius + tol);
}

double AffineFn::eval(std::span<const double> x) const {
    double v = offset;
    for (size_t k = 0; k < slope.size(); ++k) v += slope[k] * x[k];
    return v;
}

double CostFn::eval(std::span<const double> x) const {
    double v = offset;
    const int n = static_cast<int>(slope.size());
    for (int k = 0; k < n; ++k) v += slope[k] * x[k];
    if (!quad.empty())
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) v += quad[static_cast<size_t>(a) * n + b] * x[a] * x[b];
    return v;
}

void CostFn::gradient(std::span<const double> x, std::vector<double>& out) const {
    const int n = static_cast<int>(slope.size());
    out.assign(slope.begin(), slope.end());
    if (!quad.empty())
        for (int a = 0; a < n; ++a)
            for (int b = 0; b < n; ++b) {
                out[a] += quad[static_cast<size_t>(a) * n + b] * x[b];
                out[b] += quad[static_cast<size_t>(a) * n + b] * x[a];
            }
}

bool OcoInstance::all_costs_affine() const {
    for (const CostFn& f : fs)
        if (!f.affine()) return false;
    return true;
}

void OcoInstance::validate() const {
    if (T < 1 || dim < 1 || d < 1) fail("oco instance: T, dim, d must be positive");
    if (domain.dim != dim) fail("oco instance: domain dimension mismatch");
    if (static_cast<int>(fs.size()) != T) fail("oco instance: fs size != T");
    if (gs.size() != static_cast<size_t>(T) * d) fail("oco instance: gs size != T*d");
    auto finite = [](double v) { return std::isfinite(v); };
    for (const CostFn& f : fs) {
        if (static_cast<int>(f.slope.size()) != dim) fail("oco instance: cost slope size");
        if (!f.quad.empty() && static_cast<int>(f.quad.size()) != dim * dim)
            fail("oco instance: quad size");
        if (!finite(f.offset)) fail("oco instance: non-finite cost");
        for (double v : f.slope)
            if (!finite(v)) fail("oco instance: non-finite cost");
        if (!f.quad.empty()) {
            // LDL^T with a tolerance: reject negative-definite directions.
            const int n = dim;
            std::vector<double> a(f.quad);
            for (int i = 0; i < n; ++i)
                for (int j = 0; j < i; ++j) {
                    const double s =
                        0.5 * (a[static_cast<size_t>(i) * n + j] + a[static_cast<size_t>(j) * n + i]);
                    a[static_cast<size_t>(i) * n + j] = a[static_cast<size_t>(j) * n + i] = s;
                }
            for (int k = 0; k < n; ++k) {
                double dk = a[static_cast<size_t>(k) * n + k];
                for (int p = 0; p < k; ++p) {
                    const double lkp = a[static_cast<size_t>(k) * n + p];
                    dk -= lkp * lkp * a[static_cast<size_t>(p) * n + p];
                }
                if (dk < -1e-8) fail("oco instance: quadratic term is not PSD");
                a[static_cast<size_t>(k) * n + k] = std::max(dk, 0.0);
                for (int r = k + 1; r < n; ++r) {
                    double v = a[static_cast<size_t>(r) * n + k];
                    for (int p = 0; p < k; ++p)
                        v -= a[static_cast<size_t>(r) * n + p] *
                             a[static_cast<size_t>(k) * n + p] *
                             a[static_cast<size_t>(p) * n + p];
                    a[static_cast<size_t>(r) * n + k] =
                        a[static_cast<size_t>(k) * n + k] > 1e-12
                            ? v / a[static_cast<size_t>(k) * n + k]
                            : 0.0;
                }
            }
        }
    }
    for (const AffineFn& g : gs) {
        if (static_cast<int>(g.slope.size()) != dim) fail("oco instance: g slope size");
        if (!finite(g.offset)) fail("oco instance: non-finite constraint");
        for (double v : g.slope)
            if (!finite(v)) fail("oco instance: non-finite constraint");
    }
}

OcoInstance build_two_phase_oco_instance(int T, double r, double b, double delta) {
    if (T < 2 || T % 2 != 0) fail("two-phase oco instance: T must be even");
    if (!(b > 0.0)) fail("two-phase oco instance: b must be positive");
    OcoInstance inst;
    inst.T = T;
    inst.dim = 1;
    inst.d = 1;
    inst.domain = OcoDomain::make_box({0.0}, {1.0});
    inst.fs.assign(T, CostFn{{}, {-r}, 0.0});
    inst.gs.resize(T);
    for (int t = 1; t <= T; ++t)
        inst.gs[t - 1] = AffineFn{{b + (t <= T / 2 ? delta : 0.0)}, -b / 2.0};
    inst.label = "oco_two_phase";
    return inst;
}

// ---- benchmarks --------------------------------------------------------------

OcoBenchmarks oco_benchmarks(const OcoInstance& inst, const OcoOptions& opts) {
    inst.validate();
    OcoBenchmarks out;
    const OcoGroups groups = group_oco(inst);
    out.slater_slack = measure_slater(inst, groups, opts);
    if (out.slater_slack < -opts.slater_tol)
        throw std::runtime_error(
            "oco_benchmarks: restricted benchmark program is infeasible (slack " +
            std::to_string(out.slater_slack) + ")");
    const double tol = opts.gap_tol_per_round * inst.T;
    const bool affine = inst.all_costs_affine();

    // Static comparator pair.
    if (affine && inst.domain.kind == OcoDomain::Kind::box) {
        std::vector<AffineFn> agg(inst.d);
        for (int i = 0; i < inst.d; ++i) {
            agg[i].slope.assign(inst.dim, 0.0);
            agg[i].offset = 0.0;
            for (int g = 0; g < groups.G; ++g) {
                const AffineFn& gf = inst.g(groups.rep[g], i);
                for (int k = 0; k < inst.dim; ++k)
                    agg[i].slope[k] += groups.weight[g] * gf.slope[k];
                agg[i].offset += groups.weight[g] * gf.offset;
            }
        }
        CostFn total_f;
        total_f.slope.assign(inst.dim, 0.0);
        total_f.offset = 0.0;
        for (int g = 0; g < groups.G; ++g) {
            const CostFn& f = inst.f(groups.rep[g]);
            for (int k = 0; k < inst.dim; ++k)
                total_f.slope[k] += groups.weight[g] * f.slope[k];
            total_f.offset += groups.weight[g] * f.offset;
        }
        BoxLpResult res = solve_box_min(inst.domain, total_f, agg, opts.lp);
        if (res.status != SolveStatus::optimal)
            throw std::runtime_error("oco_benchmarks: static aggregate LP failed");
        out.opt_static = res.value;
        out.x_static = res.x;
        for (double y : res.dual) out.qbar_static = std::max(out.qbar_static, y);

        std::vector<AffineFn> all;
        for (int g = 0; g < groups.G; ++g)
            for (int i = 0; i < inst.d; ++i) all.push_back(inst.g(groups.rep[g], i));
        BoxLpResult res2 = solve_box_min(inst.domain, total_f, all, opts.lp);
        if (res2.status != SolveStatus::optimal)
            throw std::runtime_error("oco_benchmarks: static restricted LP failed");
        out.opt_restricted_static = res2.value;
        out.x_restricted_static = res2.x;
        for (double y : res2.dual) out.qbar_static = std::max(out.qbar_static, y);
    } else {
        auto total_cost = [&](const std::vector<double>& x) {
            double v = 0.0;
            for (int g = 0; g < groups.G; ++g)
                v += groups.weight[g] * inst.f(groups.rep[g]).eval(x);
            return v;
        };
        double v = 0.0;
        std::vector<double> x;
        bool ok = grid_minimize(
            inst.domain, opts.grid_step, total_cost,
            [&](const std::vector<double>& xx) {
                for (int i = 0; i < inst.d; ++i) {
                    double s = 0.0;
                    for (int g = 0; g < groups.G; ++g)
                        s += groups.weight[g] * inst.g(groups.rep[g], i).eval(xx);
                    if (s > 1e-9) return false;
                }
                return true;
            },
            v, x);
        if (!ok) throw std::runtime_error("oco_benchmarks: grid found no feasible point");
        out.opt_static = v;
        out.x_static = x;
        ok = grid_minimize(
            inst.domain, opts.grid_step, total_cost,
            [&](const std::vector<double>& xx) {
                for (int g = 0; g < groups.G; ++g)
                    for (int i = 0; i < inst.d; ++i)
                        if (inst.g(groups.rep[g], i).eval(xx) > 1e-9) return false;
                return true;
            },
            v, x);
        if (!ok) throw std::runtime_error("oco_benchmarks: grid found no feasible point");
        out.opt_restricted_static = v;
        out.x_restricted_static = x;
    }

    if (!(affine && inst.domain.kind == OcoDomain::Kind::box)) {
        // Grid-oracle instances return the static pair as the primary one.
        out.fluid_pair = false;
        out.opt = out.opt_static;
        out.opt_restricted = out.opt_restricted_static;
        out.qbar = out.qbar_static;
        return out;
    }

    // Fluid pair: per-round feasible minimizers vs aggregate-constrained rounds.
    out.fluid_pair = true;
    std::vector<std::vector<double>> group_restricted(groups.G);
    out.opt_restricted = 0.0;
    double qbar = 0.0;
    for (int g = 0; g < groups.G; ++g) {
        const int t = groups.rep[g];
        std::vector<AffineFn> cons(inst.gs.begin() + (t - 1) * inst.d,
                                   inst.gs.begin() + static_cast<size_t>(t) * inst.d);
        BoxLpResult res = solve_box_min(inst.domain, inst.f(t), cons, opts.lp);
        if (res.status != SolveStatus::optimal)
            throw std::runtime_error("oco_benchmarks: per-round LP failed");
        out.opt_restricted += groups.weight[g] * res.value;
        group_restricted[g] = res.x;
        for (double y : res.dual) qbar = std::max(qbar, y);
    }

    // Aggregate program by dual ascent on the concave piecewise-linear dual.
    std::vector<double> q_hat(inst.d, 0.0);
    if (inst.d == 1) {
        std::vector<double> knots{0.0};
        for (int g = 0; g < groups.G; ++g) {
            const int t = groups.rep[g];
            for (int k = 0; k < inst.dim; ++k) {
                const double h = inst.g(t, 0).slope[k];
                if (std::fabs(h) > 1e-14) {
                    const double q = -inst.f(t).slope[k] / h;
                    if (q > 0.0 && std::isfinite(q)) knots.push_back(q);
                }
            }
        }
        std::sort(knots.begin(), knots.end());
        knots.erase(std::unique(knots.begin(), knots.end()), knots.end());
        double best_phi = -std::numeric_limits<double>::infinity();
        std::vector<double> qv(1);
        for (double q : knots) {
            qv[0] = q;
            const double phi = fluid_dual_value(inst, groups, qv).phi;
            if (phi > best_phi + 1e-15) {
                best_phi = phi;
                q_hat[0] = q;
            }
        }
    } else {
        std::vector<double> q(inst.d, 0.0), best_q(inst.d, 0.0);
        double best_phi = -std::numeric_limits<double>::infinity();
        double delta = 1.0;
        bool have_primal = false;
        double primal = 0.0;
        for (int iter = 0; iter < opts.lp.subgradient_max_iters; ++iter) {
            FluidDual fd = fluid_dual_value(inst, groups, q);
            if (fd.phi > best_phi) {
                best_phi = fd.phi;
                best_q = q;
            }
            double norm2 = 0.0;
            for (double v : fd.grad) norm2 += v * v;
            if (norm2 < 1e-18) break;
            const double target = have_primal ? primal : best_phi + delta;
            double step = (target - fd.phi) / norm2;
            if (step <= 0.0) step = 1e-12 + delta / std::sqrt(norm2) * 1e-3;
            for (int i = 0; i < inst.d; ++i) q[i] = std::max(0.0, q[i] + step * fd.grad[i]);
            if ((iter + 1) % 400 == 0) {
                FluidRecovery rec = recover_fluid(inst, groups, best_q, 1e-7, opts.lp);
                if (rec.ok) {
                    primal = have_primal ? std::min(primal, rec.value) : rec.value;
                    have_primal = true;
                    if (primal - best_phi <= tol) break;
                }
                delta *= 0.5;
            }
        }
        q_hat = best_q;
    }

    FluidRecovery rec;
    double gap = std::numeric_limits<double>::infinity();
    for (double tie_tol : {1e-9, 1e-7, 1e-5, 1e-3, 1e-1}) {
        rec = recover_fluid(inst, groups, q_hat, tie_tol, opts.lp);
        if (!rec.ok) continue;
        gap = rec.value - fluid_dual_value(inst, groups, rec.q).phi;
        if (gap <= tol) break;
    }
    if (!rec.ok || gap > tol)
        throw std::runtime_error("oco_benchmarks: aggregate dual did not certify");
    out.opt = rec.value;
    out.duality_gap = gap;
    out.dual_q = rec.q;
    for (double y : rec.q) qbar = std::max(qbar, y);
    out.qbar = qbar;
    out.xs_opt.resize(inst.T);
    out.xs_restricted.resize(inst.T);
    for (int t = 1; t <= inst.T; ++t) {
        const int g = groups.group_of_round[t - 1];
        out.xs_opt[t - 1] = rec.group_x[g];
        out.xs_restricted[t - 1] = group_restricted[g];
    }
    return out;
}

double oco_nonstationarity(const OcoInstance& inst) {
    inst.validate();
    double w = 0.0;
    std::vector<AffineFn> gbar(inst.d);
    for (int i = 0; i < inst.d; ++i) {
        gbar[i].slope.assign(inst.dim, 0.0);
        for (int t = 1; t <= inst.T; ++t) {
            const AffineFn& g = inst.g(t, i);
            for (int k = 0; k < inst.dim; ++k) gbar[i].slope[k] += g.slope[k];
            gbar[i].offset += g.offset;
        }
        for (double& v : gbar[i].slope) v /= inst.T;
        gbar[i].offset /= inst.T;
    }
    for (int t = 1; t <= inst.T; ++t)
        for (int i = 0; i < inst.d; ++i) {
            const AffineFn& g = inst.g(t, i);
            double sup;
            if (inst.domain.kind == OcoDomain::Kind::box) {
                double hi_val = g.offset - gbar[i].offset;
                double lo_val = hi_val;
                for (int k = 0; k < inst.dim; ++k) {
                    const double h = g.slope[k] - gbar[i].slope[k];
                    hi_val += std::max(h * inst.domain.lo[k], h * inst.domain.hi[k]);
                    lo_val += std::min(h * inst.domain.lo[k], h * inst.domain.hi[k]);
                }
                sup = std::max(std::fabs(hi_val), std::fabs(lo_val));
            } else {
                double at_center = g.offset - gbar[i].offset;
                double norm2 = 0.0;
                for (int k = 0; k < inst.dim; ++k) {
                    const double h = g.slope[k] - gbar[i].slope[k];
                    at_center += h * inst.domain.center[k];
                    norm2 += h * h;
                }
                sup = std::fabs(at_center) + inst.domain.radius * std::sqrt(norm2);
            }
            w += sup;
        }
    return w;
}

VirtualQueueParams VirtualQueueParams::paper(int T) {
    return {1.0 / std::sqrt(static_cast<double>(T)), 1.0 / T};
}
VirtualQueueParams VirtualQueueParams::neely(int T) {
    return {std::sqrt(static_cast<double>(T)), static_cast<double>(T)};
}
VirtualQueueParams VirtualQueueParams::normalized(int T) {
    return {1.0, std::sqrt(static_cast<double>(T))};
}

OcoRunLog run_virtual_queue(const OcoInstance& inst, std::vector<double> x0,
                            const VirtualQueueParams& params, Rng* rng,
                            const OcoBenchmarks* benchmarks, const OcoOptions& opts) {
    inst.validate();
    if (static_cast<int>(x0.size()) != inst.dim)
        fail("run_virtual_queue: x0 dimension mismatch");
    if (!inst.domain.contains(x0)) fail("run_virtual_queue: x0 outside the domain");
    if (inst.stochastic && rng == nullptr)
        fail("run_virtual_queue: stochastic instance needs an rng");
    if (!(params.alpha > 0.0)) fail("run_virtual_queue: alpha must be positive");

    OcoRunLog log;
    log.xs.resize(inst.T);
    log.queues.assign(static_cast<size_t>(inst.T) * inst.d, 0.0);

    // Realized constraint offsets (means plus Rademacher noise when stochastic).
    std::vector<double> realized_offset(static_cast<size_t>(inst.T) * inst.d, 0.0);

    std::vector<double> queue(inst.d, 0.0);
    std::vector<double> x_prev2 = x0, x_prev = x0, x(inst.dim), grad(inst.dim),
                        step(inst.dim);
    std::vector<double> sum_g(inst.d, 0.0);

    auto realized_g = [&](int t, int i, std::span<const double> at) {
        const AffineFn& g = inst.g(t, i);
        return g.eval(at) + realized_offset[static_cast<size_t>(t - 1) * inst.d + i] -
               g.offset;
    };

    for (int t = 1; t <= inst.T; ++t) {
        if (t >= 3) {
            // Queue update with the linearized realized constraint from t-2.
            for (int i = 0; i < inst.d; ++i) {
                const AffineFn& g = inst.g(t - 2, i);
                double lin = realized_g(t - 2, i, x_prev2);
                for (int k = 0; k < inst.dim; ++k)
                    lin += g.slope[k] * (x_prev[k] - x_prev2[k]);
                queue[i] = std::max(0.0, queue[i] + lin);
            }
        }
        for (int i = 0; i < inst.d; ++i)
            log.queues[static_cast<size_t>(t - 1) * inst.d + i] = queue[i];

        std::fill(step.begin(), step.end(), 0.0);
        if (t >= 2) {
            inst.f(t - 1).gradient(x_prev, grad);
            for (int k = 0; k < inst.dim; ++k) step[k] += params.beta * grad[k];
            for (int i = 0; i < inst.d; ++i) {
                const AffineFn& g = inst.g(t - 1, i);
                for (int k = 0; k < inst.dim; ++k) step[k] += queue[i] * g.slope[k];
            }
        }
        x = x_prev;
        for (int k = 0; k < inst.dim; ++k) x[k] -= step[k] / (2.0 * params.alpha);
        inst.domain.project(x);

        // Observe f_t, g_t at x_t.
        for (int i = 0; i < inst.d; ++i) {
            double off = inst.g(t, i).offset;
            if (inst.stochastic)
                off += (rng->uniform() < 0.5 ? -1.0 : 1.0) * inst.noise_amplitude;
            realized_offset[static_cast<size_t>(t - 1) * inst.d + i] = off;
        }
        log.cost += inst.f(t).eval(x);
        for (int i = 0; i < inst.d; ++i) sum_g[i] += realized_g(t, i, x);
        log.xs[t - 1] = x;

        x_prev2 = x_prev;
        x_prev = x;
    }
    for (int i = 0; i < inst.d; ++i) log.reg2 += std::max(0.0, sum_g[i]);

    OcoBenchmarks local;
    const OcoBenchmarks* bench = benchmarks;
    if (bench == nullptr) {
        local = oco_benchmarks(inst, opts);
        bench = &local;
    }
    log.opt = bench->opt;
    log.opt_restricted = bench->opt_restricted;
    log.reg1 = log.cost - bench->opt;
    log.reg1_restricted = log.cost - bench->opt_restricted;
    return log;
}

}  // namespace bwksim
