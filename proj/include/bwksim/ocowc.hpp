#ifndef BWKSIM_OCOWC_HPP
#define BWKSIM_OCOWC_HPP

#include <span>
#include <string>
#include <vector>

#include "bwksim/lp_core.hpp"
#include "bwksim/rng.hpp"

namespace bwksim {

struct OcoDomain {
    enum class Kind { box, ball };
    Kind kind = Kind::box;
    int dim = 0;
    std::vector<double> lo, hi;   // box
    std::vector<double> center;   // ball
    double radius = 0.0;

    static OcoDomain make_box(std::vector<double> lo, std::vector<double> hi);
    static OcoDomain make_ball(std::vector<double> center, double radius);
    void project(std::vector<double>& x) const;
    bool contains(std::span<const double> x, double tol = 1e-9) const;
};

struct AffineFn {
    std::vector<double> slope;
    double offset = 0.0;
    double eval(std::span<const double> x) const;
};

// Cost: x'Qx + a'x + k with Q positive semidefinite (empty quad means affine).
struct CostFn {
    std::vector<double> quad;  // n x n row-major, or empty
    std::vector<double> slope;
    double offset = 0.0;
    bool affine() const { return quad.empty(); }
    double eval(std::span<const double> x) const;
    void gradient(std::span<const double> x, std::vector<double>& out) const;
};

struct OcoInstance {
    int T = 0, dim = 0, d = 0;
    OcoDomain domain;
    std::vector<CostFn> fs;   // size T
    std::vector<AffineFn> gs;  // T x d, index (t-1)*d + i
    bool stochastic = false;      // Rademacher noise on realized g offsets
    double noise_amplitude = 0.0;
    std::string label;

    const AffineFn& g(int t, int i) const { return gs[static_cast<size_t>(t - 1) * d + i]; }
    const CostFn& f(int t) const { return fs[t - 1]; }
    bool all_costs_affine() const;
    // Checks descriptor shapes, finite coefficients and PSD quadratic terms.
    void validate() const;
};

// X = [0,1], f_t = -r*x, g_t = (b + delta*1{t<=T/2})*x - b/2.
OcoInstance build_two_phase_oco_instance(int T, double r, double b, double delta);

struct OcoBenchmarks {
    // Primary pair. Affine costs: the per-round (fluid) programs -- aggregate
    // constraint vs round-by-round feasibility -- solved exactly through the LP
    // machinery. Quadratic costs: the static-comparator programs via the grid
    // oracle (n <= 3); fluid_pair records which one was returned.
    double opt = 0.0;
    double opt_restricted = 0.0;
    bool fluid_pair = false;
    // Static-comparator programs (single x for all rounds).
    double opt_static = 0.0;
    double opt_restricted_static = 0.0;
    std::vector<double> x_static, x_restricted_static;
    std::vector<std::vector<double>> xs_opt, xs_restricted;  // fluid solutions
    std::vector<double> dual_q;  // aggregate program duals
    double qbar = 0.0;           // sup-norm bound over all computed duals
    double qbar_static = 0.0;
    double duality_gap = 0.0;
    // Best common slack max_x min_{t,i} -g_{t,i}(x); negative means the
    // restricted program is infeasible (rejected).
    double slater_slack = 0.0;
};

struct OcoOptions {
    LpCoreOptions lp;
    double gap_tol_per_round = 1e-6;
    double grid_step = 1e-3;     // target resolution of the grid oracle
    double slater_tol = 1e-9;
};

// Throws std::invalid_argument when dimension/shape limits are exceeded and
// std::runtime_error when Slater's condition fails for a benchmark program.
OcoBenchmarks oco_benchmarks(const OcoInstance& instance, const OcoOptions& opts = {});

// W = sum_t sum_j sup_{x in X} |g_{t,j}(x) - gbar_j(x)|, exact for affine g on
// boxes and balls; stochastic instances are measured on the stored means.
double oco_nonstationarity(const OcoInstance& instance);

struct VirtualQueueParams {
    double beta = 0.0;
    double alpha = 0.0;
    static VirtualQueueParams paper(int T);  // beta = 1/sqrt(T), alpha = 1/T
    static VirtualQueueParams neely(int T);  // beta = sqrt(T),  alpha = T
    // The neely pair divided by sqrt(T): same step scale with O(1) queue
    // equilibria, so the sqrt(T) behavior shows up at desk-scale horizons.
    static VirtualQueueParams normalized(int T);  // beta = 1, alpha = sqrt(T)
};

struct OcoRunLog {
    std::vector<std::vector<double>> xs;  // x_1 .. x_T
    std::vector<double> queues;           // T x d, Q_i(t)
    double cost = 0.0;                    // sum_t f_t(x_t)
    double reg1 = 0.0;                    // vs opt
    double reg1_restricted = 0.0;         // vs opt_restricted
    double reg2 = 0.0;                    // sum_i (sum_t g_{t,i}(x_t))^+
    double opt = 0.0, opt_restricted = 0.0;
};

// Algorithm: queue update Q_i(t) = max{0, Q_i(t-1) + g_{t-2,i}(x_{t-2}) +
// grad g_{t-2,i}(x_{t-2}).(x_{t-1} - x_{t-2})} followed by the regularized
// linearized step, whose argmin is a shifted projection onto the domain.
// Rounds t <= 0 contribute zero functions, so x_1 = x_0. rng is only needed
// for stochastic instances. When benchmarks is null they are computed here.
OcoRunLog run_virtual_queue(const OcoInstance& instance, std::vector<double> x0,
                            const VirtualQueueParams& params, Rng* rng = nullptr,
                            const OcoBenchmarks* benchmarks = nullptr,
                            const OcoOptions& opts = {});

}  // namespace bwksim

#endif
