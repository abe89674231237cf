#ifndef BWKSIM_LP_CORE_HPP
#define BWKSIM_LP_CORE_HPP

#include <span>
#include <vector>

#include "bwksim/environments.hpp"
#include "bwksim/simplex.hpp"

namespace bwksim {

// Solution of max mu.x s.t. Cx <= b, x in the standard simplex. dual_q prices
// the d resource rows, dual_alpha the simplex row; both are nonnegative and
// value == dot(b, dual_q) + dual_alpha at optimality.
struct LpSolution {
    SolveStatus status = SolveStatus::optimal;
    std::vector<double> x;  // size m; if the last column is an all-zero null arm it
                            // absorbs the remaining mass so that sum(x) == 1
    double value = 0.0;
    std::vector<double> dual_q;
    double dual_alpha = 0.0;
};

struct LpCoreOptions {
    SimplexOptions simplex;
    double dyn_gap_tol_per_round = 1e-6;  // dynamic LP certificate: gap <= tol * T
    int subgradient_max_iters = 60000;
    long long recovery_size_cap = 20000000;  // tableau cells guard for the recovery LP
};

LpSolution solve_single_step_lp(std::span<const double> mu,
                                std::span<const double> cons,  // d x m row-major
                                std::span<const double> b,
                                const LpCoreOptions& opts = {});

// Reusable per-round solver (no reallocation between calls) for policy loops.
class SingleStepLpSolver {
  public:
    explicit SingleStepLpSolver(const LpCoreOptions& opts = {}) : opts_(opts) {}
    LpSolution& solve(std::span<const double> mu, std::span<const double> cons,
                      std::span<const double> b);

  private:
    LpCoreOptions opts_;
    DenseSimplex simplex_{};
    LinearProgram lp_{0};
    LpSolution sol_;
};

struct DynamicLpSolution {
    SolveStatus status = SolveStatus::optimal;
    double value = 0.0;
    std::vector<std::vector<double>> xs;  // T per-round distributions, size m each
    std::vector<double> dual_q;           // d global resource prices
    std::vector<double> dual_alphas;      // T per-round simplex prices
    double duality_gap = 0.0;
};

// LP({mu_t},{C_t},T) by dual decomposition: minimize the piecewise-linear dual
// over q >= 0 (exact breakpoint sweep for d=1, projected subgradient with
// Polyak steps for d>=2), then recover a primal solution from a grouped LP
// restricted to near-argmax arms. Certified by duality_gap <= 1e-6*T.
DynamicLpSolution solve_dynamic_lp(const BwkInstance& instance,
                                   const LpCoreOptions& opts = {});

// Full LP (T*m variables) through the dense simplex; cross-check route for
// small instances (T*m <= ~200).
DynamicLpSolution solve_dynamic_lp_dense(const BwkInstance& instance,
                                         const LpCoreOptions& opts = {});

// T * LP(mu_bar, C_bar): value and dual_alpha are horizon totals, x is the
// per-round distribution, dual_q the per-unit resource prices.
LpSolution solve_static_lp(const BwkInstance& instance, const LpCoreOptions& opts = {});

struct SandwichReport {
    double sum_single = 0.0;        // sum_t LP(mu_t, C_t)
    double dynamic = 0.0;           // LP({mu_t},{C_t},T)
    double averaged_plus_w = 0.0;   // T*LP(mu_bar,C_bar) + W1 + qbar*W2
    double sum_single_plus_2w = 0.0;
    double qbar = 0.0;
    double qbar_bound = 0.0;        // 1 / min_j b_j
    double w1 = 0.0, w2 = 0.0;
    double max_violation = 0.0;
    int violated_inequality = 0;    // 0 = none, 1..3 = chain position, 4 = qbar bound
    bool ok() const { return violated_inequality == 0; }
};

// Evaluates the three-way chain
//   sum_single <= dynamic <= averaged_plus_w <= sum_single_plus_2w
// and qbar <= 1/b at tolerance tol (default 1e-6 * T).
SandwichReport check_lp_sandwich(const BwkInstance& instance,
                                 const LpCoreOptions& opts = {},
                                 double tolerance = -1.0);

// Rounds with bit-identical (mu_t, C_t) collapsed to one representative; used
// by the dynamic LP, the sandwich checker and the refined measures.
struct RoundGrouping {
    std::vector<int> group_of_round;  // size T (0-based by round-1)
    std::vector<int> representative;  // a 1-based round per group
    std::vector<int> count;
};

RoundGrouping group_rounds(const BwkInstance& instance);

}  // namespace bwksim

#endif
