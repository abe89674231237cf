#include "doctest.h"

#include <cmath>
#include <vector>

#include "bwksim/environments.hpp"
#include "bwksim/lp_core.hpp"
#include "test_util.hpp"

using namespace bwksim;
using bwksim::testutil::example_alpha;
using bwksim::testutil::example_frequency;

namespace {

// Simplex-grid oracle: maximize mu.x over x1 + x2 <= 1 (two actual arms plus
// null) at step 1/400 subject to Cx <= b.
double grid_single_step(const std::vector<double>& mu, const std::vector<double>& c,
                        const std::vector<double>& b, std::vector<double>* argmax) {
    const int steps = 400;
    const int d = static_cast<int>(b.size());
    double best = 0.0;
    std::vector<double> bx(3, 0.0);
    bx[2] = 1.0;
    for (int i = 0; i <= steps; ++i)
        for (int j = 0; i + j <= steps; ++j) {
            const double x1 = static_cast<double>(i) / steps;
            const double x2 = static_cast<double>(j) / steps;
            bool ok = true;
            for (int r = 0; r < d && ok; ++r)
                ok = c[static_cast<size_t>(r) * 3] * x1 + c[static_cast<size_t>(r) * 3 + 1] * x2 <=
                     b[r] + 1e-12;
            if (!ok) continue;
            const double v = mu[0] * x1 + mu[1] * x2;
            if (v > best) {
                best = v;
                bx = {x1, x2, 1.0 - x1 - x2};
            }
        }
    if (argmax) *argmax = bx;
    return best;
}

void check_solution_invariants(const LpSolution& sol, const std::vector<double>& mu,
                               const std::vector<double>& c, const std::vector<double>& b) {
    const int m = static_cast<int>(mu.size());
    const int d = static_cast<int>(b.size());
    REQUIRE(sol.status == SolveStatus::optimal);
    double mass = 0.0, reconstructed = 0.0;
    for (int i = 0; i < m; ++i) {
        CHECK(sol.x[i] >= -1e-9);
        mass += sol.x[i];
        reconstructed += mu[i] * sol.x[i];
    }
    CHECK(mass <= 1.0 + 1e-9);
    CHECK(std::fabs(reconstructed - sol.value) <= 1e-9 * m + 1e-12);
    for (int j = 0; j < d; ++j) {
        double lhs = 0.0;
        for (int i = 0; i < m; ++i) lhs += c[static_cast<size_t>(j) * m + i] * sol.x[i];
        CHECK(lhs <= b[j] + 1e-9);
        CHECK(sol.dual_q[j] >= 0.0);
        // complementary slackness
        if (sol.dual_q[j] > 1e-7) CHECK(lhs >= b[j] - 1e-7);
    }
    CHECK(sol.dual_alpha >= 0.0);
    double dual_value = sol.dual_alpha;
    for (int j = 0; j < d; ++j) dual_value += b[j] * sol.dual_q[j];
    CHECK(dual_value == doctest::Approx(sol.value).epsilon(1e-8));
}

}  // namespace

TEST_CASE("single-step LP: first-half parameters of the one-resource example") {
    std::vector<double> mu{0.5, 0.5, 0.0}, c{0.5, 1.0, 0.0}, b{0.5};
    LpSolution sol = solve_single_step_lp(mu, c, b);
    check_solution_invariants(sol, mu, c, b);
    CHECK(sol.value == doctest::Approx(0.5));
    CHECK(sol.x[0] == doctest::Approx(1.0));
}

TEST_CASE("single-step LP: zero rewards give zero value") {
    std::vector<double> mu{0.0, 0.0, 0.0}, c{0.3, 0.9, 0.0}, b{0.7};
    LpSolution sol = solve_single_step_lp(mu, c, b);
    check_solution_invariants(sol, mu, c, b);
    CHECK(sol.value == doctest::Approx(0.0));
}

TEST_CASE("single-step LP matches the simplex-grid oracle") {
    std::vector<double> mu{1.0, 0.6, 0.0}, c{1.0, 0.2, 0.0}, b{0.4};
    std::vector<double> gx;
    const double gv = grid_single_step(mu, c, b, &gx);
    LpSolution sol = solve_single_step_lp(mu, c, b);
    check_solution_invariants(sol, mu, c, b);
    CHECK(sol.value == doctest::Approx(0.7));
    CHECK(gv == doctest::Approx(0.7).epsilon(1e-4));
    CHECK(sol.x[0] == doctest::Approx(0.25));
    CHECK(sol.x[1] == doctest::Approx(0.75));
    CHECK(sol.x[0] == doctest::Approx(gx[0]).epsilon(0.01));

    // a few random two-arm problems against the same oracle
    Rng rng(7);
    for (int trial = 0; trial < 25; ++trial) {
        std::vector<double> rmu{rng.uniform(), rng.uniform(), 0.0};
        const int d = 1 + rng.uniform_int(2);
        std::vector<double> rc(static_cast<size_t>(d) * 3, 0.0), rb(d);
        for (int j = 0; j < d; ++j) {
            rc[static_cast<size_t>(j) * 3] = rng.uniform();
            rc[static_cast<size_t>(j) * 3 + 1] = rng.uniform();
            rb[j] = 0.1 + 0.8 * rng.uniform();
        }
        LpSolution rsol = solve_single_step_lp(rmu, rc, rb);
        check_solution_invariants(rsol, rmu, rc, rb);
        const double oracle = grid_single_step(rmu, rc, rb, nullptr);
        CHECK(rsol.value >= oracle - 1e-9);              // grid is a restriction
        CHECK(rsol.value <= oracle + 2.0 / 400 + 1e-9);  // grid resolution bound
    }
}

TEST_CASE("single-step LP: all-zero budget plays only the null arm") {
    std::vector<double> mu{0.9, 0.2, 0.0}, c{0.5, 0.1, 0.0}, b{0.0};
    LpSolution sol = solve_single_step_lp(mu, c, b);
    CHECK(sol.value == 0.0);
    CHECK(sol.x[2] == doctest::Approx(1.0));
}

TEST_CASE("dynamic LP on the one-resource switching example returns 5000") {
    const BwkInstance inst = build_paper_example(1);
    DynamicLpSolution dyn = solve_dynamic_lp(inst);
    REQUIRE(dyn.status == SolveStatus::optimal);
    CHECK(dyn.value == doctest::Approx(5000.0).epsilon(1e-9));
    CHECK(dyn.duality_gap <= 1e-6 * inst.T);
    // strong duality identity with the per-round prices
    double dual_value = 0.0;
    for (int j = 0; j < inst.d; ++j) dual_value += inst.budget[j] * dyn.dual_q[j];
    for (double a : dyn.dual_alphas) dual_value += a;
    CHECK(dual_value == doctest::Approx(dyn.value).epsilon(1e-8));
    // feasibility of the recovered plan
    std::vector<double> used(inst.d, 0.0);
    for (int t = 1; t <= inst.T; ++t) {
        double mass = 0.0;
        for (int i = 0; i < inst.m; ++i) {
            CHECK(dyn.xs[t - 1][i] >= -1e-9);
            mass += dyn.xs[t - 1][i];
            for (int j = 0; j < inst.d; ++j) used[j] += inst.c_at(t, j, i) * dyn.xs[t - 1][i];
        }
        CHECK(mass == doctest::Approx(1.0).epsilon(1e-9));
    }
    for (int j = 0; j < inst.d; ++j) CHECK(used[j] <= inst.budget[j] + 1e-6);
}

TEST_CASE("dynamic LP: stationary instance equals T times the single-step value") {
    Rng rng(21);
    for (int trial = 0; trial < 5; ++trial) {
        BwkInstance inst = testutil::random_instance(rng, 30);
        for (int t = 2; t <= inst.T; ++t) {
            for (int i = 0; i < inst.m; ++i) inst.mu_ref(t, i) = inst.mu_at(1, i);
            for (int j = 0; j < inst.d; ++j)
                for (int i = 0; i < inst.m; ++i) inst.c_ref(t, j, i) = inst.c_at(1, j, i);
        }
        std::vector<double> mu(inst.m), c(static_cast<size_t>(inst.d) * inst.m);
        for (int i = 0; i < inst.m; ++i) mu[i] = inst.mu_at(1, i);
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < inst.m; ++i)
                c[static_cast<size_t>(j) * inst.m + i] = inst.c_at(1, j, i);
        const LpSolution single = solve_single_step_lp(mu, c, inst.per_round_budget);
        const DynamicLpSolution dyn = solve_dynamic_lp(inst);
        REQUIRE(dyn.status == SolveStatus::optimal);
        CHECK(dyn.value == doctest::Approx(inst.T * single.value).epsilon(1e-7));
    }
}

TEST_CASE("dynamic LP: decomposition agrees with the dense solve on small instances") {
    Rng rng(5150);
    int checked = 0;
    for (int trial = 0; trial < 40; ++trial) {
        const BwkInstance inst = testutil::random_instance(rng, 50);
        if (inst.T * inst.m > 200) continue;
        const DynamicLpSolution dec = solve_dynamic_lp(inst);
        const DynamicLpSolution dense = solve_dynamic_lp_dense(inst);
        REQUIRE(dec.status == SolveStatus::optimal);
        REQUIRE(dense.status == SolveStatus::optimal);
        CHECK(std::fabs(dec.value - dense.value) <= 1e-6 * inst.T);
        ++checked;
    }
    CHECK(checked >= 10);
}

TEST_CASE("dynamic LP: increasing a budget never decreases the value") {
    Rng rng(404);
    for (int trial = 0; trial < 10; ++trial) {
        BwkInstance inst = testutil::random_instance(rng, 25);
        const double base = solve_dynamic_lp(inst).value;
        const int j = rng.uniform_int(inst.d);
        inst.per_round_budget[j] += 0.2;
        inst.budget[j] = inst.per_round_budget[j] * inst.T;
        const double bigger = solve_dynamic_lp(inst).value;
        CHECK(bigger >= base - 1e-7 * inst.T);
    }
}

TEST_CASE("static LP equals the dynamic LP on stationary instances") {
    Rng rng(33);
    BwkInstance inst = testutil::random_instance(rng, 20);
    for (int t = 2; t <= inst.T; ++t) {
        for (int i = 0; i < inst.m; ++i) inst.mu_ref(t, i) = inst.mu_at(1, i);
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < inst.m; ++i) inst.c_ref(t, j, i) = inst.c_at(1, j, i);
    }
    const LpSolution stat = solve_static_lp(inst);
    const DynamicLpSolution dyn = solve_dynamic_lp(inst);
    CHECK(stat.value == doctest::Approx(dyn.value).epsilon(1e-8));
    // scaled duality: value == B.q + alpha_total
    double dual_value = stat.dual_alpha;
    for (int j = 0; j < inst.d; ++j) dual_value += inst.budget[j] * stat.dual_q[j];
    CHECK(dual_value == doctest::Approx(stat.value).epsilon(1e-8));
}

TEST_CASE("static LP is strictly below dynamic on the abrupt-change example") {
    const BwkInstance inst = build_paper_example(3, example_alpha(0.5));
    const double stat = solve_static_lp(inst).value;
    const DynamicLpSolution dyn = solve_dynamic_lp(inst);
    CHECK(dyn.value == doctest::Approx(2500.0).epsilon(1e-9));
    CHECK(stat < dyn.value - 1.0);
}

TEST_CASE("static LP of the rescaled one-armed shift instance") {
    // second-half mean 0.6, average 0.55, unit consumption, b = 0.5
    const BwkInstance inst = build_motivating_instance(1000, 0.2, ShiftDirection::up);
    const LpSolution stat = solve_static_lp(inst);
    CHECK(stat.value == doctest::Approx(1000 * 0.275).epsilon(1e-9));
}

TEST_CASE("sandwich report: stationary instance collapses the first inequality") {
    Rng rng(77);
    BwkInstance inst = testutil::random_instance(rng, 20);
    for (int t = 2; t <= inst.T; ++t) {
        for (int i = 0; i < inst.m; ++i) inst.mu_ref(t, i) = inst.mu_at(1, i);
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < inst.m; ++i) inst.c_ref(t, j, i) = inst.c_at(1, j, i);
    }
    const SandwichReport rep = check_lp_sandwich(inst);
    CHECK(rep.ok());
    CHECK(rep.w1 == doctest::Approx(0.0));
    CHECK(rep.w2 == doctest::Approx(0.0));
    CHECK(rep.sum_single == doctest::Approx(rep.dynamic).epsilon(1e-8));
}

TEST_CASE("sandwich report holds on the switching example with qbar <= 1/b") {
    const SandwichReport rep = check_lp_sandwich(build_paper_example(1));
    CHECK(rep.ok());
    CHECK(rep.qbar <= 2.0 + 1e-9);
}

TEST_CASE("sandwich report: zero violations over random instances") {
    Rng rng(2024);
    for (int trial = 0; trial < 20; ++trial) {
        const BwkInstance inst = testutil::random_instance(rng, 50);
        const SandwichReport rep = check_lp_sandwich(inst);
        INFO("trial ", trial, " violated ", rep.violated_inequality, " by ",
             rep.max_violation);
        CHECK(rep.ok());
        if (inst.T * inst.m <= 200) {
            const DynamicLpSolution dense = solve_dynamic_lp_dense(inst);
            CHECK(std::fabs(dense.value - rep.dynamic) <= 1e-6 * inst.T);
        }
    }
}
