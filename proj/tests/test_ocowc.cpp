#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "bwksim/ocowc.hpp"

using namespace bwksim;

namespace {

// Random affine instance on a box with a guaranteed interior feasible point.
OcoInstance random_affine_instance(Rng& rng, int dim_max = 2, int d_max = 2,
                                   int t_max = 30) {
    OcoInstance inst;
    inst.dim = 1 + rng.uniform_int(dim_max);
    inst.d = 1 + rng.uniform_int(d_max);
    inst.T = 4 + rng.uniform_int(t_max - 3);
    std::vector<double> lo(inst.dim), hi(inst.dim);
    for (int k = 0; k < inst.dim; ++k) {
        lo[k] = -1.0 + rng.uniform();
        hi[k] = lo[k] + 0.5 + rng.uniform();
    }
    inst.domain = OcoDomain::make_box(lo, hi);
    std::vector<double> interior(inst.dim);
    for (int k = 0; k < inst.dim; ++k)
        interior[k] = lo[k] + (0.25 + 0.5 * rng.uniform()) * (hi[k] - lo[k]);
    inst.fs.resize(inst.T);
    inst.gs.resize(static_cast<size_t>(inst.T) * inst.d);
    for (int t = 1; t <= inst.T; ++t) {
        CostFn f;
        f.slope.resize(inst.dim);
        for (double& v : f.slope) v = 2.0 * rng.uniform() - 1.0;
        f.offset = rng.uniform() - 0.5;
        inst.fs[t - 1] = f;
        for (int i = 0; i < inst.d; ++i) {
            AffineFn g;
            g.slope.resize(inst.dim);
            for (double& v : g.slope) v = 2.0 * rng.uniform() - 1.0;
            double at_interior = 0.0;
            for (int k = 0; k < inst.dim; ++k) at_interior += g.slope[k] * interior[k];
            g.offset = -at_interior - (0.05 + 0.25 * rng.uniform());
            inst.gs[static_cast<size_t>(t - 1) * inst.d + i] = g;
        }
    }
    inst.label = "random_affine";
    return inst;
}

double grid_w_oracle(const OcoInstance& inst) {
    // brute-force sup over a fine x grid, dim 1 only
    REQUIRE(inst.dim == 1);
    double w = 0.0;
    for (int i = 0; i < inst.d; ++i) {
        double slope = 0.0, offset = 0.0;
        for (int t = 1; t <= inst.T; ++t) {
            slope += inst.g(t, i).slope[0];
            offset += inst.g(t, i).offset;
        }
        slope /= inst.T;
        offset /= inst.T;
        for (int t = 1; t <= inst.T; ++t) {
            double sup = 0.0;
            for (int k = 0; k <= 1000; ++k) {
                const double x = inst.domain.lo[0] +
                                 (inst.domain.hi[0] - inst.domain.lo[0]) * k / 1000.0;
                const double dev = (inst.g(t, i).slope[0] - slope) * x +
                                   (inst.g(t, i).offset - offset);
                sup = std::max(sup, std::fabs(dev));
            }
            w += sup;
        }
    }
    return w;
}

}  // namespace

TEST_CASE("never-binding constraints keep all queues at zero") {
    OcoInstance inst;
    inst.T = 50;
    inst.dim = 1;
    inst.d = 2;
    inst.domain = OcoDomain::make_box({0.0}, {1.0});
    inst.fs.assign(50, CostFn{{}, {1.0}, 0.0});
    inst.gs.assign(100, AffineFn{{0.0}, -1.0});
    const OcoRunLog log = run_virtual_queue(inst, {0.5}, VirtualQueueParams::neely(50));
    for (double q : log.queues) CHECK(q == 0.0);
    CHECK(log.reg2 == 0.0);
}

TEST_CASE("two-phase instance: benchmark formulas are exact") {
    const int T = 1000;
    const double r = 1.0, b = 0.1, delta = 0.01;
    const OcoInstance inst = build_two_phase_oco_instance(T, r, b, delta);
    const OcoBenchmarks bench = oco_benchmarks(inst);
    REQUIRE(bench.fluid_pair);
    CHECK(bench.opt == doctest::Approx(-T * r / 2.0).epsilon(1e-10));
    const double expected_restricted = -(T / 4.0 * r * b / (b + delta) + T / 4.0 * r);
    CHECK(bench.opt_restricted == doctest::Approx(expected_restricted).epsilon(1e-10));
    CHECK(bench.opt_restricted >= bench.opt);
    // W = T * delta/2 on the unit box, qbar = r/b
    CHECK(oco_nonstationarity(inst) == doctest::Approx(T * delta / 2.0));
    CHECK(bench.qbar == doctest::Approx(r / b).epsilon(1e-6));
    // the static pair differs: common-x restricted optimum is -T*r*b/(2(b+delta))
    CHECK(bench.opt_restricted_static ==
          doctest::Approx(-T * r * b / (2.0 * (b + delta))).epsilon(1e-10));
}

TEST_CASE("zero constraints: both benchmarks equal the unconstrained minimum") {
    OcoInstance inst;
    inst.T = 20;
    inst.dim = 1;
    inst.d = 1;
    inst.domain = OcoDomain::make_box({-1.0}, {2.0});
    inst.fs.assign(20, CostFn{{}, {3.0}, 0.0});  // min 3x at x = -1
    inst.gs.assign(20, AffineFn{{0.0}, 0.0});
    const OcoBenchmarks bench = oco_benchmarks(inst);
    CHECK(bench.slater_slack == doctest::Approx(0.0));
    CHECK(bench.opt == doctest::Approx(-60.0));
    CHECK(bench.opt_restricted == doctest::Approx(-60.0));
    CHECK(bench.opt_static == doctest::Approx(-60.0));
}

TEST_CASE("sandwich 0 <= OPT' - OPT <= qbar*W on random affine instances") {
    Rng rng(4242);
    for (int trial = 0; trial < 200; ++trial) {
        const OcoInstance inst = random_affine_instance(rng);
        const OcoBenchmarks bench = oco_benchmarks(inst);
        const double w = oco_nonstationarity(inst);
        const double gap_fluid = bench.opt_restricted - bench.opt;
        INFO("trial ", trial, " fluid gap ", gap_fluid, " qbarW ", bench.qbar * w);
        CHECK(gap_fluid >= -1e-7);
        CHECK(gap_fluid <= bench.qbar * w + 1e-6 * inst.T + 1e-9);
        const double gap_static = bench.opt_restricted_static - bench.opt_static;
        INFO("trial ", trial, " static gap ", gap_static, " qbarW ",
             bench.qbar_static * w);
        CHECK(gap_static >= -1e-7);
        CHECK(gap_static <= bench.qbar_static * w + 1e-6 * inst.T + 1e-9);
        // fluid values bound the static ones
        CHECK(bench.opt <= bench.opt_static + 1e-7);
        CHECK(bench.opt_restricted <= bench.opt_restricted_static + 1e-7);
    }
}

TEST_CASE("nonstationarity measure: time-constant constraints give zero") {
    OcoInstance inst;
    inst.T = 30;
    inst.dim = 2;
    inst.d = 2;
    inst.domain = OcoDomain::make_box({0.0, 0.0}, {1.0, 1.0});
    inst.fs.assign(30, CostFn{{}, {1.0, -1.0}, 0.0});
    inst.gs.assign(60, AffineFn{{0.5, 0.5}, -0.9});
    CHECK(oco_nonstationarity(inst) == doctest::Approx(0.0));
}

TEST_CASE("nonstationarity measure matches the grid oracle") {
    Rng rng(31);
    for (int trial = 0; trial < 10; ++trial) {
        OcoInstance inst = random_affine_instance(rng, 1, 2, 10);
        const double exact = oco_nonstationarity(inst);
        const double grid = grid_w_oracle(inst);
        CHECK(exact == doctest::Approx(grid).epsilon(1e-5));
    }
}

TEST_CASE("nonstationarity measure on a ball domain") {
    OcoInstance inst;
    inst.T = 2;
    inst.dim = 2;
    inst.d = 1;
    inst.domain = OcoDomain::make_ball({0.0, 0.0}, 2.0);
    inst.fs.assign(2, CostFn{{}, {1.0, 0.0}, 0.0});
    inst.gs = {AffineFn{{1.0, 0.0}, 0.0}, AffineFn{{-1.0, 0.0}, 0.0}};
    // gbar = 0, deviation slope 1 each round: sup over the ball = radius
    CHECK(oco_nonstationarity(inst) == doctest::Approx(4.0));
}

TEST_CASE("queue recurrence holds exactly round by round") {
    const OcoInstance inst = build_two_phase_oco_instance(200, 1.0, 0.1, 0.02);
    const OcoRunLog log = run_virtual_queue(inst, {0.0}, VirtualQueueParams::neely(200));
    REQUIRE(log.xs.size() == 200);
    CHECK(log.queues[0] == 0.0);
    CHECK(log.queues[1] == 0.0);
    for (int t = 3; t <= 200; ++t) {
        // Q(t) = max{0, Q(t-1) + g_{t-2}(x_{t-2}) + slope_{t-2}*(x_{t-1} - x_{t-2})}
        const double gval = inst.g(t - 2, 0).eval(log.xs[t - 3]);
        const double lin = inst.g(t - 2, 0).slope[0] * (log.xs[t - 2][0] - log.xs[t - 3][0]);
        const double expected = std::max(0.0, log.queues[t - 2] + gval + lin);
        CHECK(log.queues[t - 1] == doctest::Approx(expected).epsilon(1e-12));
        CHECK(log.queues[t - 1] >= 0.0);
    }
}

TEST_CASE("virtual queue run wires regrets against both benchmarks") {
    const OcoInstance inst = build_two_phase_oco_instance(400, 1.0, 0.1, 0.01);
    const OcoBenchmarks bench = oco_benchmarks(inst);
    const OcoRunLog log =
        run_virtual_queue(inst, {0.0}, VirtualQueueParams::neely(400), nullptr, &bench);
    CHECK(log.opt == doctest::Approx(bench.opt));
    CHECK(log.reg1 == doctest::Approx(log.cost - bench.opt));
    CHECK(log.reg1_restricted == doctest::Approx(log.cost - bench.opt_restricted));
    CHECK(log.reg1 >= log.reg1_restricted - 1e-9);  // opt <= opt_restricted
    double sum_g = 0.0;
    for (int t = 1; t <= 400; ++t) sum_g += inst.g(t, 0).eval(log.xs[t - 1]);
    CHECK(log.reg2 == doctest::Approx(std::max(0.0, sum_g)).epsilon(1e-9));
}

TEST_CASE("stochastic constraints: means reproduce the deterministic benchmarks") {
    OcoInstance inst = build_two_phase_oco_instance(300, 1.0, 0.2, 0.02);
    inst.stochastic = true;
    inst.noise_amplitude = 0.05;
    Rng rng(9);
    const OcoBenchmarks bench = oco_benchmarks(inst);  // certainty equivalent
    const OcoRunLog log =
        run_virtual_queue(inst, {0.0}, VirtualQueueParams::neely(300), &rng, &bench);
    for (double q : log.queues) CHECK(q >= 0.0);
    // zero-amplitude noise reduces to the deterministic run
    OcoInstance flat = inst;
    flat.noise_amplitude = 0.0;
    Rng rng2(9);
    const OcoRunLog a = run_virtual_queue(flat, {0.0}, VirtualQueueParams::neely(300),
                                          &rng2, &bench);
    OcoInstance det = inst;
    det.stochastic = false;
    const OcoRunLog b =
        run_virtual_queue(det, {0.0}, VirtualQueueParams::neely(300), nullptr, &bench);
    CHECK(a.cost == doctest::Approx(b.cost));
    CHECK(a.reg2 == doctest::Approx(b.reg2));
}

TEST_CASE("input validation") {
    OcoInstance inst = build_two_phase_oco_instance(10, 1.0, 0.1, 0.01);
    CHECK_THROWS_AS(run_virtual_queue(inst, {0.0, 0.0}, VirtualQueueParams::neely(10)),
                    std::invalid_argument);
    CHECK_THROWS_AS(run_virtual_queue(inst, {2.0}, VirtualQueueParams::neely(10)),
                    std::invalid_argument);
    inst.stochastic = true;
    inst.noise_amplitude = 0.1;
    CHECK_THROWS_AS(run_virtual_queue(inst, {0.0}, VirtualQueueParams::neely(10)),
                    std::invalid_argument);

    // infeasible restricted program is rejected with a diagnostic
    OcoInstance bad;
    bad.T = 2;
    bad.dim = 1;
    bad.d = 1;
    bad.domain = OcoDomain::make_box({0.0}, {1.0});
    bad.fs.assign(2, CostFn{{}, {1.0}, 0.0});
    bad.gs = {AffineFn{{0.0}, 1.0}, AffineFn{{0.0}, 1.0}};  // 1 <= 0 impossible
    CHECK_THROWS_AS(oco_benchmarks(bad), std::runtime_error);

    // non-PSD quadratic cost is rejected
    OcoInstance quad = build_two_phase_oco_instance(4, 1.0, 0.1, 0.01);
    quad.fs[0].quad = {-1.0};
    CHECK_THROWS_AS(quad.validate(), std::invalid_argument);
}

TEST_CASE("quadratic costs fall back to the grid pair") {
    OcoInstance inst;
    inst.T = 10;
    inst.dim = 1;
    inst.d = 1;
    inst.domain = OcoDomain::make_box({-1.0}, {1.0});
    CostFn f;
    f.quad = {1.0};
    f.slope = {-1.0};  // (x - 0.5)^2 - 0.25 shape: min at x = 0.5
    f.offset = 0.0;
    inst.fs.assign(10, f);
    inst.gs.assign(10, AffineFn{{1.0}, -0.2});  // x <= 0.2
    const OcoBenchmarks bench = oco_benchmarks(inst);
    CHECK_FALSE(bench.fluid_pair);
    // constrained minimum at x = 0.2: 10 * (0.04 - 0.2) = -1.6
    CHECK(bench.opt == doctest::Approx(-1.6).epsilon(1e-3));
    CHECK(bench.opt_restricted == doctest::Approx(bench.opt).epsilon(1e-6));
}
