#include "doctest.h"

#include <algorithm>
#include <cmath>
#include <vector>

#include "bwksim/measures.hpp"
#include "test_util.hpp"

using namespace bwksim;
using bwksim::testutil::example_alpha;
using bwksim::testutil::example_frequency;

namespace {

BwkInstance one_armed_change_point(int T, int k) {
    BwkInstance inst;
    inst.T = T;
    inst.m = 2;
    inst.d = 1;
    inst.per_round_budget = {0.5};
    inst.budget = {0.5 * T};
    inst.mu.assign(static_cast<size_t>(T) * 2, 0.0);
    inst.c.assign(static_cast<size_t>(T) * 2, 0.0);
    for (int t = 1; t <= k; ++t) inst.mu_ref(t, 0) = 1.0;
    inst.label = "change_point";
    return inst;
}

// Grid brute force over the anchor (step 0.01) for the refined reward measure.
double grid_w1_min(const BwkInstance& inst) {
    const int ma = inst.m - 1;
    REQUIRE(ma <= 2);
    double best = 1e300;
    auto eval = [&](const std::vector<double>& mu) {
        double total = 0.0;
        for (int t = 1; t <= inst.T; ++t) {
            double dev = 0.0;
            for (int i = 0; i < ma; ++i)
                dev = std::max(dev, std::fabs(inst.mu_at(t, i) - mu[i]));
            total += dev;
        }
        return total;
    };
    std::vector<double> mu(ma);
    if (ma == 1) {
        for (int a = 0; a <= 100; ++a) {
            mu[0] = a / 100.0;
            best = std::min(best, eval(mu));
        }
    } else {
        for (int a = 0; a <= 100; ++a)
            for (int b = 0; b <= 100; ++b) {
                mu[0] = a / 100.0;
                mu[1] = b / 100.0;
                best = std::min(best, eval(mu));
            }
    }
    return best;
}

double grid_w2_min(const BwkInstance& inst) {
    const int ma = inst.m - 1;
    REQUIRE(ma * inst.d <= 2);
    double best = 1e300;
    auto eval = [&](const std::vector<double>& c) {
        double total = 0.0;
        for (int t = 1; t <= inst.T; ++t) {
            double dev = 0.0;
            for (int i = 0; i < ma; ++i) {
                double col = 0.0;
                for (int j = 0; j < inst.d; ++j)
                    col += std::fabs(inst.c_at(t, j, i) - c[static_cast<size_t>(j) * ma + i]);
                dev = std::max(dev, col);
            }
            total += dev;
        }
        return total;
    };
    const int dims = ma * inst.d;
    std::vector<double> c(dims);
    if (dims == 1) {
        for (int a = 0; a <= 100; ++a) {
            c[0] = a / 100.0;
            best = std::min(best, eval(c));
        }
    } else {
        for (int a = 0; a <= 100; ++a)
            for (int b = 0; b <= 100; ++b) {
                c[0] = a / 100.0;
                c[1] = b / 100.0;
                best = std::min(best, eval(c));
            }
    }
    return best;
}

}  // namespace

TEST_CASE("local budgets: one change point of the rescaled shift instance") {
    const BwkInstance inst = build_motivating_instance(1000, 0.3, ShiftDirection::up);
    const LocalBudgets lb = local_budgets(inst);
    CHECK(lb.v1 == doctest::Approx(0.15));  // delta/2 after rescale
    CHECK(lb.v2 == doctest::Approx(0.0));
}

TEST_CASE("local budgets: stationary instance is all zeros") {
    const BwkInstance inst = build_motivating_instance(100, 0.0, ShiftDirection::down);
    const LocalBudgets lb = local_budgets(inst);
    CHECK(lb.v1 == 0.0);
    CHECK(lb.v2 == 0.0);
    for (double v : lb.v2_per_resource) CHECK(v == 0.0);
}

TEST_CASE("local budgets: triangle-wave frequency doubles the consumption variation") {
    const BwkInstance five = build_paper_example(4, example_frequency(5));
    const BwkInstance ten = build_paper_example(4, example_frequency(10));
    const LocalBudgets l5 = local_budgets(five);
    const LocalBudgets l10 = local_budgets(ten);
    // closed form: 4999 steps of 2/L in the second half plus the 1.0 jump at
    // the boundary on resource 2 (L = 1000 resp. 500)
    CHECK(l5.v2_per_resource[0] == doctest::Approx(4999.0 * 2.0 / 1000.0));
    CHECK(l5.v2 == doctest::Approx(1.0 + 4999.0 * 2.0 / 1000.0));
    CHECK(l10.v2 == doctest::Approx(1.0 + 4999.0 * 2.0 / 500.0));
    const GlobalBudgets g5 = global_budgets(five);
    const GlobalBudgets g10 = global_budgets(ten);
    // w2 stays put while v2 roughly doubles (exact values from the
    // per-period deviation sums of the two wave resolutions)
    CHECK(g5.w2 == doctest::Approx(5625.0).epsilon(1e-9));
    CHECK(g10.w2 == doctest::Approx(5625.04).epsilon(1e-9));
}

TEST_CASE("global budgets on the one-resource switching example") {
    const GlobalBudgets gb = global_budgets(build_paper_example(1));
    CHECK(gb.w1 == doctest::Approx(0.0));
    CHECK(gb.w2 == doctest::Approx(2500.0));
}

TEST_CASE("global budgets: change-point closed form 2k(T-k)/T") {
    for (int k : {1, 25, 50, 77}) {
        const BwkInstance inst = one_armed_change_point(100, k);
        const GlobalBudgets gb = global_budgets(inst);
        CHECK(gb.w1 == doctest::Approx(2.0 * k * (100 - k) / 100.0));
    }
}

TEST_CASE("refined budgets: change-point family hits min(k, T-k)") {
    for (int k : {1, 10, 50, 99}) {
        const BwkInstance inst = one_armed_change_point(100, k);
        const RefinedBudgets rb = refined_budgets(inst);
        CHECK(rb.w1_min == doctest::Approx(std::min(k, 100 - k)).epsilon(1e-9));
    }
}

TEST_CASE("refined budgets: stationary anchor is the average") {
    Rng rng(3);
    BwkInstance inst = testutil::random_instance(rng, 12);
    for (int t = 2; t <= inst.T; ++t) {
        for (int i = 0; i < inst.m; ++i) inst.mu_ref(t, i) = inst.mu_at(1, i);
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < inst.m; ++i) inst.c_ref(t, j, i) = inst.c_at(1, j, i);
    }
    const RefinedBudgets rb = refined_budgets(inst);
    CHECK(rb.w1_min == doctest::Approx(0.0));
    CHECK(rb.w2_min == doctest::Approx(0.0));
    for (int i = 0; i < inst.m - 1; ++i)
        CHECK(rb.mu_star[i] == doctest::Approx(inst.mu_at(1, i)));
}

TEST_CASE("refined budgets match the grid brute force on random instances") {
    Rng rng(11);
    int done_w1 = 0, done_w2 = 0;
    for (int trial = 0; trial < 20 && (done_w1 < 10 || done_w2 < 10); ++trial) {
        BwkInstance inst = testutil::random_instance(rng, 12);
        if (inst.m - 1 > 2) continue;
        const RefinedBudgets rb = refined_budgets(inst);
        const GlobalBudgets gb = global_budgets(inst);
        CHECK(rb.w1_min <= gb.w1 + 1e-9);
        CHECK(rb.w2_min <= gb.w2 + 1e-9);
        const double grid1 = grid_w1_min(inst);
        CHECK(rb.w1_min <= grid1 + 1e-9);               // exact below the grid
        CHECK(rb.w1_min >= grid1 - 0.01 * inst.T);      // within grid resolution
        ++done_w1;
        if ((inst.m - 1) * inst.d <= 2) {
            const double grid2 = grid_w2_min(inst);
            CHECK(rb.w2_min <= grid2 + 1e-9);
            CHECK(rb.w2_min >= grid2 - 0.01 * inst.T * inst.d);
            ++done_w2;
        }
        // anchor stays in the coordinate-wise box (spot check)
        for (int i = 0; i < inst.m - 1; ++i) {
            double lo = 1.0, hi = 0.0;
            for (int t = 1; t <= inst.T; ++t) {
                lo = std::min(lo, inst.mu_at(t, i));
                hi = std::max(hi, inst.mu_at(t, i));
            }
            CHECK(rb.mu_star[i] >= lo - 1e-9);
            CHECK(rb.mu_star[i] <= hi + 1e-9);
        }
    }
    CHECK(done_w1 >= 10);
    CHECK(done_w2 >= 5);
}

TEST_CASE("one-armed refined measures match the weighted-median oracle") {
    // with a single actual arm the max over arms disappears and the exact
    // minimizers are coordinate-wise weighted medians
    auto median_objective = [](std::vector<std::pair<double, double>> vw) {
        std::sort(vw.begin(), vw.end());
        double total = 0.0;
        for (auto& [v, w] : vw) total += w;
        double acc = 0.0, med = vw.back().first;
        for (auto& [v, w] : vw) {
            acc += w;
            if (acc >= total / 2.0) {
                med = v;
                break;
            }
        }
        double obj = 0.0;
        for (auto& [v, w] : vw) obj += w * std::fabs(v - med);
        return obj;
    };
    Rng rng(219);
    for (int trial = 0; trial < 6; ++trial) {
        const int T = 5 + rng.uniform_int(200);
        BwkInstance inst;
        inst.T = T;
        inst.m = 2;
        inst.d = 1 + rng.uniform_int(2);
        inst.per_round_budget.assign(inst.d, 0.5);
        inst.budget.assign(inst.d, 0.5 * T);
        inst.mu.assign(static_cast<size_t>(T) * 2, 0.0);
        inst.c.assign(static_cast<size_t>(T) * inst.d * 2, 0.0);
        for (int t = 1; t <= T; ++t) {
            inst.mu_ref(t, 0) = rng.uniform();
            for (int j = 0; j < inst.d; ++j) inst.c_ref(t, j, 0) = rng.uniform();
        }
        const RefinedBudgets rb = refined_budgets(inst);
        std::vector<std::pair<double, double>> vw;
        for (int t = 1; t <= T; ++t) vw.emplace_back(inst.mu_at(t, 0), 1.0);
        CHECK(rb.w1_min == doctest::Approx(median_objective(vw)).epsilon(1e-9));
        double w2_expected = 0.0;  // separable across resources for one arm
        for (int j = 0; j < inst.d; ++j) {
            vw.clear();
            for (int t = 1; t <= T; ++t) vw.emplace_back(inst.c_at(t, j, 0), 1.0);
            w2_expected += median_objective(vw);
        }
        CHECK(rb.w2_min == doctest::Approx(w2_expected).epsilon(1e-9));
    }
}

TEST_CASE("measures scale linearly in the rewards") {
    Rng rng(8);
    BwkInstance inst = testutil::random_instance(rng, 15);
    BwkInstance scaled = inst;
    const double lambda = 0.37;
    for (double& v : scaled.mu) v *= lambda;
    const LocalBudgets la = local_budgets(inst), lb = local_budgets(scaled);
    const GlobalBudgets ga = global_budgets(inst), gb = global_budgets(scaled);
    const RefinedBudgets ra = refined_budgets(inst), rb = refined_budgets(scaled);
    CHECK(lb.v1 == doctest::Approx(lambda * la.v1));
    CHECK(gb.w1 == doctest::Approx(lambda * ga.w1));
    CHECK(rb.w1_min == doctest::Approx(lambda * ra.w1_min));
}

TEST_CASE("measures are invariant under time reversal") {
    Rng rng(13);
    BwkInstance inst = testutil::random_instance(rng, 15);
    BwkInstance rev = inst;
    for (int t = 1; t <= inst.T; ++t) {
        for (int i = 0; i < inst.m; ++i) rev.mu_ref(t, i) = inst.mu_at(inst.T + 1 - t, i);
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < inst.m; ++i)
                rev.c_ref(t, j, i) = inst.c_at(inst.T + 1 - t, j, i);
    }
    const LocalBudgets la = local_budgets(inst), lb = local_budgets(rev);
    const GlobalBudgets ga = global_budgets(inst), gb = global_budgets(rev);
    const RefinedBudgets ra = refined_budgets(inst), rb = refined_budgets(rev);
    CHECK(la.v1 == doctest::Approx(lb.v1));
    CHECK(la.v2 == doctest::Approx(lb.v2));
    CHECK(ga.w1 == doctest::Approx(gb.w1));
    CHECK(ga.w2 == doctest::Approx(gb.w2));
    CHECK(ra.w1_min == doctest::Approx(rb.w1_min));
    CHECK(ra.w2_min == doctest::Approx(rb.w2_min));
}

TEST_CASE("full report wires every field") {
    const BwkInstance inst = one_armed_change_point(100, 30);
    const NonstationarityReport rep = compute_nonstationarity(inst);
    CHECK(rep.v1 == doctest::Approx(1.0));
    CHECK(rep.v2 == doctest::Approx(rep.v2_per_resource[0]));
    CHECK(rep.w1 == doctest::Approx(2.0 * 30 * 70 / 100.0));
    CHECK(rep.w1_min == doctest::Approx(30.0));
    CHECK(rep.w1_min <= rep.w1 + 1e-12);
    CHECK(rep.w2_min <= rep.w2 + 1e-12);
    CHECK(rep.mu_star.size() == 2);
    CHECK(rep.c_star.size() == 2);
}
