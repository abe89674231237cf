#include "bwksim/environments.hpp"

#include <cmath>
#include <stdexcept>
#include <string>

namespace bwksim {

namespace {

BwkInstance make_blank(int T, int m, int d, double b, const std::string& label) {
    BwkInstance inst;
    inst.T = T;
    inst.m = m;
    inst.d = d;
    inst.per_round_budget.assign(d, b);
    inst.budget.assign(d, b * T);
    inst.mu.assign(static_cast<size_t>(T) * m, 0.0);
    inst.c.assign(static_cast<size_t>(T) * d * m, 0.0);
    inst.label = label;
    return inst;
}

[[noreturn]] void fail(const std::string& what) { throw std::invalid_argument(what); }

}  // namespace

void BwkInstance::validate() const {
    if (T < 1 || m < 1 || d < 1) fail("instance: T, m, d must be positive");
    if (static_cast<int>(budget.size()) != d) fail("instance: budget size != d");
    for (double bj : budget)
        if (!(bj >= 0.0)) fail("instance: negative budget");
    for (double v : mu)
        if (!(v >= 0.0 && v <= 1.0)) fail("instance: reward mean outside [0,1]");
    for (double v : c)
        if (!(v >= 0.0 && v <= 1.0)) fail("instance: consumption mean outside [0,1]");
    for (int t = 1; t <= T; ++t) {
        if (mu_at(t, m - 1) != 0.0) fail("instance: null arm has nonzero reward");
        for (int j = 0; j < d; ++j)
            if (c_at(t, j, m - 1) != 0.0) fail("instance: null arm has nonzero consumption");
    }
}

BwkInstance build_paper_example(int id, const ExampleParams& params) {
    const int T = 10000;
    switch (id) {
        case 1: {
            auto inst = make_blank(T, 3, 1, 0.5, "example1");
            for (int t = 1; t <= T; ++t) {
                inst.mu_ref(t, 0) = 0.5;
                inst.mu_ref(t, 1) = 0.5;
                const bool first_half = t <= T / 2;
                inst.c_ref(t, 0, 0) = first_half ? 0.5 : 1.0;
                inst.c_ref(t, 0, 1) = first_half ? 1.0 : 0.5;
            }
            return inst;
        }
        case 2: {
            auto inst = make_blank(T, 3, 2, 0.5, "example2");
            for (int t = 1; t <= T; ++t) {
                if (t <= T / 2) {
                    inst.mu_ref(t, 0) = 0.5;
                    inst.mu_ref(t, 1) = 0.5;
                    inst.c_ref(t, 0, 0) = 1.0;
                    inst.c_ref(t, 1, 1) = 1.0;
                } else {
                    inst.mu_ref(t, 1) = 0.5;
                    inst.c_ref(t, 0, 0) = 1.0;
                    inst.c_ref(t, 1, 0) = 1.0;
                    inst.c_ref(t, 0, 1) = 0.5;
                    inst.c_ref(t, 1, 1) = 0.5;
                }
            }
            return inst;
        }
        case 3: {
            const double alpha = params.alpha.value_or(0.5);
            if (!(alpha > 0.0 && alpha < 1.0)) fail("example 3: alpha must be in (0,1)");
            const int change = static_cast<int>(std::lround(alpha * T));
            if (change < 1 || change >= T) fail("example 3: alpha*T out of range");
            auto inst = make_blank(T, 3, 2, 0.25, "example3");
            for (int t = 1; t <= T; ++t) {
                if (t <= change) {
                    inst.mu_ref(t, 0) = 0.5;
                    inst.mu_ref(t, 1) = 0.5;
                    inst.c_ref(t, 0, 0) = 0.7;
                    inst.c_ref(t, 0, 1) = 0.3;
                    inst.c_ref(t, 1, 0) = 0.3;
                    inst.c_ref(t, 1, 1) = 0.7;
                } else {
                    inst.mu_ref(t, 1) = 0.7;
                    for (int j = 0; j < 2; ++j)
                        for (int i = 0; i < 2; ++i) inst.c_ref(t, j, i) = 1.0;
                }
            }
            return inst;
        }
        case 4: {
            const int freq = params.frequency.value_or(5);
            // Vertex-sampled triangle waves keep the dynamic benchmark at
            // exactly 3750 only when the period length is a multiple of 4.
            if (freq < 1 || (T / 2) % freq != 0 || ((T / 2) / freq) % 4 != 0)
                fail("example 4: frequency must divide " + std::to_string(T / 8));
            const int period = (T / 2) / freq;
            auto inst = make_blank(T, 3, 2, 0.3125, "example4");
            for (int t = 1; t <= T; ++t) {
                if (t <= T / 2) {
                    inst.mu_ref(t, 0) = 0.5;
                    inst.mu_ref(t, 1) = 0.5;
                    inst.c_ref(t, 0, 0) = 1.0;
                    inst.c_ref(t, 1, 1) = 1.0;
                } else {
                    inst.mu_ref(t, 1) = 0.5;
                    inst.c_ref(t, 0, 0) = 1.0;
                    inst.c_ref(t, 1, 0) = 1.0;
                    const int s = (t - T / 2 - 1) % period;
                    const double wave = s <= period / 2
                                            ? 2.0 * s / period
                                            : 2.0 * (period - s) / period;
                    inst.c_ref(t, 0, 1) = wave;
                    inst.c_ref(t, 1, 1) = wave;
                }
            }
            return inst;
        }
        case 5: {
            // One-armed, two resources with budget 2T/3 each; consumption
            // switches from resource 1 to resource 2 at T/2.
            auto inst = make_blank(T, 2, 2, 2.0 / 3.0, "example5");
            for (int t = 1; t <= T; ++t) {
                inst.mu_ref(t, 0) = 1.0;
                inst.c_ref(t, t <= T / 2 ? 0 : 1, 0) = 1.0;
            }
            return inst;
        }
        default:
            fail("build_paper_example: id must be 1..5");
    }
}

BwkInstance build_motivating_instance(int T, double delta, ShiftDirection direction) {
    if (T < 2 || T % 2 != 0) fail("motivating instance: T must be even and >= 2");
    if (!(delta >= 0.0 && delta < 1.0)) fail("motivating instance: delta must be in [0,1)");
    auto inst = make_blank(T, 2, 1, 0.5, "motivating");
    const double shift = (direction == ShiftDirection::up ? 1.0 : -1.0) * delta / 2.0;
    for (int t = 1; t <= T; ++t) {
        inst.mu_ref(t, 0) = t <= T / 2 ? 0.5 : 0.5 + shift;
        inst.c_ref(t, 0, 0) = 1.0;
    }
    return inst;
}

BwkInstance build_lower_bound_instance(LowerBoundKind kind, const LowerBoundParams& p) {
    const int ma = p.num_actual_arms;
    if (ma < 1) fail("lower bound instance: need at least one actual arm");
    switch (kind) {
        case LowerBoundKind::V1: {
            if (p.H < 1 || p.H > p.T) fail("V1 instance: H must be in [1, T]");
            const double delta = std::sqrt(static_cast<double>(ma) / p.H);
            if (delta > 0.5) fail("V1 instance: sqrt(m/H) exceeds 1/2");
            auto inst = make_blank(p.T, ma + 1, 1, 1.0, "lower_bound_v1");
            for (int t = 1; t <= p.T; ++t)
                for (int i = 0; i < ma; ++i) inst.mu_ref(t, i) = 0.5;
            const int epochs = (p.T + p.H - 1) / p.H;
            for (int e = 0; e < epochs; ++e) {
                const int best = p.epoch_rng ? p.epoch_rng->uniform_int(ma) : e % ma;
                const int lo = e * p.H + 1, hi = std::min(p.T, (e + 1) * p.H);
                for (int t = lo; t <= hi; ++t) inst.mu_ref(t, best) = 0.5 + delta;
            }
            return inst;
        }
        case LowerBoundKind::V2: {
            if (p.H < 1 || 2 * p.H > p.T) fail("V2 instance: need H <= T/2");
            const double delta = std::sqrt(static_cast<double>(ma) / p.H);
            if (delta > 0.5) fail("V2 instance: sqrt(m/H) exceeds 1/2");
            if (p.b + delta > 1.0) fail("V2 instance: b + sqrt(m/H) exceeds 1");
            auto inst = make_blank(p.T, ma + 1, 1, p.b, "lower_bound_v2");
            for (int t = 1; t <= p.T; ++t)
                for (int i = 0; i < ma; ++i) {
                    inst.mu_ref(t, i) = 1.0;
                    inst.c_ref(t, 0, i) = p.b;
                }
            const int half = p.T / 2;
            const int epochs = (half + p.H - 1) / p.H;
            for (int e = 0; e < epochs; ++e) {
                const int best = p.epoch_rng ? p.epoch_rng->uniform_int(ma) : e % ma;
                const int lo = e * p.H + 1, hi = std::min(half, (e + 1) * p.H);
                for (int t = lo; t <= hi; ++t)
                    for (int i = 0; i < ma; ++i)
                        if (i != best) inst.c_ref(t, 0, i) = p.b + delta;
            }
            return inst;
        }
        case LowerBoundKind::W: {
            if (p.T < 2 || p.T % 2 != 0) fail("W instance: T must be even");
            if (!(p.b > 0.0 && p.b < 0.5)) fail("W instance: need 0 < b < 1/2");
            const double sgn = p.direction == ShiftDirection::up ? 1.0 : -1.0;
            const double r2 = p.r + sgn * p.delta1;
            const double c2 = 2.0 * p.b - sgn * p.delta2;
            if (!(r2 >= 0.0 && r2 <= 1.0)) fail("W instance: shifted reward leaves [0,1]");
            if (!(c2 >= 0.0 && c2 <= 1.0)) fail("W instance: shifted consumption leaves [0,1]");
            auto inst = make_blank(p.T, 2, 1, p.b, "lower_bound_w");
            for (int t = 1; t <= p.T; ++t) {
                const bool first = t <= p.T / 2;
                inst.mu_ref(t, 0) = first ? p.r : r2;
                inst.c_ref(t, 0, 0) = first ? 2.0 * p.b : c2;
            }
            return inst;
        }
    }
    fail("build_lower_bound_instance: unknown kind");
}

OutcomeSample sample_outcome(const BwkInstance& instance, int t, Rng& rng) {
    OutcomeSample out;
    sample_outcome_into(instance, t, rng, out);
    return out;
}

void sample_outcome_into(const BwkInstance& instance, int t, Rng& rng,
                         OutcomeSample& out) {
    if (t < 1 || t > instance.T) fail("sample_outcome: round out of range");
    out.rewards.resize(instance.m);
    out.consumptions.resize(static_cast<size_t>(instance.d) * instance.m);
    if (instance.outcome_model == OutcomeModel::deterministic) {
        for (int i = 0; i < instance.m; ++i) out.rewards[i] = instance.mu_at(t, i);
        for (int j = 0; j < instance.d; ++j)
            for (int i = 0; i < instance.m; ++i)
                out.consumptions[static_cast<size_t>(j) * instance.m + i] =
                    instance.c_at(t, j, i);
    } else {
        for (int i = 0; i < instance.m; ++i)
            out.rewards[i] = rng.bernoulli(instance.mu_at(t, i));
        for (int j = 0; j < instance.d; ++j)
            for (int i = 0; i < instance.m; ++i)
                out.consumptions[static_cast<size_t>(j) * instance.m + i] =
                    rng.bernoulli(instance.c_at(t, j, i));
    }
}

}  // namespace bwksim
