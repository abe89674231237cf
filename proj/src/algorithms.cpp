#include "bwksim/algorithms.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

#include "bwksim/measures.hpp"

namespace bwksim {

namespace {

constexpr double kBudgetSlack = 1e-9;  // fp drift guard on the hard constraint

// Accumulates one play into the log; returns true when some budget is newly
// exceeded (that round is tau and its reward is not counted).
struct BudgetTracker {
    const BwkInstance& inst;
    RunLog& log;
    std::vector<double> cum;
    double reward_sum = 0.0;

    BudgetTracker(const BwkInstance& i, RunLog& l) : inst(i), log(l), cum(i.d, 0.0) {
        log.arms.reserve(i.T);
        log.rewards.reserve(i.T);
        log.consumptions.reserve(static_cast<size_t>(i.T) * i.d);
        log.cumulative_reward.reserve(i.T);
    }

    bool record(int arm, const OutcomeSample& outcome) {
        log.arms.push_back(arm);
        const double r = outcome.rewards[arm];
        log.rewards.push_back(r);
        bool violated = false;
        for (int j = 0; j < inst.d; ++j) {
            const double cj = outcome.consumptions[static_cast<size_t>(j) * inst.m + arm];
            log.consumptions.push_back(cj);
            cum[j] += cj;
            if (cum[j] > inst.budget[j] + kBudgetSlack) violated = true;
        }
        if (!violated) reward_sum += r;
        log.cumulative_reward.push_back(reward_sum);
        return violated;
    }
};

int sample_from(const std::vector<double>& x, Rng& rng) {
    const double u = rng.uniform();
    double acc = 0.0;
    for (size_t i = 0; i < x.size(); ++i) {
        acc += x[i];
        if (u < acc) return static_cast<int>(i);
    }
    return static_cast<int>(x.size()) - 1;
}

}  // namespace

WindowPair default_windows(int m, int d, int T, double v1, double v2) {
    auto window = [T, m](double v, double log_term) {
        if (v <= 0.0) return T;
        const double w = std::cbrt(static_cast<double>(m)) * std::pow(v, -2.0 / 3.0) *
                         std::pow(static_cast<double>(T), 2.0 / 3.0) * std::cbrt(log_term);
        const double clamped = std::min(std::ceil(w), static_cast<double>(T));
        return std::max(1, static_cast<int>(clamped));
    };
    WindowPair out;
    out.reward = window(v1, std::log(12.0 * m * std::pow(static_cast<double>(T), 3)));
    out.cons = window(v2, std::log(12.0 * m * d * std::pow(static_cast<double>(T), 3)));
    return out;
}

double default_rad_epsilon(int m, int d, int T, double v2, double budget) {
    if (budget <= 0.0) return 0.0;
    const double lg = std::log(static_cast<double>(m) * d * T * static_cast<double>(T));
    const double alpha2 = std::sqrt(lg * m * budget) + m * lg;
    const double beta2 = std::sqrt(lg * budget) +
                         std::cbrt(static_cast<double>(m)) * std::cbrt(v2) *
                             std::pow(static_cast<double>(T), 2.0 / 3.0) * std::cbrt(lg);
    return std::clamp((alpha2 + beta2) / budget, 0.0, 0.9);
}

RunLog run_sw_ucb(const BwkInstance& inst, int window_reward, int window_cons, Rng& rng,
                  const SwUcbOptions& opts) {
    inst.validate();
    if (window_reward < 1 || window_reward > inst.T || window_cons < 1 ||
        window_cons > inst.T)
        throw std::invalid_argument("run_sw_ucb: windows must be in [1, T]");
    const int m = inst.m, d = inst.d, T = inst.T;

    RunLog log;
    log.window_reward = window_reward;
    log.window_cons = window_cons;
    log.variant =
        opts.variant == SwUcbOptions::Variant::hoeffding ? "sw_ucb" : "sw_ucb_rad";
    BudgetTracker tracker(inst, log);

    const double log_r = std::log(12.0 * m * std::pow(static_cast<double>(T), 3));
    const double log_c = std::log(12.0 * m * d * std::pow(static_cast<double>(T), 3));
    const double ucb_cap = 1.0 + std::sqrt(2.0 * log_r);
    const double lcb_floor = -std::sqrt(2.0 * log_c);
    const bool rad = opts.variant == SwUcbOptions::Variant::rad_shrunk;
    const double gamma = opts.rad_gamma >= 0.0 ? opts.rad_gamma : log_c;
    double epsilon = opts.rad_epsilon;
    if (rad && epsilon < 0.0) {
        double bmin = inst.budget.empty() ? 0.0 : inst.budget[0];
        for (double bj : inst.budget) bmin = std::min(bmin, bj);
        epsilon = default_rad_epsilon(m, d, T, local_budgets(inst).v2, bmin);
    }

    // Window aggregates over the play history. n_*[i] counts plays of arm i in
    // the last w rounds, reward/consumption sums alongside.
    std::vector<int> hist_arm;
    hist_arm.reserve(T);
    std::vector<double> hist_reward;
    hist_reward.reserve(T);
    std::vector<double> hist_cons;
    hist_cons.reserve(static_cast<size_t>(T) * d);
    std::vector<int> n_r(m, 0), n_c(m, 0);
    std::vector<double> sum_r(m, 0.0), sum_c(static_cast<size_t>(d) * m, 0.0);
    int lo_r = 0, lo_c = 0;  // first history index still inside each window

    std::vector<double> ucb(m), lcb(static_cast<size_t>(d) * m), rhs(d);
    SingleStepLpSolver lp_solver(opts.lp);
    OutcomeSample outcome;

    for (int t = 1; t <= T; ++t) {
        // Evict plays outside the window [max(1, t-w), t-1]; index h holds round h+1.
        while (lo_r < static_cast<int>(hist_arm.size()) && lo_r + 1 < t - window_reward) {
            const int a = hist_arm[lo_r];
            --n_r[a];
            sum_r[a] -= hist_reward[lo_r];
            ++lo_r;
        }
        while (lo_c < static_cast<int>(hist_arm.size()) && lo_c + 1 < t - window_cons) {
            const int a = hist_arm[lo_c];
            --n_c[a];
            for (int j = 0; j < d; ++j)
                sum_c[static_cast<size_t>(j) * m + a] -=
                    hist_cons[static_cast<size_t>(lo_c) * d + j];
            ++lo_c;
        }

        for (int i = 0; i < m; ++i) {
            const double inv_r = 1.0 / (n_r[i] + 1);
            const double mu_hat = sum_r[i] * inv_r;
            double u;
            if (rad) {
                const double radius = std::sqrt(gamma * mu_hat * inv_r) + gamma * inv_r;
                u = mu_hat + 2.0 * radius;
            } else {
                u = mu_hat + std::sqrt(2.0 * log_r * inv_r);
            }
            ucb[i] = std::clamp(u, 0.0, ucb_cap);
            const double inv_c = 1.0 / (n_c[i] + 1);
            for (int j = 0; j < d; ++j) {
                const double c_hat = sum_c[static_cast<size_t>(j) * m + i] * inv_c;
                double l;
                if (rad) {
                    const double radius = std::sqrt(gamma * c_hat * inv_c) + gamma * inv_c;
                    l = c_hat - 2.0 * radius;
                } else {
                    l = c_hat - std::sqrt(2.0 * log_c * inv_c);
                }
                l = std::max(l, lcb_floor);
                if (opts.clamp_lcb_at_zero) l = std::max(l, 0.0);
                lcb[static_cast<size_t>(j) * m + i] = l;
            }
        }
        for (int j = 0; j < d; ++j)
            rhs[j] = rad ? (1.0 - epsilon) * inst.per_round_budget[j]
                         : inst.per_round_budget[j];
        if (opts.trace) {
            opts.trace->n_reward.insert(opts.trace->n_reward.end(), n_r.begin(), n_r.end());
            opts.trace->n_cons.insert(opts.trace->n_cons.end(), n_c.begin(), n_c.end());
        }

        const LpSolution& sol = lp_solver.solve(ucb, lcb, rhs);
        if (sol.status != SolveStatus::optimal)
            throw std::runtime_error("run_sw_ucb: single-step LP failed");

        const int arm = sample_from(sol.x, rng);
        sample_outcome_into(inst, t, rng, outcome);

        hist_arm.push_back(arm);
        const double r = outcome.rewards[arm];
        hist_reward.push_back(r);
        ++n_r[arm];
        sum_r[arm] += r;
        ++n_c[arm];
        for (int j = 0; j < d; ++j) {
            const double cj = outcome.consumptions[static_cast<size_t>(j) * m + arm];
            hist_cons.push_back(cj);
            sum_c[static_cast<size_t>(j) * m + arm] += cj;
        }

        if (tracker.record(arm, outcome)) {
            log.tau = t;
            return log;
        }
    }
    log.tau = T + 1;
    return log;
}

RunLog run_lagrange_bwk(const BwkInstance& inst, double benchmark_value, Rng& rng,
                        const LagrangeOptions& opts) {
    inst.validate();
    const int m = inst.m, d = inst.d, T = inst.T;
    const double eta_p =
        opts.eta_primal > 0.0 ? opts.eta_primal : std::sqrt(std::log(std::max(2, m)) /
                                                            (static_cast<double>(m) * T));
    const double eta_d = opts.eta_dual > 0.0 ? opts.eta_dual
                                             : std::sqrt(std::log(d + 1.0) / T);
    const double mix = opts.mix_gamma >= 0.0
                           ? opts.mix_gamma
                           : std::min(0.5, std::sqrt(m * std::log(std::max(2, m)) / T));
    const double scale = std::max(benchmark_value / T, 1e-9);
    const double payoff_span = 1.0 / scale + 2.0;

    RunLog log;
    log.variant = "lagrange_bwk";
    BudgetTracker tracker(inst, log);

    std::vector<double> logw_p(m, 0.0), logw_d(d + 1, 0.0);
    std::vector<double> p(m), q(d + 1);
    OutcomeSample outcome;

    for (int t = 1; t <= T; ++t) {
        auto softmax = [](const std::vector<double>& logw, std::vector<double>& out) {
            const double mx = *std::max_element(logw.begin(), logw.end());
            double z = 0.0;
            for (size_t i = 0; i < logw.size(); ++i) z += (out[i] = std::exp(logw[i] - mx));
            for (double& v : out) v /= z;
        };
        softmax(logw_p, p);
        softmax(logw_d, q);
        for (int i = 0; i < m; ++i) p[i] = (1.0 - mix) * p[i] + mix / m;

        const int arm = sample_from(p, rng);
        sample_outcome_into(inst, t, rng, outcome);

        // Primal payoff under the dual mix; q[0] is the null resource.
        double payoff = outcome.rewards[arm] / scale;
        for (int j = 0; j < d; ++j)
            payoff += q[j + 1] * (inst.per_round_budget[j] -
                                  outcome.consumptions[static_cast<size_t>(j) * m + arm]);
        const double payoff01 = (payoff + 1.0) / payoff_span;
        logw_p[arm] += eta_p * payoff01 / p[arm];

        for (int j = 0; j < d; ++j) {
            const double gain =
                outcome.consumptions[static_cast<size_t>(j) * m + arm] -
                inst.per_round_budget[j];
            logw_d[j + 1] += eta_d * (gain + 1.0) / 2.0;
        }
        logw_d[0] += eta_d * 0.5;

        if (tracker.record(arm, outcome)) {
            log.tau = t;
            return log;
        }
    }
    log.tau = T + 1;
    return log;
}

double compute_regret(const RunLog& log, double benchmark_value) {
    return benchmark_value - log.total_reward();
}

}  // namespace bwksim
