#ifndef BWKSIM_ALGORITHMS_HPP
#define BWKSIM_ALGORITHMS_HPP

#include <cstdint>
#include <string>
#include <vector>

#include "bwksim/environments.hpp"
#include "bwksim/lp_core.hpp"
#include "bwksim/rng.hpp"

namespace bwksim {

// One policy execution. Rounds 1..min(tau, T) are played; the round that first
// pushes a cumulative consumption over its budget is tau, its consumption is
// incurred and its reward is not counted (cumulative_reward stays flat there).
// tau == T+1 means no budget was exhausted.
struct RunLog {
    std::vector<int> arms;
    std::vector<double> rewards;            // realized reward of the played arm
    std::vector<double> consumptions;       // rounds x d, realized
    std::vector<double> cumulative_reward;  // running sum, rewards before tau only
    int tau = 0;
    int window_reward = 0;
    int window_cons = 0;
    std::string variant;
    std::uint64_t seed = 0;

    int rounds_played() const { return static_cast<int>(arms.size()); }
    double total_reward() const {
        return cumulative_reward.empty() ? 0.0 : cumulative_reward.back();
    }
};

// w = min{ ceil(m^(1/3) v^(-2/3) T^(2/3) log^(1/3)(12 m T^3)), T } for the
// reward window and the same with log(12 m d T^3) for consumption; zero
// variation maps to the full horizon, and windows are clamped to >= 1.
struct WindowPair {
    int reward = 0;
    int cons = 0;
};
WindowPair default_windows(int m, int d, int T, double v1, double v2);

// Per-round window play counts, appended m values per round (test hook for
// recounting the sliding-window bookkeeping).
struct SwUcbTrace {
    std::vector<int> n_reward;
    std::vector<int> n_cons;
};

struct SwUcbOptions {
    enum class Variant { hoeffding, rad_shrunk };
    Variant variant = Variant::hoeffding;
    double rad_gamma = -1.0;    // < 0: log(12 m d T^3)
    double rad_epsilon = -1.0;  // < 0: default_rad_epsilon(...)
    bool clamp_lcb_at_zero = true;
    LpCoreOptions lp;
    SwUcbTrace* trace = nullptr;
};

// Budget-shrink factor for the rad variant, (alpha2 + beta2)/B evaluated with
// unit constants, clamped to [0, 0.9].
double default_rad_epsilon(int m, int d, int T, double v2, double budget);

RunLog run_sw_ucb(const BwkInstance& instance, int window_reward, int window_cons,
                  Rng& rng, const SwUcbOptions& opts = {});

struct LagrangeOptions {
    double eta_primal = -1.0;  // < 0: sqrt(log(m)/(m T))
    double eta_dual = -1.0;    // < 0: sqrt(log(d+1)/T)
    double mix_gamma = -1.0;   // < 0: min(0.5, sqrt(m log(m)/T))
};

// Two-player Lagrangian baseline: EXP3 over the arms against Hedge over d+1
// coordinates (d resources plus a null resource with identically-zero payoff).
// benchmark_value is the exact static benchmark handed to the algorithm.
RunLog run_lagrange_bwk(const BwkInstance& instance, double benchmark_value, Rng& rng,
                        const LagrangeOptions& opts = {});

double compute_regret(const RunLog& log, double benchmark_value);

}  // namespace bwksim

#endif
