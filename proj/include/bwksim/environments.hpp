#ifndef BWKSIM_ENVIRONMENTS_HPP
#define BWKSIM_ENVIRONMENTS_HPP

#include <optional>
#include <string>
#include <vector>

#include "bwksim/rng.hpp"

namespace bwksim {

enum class OutcomeModel { deterministic, bernoulli };

// A non-stationary knapsack-bandit instance: per-round expected rewards and
// consumptions plus budgets. The last arm is always the null arm (zero reward,
// zero consumption); rounds are 1-based in the public API.
struct BwkInstance {
    int T = 0;  // horizon
    int m = 0;  // arms, null arm included (index m-1)
    int d = 0;  // resources
    std::vector<double> budget;      // size d, B_j = per_round_budget[j] * T
    std::vector<double> per_round_budget;  // b_j
    std::vector<double> mu;          // T x m, row-major
    std::vector<double> c;           // T x d x m
    OutcomeModel outcome_model = OutcomeModel::deterministic;
    std::string label;

    double mu_at(int t, int i) const { return mu[static_cast<size_t>(t - 1) * m + i]; }
    double c_at(int t, int j, int i) const {
        return c[(static_cast<size_t>(t - 1) * d + j) * m + i];
    }
    double& mu_ref(int t, int i) { return mu[static_cast<size_t>(t - 1) * m + i]; }
    double& c_ref(int t, int j, int i) {
        return c[(static_cast<size_t>(t - 1) * d + j) * m + i];
    }

    // Throws std::invalid_argument when a mean leaves [0,1], the null arm is
    // not all-zero, or a budget is negative.
    void validate() const;
};

struct OutcomeSample {
    std::vector<double> rewards;       // size m
    std::vector<double> consumptions;  // d x m, row-major
};

struct ExampleParams {
    std::optional<double> alpha;   // Example 3: change point at alpha*T
    std::optional<int> frequency;  // Example 4: triangle-wave periods in the second half
};

// The four numerical examples (plus id=5: the two-resource switching instance
// that makes the benchmark LP non-binding while the single-step LPs bind).
BwkInstance build_paper_example(int id, const ExampleParams& params = {});

enum class ShiftDirection { up, down };

// One actual arm, unit consumption, budget T/2; the second-half reward moves by
// +-delta/2 around 0.5 (rewards are rescaled by 1/2 to stay inside [0,1]).
BwkInstance build_motivating_instance(int T, double delta, ShiftDirection direction);

enum class LowerBoundKind { V1, V2, W };

struct LowerBoundParams {
    int num_actual_arms = 2;
    int T = 1024;
    int H = 256;          // epoch length (V1/V2)
    double b = 0.25;      // per-round budget (V2/W)
    double r = 0.5;       // first-phase reward (W)
    double delta1 = 0.0;  // reward shift (W)
    double delta2 = 0.0;  // consumption shift (W)
    ShiftDirection direction = ShiftDirection::down;
    // V1/V2: per-epoch best arm; when no generator is given the best arm
    // cycles round-robin, which pins the realized variation exactly.
    Rng* epoch_rng = nullptr;
};

BwkInstance build_lower_bound_instance(LowerBoundKind kind, const LowerBoundParams& params);

// Realized outcome for round t. Deterministic instances return the stored
// means. Bernoulli instances draw every entry independently, rewards first
// (arm order) then consumptions (resource-major), so the draw count per round
// is fixed at m + d*m.
OutcomeSample sample_outcome(const BwkInstance& instance, int t, Rng& rng);

// Same draw sequence, reusing the caller's buffers (per-round hot path).
void sample_outcome_into(const BwkInstance& instance, int t, Rng& rng,
                         OutcomeSample& out);

}  // namespace bwksim

#endif
