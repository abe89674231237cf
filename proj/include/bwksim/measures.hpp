#ifndef BWKSIM_MEASURES_HPP
#define BWKSIM_MEASURES_HPP

#include <vector>

#include "bwksim/environments.hpp"
#include "bwksim/lp_core.hpp"

namespace bwksim {

struct LocalBudgets {
    double v1 = 0.0;
    std::vector<double> v2_per_resource;
    double v2 = 0.0;  // max over resources
};

struct GlobalBudgets {
    double w1 = 0.0;
    double w2 = 0.0;
};

struct RefinedBudgets {
    double w1_min = 0.0;
    std::vector<double> mu_star;  // size m (null coordinate 0)
    double w2_min = 0.0;
    std::vector<double> c_star;   // d x m row-major
};

struct NonstationarityReport {
    double v1 = 0.0;
    std::vector<double> v2_per_resource;
    double v2 = 0.0;
    double w1 = 0.0, w2 = 0.0;
    double w1_min = 0.0, w2_min = 0.0;
    std::vector<double> mu_star;
    std::vector<double> c_star;
};

struct MeasuresOptions {
    LpCoreOptions lp;
    long long refined_size_cap = 100000;  // LP variable cap for the refined measures
};

// Adjacent-round sup-norm variation of the stored means (exact arithmetic on
// the means; T=1 gives zeros).
LocalBudgets local_budgets(const BwkInstance& instance);

// Deviation from the time averages; W2 uses the max-over-arms column sum of
// absolute deviations (operator L1 norm of C_t - C_bar).
GlobalBudgets global_budgets(const BwkInstance& instance);

// Exact minimizers of sum_t ||mu_t - mu||_inf and sum_t ||C_t - C||_1 over the
// anchor point, solved as LPs on the round-grouped data. Throws on the size
// cap or a simplex failure.
RefinedBudgets refined_budgets(const BwkInstance& instance,
                               const MeasuresOptions& opts = {});

NonstationarityReport compute_nonstationarity(const BwkInstance& instance,
                                              const MeasuresOptions& opts = {});

}  // namespace bwksim

#endif
