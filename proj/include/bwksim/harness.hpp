#ifndef BWKSIM_HARNESS_HPP
#define BWKSIM_HARNESS_HPP

#include <cstdint>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include "bwksim/algorithms.hpp"
#include "bwksim/environments.hpp"

namespace bwksim {

struct ConfigError : std::runtime_error {
    int line;
    ConfigError(const std::string& msg, int line_no)
        : std::runtime_error("config line " + std::to_string(line_no) + ": " + msg),
          line(line_no) {}
};

struct PolicySpec {
    enum class Kind { sw_ucb, naive_ucb, sw_ucb_rad, lagrange };
    Kind kind = Kind::sw_ucb;
    std::string label;
    enum class Windows { automatic, full, fixed };
    Windows windows = Windows::automatic;
    int w1 = 0, w2 = 0;
    bool clamp_lcb = true;
    enum class Benchmark { static_lp, dynamic_lp, fixed_value };
    Benchmark benchmark = Benchmark::static_lp;  // handed to lagrange
    double benchmark_value = 0.0;
};

struct InstanceSpec {
    enum class Builder { example, motivating, lower_bound, inline_segments };
    Builder builder = Builder::example;
    int id = 1;
    std::optional<double> alpha;
    std::optional<int> frequency;
    OutcomeModel outcome = OutcomeModel::deterministic;
    // motivating
    int T = 1000;
    double delta = 0.2;
    ShiftDirection direction = ShiftDirection::down;
    // lower_bound
    LowerBoundKind lb_kind = LowerBoundKind::V1;
    LowerBoundParams lb;
    std::uint64_t lb_seed = 0;
    bool lb_random_epochs = false;
    // inline_segments
    BwkInstance inline_instance;

    // sweep_param/sweep_value override one builder parameter when set.
    BwkInstance build(const std::string& sweep_param = "", double sweep_value = 0.0) const;
};

struct SweepSpec {
    std::string param;  // empty = no sweep
    std::vector<double> values;
};

enum class OutputFormat { csv, svg, both };

struct ExperimentConfig {
    std::string name = "experiment";
    int trials = 100;
    std::uint64_t seed = 0;
    std::string out_dir = ".";
    OutputFormat format = OutputFormat::both;
    int downsample = 0;  // 0: every 10th round when T >= 5000, else every round
    int threads = 0;     // 0: hardware concurrency
    InstanceSpec instance;
    std::vector<PolicySpec> policies;
    SweepSpec sweep;
};

ExperimentConfig parse_experiment_config(const std::string& text);
ExperimentConfig load_experiment_config(const std::string& path);

// Inline-segment config text for an instance (consecutive identical rounds
// collapse into one segment); parse_experiment_config inverts it.
std::string instance_to_config(const BwkInstance& instance);

struct TrialRow {
    int trial = 0;
    std::vector<double> ds_cum_reward;             // at the logged rounds
    std::vector<std::vector<double>> ds_cum_cons;  // per logged round, d values
    int tau = 0;
    double total_reward = 0.0;
    double regret = 0.0;
};

struct CellResult {
    std::string policy;
    bool has_sweep = false;
    double sweep_value = 0.0;
    double benchmark = 0.0;  // dynamic LP value of the cell's instance
    std::vector<TrialRow> trials;
    std::vector<double> mean_cum, std_cum;  // at the logged rounds
    double mean_tau = 0.0;
    double mean_regret = 0.0;
    // "ok", or the solver diagnostic when the cell was aborted (no trials).
    std::string status = "ok";
};

struct AggregateTable {
    std::string experiment;
    int T = 0, d = 0;
    std::vector<int> logged_rounds;
    std::vector<CellResult> cells;
};

// Runs trials * policies * sweep values; trial seeds are master_seed + trial
// index and the reduction order is fixed by trial index, so the result is
// byte-stable under any thread count.
AggregateTable run_experiment(const ExperimentConfig& config);

void write_trials_csv(const AggregateTable& table, std::ostream& os);
void write_summary_csv(const AggregateTable& table, std::ostream& os);

// Minimal long-format reader (inverse of write_trials_csv).
struct ParsedTrialsCsv {
    std::vector<std::string> header;
    std::vector<std::vector<std::string>> rows;
};
ParsedTrialsCsv parse_trials_csv(std::istream& is);

// Static 800x600 line chart; when the table has a sweep the x axis is the
// sweep value and y the mean regret, otherwise x is the round and y the mean
// cumulative reward with the benchmark drawn as a horizontal line.
std::string render_svg(const AggregateTable& table);

// Writes <name>_trials.csv / <name>_summary.csv / <name>.svg per format.
std::vector<std::string> emit_outputs(const AggregateTable& table,
                                      const ExperimentConfig& config);

std::string format_double(double v);  // shared CSV/SVG number formatting

}  // namespace bwksim

#endif
