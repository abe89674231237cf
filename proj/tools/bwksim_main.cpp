// Command-line driver: seeded multi-trial simulations, LP benchmarks and
// sandwich checks, non-stationarity measures, the constrained-OCO algorithm,
// and the lower-bound instance sweeps. Exit codes: 0 ok, 1 config error,
// 2 solver failure.

#include <filesystem>
#include <fstream>
#include <iostream>
#include <sstream>

#include "CLI11.hpp"
#include "bwksim/harness.hpp"
#include "bwksim/lp_core.hpp"
#include "bwksim/measures.hpp"
#include "bwksim/ocowc.hpp"

namespace fs = std::filesystem;
using namespace bwksim;

namespace {

struct CommonFlags {
    std::string config_path;
    std::string out_dir;
    std::string format;
    double tolerance = -1.0;
    std::uint64_t seed = 0;
    bool seed_set = false;
    int trials = 0;
    int threads = 0;
};

void add_common(CLI::App* cmd, CommonFlags& flags, bool needs_config = true) {
    if (needs_config)
        cmd->add_option("config", flags.config_path, "config file")->required();
    cmd->add_option("--out-dir", flags.out_dir, "output directory");
    cmd->add_option("--format", flags.format, "csv|svg|both");
    cmd->add_option("--tolerance", flags.tolerance, "numeric tolerance override");
    cmd->add_option("--seed", flags.seed, "master seed override")
        ->each([&](const std::string&) { flags.seed_set = true; });
    cmd->add_option("--trials", flags.trials, "trial count override");
    cmd->add_option("--threads", flags.threads, "worker thread count");
}

void apply_overrides(ExperimentConfig& cfg, const CommonFlags& flags) {
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.seed_set) cfg.seed = flags.seed;
    if (flags.trials > 0) cfg.trials = flags.trials;
    if (flags.threads > 0) cfg.threads = flags.threads;
    if (flags.format == "csv") cfg.format = OutputFormat::csv;
    else if (flags.format == "svg") cfg.format = OutputFormat::svg;
    else if (flags.format == "both") cfg.format = OutputFormat::both;
    else if (!flags.format.empty())
        throw ConfigError("format must be csv|svg|both", 0);
}

void write_file(const std::string& dir, const std::string& name, const std::string& body) {
    fs::create_directories(dir);
    const std::string path = (fs::path(dir) / name).string();
    std::ofstream out(path, std::ios::binary);
    if (!out) throw std::runtime_error("cannot write " + path);
    out << body;
    std::cout << "wrote " << path << "\n";
}

int cmd_simulate(const CommonFlags& flags) {
    ExperimentConfig cfg = load_experiment_config(flags.config_path);
    apply_overrides(cfg, flags);
    AggregateTable table = run_experiment(cfg);
    for (const std::string& p : emit_outputs(table, cfg)) std::cout << "wrote " << p << "\n";
    for (const CellResult& cell : table.cells)
        if (cell.status != "ok") {
            std::cerr << "cell " << cell.policy << " failed: " << cell.status << "\n";
            return 2;
        }
    return 0;
}

int cmd_benchmark(const CommonFlags& flags) {
    ExperimentConfig cfg = load_experiment_config(flags.config_path);
    apply_overrides(cfg, flags);
    std::vector<std::pair<bool, double>> sweep{{false, 0.0}};
    if (!cfg.sweep.param.empty()) {
        sweep.clear();
        for (double v : cfg.sweep.values) sweep.emplace_back(true, v);
    }
    std::ostringstream os;
    os << "experiment,sweep_value,dynamic,static,sum_single,averaged_plus_w,"
          "sum_single_plus_2w,w1,w2,qbar,qbar_bound,ok,violated_inequality,"
          "max_violation\n";
    for (auto [has, v] : sweep) {
        const BwkInstance inst = cfg.instance.build(has ? cfg.sweep.param : "", v);
        const SandwichReport rep =
            check_lp_sandwich(inst, {}, flags.tolerance >= 0 ? flags.tolerance : -1.0);
        const double stat = solve_static_lp(inst).value;
        os << cfg.name << ',' << (has ? format_double(v) : std::string{}) << ','
           << format_double(rep.dynamic) << ',' << format_double(stat) << ','
           << format_double(rep.sum_single) << ',' << format_double(rep.averaged_plus_w)
           << ',' << format_double(rep.sum_single_plus_2w) << ','
           << format_double(rep.w1) << ',' << format_double(rep.w2) << ','
           << format_double(rep.qbar) << ',' << format_double(rep.qbar_bound) << ','
           << (rep.ok() ? 1 : 0) << ',' << rep.violated_inequality << ','
           << format_double(rep.max_violation) << '\n';
        if (!rep.ok()) {
            std::cerr << "sandwich violation on sweep value " << v << "\n";
            std::cout << os.str();
            return 2;
        }
    }
    write_file(cfg.out_dir, cfg.name + "_benchmark.csv", os.str());
    return 0;
}

int cmd_measures(const CommonFlags& flags) {
    ExperimentConfig cfg = load_experiment_config(flags.config_path);
    apply_overrides(cfg, flags);
    std::vector<std::pair<bool, double>> sweep{{false, 0.0}};
    if (!cfg.sweep.param.empty()) {
        sweep.clear();
        for (double v : cfg.sweep.values) sweep.emplace_back(true, v);
    }
    std::ostringstream os;
    bool header = false;
    for (auto [has, v] : sweep) {
        const BwkInstance inst = cfg.instance.build(has ? cfg.sweep.param : "", v);
        const NonstationarityReport rep = compute_nonstationarity(inst);
        if (!header) {
            os << "experiment,sweep_value,v1";
            for (int j = 1; j <= inst.d; ++j) os << ",v2_" << j;
            os << ",v2,w1,w2,w1_min,w2_min\n";
            header = true;
        }
        os << cfg.name << ',' << (has ? format_double(v) : std::string{}) << ','
           << format_double(rep.v1);
        for (double vj : rep.v2_per_resource) os << ',' << format_double(vj);
        os << ',' << format_double(rep.v2) << ',' << format_double(rep.w1) << ','
           << format_double(rep.w2) << ',' << format_double(rep.w1_min) << ','
           << format_double(rep.w2_min) << '\n';
    }
    write_file(cfg.out_dir, cfg.name + "_measures.csv", os.str());
    return 0;
}

// ---- oco ----------------------------------------------------------------------

struct OcoConfig {
    std::string name = "oco";
    std::string out_dir = ".";
    std::string builder = "two_phase";
    int T = 10000;
    double r = 1.0, b = 0.1, delta = 0.01;
    std::string params = "paper";  // paper | neely | custom
    double beta = 0.0, alpha = 0.0;
    std::vector<double> x0;
    bool stochastic = false;
    double noise = 0.0;
    std::uint64_t seed = 0;
};

OcoConfig parse_oco_config(const std::string& text) {
    OcoConfig cfg;
    std::istringstream iss(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(iss, raw)) {
        ++line_no;
        const size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::string key;
        if (!(ls >> key)) continue;
        auto num = [&](double& out) {
            if (!(ls >> out)) throw ConfigError("'" + key + "' needs a number", line_no);
        };
        if (key == "oco") continue;
        else if (key == "name") ls >> cfg.name;
        else if (key == "outdir") ls >> cfg.out_dir;
        else if (key == "builder") ls >> cfg.builder;
        else if (key == "T") { double v; num(v); cfg.T = static_cast<int>(v); }
        else if (key == "r") num(cfg.r);
        else if (key == "b") num(cfg.b);
        else if (key == "delta") num(cfg.delta);
        else if (key == "params") {
            ls >> cfg.params;
            if (cfg.params == "custom") { num(cfg.beta); num(cfg.alpha); }
        } else if (key == "x0") {
            double v;
            while (ls >> v) cfg.x0.push_back(v);
        } else if (key == "stochastic") { double v; num(v); cfg.stochastic = v != 0; }
        else if (key == "noise") num(cfg.noise);
        else if (key == "seed") { double v; num(v); cfg.seed = static_cast<std::uint64_t>(v); }
        else throw ConfigError("unknown oco key '" + key + "'", line_no);
    }
    return cfg;
}

int cmd_oco(const CommonFlags& flags) {
    std::ifstream in(flags.config_path);
    if (!in) throw std::runtime_error("cannot open config file: " + flags.config_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    OcoConfig cfg = parse_oco_config(ss.str());
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.seed_set) cfg.seed = flags.seed;

    if (cfg.builder != "two_phase")
        throw ConfigError("unknown oco builder '" + cfg.builder + "'", 0);
    OcoInstance inst = build_two_phase_oco_instance(cfg.T, cfg.r, cfg.b, cfg.delta);
    inst.stochastic = cfg.stochastic;
    inst.noise_amplitude = cfg.noise;

    VirtualQueueParams params = VirtualQueueParams::paper(cfg.T);
    if (cfg.params == "neely") params = VirtualQueueParams::neely(cfg.T);
    else if (cfg.params == "normalized") params = VirtualQueueParams::normalized(cfg.T);
    else if (cfg.params == "custom") params = {cfg.beta, cfg.alpha};
    else if (cfg.params != "paper")
        throw ConfigError("params must be paper|neely|normalized|custom", 0);

    std::vector<double> x0 = cfg.x0.empty() ? std::vector<double>(inst.dim, 0.0) : cfg.x0;
    Rng rng(cfg.seed);
    const OcoBenchmarks bench = oco_benchmarks(inst);
    const OcoRunLog log = run_virtual_queue(inst, x0, params,
                                            inst.stochastic ? &rng : nullptr, &bench);
    const double w = oco_nonstationarity(inst);

    std::ostringstream sum;
    sum << "experiment,T,opt,opt_restricted,opt_static,opt_restricted_static,cost,"
           "reg1,reg1_restricted,reg2,W,qbar\n"
        << cfg.name << ',' << cfg.T << ',' << format_double(bench.opt) << ','
        << format_double(bench.opt_restricted) << ',' << format_double(bench.opt_static)
        << ',' << format_double(bench.opt_restricted_static) << ','
        << format_double(log.cost) << ',' << format_double(log.reg1) << ','
        << format_double(log.reg1_restricted) << ',' << format_double(log.reg2) << ','
        << format_double(w) << ',' << format_double(bench.qbar) << '\n';
    write_file(cfg.out_dir, cfg.name + "_oco_summary.csv", sum.str());

    std::ostringstream traj;
    traj << "round,x_1";
    for (int i = 1; i <= inst.d; ++i) traj << ",queue_" << i;
    traj << '\n';
    const int step = cfg.T >= 5000 ? 10 : 1;
    for (int t = step; t <= cfg.T; t += step) {
        traj << t << ',' << format_double(log.xs[t - 1][0]);
        for (int i = 0; i < inst.d; ++i)
            traj << ',' << format_double(log.queues[static_cast<size_t>(t - 1) * inst.d + i]);
        traj << '\n';
    }
    write_file(cfg.out_dir, cfg.name + "_oco_trajectory.csv", traj.str());
    return 0;
}

// ---- lowerbound -----------------------------------------------------------------

struct LowerBoundConfig {
    std::string name = "lowerbound";
    std::string out_dir = ".";
    LowerBoundKind kind = LowerBoundKind::V1;
    int m = 2;
    double b = 0.25;
    double target_v = 1.0;
    std::vector<int> horizons{1000, 2000, 4000};
    int trials = 50;
    std::uint64_t seed = 0;
};

LowerBoundConfig parse_lowerbound_config(const std::string& text) {
    LowerBoundConfig cfg;
    std::istringstream iss(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(iss, raw)) {
        ++line_no;
        const size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        std::istringstream ls(raw);
        std::string key;
        if (!(ls >> key)) continue;
        if (key == "lowerbound") continue;
        else if (key == "name") ls >> cfg.name;
        else if (key == "outdir") ls >> cfg.out_dir;
        else if (key == "kind") {
            std::string k;
            ls >> k;
            if (k == "V1") cfg.kind = LowerBoundKind::V1;
            else if (k == "V2") cfg.kind = LowerBoundKind::V2;
            else if (k == "W") cfg.kind = LowerBoundKind::W;
            else throw ConfigError("kind must be V1|V2|W", line_no);
        } else if (key == "m") ls >> cfg.m;
        else if (key == "b") ls >> cfg.b;
        else if (key == "target_v") ls >> cfg.target_v;
        else if (key == "T") {
            cfg.horizons.clear();
            int v;
            while (ls >> v) cfg.horizons.push_back(v);
        } else if (key == "trials") ls >> cfg.trials;
        else if (key == "seed") { double v; ls >> v; cfg.seed = static_cast<std::uint64_t>(v); }
        else throw ConfigError("unknown lowerbound key '" + key + "'", line_no);
    }
    return cfg;
}

// Epoch length matching a target variation budget: v ~ sqrt(m/H) * epochs.
int epoch_length_for(LowerBoundKind kind, int m, int T, double target_v) {
    const double phase = kind == LowerBoundKind::V2 ? T / 2.0 : static_cast<double>(T);
    const double h = std::pow(std::sqrt(static_cast<double>(m)) * phase / target_v, 2.0 / 3.0);
    return std::max(1, static_cast<int>(std::lround(h)));
}

int cmd_lowerbound(const CommonFlags& flags) {
    std::ifstream in(flags.config_path);
    if (!in) throw std::runtime_error("cannot open config file: " + flags.config_path);
    std::ostringstream ss;
    ss << in.rdbuf();
    LowerBoundConfig cfg = parse_lowerbound_config(ss.str());
    if (!flags.out_dir.empty()) cfg.out_dir = flags.out_dir;
    if (flags.seed_set) cfg.seed = flags.seed;
    if (flags.trials > 0) cfg.trials = flags.trials;

    std::ostringstream os;
    os << "experiment,kind,T,H,delta,v1,v2,benchmark,mean_regret,mean_shortfall,mean_tau\n";
    for (int T : cfg.horizons) {
        LowerBoundParams p;
        p.num_actual_arms = cfg.m;
        p.T = T;
        p.b = cfg.b;
        p.H = epoch_length_for(cfg.kind, cfg.m, T, cfg.target_v);
        const BwkInstance inst = build_lower_bound_instance(cfg.kind, p);
        BwkInstance run_inst = inst;
        run_inst.outcome_model = OutcomeModel::bernoulli;
        const LocalBudgets lb = local_budgets(inst);
        const WindowPair w = default_windows(inst.m, inst.d, T, lb.v1, lb.v2);
        DynamicLpSolution dyn = solve_dynamic_lp(inst);
        if (dyn.status != SolveStatus::optimal) return 2;
        double sum_regret = 0.0, sum_shortfall = 0.0, sum_tau = 0.0;
        for (int trial = 0; trial < cfg.trials; ++trial) {
            Rng rng(cfg.seed + static_cast<std::uint64_t>(trial));
            const RunLog log = run_sw_ucb(run_inst, w.reward, w.cons, rng, {});
            sum_regret += compute_regret(log, dyn.value);
            sum_shortfall += log.tau <= T ? T - log.tau : 0;
            sum_tau += log.tau;
        }
        const char* kind_name = cfg.kind == LowerBoundKind::V1
                                    ? "V1"
                                    : cfg.kind == LowerBoundKind::V2 ? "V2" : "W";
        os << cfg.name << ',' << kind_name << ',' << T << ',' << p.H << ','
           << format_double(std::sqrt(static_cast<double>(cfg.m) / p.H)) << ','
           << format_double(lb.v1) << ',' << format_double(lb.v2) << ','
           << format_double(dyn.value) << ',' << format_double(sum_regret / cfg.trials)
           << ',' << format_double(sum_shortfall / cfg.trials) << ','
           << format_double(sum_tau / cfg.trials) << '\n';
    }
    write_file(cfg.out_dir, cfg.name + "_lowerbound.csv", os.str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"non-stationary knapsack-bandit simulation harness"};
    app.require_subcommand(1);

    CommonFlags fsim, fbench, fmeas, foco, flb;
    auto* sim = app.add_subcommand("simulate", "run a seeded multi-trial experiment");
    add_common(sim, fsim);
    auto* bench = app.add_subcommand("benchmark", "LP benchmark values and sandwich report");
    add_common(bench, fbench);
    auto* meas = app.add_subcommand("measures", "non-stationarity measures report");
    add_common(meas, fmeas);
    auto* oco = app.add_subcommand("oco", "constrained online convex optimization run");
    add_common(oco, foco);
    auto* lb = app.add_subcommand("lowerbound", "lower-bound instance sweeps");
    add_common(lb, flb);

    try {
        app.parse(argc, argv);
        if (sim->parsed()) return cmd_simulate(fsim);
        if (bench->parsed()) return cmd_benchmark(fbench);
        if (meas->parsed()) return cmd_measures(fmeas);
        if (oco->parsed()) return cmd_oco(foco);
        if (lb->parsed()) return cmd_lowerbound(flb);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? 0 : 1;
    } catch (const ConfigError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::invalid_argument& e) {
        std::cerr << "error: " << e.what() << "\n";
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "solver error: " << e.what() << "\n";
        return 2;
    }
    return 0;
}
