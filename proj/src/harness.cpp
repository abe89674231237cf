#include "bwksim/harness.hpp"

#include <algorithm>
#include <atomic>
#include <mutex>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <thread>

#include "bwksim/lp_core.hpp"
#include "bwksim/measures.hpp"

namespace bwksim {

namespace {

std::vector<std::string> tokenize(const std::string& line) {
    std::vector<std::string> out;
    std::istringstream iss(line);
    std::string tok;
    while (iss >> tok) out.push_back(tok);
    return out;
}

double parse_num(const std::string& tok, int line_no) {
    try {
        size_t pos = 0;
        const double v = std::stod(tok, &pos);
        if (pos != tok.size()) throw std::invalid_argument("");
        return v;
    } catch (...) {
        throw ConfigError("expected a number, got '" + tok + "'", line_no);
    }
}

int parse_int(const std::string& tok, int line_no) {
    const double v = parse_num(tok, line_no);
    if (v != std::floor(v)) throw ConfigError("expected an integer, got '" + tok + "'", line_no);
    return static_cast<int>(v);
}

// Inline-instance assembly state.
struct InlineBuilder {
    int T = 0, arms = 0, resources = 0;
    std::vector<double> budget;
    int seg_lo = 0, seg_hi = -1, rows_seen = 0;
    bool any_segment = false;
    std::vector<char> covered;
    BwkInstance inst;

    void start(int line_no) {
        if (T < 1 || arms < 2 || resources < 1)
            throw ConfigError("inline instance needs T, arms >= 2, resources first", line_no);
        if (budget.empty())
            throw ConfigError("inline instance needs a budget line first", line_no);
        if (budget.size() == 1) budget.assign(resources, budget[0]);
        if (static_cast<int>(budget.size()) != resources)
            throw ConfigError("budget must have 1 or d entries", line_no);
        inst.T = T;
        inst.m = arms;
        inst.d = resources;
        inst.per_round_budget = budget;
        inst.budget.resize(resources);
        for (int j = 0; j < resources; ++j) inst.budget[j] = budget[j] * T;
        inst.mu.assign(static_cast<size_t>(T) * arms, 0.0);
        inst.c.assign(static_cast<size_t>(T) * resources * arms, 0.0);
        inst.label = "inline";
        covered.assign(T, 0);
    }
};

}  // namespace

ExperimentConfig parse_experiment_config(const std::string& text) {
    ExperimentConfig cfg;
    cfg.policies.clear();
    enum class Section { top, instance, policy };
    Section section = Section::top;
    PolicySpec* policy = nullptr;
    InlineBuilder inline_b;
    bool inline_started = false;
    bool has_instance = false;

    std::istringstream iss(text);
    std::string raw;
    int line_no = 0;
    while (std::getline(iss, raw)) {
        ++line_no;
        const size_t hash = raw.find('#');
        if (hash != std::string::npos) raw.erase(hash);
        auto toks = tokenize(raw);
        if (toks.empty()) continue;
        const std::string& key = toks[0];
        auto need = [&](size_t n) {
            if (toks.size() < n + 1)
                throw ConfigError("'" + key + "' needs " + std::to_string(n) + " value(s)",
                                  line_no);
        };

        if (key == "name") {
            need(1);
            cfg.name = toks[1];
        } else if (key == "trials") {
            need(1);
            cfg.trials = parse_int(toks[1], line_no);
            if (cfg.trials < 1) throw ConfigError("trials must be >= 1", line_no);
        } else if (key == "seed") {
            need(1);
            cfg.seed = static_cast<std::uint64_t>(parse_num(toks[1], line_no));
        } else if (key == "outdir") {
            need(1);
            cfg.out_dir = toks[1];
        } else if (key == "threads") {
            need(1);
            cfg.threads = parse_int(toks[1], line_no);
        } else if (key == "downsample") {
            need(1);
            cfg.downsample = parse_int(toks[1], line_no);
        } else if (key == "format") {
            need(1);
            if (toks[1] == "csv") cfg.format = OutputFormat::csv;
            else if (toks[1] == "svg") cfg.format = OutputFormat::svg;
            else if (toks[1] == "both") cfg.format = OutputFormat::both;
            else throw ConfigError("format must be csv|svg|both", line_no);
        } else if (key == "instance") {
            section = Section::instance;
            has_instance = true;
        } else if (key == "policy") {
            need(1);
            section = Section::policy;
            PolicySpec p;
            if (toks[1] == "sw_ucb") p.kind = PolicySpec::Kind::sw_ucb;
            else if (toks[1] == "naive_ucb") p.kind = PolicySpec::Kind::naive_ucb;
            else if (toks[1] == "sw_ucb_rad") p.kind = PolicySpec::Kind::sw_ucb_rad;
            else if (toks[1] == "lagrange") p.kind = PolicySpec::Kind::lagrange;
            else throw ConfigError("unknown policy '" + toks[1] + "'", line_no);
            p.label = toks[1];
            if (p.kind == PolicySpec::Kind::naive_ucb) p.windows = PolicySpec::Windows::full;
            cfg.policies.push_back(p);
            policy = &cfg.policies.back();
        } else if (key == "sweep") {
            need(2);
            cfg.sweep.param = toks[1];
            cfg.sweep.values.clear();
            for (size_t i = 2; i < toks.size(); ++i)
                cfg.sweep.values.push_back(parse_num(toks[i], line_no));
        } else if (section == Section::instance) {
            auto& spec = cfg.instance;
            if (key == "builder") {
                need(1);
                if (toks[1] == "example") spec.builder = InstanceSpec::Builder::example;
                else if (toks[1] == "motivating") spec.builder = InstanceSpec::Builder::motivating;
                else if (toks[1] == "lower_bound") spec.builder = InstanceSpec::Builder::lower_bound;
                else if (toks[1] == "inline") spec.builder = InstanceSpec::Builder::inline_segments;
                else throw ConfigError("unknown builder '" + toks[1] + "'", line_no);
            } else if (key == "id") {
                need(1);
                spec.id = parse_int(toks[1], line_no);
            } else if (key == "alpha") {
                need(1);
                spec.alpha = parse_num(toks[1], line_no);
            } else if (key == "frequency") {
                need(1);
                spec.frequency = parse_int(toks[1], line_no);
            } else if (key == "outcome") {
                need(1);
                if (toks[1] == "deterministic") spec.outcome = OutcomeModel::deterministic;
                else if (toks[1] == "bernoulli") spec.outcome = OutcomeModel::bernoulli;
                else throw ConfigError("outcome must be deterministic|bernoulli", line_no);
            } else if (key == "T") {
                need(1);
                spec.T = parse_int(toks[1], line_no);
                spec.lb.T = spec.T;
                inline_b.T = spec.T;
            } else if (key == "delta") {
                need(1);
                spec.delta = parse_num(toks[1], line_no);
            } else if (key == "direction") {
                need(1);
                if (toks[1] == "up") spec.direction = ShiftDirection::up;
                else if (toks[1] == "down") spec.direction = ShiftDirection::down;
                else throw ConfigError("direction must be up|down", line_no);
                spec.lb.direction = spec.direction;
            } else if (key == "kind") {
                need(1);
                if (toks[1] == "V1") spec.lb_kind = LowerBoundKind::V1;
                else if (toks[1] == "V2") spec.lb_kind = LowerBoundKind::V2;
                else if (toks[1] == "W") spec.lb_kind = LowerBoundKind::W;
                else throw ConfigError("kind must be V1|V2|W", line_no);
            } else if (key == "m") {
                need(1);
                spec.lb.num_actual_arms = parse_int(toks[1], line_no);
            } else if (key == "H") {
                need(1);
                spec.lb.H = parse_int(toks[1], line_no);
            } else if (key == "b") {
                need(1);
                spec.lb.b = parse_num(toks[1], line_no);
            } else if (key == "r") {
                need(1);
                spec.lb.r = parse_num(toks[1], line_no);
            } else if (key == "delta1") {
                need(1);
                spec.lb.delta1 = parse_num(toks[1], line_no);
            } else if (key == "delta2") {
                need(1);
                spec.lb.delta2 = parse_num(toks[1], line_no);
            } else if (key == "epoch_seed") {
                need(1);
                spec.lb_seed = static_cast<std::uint64_t>(parse_num(toks[1], line_no));
                spec.lb_random_epochs = true;
            } else if (key == "arms") {
                need(1);
                inline_b.arms = parse_int(toks[1], line_no);
            } else if (key == "resources") {
                need(1);
                inline_b.resources = parse_int(toks[1], line_no);
            } else if (key == "budget") {
                need(1);
                inline_b.budget.clear();
                for (size_t i = 1; i < toks.size(); ++i)
                    inline_b.budget.push_back(parse_num(toks[i], line_no));
            } else if (key == "segment") {
                need(2);
                if (!inline_started) {
                    inline_b.start(line_no);
                    inline_started = true;
                }
                if (inline_b.any_segment && inline_b.rows_seen != inline_b.resources)
                    throw ConfigError("previous segment is missing consumption rows", line_no);
                inline_b.seg_lo = parse_int(toks[1], line_no);
                inline_b.seg_hi = parse_int(toks[2], line_no);
                if (inline_b.seg_lo < 1 || inline_b.seg_hi > inline_b.T ||
                    inline_b.seg_lo > inline_b.seg_hi)
                    throw ConfigError("segment range out of bounds", line_no);
                inline_b.rows_seen = 0;
                inline_b.any_segment = true;
                for (int t = inline_b.seg_lo; t <= inline_b.seg_hi; ++t) {
                    if (inline_b.covered[t - 1])
                        throw ConfigError("segment overlaps round " + std::to_string(t), line_no);
                    inline_b.covered[t - 1] = 1;
                }
            } else if (key == "mu") {
                if (!inline_b.any_segment) throw ConfigError("mu outside a segment", line_no);
                need(inline_b.arms);
                for (int t = inline_b.seg_lo; t <= inline_b.seg_hi; ++t)
                    for (int i = 0; i < inline_b.arms; ++i)
                        inline_b.inst.mu_ref(t, i) = parse_num(toks[1 + i], line_no);
            } else if (key == "row") {
                if (!inline_b.any_segment) throw ConfigError("row outside a segment", line_no);
                if (inline_b.rows_seen >= inline_b.resources)
                    throw ConfigError("too many consumption rows in segment", line_no);
                need(inline_b.arms);
                const int j = inline_b.rows_seen++;
                for (int t = inline_b.seg_lo; t <= inline_b.seg_hi; ++t)
                    for (int i = 0; i < inline_b.arms; ++i)
                        inline_b.inst.c_ref(t, j, i) = parse_num(toks[1 + i], line_no);
            } else {
                throw ConfigError("unknown instance key '" + key + "'", line_no);
            }
        } else if (section == Section::policy) {
            if (key == "label") {
                if (toks.size() < 2) throw ConfigError("'label' needs a value", line_no);
                policy->label = toks[1];
            } else if (key == "windows") {
                need(1);
                if (toks[1] == "auto") policy->windows = PolicySpec::Windows::automatic;
                else if (toks[1] == "full") policy->windows = PolicySpec::Windows::full;
                else {
                    need(2);
                    policy->windows = PolicySpec::Windows::fixed;
                    policy->w1 = parse_int(toks[1], line_no);
                    policy->w2 = parse_int(toks[2], line_no);
                }
            } else if (key == "clamp_lcb") {
                need(1);
                policy->clamp_lcb = parse_int(toks[1], line_no) != 0;
            } else if (key == "benchmark") {
                need(1);
                if (toks[1] == "static") policy->benchmark = PolicySpec::Benchmark::static_lp;
                else if (toks[1] == "dynamic") policy->benchmark = PolicySpec::Benchmark::dynamic_lp;
                else {
                    policy->benchmark = PolicySpec::Benchmark::fixed_value;
                    policy->benchmark_value = parse_num(toks[1], line_no);
                }
            } else {
                throw ConfigError("unknown policy key '" + key + "'", line_no);
            }
        } else {
            throw ConfigError("unknown key '" + key + "'", line_no);
        }
    }
    if (!has_instance) throw ConfigError("missing 'instance' section", 1);
    if (cfg.policies.empty()) throw ConfigError("no 'policy' sections", 1);
    if (cfg.instance.builder == InstanceSpec::Builder::inline_segments) {
        if (!inline_started) throw ConfigError("inline instance has no segments", 1);
        if (inline_b.rows_seen != inline_b.resources)
            throw ConfigError("last segment is missing consumption rows", line_no);
        for (int t = 1; t <= inline_b.T; ++t)
            if (!inline_b.covered[t - 1])
                throw ConfigError("round " + std::to_string(t) + " not covered by a segment", 1);
        inline_b.inst.outcome_model = cfg.instance.outcome;
        cfg.instance.inline_instance = std::move(inline_b.inst);
        cfg.instance.inline_instance.validate();
    }
    return cfg;
}

ExperimentConfig load_experiment_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_experiment_config(ss.str());
}

BwkInstance InstanceSpec::build(const std::string& sweep_param, double sweep_value) const {
    auto want = [&](const char* name) { return sweep_param == name; };
    BwkInstance inst;
    switch (builder) {
        case Builder::example: {
            ExampleParams p;
            p.alpha = alpha;
            p.frequency = frequency;
            if (want("alpha")) p.alpha = sweep_value;
            if (want("frequency")) p.frequency = static_cast<int>(sweep_value);
            inst = build_paper_example(id, p);
            break;
        }
        case Builder::motivating: {
            double dl = delta;
            if (want("delta")) dl = sweep_value;
            inst = build_motivating_instance(T, dl, direction);
            break;
        }
        case Builder::lower_bound: {
            LowerBoundParams p = lb;
            if (want("H")) p.H = static_cast<int>(sweep_value);
            if (want("T")) p.T = static_cast<int>(sweep_value);
            if (want("delta1")) p.delta1 = sweep_value;
            if (want("delta2")) p.delta2 = sweep_value;
            Rng epoch_rng(lb_seed);
            if (lb_random_epochs) p.epoch_rng = &epoch_rng;
            inst = build_lower_bound_instance(lb_kind, p);
            break;
        }
        case Builder::inline_segments:
            if (!sweep_param.empty())
                throw std::invalid_argument("sweep is not supported for inline instances");
            inst = inline_instance;
            break;
    }
    inst.outcome_model = outcome;
    return inst;
}

std::string instance_to_config(const BwkInstance& inst) {
    std::ostringstream os;
    os << "instance\n  builder inline\n  T " << inst.T << "\n  arms " << inst.m
       << "\n  resources " << inst.d << "\n  budget";
    for (double b : inst.per_round_budget) os << ' ' << format_double(b);
    os << "\n  outcome "
       << (inst.outcome_model == OutcomeModel::bernoulli ? "bernoulli" : "deterministic")
       << '\n';
    auto same_round = [&](int t, int s) {
        for (int i = 0; i < inst.m; ++i)
            if (inst.mu_at(t, i) != inst.mu_at(s, i)) return false;
        for (int j = 0; j < inst.d; ++j)
            for (int i = 0; i < inst.m; ++i)
                if (inst.c_at(t, j, i) != inst.c_at(s, j, i)) return false;
        return true;
    };
    for (int lo = 1; lo <= inst.T;) {
        int hi = lo;
        while (hi + 1 <= inst.T && same_round(lo, hi + 1)) ++hi;
        os << "  segment " << lo << ' ' << hi << "\n  mu";
        for (int i = 0; i < inst.m; ++i) os << ' ' << format_double(inst.mu_at(lo, i));
        os << '\n';
        for (int j = 0; j < inst.d; ++j) {
            os << "  row";
            for (int i = 0; i < inst.m; ++i) os << ' ' << format_double(inst.c_at(lo, j, i));
            os << '\n';
        }
        lo = hi + 1;
    }
    return os.str();
}

namespace {

RunLog run_policy(const PolicySpec& p, const BwkInstance& inst, const WindowPair& autow,
                  double static_benchmark, Rng& rng) {
    switch (p.kind) {
        case PolicySpec::Kind::sw_ucb:
        case PolicySpec::Kind::sw_ucb_rad: {
            SwUcbOptions opts;
            opts.clamp_lcb_at_zero = p.clamp_lcb;
            if (p.kind == PolicySpec::Kind::sw_ucb_rad)
                opts.variant = SwUcbOptions::Variant::rad_shrunk;
            int w1 = autow.reward, w2 = autow.cons;
            if (p.windows == PolicySpec::Windows::full) w1 = w2 = inst.T;
            if (p.windows == PolicySpec::Windows::fixed) {
                w1 = p.w1;
                w2 = p.w2;
            }
            return run_sw_ucb(inst, w1, w2, rng, opts);
        }
        case PolicySpec::Kind::naive_ucb: {
            // The no-window baseline is the prior stochastic-knapsack UCB:
            // rad-based confidence bounds with the (1-eps)-shrunk budget.
            SwUcbOptions opts;
            opts.variant = SwUcbOptions::Variant::rad_shrunk;
            RunLog log = run_sw_ucb(inst, inst.T, inst.T, rng, opts);
            log.variant = "naive_ucb";
            return log;
        }
        case PolicySpec::Kind::lagrange:
            return run_lagrange_bwk(inst, static_benchmark, rng, {});
    }
    throw std::logic_error("run_policy: unreachable");
}

}  // namespace

AggregateTable run_experiment(const ExperimentConfig& cfg) {
    AggregateTable table;
    table.experiment = cfg.name;

    std::vector<std::pair<bool, double>> sweep_points;
    if (cfg.sweep.param.empty()) {
        sweep_points.emplace_back(false, 0.0);
    } else {
        for (double v : cfg.sweep.values) sweep_points.emplace_back(true, v);
        if (sweep_points.empty()) throw std::invalid_argument("sweep has no values");
    }

    for (auto [has_sweep, sweep_value] : sweep_points) {
        const BwkInstance inst =
            cfg.instance.build(has_sweep ? cfg.sweep.param : "", sweep_value);
        if (table.T == 0) {
            table.T = inst.T;
            table.d = inst.d;
            const int ds = cfg.downsample > 0 ? cfg.downsample
                                              : (inst.T >= 5000 ? 10 : 1);
            for (int t = ds; t <= inst.T; t += ds) table.logged_rounds.push_back(t);
            if (table.logged_rounds.empty() || table.logged_rounds.back() != inst.T)
                table.logged_rounds.push_back(inst.T);
        } else if (table.T != inst.T || table.d != inst.d) {
            throw std::invalid_argument("sweep must not change T or d");
        }

        const LocalBudgets lb = local_budgets(inst);
        const WindowPair autow = default_windows(inst.m, inst.d, inst.T, lb.v1, lb.v2);
        std::string cell_error;
        double dynamic_benchmark = 0.0, static_benchmark = 0.0;
        try {
            DynamicLpSolution dyn = solve_dynamic_lp(inst);
            if (dyn.status != SolveStatus::optimal)
                throw std::runtime_error("dynamic LP failed: " +
                                         std::string(to_string(dyn.status)));
            dynamic_benchmark = dyn.value;
            static_benchmark = solve_static_lp(inst).value;
        } catch (const std::exception& e) {
            cell_error = e.what();
        }

        for (const PolicySpec& p : cfg.policies) {
            CellResult cell;
            cell.policy = p.label.empty() ? "policy" : p.label;
            cell.has_sweep = has_sweep;
            cell.sweep_value = sweep_value;
            cell.benchmark = dynamic_benchmark;
            if (!cell_error.empty()) {
                cell.status = cell_error;
                table.cells.push_back(std::move(cell));
                continue;
            }
            double lagrange_benchmark = static_benchmark;
            if (p.benchmark == PolicySpec::Benchmark::dynamic_lp)
                lagrange_benchmark = dynamic_benchmark;
            if (p.benchmark == PolicySpec::Benchmark::fixed_value)
                lagrange_benchmark = p.benchmark_value;

            std::vector<RunLog> logs(cfg.trials);
            const int threads =
                cfg.threads > 0 ? cfg.threads
                                : std::max(1u, std::thread::hardware_concurrency());
            std::atomic<int> next{0};
            std::mutex error_mutex;
            std::string trial_error;
            auto worker = [&] {
                for (int i = next.fetch_add(1); i < cfg.trials; i = next.fetch_add(1)) {
                    try {
                        Rng rng(cfg.seed + static_cast<std::uint64_t>(i));
                        logs[i] = run_policy(p, inst, autow, lagrange_benchmark, rng);
                        logs[i].seed = cfg.seed + static_cast<std::uint64_t>(i);
                    } catch (const std::exception& e) {
                        std::lock_guard<std::mutex> lock(error_mutex);
                        if (trial_error.empty()) trial_error = e.what();
                    }
                }
            };
            if (threads <= 1 || cfg.trials == 1) {
                worker();
            } else {
                std::vector<std::thread> pool;
                for (int w = 0; w < std::min(threads, cfg.trials); ++w)
                    pool.emplace_back(worker);
                for (auto& th : pool) th.join();
            }
            if (!trial_error.empty()) {
                cell.status = trial_error;
                table.cells.push_back(std::move(cell));
                continue;
            }

            // Fixed-order reduction: trial index order regardless of scheduling.
            const int T = inst.T;
            cell.mean_cum.assign(table.logged_rounds.size(), 0.0);
            cell.std_cum.assign(table.logged_rounds.size(), 0.0);
            std::vector<double> cum_at(table.logged_rounds.size());
            for (int i = 0; i < cfg.trials; ++i) {
                const RunLog& log = logs[i];
                TrialRow row;
                row.trial = i;
                row.tau = log.tau;
                row.total_reward = log.total_reward();
                row.regret = compute_regret(log, dynamic_benchmark);
                row.ds_cum_cons.assign(table.logged_rounds.size(),
                                       std::vector<double>(inst.d, 0.0));
                std::vector<double> cum_cons(inst.d, 0.0);
                size_t li = 0;
                for (int t = 1; t <= T && li < table.logged_rounds.size(); ++t) {
                    const bool played = t <= log.rounds_played();
                    if (played)
                        for (int j = 0; j < inst.d; ++j)
                            cum_cons[j] += log.consumptions[static_cast<size_t>(t - 1) * inst.d + j];
                    if (t == table.logged_rounds[li]) {
                        const double cr =
                            played ? log.cumulative_reward[t - 1] : log.total_reward();
                        cum_at[li] = cr;
                        row.ds_cum_reward.push_back(cr);
                        row.ds_cum_cons[li] = cum_cons;
                        ++li;
                    }
                }
                for (size_t k = 0; k < table.logged_rounds.size(); ++k) {
                    cell.mean_cum[k] += cum_at[k];
                    cell.std_cum[k] += cum_at[k] * cum_at[k];
                }
                cell.mean_tau += log.tau;
                cell.mean_regret += row.regret;
                cell.trials.push_back(std::move(row));
            }
            const double n = cfg.trials;
            for (size_t k = 0; k < table.logged_rounds.size(); ++k) {
                cell.mean_cum[k] /= n;
                const double var = std::max(0.0, cell.std_cum[k] / n -
                                                     cell.mean_cum[k] * cell.mean_cum[k]);
                cell.std_cum[k] = std::sqrt(var);
            }
            cell.mean_tau /= n;
            cell.mean_regret /= n;
            table.cells.push_back(std::move(cell));
        }
    }
    return table;
}

std::string format_double(double v) {
    char buf[40];
    std::snprintf(buf, sizeof(buf), "%.12g", v);
    return buf;
}

void write_trials_csv(const AggregateTable& table, std::ostream& os) {
    os << "experiment,policy,sweep_value,trial,round,cum_reward";
    for (int j = 1; j <= table.d; ++j) os << ",cum_consumption_" << j;
    os << ",tau,regret\n";
    for (const CellResult& cell : table.cells) {
        const std::string sweep = cell.has_sweep ? format_double(cell.sweep_value) : "";
        for (const TrialRow& row : cell.trials) {
            for (size_t k = 0; k < table.logged_rounds.size(); ++k) {
                os << table.experiment << ',' << cell.policy << ',' << sweep << ','
                   << row.trial << ',' << table.logged_rounds[k] << ','
                   << format_double(row.ds_cum_reward[k]);
                for (int j = 0; j < table.d; ++j)
                    os << ',' << format_double(row.ds_cum_cons[k][j]);
                os << ',' << row.tau << ',' << format_double(row.regret) << '\n';
            }
        }
    }
}

void write_summary_csv(const AggregateTable& table, std::ostream& os) {
    os << "experiment,policy,sweep_value,round,mean_cum_reward,std_cum_reward,"
          "mean_tau,mean_regret,benchmark,status\n";
    for (const CellResult& cell : table.cells) {
        const std::string sweep = cell.has_sweep ? format_double(cell.sweep_value) : "";
        if (cell.status != "ok") {
            std::string status = cell.status;
            for (char& c : status)
                if (c == ',' || c == '\n') c = ';';
            os << table.experiment << ',' << cell.policy << ',' << sweep
               << ",,,,,,," << status << '\n';
            continue;
        }
        for (size_t k = 0; k < table.logged_rounds.size(); ++k) {
            os << table.experiment << ',' << cell.policy << ',' << sweep << ','
               << table.logged_rounds[k] << ',' << format_double(cell.mean_cum[k]) << ','
               << format_double(cell.std_cum[k]) << ',' << format_double(cell.mean_tau)
               << ',' << format_double(cell.mean_regret) << ','
               << format_double(cell.benchmark) << ",ok" << '\n';
        }
    }
}

ParsedTrialsCsv parse_trials_csv(std::istream& is) {
    ParsedTrialsCsv out;
    std::string line;
    bool first = true;
    while (std::getline(is, line)) {
        if (line.empty()) continue;
        std::vector<std::string> fields;
        std::string field;
        std::istringstream ls(line);
        while (std::getline(ls, field, ',')) fields.push_back(field);
        if (line.back() == ',') fields.push_back("");
        if (first) {
            out.header = fields;
            first = false;
        } else {
            out.rows.push_back(fields);
        }
    }
    return out;
}

// ---- svg ---------------------------------------------------------------------

namespace {

struct Series {
    std::string label;
    std::vector<double> xs, ys;
};

const char* kPalette[] = {"#1f77b4", "#d62728", "#2ca02c", "#9467bd",
                          "#ff7f0e", "#8c564b", "#17becf"};

std::string svg_chart(const std::string& title, const std::string& x_label,
                      const std::string& y_label, const std::vector<Series>& series) {
    const double W = 800, H = 600, ml = 80, mr = 170, mt = 50, mb = 60;
    double xmin = 0, xmax = 1, ymin = 0, ymax = 1;
    bool any = false;
    for (const Series& s : series)
        for (size_t i = 0; i < s.xs.size(); ++i) {
            if (!any) {
                xmin = xmax = s.xs[i];
                ymin = ymax = s.ys[i];
                any = true;
            }
            xmin = std::min(xmin, s.xs[i]);
            xmax = std::max(xmax, s.xs[i]);
            ymin = std::min(ymin, s.ys[i]);
            ymax = std::max(ymax, s.ys[i]);
        }
    if (xmax == xmin) xmax = xmin + 1;
    if (ymax == ymin) ymax = ymin + 1;
    const double ypad = 0.05 * (ymax - ymin);
    ymin -= ypad;
    ymax += ypad;
    auto px = [&](double x) { return ml + (x - xmin) / (xmax - xmin) * (W - ml - mr); };
    auto py = [&](double y) { return H - mb - (y - ymin) / (ymax - ymin) * (H - mt - mb); };

    std::ostringstream os;
    os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"800\" height=\"600\" "
          "viewBox=\"0 0 800 600\">\n"
       << "<rect width=\"800\" height=\"600\" fill=\"white\"/>\n"
       << "<text x=\"400\" y=\"28\" text-anchor=\"middle\" font-size=\"18\" "
          "font-family=\"sans-serif\">" << title << "</text>\n";
    // axes + ticks
    os << "<line x1=\"" << ml << "\" y1=\"" << H - mb << "\" x2=\"" << W - mr
       << "\" y2=\"" << H - mb << "\" stroke=\"black\"/>\n"
       << "<line x1=\"" << ml << "\" y1=\"" << mt << "\" x2=\"" << ml << "\" y2=\""
       << H - mb << "\" stroke=\"black\"/>\n";
    for (int k = 0; k <= 5; ++k) {
        const double xv = xmin + (xmax - xmin) * k / 5.0;
        const double yv = ymin + (ymax - ymin) * k / 5.0;
        os << "<line x1=\"" << px(xv) << "\" y1=\"" << H - mb << "\" x2=\"" << px(xv)
           << "\" y2=\"" << H - mb + 5 << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << px(xv) << "\" y=\"" << H - mb + 20
           << "\" text-anchor=\"middle\" font-size=\"11\" font-family=\"sans-serif\">"
           << format_double(xv) << "</text>\n"
           << "<line x1=\"" << ml - 5 << "\" y1=\"" << py(yv) << "\" x2=\"" << ml
           << "\" y2=\"" << py(yv) << "\" stroke=\"black\"/>\n"
           << "<text x=\"" << ml - 8 << "\" y=\"" << py(yv) + 4
           << "\" text-anchor=\"end\" font-size=\"11\" font-family=\"sans-serif\">"
           << format_double(yv) << "</text>\n";
    }
    os << "<text x=\"" << (ml + W - mr) / 2 << "\" y=\"" << H - 15
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\">"
       << x_label << "</text>\n"
       << "<text x=\"20\" y=\"" << (mt + H - mb) / 2
       << "\" text-anchor=\"middle\" font-size=\"13\" font-family=\"sans-serif\" "
          "transform=\"rotate(-90 20 " << (mt + H - mb) / 2 << ")\">" << y_label
       << "</text>\n";

    int color = 0;
    double legend_y = mt + 10;
    for (const Series& s : series) {
        const char* c = kPalette[color % 7];
        ++color;
        if (s.xs.size() == 1) {
            os << "<circle cx=\"" << px(s.xs[0]) << "\" cy=\"" << py(s.ys[0])
               << "\" r=\"4\" fill=\"" << c << "\"/>\n";
        } else {
            os << "<polyline fill=\"none\" stroke=\"" << c << "\" stroke-width=\"1.5\" points=\"";
            for (size_t i = 0; i < s.xs.size(); ++i)
                os << px(s.xs[i]) << ',' << py(s.ys[i]) << ' ';
            os << "\"/>\n";
        }
        os << "<line x1=\"" << W - mr + 10 << "\" y1=\"" << legend_y << "\" x2=\""
           << W - mr + 34 << "\" y2=\"" << legend_y << "\" stroke=\"" << c
           << "\" stroke-width=\"2\"/>\n"
           << "<text x=\"" << W - mr + 40 << "\" y=\"" << legend_y + 4
           << "\" font-size=\"12\" font-family=\"sans-serif\">" << s.label << "</text>\n";
        legend_y += 18;
    }
    os << "</svg>\n";
    return os.str();
}

}  // namespace

std::string render_svg(const AggregateTable& table) {
    std::vector<Series> series;
    const bool sweep = !table.cells.empty() && table.cells.front().has_sweep;
    if (sweep) {
        // one regret-vs-sweep series per policy
        for (const CellResult& cell : table.cells) {
            Series* s = nullptr;
            for (Series& cand : series)
                if (cand.label == cell.policy) s = &cand;
            if (!s) {
                series.push_back({cell.policy, {}, {}});
                s = &series.back();
            }
            s->xs.push_back(cell.sweep_value);
            s->ys.push_back(cell.mean_regret);
        }
        return svg_chart(table.experiment, "sweep value", "mean regret", series);
    }
    for (const CellResult& cell : table.cells) {
        Series s;
        s.label = cell.policy;
        for (size_t k = 0; k < table.logged_rounds.size(); ++k) {
            s.xs.push_back(table.logged_rounds[k]);
            s.ys.push_back(cell.mean_cum[k]);
        }
        series.push_back(std::move(s));
    }
    if (!table.cells.empty()) {
        Series bench;
        bench.label = "benchmark";
        bench.xs = {static_cast<double>(table.logged_rounds.front()),
                    static_cast<double>(table.logged_rounds.back())};
        bench.ys = {table.cells.front().benchmark, table.cells.front().benchmark};
        series.push_back(std::move(bench));
    }
    return svg_chart(table.experiment, "round", "mean cumulative reward", series);
}

std::vector<std::string> emit_outputs(const AggregateTable& table,
                                      const ExperimentConfig& cfg) {
    namespace fs = std::filesystem;
    fs::create_directories(cfg.out_dir);
    std::vector<std::string> paths;
    auto write_file = [&](const std::string& name, const std::string& body) {
        const std::string path = (fs::path(cfg.out_dir) / name).string();
        std::ofstream out(path, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write " + path);
        out << body;
        paths.push_back(path);
    };
    if (cfg.format != OutputFormat::svg) {
        std::ostringstream t, s;
        write_trials_csv(table, t);
        write_summary_csv(table, s);
        write_file(table.experiment + "_trials.csv", t.str());
        write_file(table.experiment + "_summary.csv", s.str());
    }
    if (cfg.format != OutputFormat::csv)
        write_file(table.experiment + ".svg", render_svg(table));
    return paths;
}

}  // namespace bwksim
