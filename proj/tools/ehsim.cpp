// Command-line front end: solve demand policies from underflow constraints,
// simulate scenarios, and reproduce the capacity sweeps and policy
// comparisons as CSV.

#include <fstream>
#include <iostream>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"

#include "ehsim/config_file.hpp"
#include "ehsim/csv.hpp"
#include "ehsim/scenario.hpp"
#include "ehsim/sweep.hpp"
#include "ehsim/trace.hpp"

namespace {

struct CommonOpts {
    std::string config_path;
    std::string out_path;
    std::uint64_t seed = 0;
    std::uint64_t frames = 0;
    int workers = 1;
    bool seed_set = false;
    bool frames_set = false;
};

ehsim::ScenarioConfig load_config(const CommonOpts& opts) {
    std::ifstream in(opts.config_path);
    if (!in)
        throw ehsim::config_error("cannot open config file '" + opts.config_path + "'");
    ehsim::ScenarioConfig cfg = ehsim::parse_config(in);
    if (opts.seed_set)
        cfg.seed = opts.seed;
    if (opts.frames_set)
        cfg.frames = opts.frames;
    ehsim::validate(cfg);
    return cfg;
}

std::ofstream open_out(const std::string& path) {
    std::ofstream out(path);
    if (!out)
        throw ehsim::config_error("cannot open output file '" + path + "'");
    return out;
}

std::vector<double> parse_values(const std::string& text) {
    return ehsim::detail::parse_list("values", text);
}

std::string tail_path_for(const std::string& out_path) {
    const std::size_t dot = out_path.rfind('.');
    if (dot == std::string::npos || out_path.find('/', dot) != std::string::npos)
        return out_path + "_tail";
    return out_path.substr(0, dot) + "_tail" + out_path.substr(dot);
}

int cmd_solve(const CommonOpts& opts) {
    const ehsim::ScenarioConfig cfg = load_config(opts);
    if (cfg.policy.kind == ehsim::PolicySpec::Kind::nostorage)
        throw ehsim::config_error("the no-storage policy has nothing to solve");

    ehsim::ResolvedPolicy resolved = ehsim::resolve_policy(cfg);
    // Explicit policies are characterized instead: report the decay rate
    // they achieve. Unstable ones are refused here (exit code 3).
    ehsim::BalanceSolution sol;
    if (resolved.solution) {
        sol = *resolved.solution;
    } else {
        sol = ehsim::solve_decay_rate(resolved.policy, cfg.arrival, cfg.fading, cfg.channel,
                                      cfg.battery.mu, cfg.battery.beta);
        resolved.theta = sol.policy_parameter;
        sol.policy_parameter = cfg.policy.level ? *cfg.policy.level : *cfg.policy.cutoff;
    }
    const char* param_name =
        cfg.policy.kind == ehsim::PolicySpec::Kind::constant ? "p" : "epsilon";

    std::cout << "policy: " << ehsim::policy_label(cfg.policy) << '\n'
              << param_name << ": " << ehsim::csv_num(sol.policy_parameter) << '\n'
              << "theta: " << ehsim::csv_num(*resolved.theta) << '\n'
              << "mgf_residual: " << ehsim::csv_num(sol.mgf_residual) << '\n'
              << "mean_net_flow: " << ehsim::csv_num(sol.mean_net_flow) << '\n'
              << "stable: " << (sol.stable ? "yes" : "no") << '\n';
    if (!opts.out_path.empty()) {
        std::ofstream out = open_out(opts.out_path);
        out << "policy,parameter,theta,mgf_residual,mean_net_flow,stable\n"
            << ehsim::policy_label(cfg.policy) << ',' << ehsim::csv_num(sol.policy_parameter)
            << ',' << ehsim::csv_num(*resolved.theta) << ',' << ehsim::csv_num(sol.mgf_residual)
            << ',' << ehsim::csv_num(sol.mean_net_flow) << ',' << (sol.stable ? 1 : 0) << '\n';
    }
    return 0;
}

int cmd_simulate(const CommonOpts& opts, const std::string& tail_path) {
    const ehsim::ScenarioConfig cfg = load_config(opts);
    const ehsim::TraceStats stats = ehsim::run_trace(cfg);

    std::cout << "frames_counted: " << stats.frames_counted << '\n'
              << "underflow_freq: " << ehsim::csv_num(stats.underflow_freq) << '\n'
              << "underflow_events: " << stats.underflow_events
              << (stats.low_confidence ? "  (low confidence)" : "") << '\n'
              << "outage_freq: " << ehsim::csv_num(stats.outage_freq) << '\n'
              << "delta_hat: " << ehsim::csv_num(stats.delta_hat) << '\n'
              << "overflow_loss_rate: " << ehsim::csv_num(stats.overflow_loss_rate) << '\n'
              << "mean_service_rate: " << ehsim::csv_num(stats.mean_service_rate) << '\n'
              << "mean_consumed: " << ehsim::csv_num(stats.mean_consumed) << '\n';
    if (stats.tail)
        std::cout << "theta_hat: " << ehsim::csv_num(stats.tail->theta_hat)
                  << "  (r^2 = " << ehsim::csv_num(stats.tail->fit_r_squared) << ")\n";
    else
        std::cout << "theta_hat: unavailable (tail grid undersampled)\n";

    if (!opts.out_path.empty()) {
        std::ofstream out = open_out(opts.out_path);
        ehsim::write_stats_csv(out, stats);
        const std::string tpath = tail_path.empty() ? tail_path_for(opts.out_path) : tail_path;
        std::ofstream tout = open_out(tpath);
        ehsim::write_tail_csv(tout, stats);
    } else if (!tail_path.empty()) {
        std::ofstream tout = open_out(tail_path);
        ehsim::write_tail_csv(tout, stats);
    }
    return 0;
}

int cmd_sweep(const CommonOpts& opts, const std::string& param, const std::string& values_text) {
    const ehsim::ScenarioConfig cfg = load_config(opts);
    const std::vector<double> values = parse_values(values_text);
    const std::vector<ehsim::SweepPoint> rows =
        ehsim::run_sweep(cfg, param, values, opts.workers);
    for (const ehsim::SweepPoint& row : rows)
        if (!row.error.empty())
            std::cerr << "sweep " << param << " = " << row.value << " failed: " << row.error
                      << '\n';
    if (!opts.out_path.empty()) {
        std::ofstream out = open_out(opts.out_path);
        ehsim::write_sweep_csv(out, rows);
    } else {
        ehsim::write_sweep_csv(std::cout, rows);
    }
    return 0;
}

int cmd_compare(const CommonOpts& opts, const std::string& policies_text,
                const std::string& grid_text) {
    const ehsim::ScenarioConfig cfg = load_config(opts);
    std::vector<ehsim::PolicySpec> policies;
    {
        std::stringstream ss(policies_text);
        std::string item;
        while (std::getline(ss, item, ','))
            if (!ehsim::detail::trim(item).empty())
                policies.push_back(ehsim::parse_policy_spec(ehsim::detail::trim(item)));
    }
    if (policies.empty())
        throw ehsim::config_error("--policies is empty");
    const std::vector<double> grid = parse_values(grid_text);
    const std::vector<ehsim::CompareRow> rows =
        ehsim::compare_policies(cfg, policies, grid, opts.workers);
    if (!opts.out_path.empty()) {
        std::ofstream out = open_out(opts.out_path);
        ehsim::write_compare_csv(out, rows);
    } else {
        ehsim::write_compare_csv(std::cout, rows);
    }
    return 0;
}

} // namespace

int main(int argc, char** argv) {
    CLI::App app{"energy-harvesting transmitter with a lossy battery: policy "
                 "solving and Monte Carlo simulation"};
    app.require_subcommand(1);

    CommonOpts opts;
    std::string tail_path, sweep_param, sweep_values, policies_text, grid_text;

    auto add_common = [&](CLI::App* cmd) {
        cmd->add_option("--config", opts.config_path, "scenario config file")->required();
        cmd->add_option("--out", opts.out_path, "output CSV path (default: stdout)");
        cmd->add_option("--seed", opts.seed, "override sim.seed")
            ->each([&](const std::string&) { opts.seed_set = true; });
        cmd->add_option("--frames", opts.frames, "override sim.frames")
            ->each([&](const std::string&) { opts.frames_set = true; });
        cmd->add_option("--workers", opts.workers, "worker threads for independent runs");
    };

    CLI::App* solve = app.add_subcommand("solve", "solve the demand policy from its constraint");
    add_common(solve);

    CLI::App* simulate = app.add_subcommand("simulate", "run one scenario");
    add_common(simulate);
    simulate->add_option("--tail", tail_path, "tail CSV path (default: derived from --out)");

    CLI::App* sweep = app.add_subcommand("sweep", "one trace per swept parameter value");
    add_common(sweep);
    sweep->add_option("--param", sweep_param, "parameter path, e.g. battery.e_c")->required();
    sweep->add_option("--values", sweep_values, "comma-separated values")->required();

    CLI::App* compare = app.add_subcommand("compare", "mean service rate per policy over an "
                                                      "e_c grid, common random numbers");
    add_common(compare);
    compare->add_option("--policies", policies_text,
                        "comma-separated policy specs, e.g. "
                        "constant:theta=4.6e-4,waterfilling:theta=4.6e-4,nostorage")
        ->required();
    compare->add_option("--grid", grid_text, "comma-separated e_c values")->required();

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : 1;
    }

    try {
        if (solve->parsed())
            return cmd_solve(opts);
        if (simulate->parsed())
            return cmd_simulate(opts, tail_path);
        if (sweep->parsed())
            return cmd_sweep(opts, sweep_param, sweep_values);
        return cmd_compare(opts, policies_text, grid_text);
    } catch (const ehsim::instability_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 3;
    } catch (const ehsim::config_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::domain_error& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 2;
    }
}
