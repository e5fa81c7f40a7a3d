#pragma once

#include <cmath>
#include <string>
#include <variant>
#include <vector>

#include "ehsim/errors.hpp"
#include "ehsim/parallel.hpp"
#include "ehsim/scenario.hpp"
#include "ehsim/trace.hpp"

namespace ehsim {

// Assign one scalar parameter by dotted path. battery.e_c keeps e_max fixed
// and moves the protective floor e_min, matching a capacity sweep on one
// physical battery.
inline void set_parameter(ScenarioConfig& cfg, const std::string& path, double value) {
    if (path == "battery.e_max") {
        cfg.battery.e_max = value;
    } else if (path == "battery.e_min") {
        cfg.battery.e_min = value;
    } else if (path == "battery.e_c") {
        cfg.battery.e_min = cfg.battery.e_max - value;
    } else if (path == "battery.mu") {
        cfg.battery.mu = value;
    } else if (path == "battery.beta") {
        cfg.battery.beta = value;
    } else if (path == "arrival.lambda_u") {
        cfg.arrival = ExponentialArrivals{value};
    } else if (path == "channel.n_symbols") {
        cfg.channel.n_symbols = static_cast<int>(value);
    } else if (path == "channel.noise_power") {
        cfg.channel.noise_power = value;
    } else if (path == "policy.p") {
        cfg.policy.kind = PolicySpec::Kind::constant;
        cfg.policy.level = value;
        cfg.policy.theta.reset();
        cfg.policy.target_prob.reset();
    } else if (path == "policy.epsilon") {
        cfg.policy.kind = PolicySpec::Kind::waterfilling;
        cfg.policy.cutoff = value;
        cfg.policy.theta.reset();
        cfg.policy.target_prob.reset();
    } else if (path == "policy.theta") {
        cfg.policy.theta = value;
        cfg.policy.level.reset();
        cfg.policy.cutoff.reset();
        cfg.policy.target_prob.reset();
    } else if (path == "policy.target_prob") {
        cfg.policy.target_prob = value;
        cfg.policy.level.reset();
        cfg.policy.cutoff.reset();
        cfg.policy.theta.reset();
    } else if (path == "sim.frames") {
        cfg.frames = static_cast<std::uint64_t>(value);
    } else if (path == "sim.burn_in") {
        cfg.burn_in = static_cast<std::uint64_t>(value);
    } else if (path == "sim.seed") {
        cfg.seed = static_cast<std::uint64_t>(value);
    } else {
        throw config_error("unknown sweep parameter: " + path);
    }
}

struct SweepPoint {
    double value = 0.0;
    double e_c = 0.0;
    double theta = 0.0;
    double approx_exp = 0.0;     // exp(-theta e_c)
    double approx_refined = 0.0; // (1 - delta_hat) exp(-theta e_c)
    TraceStats stats;
    std::string error; // non-empty when this point failed; other rows are unaffected
};

// One full trace per swept value. Rows share the base seed, are resolved
// and run independently, and land in the result by index, so the table is
// identical for any worker count and any sweep order.
inline std::vector<SweepPoint> run_sweep(const ScenarioConfig& base, const std::string& path,
                                         const std::vector<double>& values, int workers = 1) {
    {
        // An unknown path is a sweep-level config error, not a row error.
        ScenarioConfig scratch = base;
        set_parameter(scratch, path, values.empty() ? 0.0 : values.front());
    }
    std::vector<SweepPoint> rows(values.size());
    parallel_for(values.size(), workers, [&](std::size_t i) {
        SweepPoint& row = rows[i];
        row.value = values[i];
        try {
            ScenarioConfig cfg = base;
            set_parameter(cfg, path, values[i]);
            validate(cfg);
            ResolvedPolicy resolved = resolve_policy(cfg);
            row.e_c = cfg.battery.e_c();
            row.theta = ensure_theta(cfg, resolved);
            row.stats = run_trace(cfg, resolved);
            row.approx_exp = underflow_prob_approx(row.theta, row.e_c);
            row.approx_refined =
                refined_underflow_approx(row.theta, row.e_c, row.stats.refined_prefactor());
        } catch (const std::exception& e) {
            row.error = e.what();
        }
    });
    return rows;
}

struct CompareRow {
    std::string policy;
    double theta = 0.0; // NaN for the no-storage baseline
    double e_c = 0.0;
    double mean_service_rate = 0.0;
    double outage_freq = 0.0;
};

// Mean service rate of each policy across a feasible-capacity grid. The
// grid scales the battery itself (e_max = e_min + e_c): rate differences
// across capacities come from overflow losses and outages, which depend on
// how much buffer the battery offers. All cells share the base seed, so
// the comparison is paired frame by frame.
inline std::vector<CompareRow> compare_policies(const ScenarioConfig& base,
                                                const std::vector<PolicySpec>& policies,
                                                const std::vector<double>& e_c_grid,
                                                int workers = 1) {
    const std::size_t cols = e_c_grid.size();
    std::vector<CompareRow> rows(policies.size() * cols);
    parallel_for(rows.size(), workers, [&](std::size_t idx) {
        const PolicySpec& spec = policies[idx / cols];
        const double e_c = e_c_grid[idx % cols];
        ScenarioConfig cfg = base;
        cfg.policy = spec;
        cfg.battery.e_max = cfg.battery.e_min + e_c;
        validate(cfg);
        ResolvedPolicy resolved = resolve_policy(cfg);
        const TraceStats stats = run_trace(cfg, resolved);
        CompareRow& row = rows[idx];
        row.policy = policy_label(spec);
        row.theta = resolved.theta ? *resolved.theta : std::nan("");
        row.e_c = e_c;
        row.mean_service_rate = stats.mean_service_rate;
        row.outage_freq = stats.outage_freq;
    });
    return rows;
}

} // namespace ehsim
