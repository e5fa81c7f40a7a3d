#pragma once

#include <optional>
#include <sstream>
#include <string>

#include "ehsim/analysis.hpp"
#include "ehsim/battery.hpp"
#include "ehsim/channel.hpp"
#include "ehsim/errors.hpp"
#include "ehsim/processes.hpp"

namespace ehsim {

// A demand policy as configured: either an explicit parameter (level or
// cutoff) or a constraint form to be solved before simulation, giving the
// decay-rate target directly (theta) or as an underflow probability at the
// scenario's feasible capacity (target_prob).
struct PolicySpec {
    enum class Kind { constant, waterfilling, nostorage };
    Kind kind = Kind::constant;
    std::optional<double> level;
    std::optional<double> cutoff;
    std::optional<double> theta;
    std::optional<double> target_prob;
};

inline void validate(const PolicySpec& spec) {
    const int explicit_params = (spec.level ? 1 : 0) + (spec.cutoff ? 1 : 0);
    const int constraint_params = (spec.theta ? 1 : 0) + (spec.target_prob ? 1 : 0);
    switch (spec.kind) {
    case PolicySpec::Kind::nostorage:
        if (explicit_params + constraint_params > 0)
            throw config_error("the no-storage policy takes no parameters");
        return;
    case PolicySpec::Kind::constant:
        if (spec.cutoff)
            throw config_error("a constant policy has no cutoff parameter");
        if ((spec.level ? 1 : 0) + constraint_params != 1)
            throw config_error("a constant policy needs exactly one of p, theta, target_prob");
        if (spec.level && !(*spec.level >= 0.0))
            throw config_error("constant demand level must be non-negative");
        return;
    case PolicySpec::Kind::waterfilling:
        if (spec.level)
            throw config_error("a water-filling policy has no level parameter");
        if ((spec.cutoff ? 1 : 0) + constraint_params != 1)
            throw config_error(
                "a water-filling policy needs exactly one of epsilon, theta, target_prob");
        if (spec.cutoff && !(*spec.cutoff > 0.0))
            throw config_error("water-filling cutoff must be positive");
        return;
    }
    throw config_error("unknown policy kind");
}

inline std::string policy_label(const PolicySpec& spec) {
    std::ostringstream oss;
    switch (spec.kind) {
    case PolicySpec::Kind::nostorage:
        return "nostorage";
    case PolicySpec::Kind::constant:
        oss << "constant";
        break;
    case PolicySpec::Kind::waterfilling:
        oss << "waterfilling";
        break;
    }
    if (spec.level)
        oss << ":p=" << *spec.level;
    else if (spec.cutoff)
        oss << ":eps=" << *spec.cutoff;
    else if (spec.theta)
        oss << ":theta=" << *spec.theta;
    else if (spec.target_prob)
        oss << ":target=" << *spec.target_prob;
    return oss.str();
}

struct ScenarioConfig {
    BatteryParams battery;
    ArrivalProcess arrival = ExponentialArrivals{0.01};
    FadingProcess fading = RayleighFading{};
    ChannelParams channel;
    PolicySpec policy;
    std::uint64_t frames = 10'000'000;
    std::uint64_t burn_in = 100'000;
    std::uint64_t seed = 1;
    bool outage_zero_rate = false; // count outage frames as serving zero bits
    bool perfect_battery = false;  // explicit lossless test mode (mu = beta = 1)
    int tail_points = 8;
};

inline void validate(const ScenarioConfig& cfg) {
    validate(cfg.battery);
    if (cfg.perfect_battery) {
        if (cfg.battery.mu != 1.0 || cfg.battery.beta != 1.0)
            throw config_error("perfect battery mode requires mu = beta = 1");
    } else if (!(cfg.battery.mu < 1.0) || !(cfg.battery.beta < 1.0)) {
        throw config_error("mu and beta must lie in (0, 1); set battery.perfect "
                           "for the lossless test mode");
    }
    validate(cfg.arrival);
    validate(cfg.fading);
    validate(cfg.channel);
    validate(cfg.policy);
    if (cfg.frames <= cfg.burn_in)
        throw config_error("frames must exceed burn_in");
    if (cfg.tail_points < 4)
        throw config_error("tail grid needs at least 4 points");
}

// Generic constant-level balance solve for either arrival model.
inline BalanceSolution solve_constant_level(double theta, const ArrivalProcess& arrival,
                                            double mu, double beta) {
    if (const auto* e = std::get_if<ExponentialArrivals>(&arrival))
        return solve_constant_demand(theta, e->rate, mu, beta);

    auto excess = [&](double p) { return detail::inner_mgf(theta, p, arrival, mu, beta) - 1.0; };
    if (excess(0.0) >= 0.0)
        throw solver_error("balance equation has no positive root for this arrival table");
    double lo = 0.0;
    double hi = std::max(1.0, 2.0 * mean_arrival(arrival));
    int expansions = 0;
    while (excess(hi) < 0.0) {
        lo = hi;
        hi *= 2.0;
        if (++expansions > 200)
            throw solver_error("no upper bracket for the constant-demand balance equation");
    }
    double mid = lo;
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        const double f = excess(mid);
        if (std::abs(f) <= 1e-12)
            break;
        (f < 0.0 ? lo : hi) = mid;
    }
    BalanceSolution sol;
    sol.policy_parameter = mid;
    sol.mgf_residual = std::abs(excess(mid));
    sol.mean_net_flow = detail::inner_mean(mid, arrival, mu, beta);
    sol.stable = sol.mean_net_flow > 0.0;
    return sol;
}

// A policy ready to simulate: constraint forms solved, decay rate recorded.
struct ResolvedPolicy {
    DemandPolicy policy = NoStorage{};
    std::optional<double> theta;
    std::optional<BalanceSolution> solution;
};

inline ResolvedPolicy resolve_policy(const ScenarioConfig& cfg) {
    const PolicySpec& spec = cfg.policy;
    validate(spec);
    ResolvedPolicy out;
    if (spec.kind == PolicySpec::Kind::nostorage)
        return out;

    std::optional<double> theta = spec.theta;
    if (spec.target_prob)
        theta = theta_from_constraint(*spec.target_prob, cfg.battery.e_c());

    if (spec.kind == PolicySpec::Kind::constant) {
        if (spec.level) {
            out.policy = ConstantDemand{*spec.level};
        } else {
            out.solution =
                solve_constant_level(*theta, cfg.arrival, cfg.battery.mu, cfg.battery.beta);
            out.policy = ConstantDemand{out.solution->policy_parameter};
        }
    } else {
        if (spec.cutoff) {
            out.policy = WaterFillingDemand{*spec.cutoff};
        } else {
            out.solution = solve_waterfilling_cutoff(*theta, cfg.arrival, cfg.fading, cfg.channel,
                                                     cfg.battery.mu, cfg.battery.beta);
            out.policy = WaterFillingDemand{out.solution->policy_parameter};
        }
    }
    out.theta = theta;
    return out;
}

// Decay rate of the resolved policy, solving for it if the configuration
// gave only an explicit parameter.
inline double ensure_theta(const ScenarioConfig& cfg, ResolvedPolicy& resolved) {
    if (!resolved.theta) {
        const BalanceSolution sol = solve_decay_rate(resolved.policy, cfg.arrival, cfg.fading,
                                                     cfg.channel, cfg.battery.mu, cfg.battery.beta);
        resolved.theta = sol.policy_parameter;
    }
    return *resolved.theta;
}

} // namespace ehsim
