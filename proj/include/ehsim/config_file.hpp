#pragma once

#include <cctype>
#include <istream>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include "ehsim/errors.hpp"
#include "ehsim/scenario.hpp"

namespace ehsim {

// Plain key = value scenario files. '#' starts a comment, blank lines are
// skipped, keys may appear once, unknown keys are rejected. The schema is
// documented in the README next to a full example.

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = 0, b = s.size();
    while (a < b && std::isspace(static_cast<unsigned char>(s[a])))
        ++a;
    while (b > a && std::isspace(static_cast<unsigned char>(s[b - 1])))
        --b;
    return s.substr(a, b - a);
}

inline double parse_double(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    double v = 0.0;
    try {
        v = std::stod(value, &pos);
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': cannot parse '" + value + "' as a number");
    }
    if (pos != value.size())
        throw config_error("key '" + key + "': trailing junk in '" + value + "'");
    return v;
}

inline std::uint64_t parse_u64(const std::string& key, const std::string& value) {
    std::size_t pos = 0;
    std::uint64_t v = 0;
    try {
        v = std::stoull(value, &pos);
    } catch (const std::exception&) {
        throw config_error("key '" + key + "': cannot parse '" + value +
                           "' as an unsigned integer");
    }
    if (pos != value.size())
        throw config_error("key '" + key + "': trailing junk in '" + value + "'");
    return v;
}

inline bool parse_bool(const std::string& key, const std::string& value) {
    if (value == "true" || value == "1")
        return true;
    if (value == "false" || value == "0")
        return false;
    throw config_error("key '" + key + "': expected true/false, got '" + value + "'");
}

inline std::vector<double> parse_list(const std::string& key, const std::string& value) {
    std::vector<double> out;
    std::stringstream ss(value);
    std::string item;
    while (std::getline(ss, item, ',')) {
        item = trim(item);
        if (!item.empty())
            out.push_back(parse_double(key, item));
    }
    if (out.empty())
        throw config_error("key '" + key + "': empty list");
    return out;
}

} // namespace detail

// Policy shorthand used by the compare subcommand, e.g. "nostorage",
// "constant:p=84.7", "constant:theta=4.6e-4", "waterfilling:target=1e-2".
inline PolicySpec parse_policy_spec(const std::string& text) {
    PolicySpec spec;
    const std::size_t colon = text.find(':');
    const std::string kind = text.substr(0, colon);
    if (kind == "nostorage") {
        spec.kind = PolicySpec::Kind::nostorage;
        if (colon != std::string::npos)
            throw config_error("policy 'nostorage' takes no parameter");
        return spec;
    }
    if (kind == "constant")
        spec.kind = PolicySpec::Kind::constant;
    else if (kind == "waterfilling")
        spec.kind = PolicySpec::Kind::waterfilling;
    else
        throw config_error("unknown policy kind '" + kind + "'");
    if (colon == std::string::npos)
        throw config_error("policy '" + kind + "' needs a parameter, e.g. " + kind +
                           ":theta=4.6e-4");
    const std::string rest = text.substr(colon + 1);
    const std::size_t eq = rest.find('=');
    if (eq == std::string::npos)
        throw config_error("policy parameter must look like name=value: '" + text + "'");
    const std::string name = rest.substr(0, eq);
    const double value = detail::parse_double(text, rest.substr(eq + 1));
    if (name == "p")
        spec.level = value;
    else if (name == "eps" || name == "epsilon")
        spec.cutoff = value;
    else if (name == "theta")
        spec.theta = value;
    else if (name == "target")
        spec.target_prob = value;
    else
        throw config_error("unknown policy parameter '" + name + "'");
    validate(spec);
    return spec;
}

inline ScenarioConfig parse_config(std::istream& in) {
    std::map<std::string, std::string> kv;
    std::string line;
    int line_no = 0;
    while (std::getline(in, line)) {
        ++line_no;
        const std::size_t hash = line.find('#');
        if (hash != std::string::npos)
            line.erase(hash);
        line = detail::trim(line);
        if (line.empty())
            continue;
        const std::size_t eq = line.find('=');
        if (eq == std::string::npos)
            throw config_error("line " + std::to_string(line_no) + ": expected key = value");
        const std::string key = detail::trim(line.substr(0, eq));
        const std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw config_error("line " + std::to_string(line_no) + ": empty key or value");
        if (!kv.emplace(key, value).second)
            throw config_error("duplicate key '" + key + "'");
    }

    auto take = [&](const char* key) -> std::string {
        auto it = kv.find(key);
        if (it == kv.end())
            return {};
        std::string v = it->second;
        kv.erase(it);
        return v;
    };
    auto require = [&](const char* key) {
        std::string v = take(key);
        if (v.empty())
            throw config_error(std::string("missing required key '") + key + "'");
        return v;
    };

    ScenarioConfig cfg;

    cfg.battery.e_max = detail::parse_double("battery.e_max", require("battery.e_max"));
    const std::string e_min = take("battery.e_min");
    const std::string e_c = take("battery.e_c");
    if (e_min.empty() == e_c.empty())
        throw config_error("specify exactly one of battery.e_min and battery.e_c");
    cfg.battery.e_min = e_min.empty()
                            ? cfg.battery.e_max - detail::parse_double("battery.e_c", e_c)
                            : detail::parse_double("battery.e_min", e_min);
    cfg.battery.mu = detail::parse_double("battery.mu", require("battery.mu"));
    cfg.battery.beta = detail::parse_double("battery.beta", require("battery.beta"));
    if (const std::string v = take("battery.perfect"); !v.empty())
        cfg.perfect_battery = detail::parse_bool("battery.perfect", v);

    const std::string arrival_kind = take("arrival.kind");
    if (arrival_kind.empty() || arrival_kind == "exponential") {
        cfg.arrival = ExponentialArrivals{
            detail::parse_double("arrival.lambda_u", require("arrival.lambda_u"))};
    } else if (arrival_kind == "empirical") {
        cfg.arrival = EmpiricalArrivals{
            detail::parse_list("arrival.samples", require("arrival.samples"))};
    } else {
        throw config_error("arrival.kind must be exponential or empirical");
    }

    const std::string fading_kind = take("fading.kind");
    if (fading_kind.empty() || fading_kind == "rayleigh") {
        cfg.fading = RayleighFading{};
    } else if (fading_kind == "constant") {
        cfg.fading = ConstantGainFading{detail::parse_double("fading.gain", require("fading.gain"))};
    } else if (fading_kind == "empirical") {
        cfg.fading = EmpiricalFading{detail::parse_list("fading.gains", require("fading.gains"))};
    } else {
        throw config_error("fading.kind must be rayleigh, constant or empirical");
    }

    if (const std::string v = take("channel.n_symbols"); !v.empty())
        cfg.channel.n_symbols = static_cast<int>(detail::parse_u64("channel.n_symbols", v));
    if (const std::string v = take("channel.noise_power"); !v.empty())
        cfg.channel.noise_power = detail::parse_double("channel.noise_power", v);

    const std::string policy_kind = require("policy.kind");
    if (policy_kind == "constant")
        cfg.policy.kind = PolicySpec::Kind::constant;
    else if (policy_kind == "waterfilling")
        cfg.policy.kind = PolicySpec::Kind::waterfilling;
    else if (policy_kind == "nostorage")
        cfg.policy.kind = PolicySpec::Kind::nostorage;
    else
        throw config_error("policy.kind must be constant, waterfilling or nostorage");
    if (const std::string v = take("policy.p"); !v.empty())
        cfg.policy.level = detail::parse_double("policy.p", v);
    if (const std::string v = take("policy.epsilon"); !v.empty())
        cfg.policy.cutoff = detail::parse_double("policy.epsilon", v);
    if (const std::string v = take("policy.theta"); !v.empty())
        cfg.policy.theta = detail::parse_double("policy.theta", v);
    if (const std::string v = take("policy.target_prob"); !v.empty())
        cfg.policy.target_prob = detail::parse_double("policy.target_prob", v);

    if (const std::string v = take("sim.frames"); !v.empty())
        cfg.frames = detail::parse_u64("sim.frames", v);
    if (const std::string v = take("sim.burn_in"); !v.empty())
        cfg.burn_in = detail::parse_u64("sim.burn_in", v);
    if (const std::string v = take("sim.seed"); !v.empty())
        cfg.seed = detail::parse_u64("sim.seed", v);
    if (const std::string v = take("sim.outage_zero_rate"); !v.empty())
        cfg.outage_zero_rate = detail::parse_bool("sim.outage_zero_rate", v);
    if (const std::string v = take("sim.tail_points"); !v.empty())
        cfg.tail_points = static_cast<int>(detail::parse_u64("sim.tail_points", v));

    if (!kv.empty())
        throw config_error("unknown key '" + kv.begin()->first + "'");

    validate(cfg);
    return cfg;
}

} // namespace ehsim
