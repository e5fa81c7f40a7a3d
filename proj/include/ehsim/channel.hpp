#pragma once

#include <algorithm>
#include <cmath>
#include <variant>

#include "ehsim/errors.hpp"

namespace ehsim {

struct ChannelParams {
    int n_symbols = 100;      // symbols per frame
    double noise_power = 1.0; // average noise power per symbol
};

inline void validate(const ChannelParams& ch) {
    if (ch.n_symbols < 1)
        throw config_error("channel n_symbols must be >= 1");
    if (!(ch.noise_power > 0.0) || !std::isfinite(ch.noise_power))
        throw config_error("channel noise_power must be positive and finite");
}

// Demand policies. NoStorage bypasses the battery entirely: the transmitter
// spends each arrival as it comes, so it has no demand function.

struct ConstantDemand {
    double level = 0.0;
};

struct WaterFillingDemand {
    double cutoff = 0.0; // transmit only when the power gain exceeds this
};

struct NoStorage {};

using DemandPolicy = std::variant<ConstantDemand, WaterFillingDemand, NoStorage>;

inline double demand(const DemandPolicy& policy, double h_pow, const ChannelParams& ch) {
    if (const auto* c = std::get_if<ConstantDemand>(&policy))
        return c->level;
    if (const auto* w = std::get_if<WaterFillingDemand>(&policy))
        return static_cast<double>(ch.n_symbols) * ch.noise_power *
               std::max(1.0 / w->cutoff - 1.0 / h_pow, 0.0);
    throw config_error("the no-storage policy has no demand function");
}

// Energy actually spent in a frame: the full demand if the battery can
// cover the deficit, otherwise the arrival plus everything the battery
// can deliver.
inline double consumed_energy(double e_prev, double u, double p, double beta) {
    const double need = std::max(p - u, 0.0) / beta;
    return e_prev >= need ? p : u + beta * e_prev;
}

// Bits served in one frame at consumed energy p_c and power gain h_pow.
inline double service_rate(double p_c, double h_pow, const ChannelParams& ch) {
    const double n = static_cast<double>(ch.n_symbols);
    return n * std::log2(1.0 + p_c * h_pow / (n * ch.noise_power));
}

} // namespace ehsim
