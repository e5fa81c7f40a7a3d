#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <utility>

#include "ehsim/errors.hpp"

namespace ehsim {

// Discrete-time lossy battery.
//
// In frame i the system harvests u and the transmitter demands p. A surplus
// u - p is charged into the battery at rate mu (the rest is lost); a deficit
// p - u is covered by discharging (p - u) / beta from the battery (the
// factor 1/beta is the discharge loss). The stored energy is clamped to
// [0, e_max]: hitting e_max dissipates the excess (overflow), and a battery
// too small to cover the deficit sends everything it has (outage). The
// protective threshold e_min defines the feasible capacity e_c = e_max -
// e_min; a frame ending at or below e_min is an underflow.

struct BatteryParams {
    double e_max = 0.0;
    double e_min = 0.0;
    double mu = 1.0;   // charging rate, fraction of a surplus actually banked
    double beta = 1.0; // discharging rate, fraction of a withdrawal delivered

    double e_c() const { return e_max - e_min; }
};

// mu = beta = 1 describes a perfect battery; it is accepted here for tests
// and comparisons, while the config layer insists on lossy values unless
// asked for the perfect mode explicitly.
inline void validate(const BatteryParams& b) {
    if (!(b.e_max > 0.0) || !std::isfinite(b.e_max))
        throw config_error("battery e_max must be positive and finite");
    if (!(b.e_min >= 0.0) || !(b.e_min < b.e_max))
        throw config_error("battery e_min must satisfy 0 <= e_min < e_max");
    if (!(b.mu > 0.0) || !(b.mu <= 1.0))
        throw config_error("battery mu must lie in (0, 1]");
    if (!(b.beta > 0.0) || !(b.beta <= 1.0))
        throw config_error("battery beta must lie in (0, 1]");
}

struct BatteryState {
    double energy = 0.0;
    std::uint64_t frame_index = 0;
};

struct StepOutcome {
    double consumed = 0.0;      // energy actually spent on transmission
    double overflow_loss = 0.0; // dissipated when the battery clamps at e_max
    double stored = 0.0;        // banked this frame, net of overflow
    double drawn = 0.0;         // gross energy removed from the battery
    bool underflow = false;     // post-step available space reached e_c
    bool outage = false;        // battery could not cover the deficit
    bool demand_met = false;    // consumed == p
};

// Signed net energy flow into the battery for one frame: a surplus is
// scaled by mu, a deficit inflated by 1/beta. Continuous at u == p.
inline double net_flow(double u, double p, const BatteryParams& b) {
    return u >= p ? b.mu * (u - p) : (u - p) / b.beta;
}

inline double available_space(const BatteryState& s, const BatteryParams& b) {
    return b.e_max - s.energy;
}

inline std::pair<BatteryState, StepOutcome> step(const BatteryState& state, double u, double p,
                                                 const BatteryParams& b) {
    StepOutcome out;
    double e = state.energy;
    if (u >= p) {
        out.consumed = p;
        const double banked = b.mu * (u - p);
        const double raw = e + banked;
        out.overflow_loss = std::max(raw - b.e_max, 0.0);
        out.stored = banked - out.overflow_loss;
        e = std::min(raw, b.e_max);
    } else {
        const double need = (p - u) / b.beta;
        out.outage = e < need;
        out.drawn = std::min(e, need);
        out.consumed = out.outage ? u + b.beta * e : p;
        e -= out.drawn;
    }
    out.demand_met = !out.outage;
    out.underflow = b.e_max - e >= b.e_c();
    return {BatteryState{e, state.frame_index + 1}, out};
}

} // namespace ehsim
