#pragma once

#include <numeric>
#include <variant>
#include <vector>

#include "ehsim/errors.hpp"
#include "ehsim/rng.hpp"

namespace ehsim {

// Per-frame energy arrivals, i.i.d. across frames.

struct ExponentialArrivals {
    double rate = 0.0; // mean arrival is 1/rate
};

struct EmpiricalArrivals {
    std::vector<double> samples; // drawn uniformly with replacement
};

using ArrivalProcess = std::variant<ExponentialArrivals, EmpiricalArrivals>;

// Per-frame channel power gain, constant within a frame, i.i.d. across
// frames (block fading).

// Rayleigh envelope: power gain is exponential with unit mean.
struct RayleighFading {};

struct ConstantGainFading {
    double gain = 1.0;
};

struct EmpiricalFading {
    std::vector<double> gains;
};

using FadingProcess = std::variant<RayleighFading, ConstantGainFading, EmpiricalFading>;

inline void validate(const ArrivalProcess& process) {
    if (const auto* e = std::get_if<ExponentialArrivals>(&process)) {
        if (!(e->rate > 0.0) || !std::isfinite(e->rate))
            throw config_error("arrival rate must be positive and finite");
    } else {
        const auto& emp = std::get<EmpiricalArrivals>(process);
        if (emp.samples.empty())
            throw config_error("empirical arrival table is empty");
        for (double s : emp.samples)
            if (!(s >= 0.0) || !std::isfinite(s))
                throw config_error("empirical arrival samples must be non-negative and finite");
    }
}

inline void validate(const FadingProcess& process) {
    if (const auto* c = std::get_if<ConstantGainFading>(&process)) {
        if (!(c->gain > 0.0) || !std::isfinite(c->gain))
            throw config_error("constant channel gain must be positive and finite");
    } else if (const auto* e = std::get_if<EmpiricalFading>(&process)) {
        if (e->gains.empty())
            throw config_error("empirical fading table is empty");
        for (double g : e->gains)
            if (!(g > 0.0) || !std::isfinite(g))
                throw config_error("empirical fading gains must be positive and finite");
    }
}

namespace detail {
// One uniform index draw per sample keeps every process at exactly one
// RNG consumption per frame.
inline double pick(const std::vector<double>& table, RngStream& rng) {
    const std::uint64_t i = rng.next_u64() % table.size();
    return table[i];
}
} // namespace detail

inline double sample_arrival(const ArrivalProcess& process, RngStream& rng) {
    if (const auto* e = std::get_if<ExponentialArrivals>(&process))
        return rng.next_exponential(e->rate);
    return detail::pick(std::get<EmpiricalArrivals>(process).samples, rng);
}

inline double sample_fading(const FadingProcess& process, RngStream& rng) {
    if (std::holds_alternative<RayleighFading>(process))
        return rng.next_exponential(1.0);
    if (const auto* c = std::get_if<ConstantGainFading>(&process))
        return c->gain;
    return detail::pick(std::get<EmpiricalFading>(process).gains, rng);
}

inline double mean_arrival(const ArrivalProcess& process) {
    if (const auto* e = std::get_if<ExponentialArrivals>(&process))
        return 1.0 / e->rate;
    const auto& s = std::get<EmpiricalArrivals>(process).samples;
    return std::accumulate(s.begin(), s.end(), 0.0) / static_cast<double>(s.size());
}

} // namespace ehsim
