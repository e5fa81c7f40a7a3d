#pragma once

#include <cstdint>
#include <optional>
#include <vector>

#include "ehsim/analysis.hpp"
#include "ehsim/battery.hpp"
#include "ehsim/channel.hpp"
#include "ehsim/errors.hpp"
#include "ehsim/parallel.hpp"
#include "ehsim/processes.hpp"
#include "ehsim/rng.hpp"
#include "ehsim/scenario.hpp"

namespace ehsim {

// Stream ids inside one trace. Arrival and fading draws are keyed by frame,
// not by policy, so runs sharing a seed see identical randomness (common
// random numbers for paired policy comparisons).
inline constexpr std::uint64_t kArrivalStream = 1;
inline constexpr std::uint64_t kFadingStream = 2;

// Below this many underflow episodes an empirical frequency is reported but
// flagged: the deep tail is not resolvable at desk scale.
inline constexpr std::uint64_t kLowConfidenceEvents = 50;

struct TraceStats {
    std::uint64_t frames_counted = 0;

    double underflow_freq = 0.0;     // fraction of frames with space >= e_c
    double outage_freq = 0.0;        // fraction of frames the demand could not be met
    double delta_hat = 0.0;          // fraction of frames with the battery full
    double overflow_loss_rate = 0.0; // mean dissipated energy per frame
    double mean_service_rate = 0.0;  // bits per frame
    double mean_consumed = 0.0;      // energy per frame

    // Frames in underflow vs. distinct underflow episodes (entries into the
    // underflow set). Episodes are the meaningful sample size for the tail:
    // one excursion above e_c contributes many correlated frames.
    std::uint64_t underflow_frames = 0;
    std::uint64_t underflow_events = 0;
    bool low_confidence = true;

    TailCounts tail_counts;
    std::optional<TailEstimate> tail; // absent when the tail grid is undersampled

    // Whole-trace energy ledger (burn-in included), for the conservation
    // audit: harvested = consumed + overflow + charge loss + discharge loss
    // + battery delta.
    double harvested_total = 0.0;
    double consumed_total = 0.0;
    double overflow_total = 0.0;
    double charge_loss_total = 0.0;
    double discharge_loss_total = 0.0;
    double initial_energy = 0.0;
    double final_energy = 0.0;

    // Empirical prefactor for the refined tail approximation: the
    // probability the battery is not full.
    double refined_prefactor() const { return 1.0 - delta_hat; }
};

inline std::vector<double> default_tail_grid(double e_c, int points) {
    std::vector<double> grid;
    grid.reserve(points);
    const double lo = 0.2 * e_c;
    const double hi = 0.8 * e_c;
    for (int k = 0; k < points; ++k)
        grid.push_back(lo + (hi - lo) * static_cast<double>(k) / (points - 1));
    return grid;
}

namespace detail {

inline void refuse_if_unstable(const ScenarioConfig& cfg, const ResolvedPolicy& resolved) {
    if (std::holds_alternative<NoStorage>(resolved.policy))
        return;
    const double drift = resolved.solution
                             ? resolved.solution->mean_net_flow
                             : mean_net_flow(resolved.policy, cfg.arrival, cfg.fading,
                                             cfg.channel, cfg.battery.mu, cfg.battery.beta);
    if (!(drift > 0.0)) {
        std::ostringstream oss;
        oss << "refusing to simulate an unstable policy: mean net flow " << drift
            << " <= 0 means the battery drains without bound and the underflow "
               "probability has no steady state";
        throw instability_error(oss.str());
    }
}

} // namespace detail

// Run one scenario: per frame draw the gain and the arrival, evaluate the
// demand, spend energy, step the battery, and record events. Statistics are
// collected after burn_in frames; the battery starts full. Deterministic
// given the seed.
inline TraceStats run_trace(const ScenarioConfig& cfg, const ResolvedPolicy& resolved) {
    validate(cfg);
    detail::refuse_if_unstable(cfg, resolved);

    const BatteryParams& bat = cfg.battery;
    const ChannelParams& ch = cfg.channel;
    const double e_c = bat.e_c();
    const bool nostorage = std::holds_alternative<NoStorage>(resolved.policy);

    RngStream arrival_rng(cfg.seed, kArrivalStream);
    RngStream fading_rng(cfg.seed, kFadingStream);

    TraceStats stats;
    stats.tail_counts.thresholds = default_tail_grid(e_c, cfg.tail_points);
    stats.tail_counts.exceed_frames.assign(stats.tail_counts.thresholds.size(), 0);

    BatteryState state{bat.e_max, 0};
    stats.initial_energy = state.energy;

    std::uint64_t counted = 0, underflow_frames = 0, underflow_events = 0, outage_frames = 0,
                  full_frames = 0;
    bool in_underflow = false;
    KahanSum rate_sum, consumed_sum, overflow_sum;
    KahanSum harvested_acc, consumed_acc, overflow_acc, charge_loss_acc, discharge_loss_acc;

    const std::size_t grid_size = stats.tail_counts.thresholds.size();
    const double* grid = stats.tail_counts.thresholds.data();
    std::uint64_t* exceed = stats.tail_counts.exceed_frames.data();

    for (std::uint64_t i = 0; i < cfg.frames; ++i) {
        const double h_pow = sample_fading(cfg.fading, fading_rng);
        const double u = sample_arrival(cfg.arrival, arrival_rng);

        double p_c;
        double overflow_loss = 0.0;
        bool outage = false, underflow = false;
        double avail;
        if (nostorage) {
            p_c = u;
            avail = bat.e_max - state.energy;
            harvested_acc.add(u);
            consumed_acc.add(u);
        } else {
            const double p = demand(resolved.policy, h_pow, ch);
            const double surplus = u - p;
            auto [next, out] = step(state, u, p, bat);
            p_c = out.consumed;
            overflow_loss = out.overflow_loss;
            outage = out.outage;
            underflow = out.underflow;
            harvested_acc.add(u);
            consumed_acc.add(p_c);
            overflow_acc.add(out.overflow_loss);
            if (surplus >= 0.0)
                charge_loss_acc.add((1.0 - bat.mu) * surplus);
            else
                discharge_loss_acc.add((1.0 - bat.beta) * out.drawn);
            state = next;
            avail = bat.e_max - state.energy;
        }

        const double effective = (outage && cfg.outage_zero_rate) ? 0.0 : p_c;
        const double rate = service_rate(effective, h_pow, ch);

        if (i < cfg.burn_in) {
            in_underflow = underflow;
            continue;
        }
        ++counted;
        if (underflow) {
            ++underflow_frames;
            if (!in_underflow)
                ++underflow_events;
        }
        in_underflow = underflow;
        if (outage)
            ++outage_frames;
        if (avail == 0.0)
            ++full_frames;
        for (std::size_t k = 0; k < grid_size; ++k) {
            if (avail < grid[k])
                break; // thresholds ascend
            ++exceed[k];
        }
        rate_sum.add(rate);
        consumed_sum.add(p_c);
        overflow_sum.add(overflow_loss);
    }

    stats.frames_counted = counted;
    stats.final_energy = state.energy;
    stats.tail_counts.frames = counted;

    const double n = static_cast<double>(counted);
    stats.underflow_frames = underflow_frames;
    stats.underflow_events = underflow_events;
    stats.low_confidence = underflow_events < kLowConfidenceEvents;
    stats.underflow_freq = static_cast<double>(underflow_frames) / n;
    stats.outage_freq = static_cast<double>(outage_frames) / n;
    stats.delta_hat = static_cast<double>(full_frames) / n;
    stats.overflow_loss_rate = overflow_sum.value() / n;
    stats.mean_service_rate = rate_sum.value() / n;
    stats.mean_consumed = consumed_sum.value() / n;

    stats.harvested_total = harvested_acc.value();
    stats.consumed_total = consumed_acc.value();
    stats.overflow_total = overflow_acc.value();
    stats.charge_loss_total = charge_loss_acc.value();
    stats.discharge_loss_total = discharge_loss_acc.value();

    try {
        stats.tail = estimate_decay_rate(stats.tail_counts);
    } catch (const undersampled_error&) {
        stats.tail = std::nullopt;
    } catch (const solver_error&) {
        stats.tail = std::nullopt;
    }
    return stats;
}

inline TraceStats run_trace(const ScenarioConfig& cfg) {
    validate(cfg);
    const ResolvedPolicy resolved = resolve_policy(cfg);
    return run_trace(cfg, resolved);
}

} // namespace ehsim
