#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <optional>
#include <sstream>
#include <string>
#include <variant>
#include <vector>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/tanh_sinh.hpp>

#include "ehsim/battery.hpp"
#include "ehsim/channel.hpp"
#include "ehsim/errors.hpp"
#include "ehsim/parallel.hpp"
#include "ehsim/processes.hpp"
#include "ehsim/rng.hpp"

namespace ehsim {

// The design knob linking the underflow constraint to the demand policy is
// the decay rate theta of the steady-state available-space tail,
// Pr{space >= x} ~ exp(-theta x). For i.i.d. per-frame net flow z the decay
// rate theta solves the balance equation E[exp(-theta z)] = 1, and the
// underflow probability at feasible capacity e_c is approximately
// exp(-theta e_c).

// theta for a target underflow probability at feasible capacity e_c.
inline double theta_from_constraint(double target_prob, double e_c) {
    if (!(target_prob > 0.0) || !(target_prob < 1.0))
        throw config_error("target underflow probability must lie in (0, 1)");
    if (!(e_c > 0.0))
        throw config_error("feasible capacity must be positive");
    return -std::log(target_prob) / e_c;
}

inline double underflow_prob_approx(double theta, double e_c) {
    return std::exp(-theta * e_c);
}

// Prefactor-corrected approximation for small capacities. The caller picks
// the prefactor; see TraceStats::refined_prefactor() for the empirical one.
inline double refined_underflow_approx(double theta, double e_c, double delta) {
    return delta * underflow_prob_approx(theta, e_c);
}

// --- net flow under a constant demand level and exponential arrivals ----

// E[exp(-theta z)] in closed form for constant demand p and exponential
// arrivals with rate lambda_u. The two terms integrate the discharge branch
// (u < p, scaled by 1/beta) and the charge branch (u >= p, scaled by mu)
// against the arrival density.
inline double mgf_constant_demand(double theta, double p, double lambda_u, double mu,
                                  double beta) {
    if (!(theta > 0.0))
        throw std::domain_error("decay rate theta must be positive");
    const double discharge = lambda_u * beta / (lambda_u * beta + theta) *
                             (std::exp(theta * p / beta) - std::exp(-lambda_u * p));
    const double charge = lambda_u / (lambda_u + theta * mu) * std::exp(-lambda_u * p);
    return discharge + charge;
}

// Density of the per-frame net flow z for constant demand p: the discharge
// branch maps u in [0, p) onto z in [-p/beta, 0), the charge branch maps
// u in [p, inf) onto z in [0, inf).
inline double net_flow_density(double z, double p, double lambda_u, double mu, double beta) {
    if (z >= 0.0)
        return lambda_u / mu * std::exp(-lambda_u * (z / mu + p));
    if (z >= -p / beta)
        return beta * lambda_u * std::exp(-lambda_u * (beta * z + p));
    return 0.0;
}

// E[z] in closed form for constant demand and exponential arrivals.
inline double mean_net_flow_constant(double p, double lambda_u, double mu, double beta) {
    const double e = std::exp(-lambda_u * p);
    return ((1.0 - e) / lambda_u - p) / beta + mu / lambda_u * e;
}

namespace detail {

// E[exp(-theta z)] at a fixed demand level, for either arrival model.
inline double inner_mgf(double theta, double p, const ArrivalProcess& arrival, double mu,
                        double beta) {
    if (const auto* e = std::get_if<ExponentialArrivals>(&arrival))
        return mgf_constant_demand(theta, p, e->rate, mu, beta);
    const auto& samples = std::get<EmpiricalArrivals>(arrival).samples;
    KahanSum acc;
    BatteryParams b;
    b.mu = mu;
    b.beta = beta;
    for (double u : samples)
        acc.add(std::exp(-theta * net_flow(u, p, b)));
    return acc.value() / static_cast<double>(samples.size());
}

// E[z] at a fixed demand level.
inline double inner_mean(double p, const ArrivalProcess& arrival, double mu, double beta) {
    if (const auto* e = std::get_if<ExponentialArrivals>(&arrival))
        return mean_net_flow_constant(p, e->rate, mu, beta);
    const auto& samples = std::get<EmpiricalArrivals>(arrival).samples;
    KahanSum acc;
    BatteryParams b;
    b.mu = mu;
    b.beta = beta;
    for (double u : samples)
        acc.add(net_flow(u, p, b));
    return acc.value() / static_cast<double>(samples.size());
}

// Expectation of fn(demand(h)) over the fading distribution. For the
// water-filling policy the demand is deterministic given the gain, so the
// outer integral is one-dimensional and the inner expectation over arrivals
// is already folded into fn.
template <typename Fn>
double fading_expectation(const WaterFillingDemand& wf, const FadingProcess& fading,
                          const ChannelParams& ch, Fn&& fn) {
    const double eps = wf.cutoff;
    if (const auto* c = std::get_if<ConstantGainFading>(&fading)) {
        WaterFillingDemand w{eps};
        return fn(demand(DemandPolicy{w}, c->gain, ch));
    }
    if (const auto* e = std::get_if<EmpiricalFading>(&fading)) {
        KahanSum acc;
        for (double g : e->gains)
            acc.add(fn(demand(DemandPolicy{WaterFillingDemand{eps}}, g, ch)));
        return acc.value() / static_cast<double>(e->gains.size());
    }
    // Unit-mean exponential power gain: below the cutoff the demand is zero.
    const double head = (1.0 - std::exp(-eps)) * fn(0.0);
    const double scale = static_cast<double>(ch.n_symbols) * ch.noise_power;
    boost::math::quadrature::exp_sinh<double> integrator;
    double error = 0.0;
    const double tail = integrator.integrate(
        [&](double t) {
            const double h = eps + t;
            return std::exp(-h) * fn(scale * (1.0 / eps - 1.0 / h));
        },
        1e-12, &error);
    if (!std::isfinite(tail))
        throw solver_error("fading-average quadrature did not converge");
    return head + tail;
}

} // namespace detail

// ------------------------------------------------------------------------

struct QuadratureMethod {
    double tolerance = 1e-12;
};

struct MonteCarloMethod {
    std::uint64_t samples = 10'000'000;
    std::uint64_t seed = 0;
    int workers = 1;
};

using MgfMethod = std::variant<QuadratureMethod, MonteCarloMethod>;

struct NumericResult {
    double value = 0.0;
    double error = 0.0; // quadrature error estimate, or one standard error
};

namespace detail {

inline constexpr std::uint64_t kMcStreamBase = 0x4D43'0000'0000'0000ull;
inline constexpr std::uint64_t kMcBlocks = 64;

inline NumericResult mgf_monte_carlo(double theta, const DemandPolicy& policy,
                                     const ArrivalProcess& arrival, const FadingProcess& fading,
                                     const ChannelParams& ch, double mu, double beta,
                                     const MonteCarloMethod& mc) {
    BatteryParams b;
    b.mu = mu;
    b.beta = beta;
    const bool channel_aware = std::holds_alternative<WaterFillingDemand>(policy);
    const double constant_level =
        channel_aware ? 0.0 : std::get<ConstantDemand>(policy).level;

    struct Block {
        double sum = 0.0;
        double sum_sq = 0.0;
    };
    std::vector<Block> blocks(kMcBlocks);
    parallel_for(kMcBlocks, mc.workers, [&](std::size_t bi) {
        const std::uint64_t base = mc.samples / kMcBlocks;
        const std::uint64_t count = base + (bi < mc.samples % kMcBlocks ? 1 : 0);
        RngStream arr_rng(mc.seed, kMcStreamBase + 2 * bi);
        RngStream fad_rng(mc.seed, kMcStreamBase + 2 * bi + 1);
        KahanSum sum, sum_sq;
        for (std::uint64_t i = 0; i < count; ++i) {
            const double u = sample_arrival(arrival, arr_rng);
            const double p = channel_aware
                                 ? demand(policy, sample_fading(fading, fad_rng), ch)
                                 : constant_level;
            const double w = std::exp(-theta * net_flow(u, p, b));
            sum.add(w);
            sum_sq.add(w * w);
        }
        blocks[bi] = {sum.value(), sum_sq.value()};
    });
    KahanSum total, total_sq;
    for (const Block& blk : blocks) {
        total.add(blk.sum);
        total_sq.add(blk.sum_sq);
    }
    const double n = static_cast<double>(mc.samples);
    const double mean = total.value() / n;
    const double variance = std::max(total_sq.value() / n - mean * mean, 0.0);
    return {mean, std::sqrt(variance / n)};
}

inline NumericResult mgf_quadrature(double theta, const DemandPolicy& policy,
                                    const ArrivalProcess& arrival, const FadingProcess& fading,
                                    const ChannelParams& ch, double mu, double beta,
                                    const QuadratureMethod& method) {
    if (const auto* c = std::get_if<ConstantDemand>(&policy)) {
        // Integrate exp(-theta z) against the net-flow density directly;
        // keeping this route independent of the closed form makes the two
        // cross-check each other.
        if (const auto* e = std::get_if<ExponentialArrivals>(&arrival)) {
            const double p = c->level;
            const double lambda_u = e->rate;
            double err1 = 0.0, err2 = 0.0, finite = 0.0;
            if (p > 0.0) {
                boost::math::quadrature::tanh_sinh<double> ts;
                finite = ts.integrate(
                    [&](double z) {
                        return std::exp(-theta * z) * net_flow_density(z, p, lambda_u, mu, beta);
                    },
                    -p / beta, 0.0, method.tolerance, &err1);
            }
            boost::math::quadrature::exp_sinh<double> es;
            const double tail = es.integrate(
                [&](double z) {
                    return std::exp(-theta * z) * net_flow_density(z, p, lambda_u, mu, beta);
                },
                method.tolerance, &err2);
            const double value = finite + tail;
            if (!std::isfinite(value)) {
                std::ostringstream oss;
                oss << "net-flow transform quadrature diverged (theta=" << theta << ", p=" << p
                    << ")";
                throw solver_error(oss.str());
            }
            return {value, err1 + err2};
        }
        // Empirical arrivals: the expectation is an exact table average.
        return {detail::inner_mgf(theta, c->level, arrival, mu, beta), 0.0};
    }
    if (const auto* w = std::get_if<WaterFillingDemand>(&policy)) {
        const double value = detail::fading_expectation(
            *w, fading, ch,
            [&](double p) { return detail::inner_mgf(theta, p, arrival, mu, beta); });
        return {value, method.tolerance};
    }
    throw config_error("the no-storage policy has no net-flow transform");
}

} // namespace detail

// E[exp(-theta z)] for an arbitrary policy, by quadrature or Monte Carlo.
inline NumericResult mgf_numeric(double theta, const DemandPolicy& policy,
                                 const ArrivalProcess& arrival, const FadingProcess& fading,
                                 const ChannelParams& ch, double mu, double beta,
                                 const MgfMethod& method = QuadratureMethod{}) {
    if (!(theta > 0.0))
        throw std::domain_error("decay rate theta must be positive");
    if (const auto* mc = std::get_if<MonteCarloMethod>(&method))
        return detail::mgf_monte_carlo(theta, policy, arrival, fading, ch, mu, beta, *mc);
    return detail::mgf_quadrature(theta, policy, arrival, fading, ch, mu, beta,
                                  std::get<QuadratureMethod>(method));
}

// E[z] for an arbitrary policy.
inline double mean_net_flow(const DemandPolicy& policy, const ArrivalProcess& arrival,
                            const FadingProcess& fading, const ChannelParams& ch, double mu,
                            double beta) {
    if (const auto* c = std::get_if<ConstantDemand>(&policy))
        return detail::inner_mean(c->level, arrival, mu, beta);
    if (const auto* w = std::get_if<WaterFillingDemand>(&policy))
        return detail::fading_expectation(
            *w, fading, ch, [&](double p) { return detail::inner_mean(p, arrival, mu, beta); });
    throw config_error("the no-storage policy has no battery net flow");
}

// ------------------------------------------------------------------------

struct BalanceSolution {
    double policy_parameter = 0.0; // demand level p*, or water-filling cutoff
    double mgf_residual = 0.0;     // |E[exp(-theta z)] - 1| at the solution
    double mean_net_flow = 0.0;    // E[z] at the solution
    bool stable = false;           // E[z] > 0
};

// Largest constant demand level achieving available-space decay rate theta:
// the root of E[exp(-theta z)] = 1 in p. The transform is strictly
// increasing in p and below 1 at p = 0, so bracketed bisection applies.
inline BalanceSolution solve_constant_demand(double theta, double lambda_u, double mu,
                                             double beta, double residual_tol = 1e-12) {
    if (!(theta > 0.0))
        throw std::domain_error("decay rate theta must be positive");
    if (!(lambda_u > 0.0))
        throw config_error("arrival rate must be positive");

    auto excess = [&](double p) { return mgf_constant_demand(theta, p, lambda_u, mu, beta) - 1.0; };

    double lo = 0.0;
    double hi = std::max(1.0, 2.0 / lambda_u);
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
            break; // interval exhausted at double precision
        const double f = excess(mid);
        if (std::abs(f) <= residual_tol)
            break;
        (f < 0.0 ? lo : hi) = mid;
    }
    BalanceSolution sol;
    sol.policy_parameter = mid;
    sol.mgf_residual = std::abs(excess(mid));
    sol.mean_net_flow = mean_net_flow_constant(mid, lambda_u, mu, beta);
    sol.stable = sol.mean_net_flow > 0.0;
    if (sol.mgf_residual > 1e-10)
        throw solver_error("constant-demand balance equation did not converge");
    return sol;
}

// Water-filling cutoff achieving decay rate theta. The transform is
// non-increasing in the cutoff (a larger cutoff demands less), which the
// solver verifies on a scan of its bracket before bisecting; the residual
// tolerance is set by the outer quadrature.
inline BalanceSolution solve_waterfilling_cutoff(double theta, const ArrivalProcess& arrival,
                                                 const FadingProcess& fading,
                                                 const ChannelParams& ch, double mu, double beta,
                                                 double residual_tol = 1e-6) {
    if (!(theta > 0.0))
        throw std::domain_error("decay rate theta must be positive");

    auto excess = [&](double eps) {
        const NumericResult r = mgf_numeric(theta, DemandPolicy{WaterFillingDemand{eps}}, arrival,
                                            fading, ch, mu, beta, QuadratureMethod{});
        return r.value - 1.0;
    };

    double lo = 1.0, hi = 1.0;
    const double f1 = excess(1.0);
    if (f1 > 0.0) {
        int expansions = 0;
        while (excess(hi) > 0.0) {
            lo = hi;
            hi *= 2.0;
            if (++expansions > 60)
                throw solver_error("no upper bracket for the water-filling balance equation");
        }
    } else {
        int expansions = 0;
        while (excess(lo) < 0.0) {
            hi = lo;
            lo *= 0.5;
            if (++expansions > 60)
                throw solver_error("no lower bracket for the water-filling balance equation");
        }
    }

    // A non-monotone scan would mean more than one crossing is possible;
    // report it rather than silently returning one of them.
    {
        const int scan_points = 9;
        double prev = excess(lo);
        for (int k = 1; k <= scan_points; ++k) {
            const double eps = lo * std::pow(hi / lo, static_cast<double>(k) / scan_points);
            const double f = excess(eps);
            if (f > prev + 1e-9) {
                std::ostringstream oss;
                oss << "water-filling balance equation is not monotone on the bracket ["
                    << lo << ", " << hi << "]";
                throw solver_error(oss.str());
            }
            prev = f;
        }
    }

    double mid = lo;
    double residual = std::abs(excess(mid));
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        const double f = excess(mid);
        residual = std::abs(f);
        if (residual <= 0.1 * residual_tol)
            break;
        (f > 0.0 ? lo : hi) = mid;
    }
    if (residual > residual_tol) {
        std::ostringstream oss;
        oss << "water-filling balance equation residual " << residual << " exceeds "
            << residual_tol;
        throw solver_error(oss.str());
    }
    BalanceSolution sol;
    sol.policy_parameter = mid;
    sol.mgf_residual = residual;
    sol.mean_net_flow =
        mean_net_flow(DemandPolicy{WaterFillingDemand{mid}}, arrival, fading, ch, mu, beta);
    sol.stable = sol.mean_net_flow > 0.0;
    return sol;
}

// Decay rate achieved by a given (explicit) policy: the positive root of
// E[exp(-theta z)] = 1 in theta. Exists only under the stability condition
// E[z] > 0.
inline BalanceSolution solve_decay_rate(const DemandPolicy& policy, const ArrivalProcess& arrival,
                                        const FadingProcess& fading, const ChannelParams& ch,
                                        double mu, double beta, double residual_tol = 1e-9) {
    const double drift = mean_net_flow(policy, arrival, fading, ch, mu, beta);
    if (!(drift > 0.0)) {
        std::ostringstream oss;
        oss << "policy is unstable: mean net flow " << drift
            << " is not positive, so the battery has no steady state";
        throw instability_error(oss.str());
    }
    auto excess = [&](double theta) {
        const NumericResult r =
            mgf_numeric(theta, policy, arrival, fading, ch, mu, beta, QuadratureMethod{});
        return r.value - 1.0;
    };
    double hi = 1e-6;
    int expansions = 0;
    auto above = [&](double theta) {
        const double f = excess(theta);
        return !std::isfinite(f) || f > 0.0;
    };
    while (!above(hi)) {
        hi *= 2.0;
        if (++expansions > 120)
            throw solver_error("no upper bracket for the decay-rate equation");
    }
    double lo = hi / 2.0;
    expansions = 0;
    while (above(lo)) {
        hi = lo;
        lo *= 0.5;
        if (++expansions > 120)
            throw solver_error("no lower bracket for the decay-rate equation");
    }
    double mid = hi;
    double residual = std::numeric_limits<double>::infinity();
    for (int iter = 0; iter < 200; ++iter) {
        mid = 0.5 * (lo + hi);
        if (mid <= lo || mid >= hi)
            break;
        const double f = excess(mid);
        if (std::isfinite(f))
            residual = std::abs(f);
        if (std::isfinite(f) && residual <= residual_tol)
            break;
        (std::isfinite(f) && f < 0.0 ? lo : hi) = mid;
    }
    BalanceSolution sol;
    sol.policy_parameter = mid;
    sol.mgf_residual = residual;
    sol.mean_net_flow = drift;
    sol.stable = true;
    return sol;
}

// ------------------------------------------------------------------------

// Exceedance counts of the available space over a threshold grid.
struct TailCounts {
    std::vector<double> thresholds;
    std::vector<std::uint64_t> exceed_frames;
    std::uint64_t frames = 0;
};

struct TailEstimate {
    std::vector<double> thresholds;
    std::vector<double> log_probs; // ln of the empirical exceedance probability
    double theta_hat = 0.0;
    double fit_r_squared = 0.0;
};

// Least-squares decay rate of the empirical tail: the negative slope of
// ln Pr{space >= x} against x over the threshold grid.
inline TailEstimate estimate_decay_rate(const TailCounts& counts, std::uint64_t min_events = 50) {
    const std::size_t n = counts.thresholds.size();
    if (n < 4)
        throw undersampled_error("decay-rate fit needs at least 4 threshold points");
    if (counts.exceed_frames.size() != n)
        throw config_error("tail counts and thresholds disagree in length");
    if (counts.frames == 0)
        throw undersampled_error("decay-rate fit needs a non-empty trace");
    TailEstimate est;
    est.thresholds = counts.thresholds;
    est.log_probs.reserve(n);
    for (std::size_t i = 0; i < n; ++i) {
        if (counts.exceed_frames[i] < min_events) {
            std::ostringstream oss;
            oss << "threshold " << counts.thresholds[i] << " has only "
                << counts.exceed_frames[i] << " exceedance frames (need " << min_events << ")";
            throw undersampled_error(oss.str());
        }
        est.log_probs.push_back(std::log(static_cast<double>(counts.exceed_frames[i]) /
                                         static_cast<double>(counts.frames)));
    }
    double x_mean = 0.0, y_mean = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        x_mean += est.thresholds[i];
        y_mean += est.log_probs[i];
    }
    x_mean /= static_cast<double>(n);
    y_mean /= static_cast<double>(n);
    double sxx = 0.0, sxy = 0.0, syy = 0.0;
    for (std::size_t i = 0; i < n; ++i) {
        const double dx = est.thresholds[i] - x_mean;
        const double dy = est.log_probs[i] - y_mean;
        sxx += dx * dx;
        sxy += dx * dy;
        syy += dy * dy;
    }
    if (!(sxx > 0.0))
        throw config_error("tail thresholds must not be degenerate");
    const double slope = sxy / sxx;
    est.theta_hat = -slope;
    est.fit_r_squared = syy > 0.0 ? (sxy * sxy) / (sxx * syy) : 0.0;
    if (!(est.theta_hat > 0.0))
        throw solver_error("empirical tail does not decay; no positive decay rate");
    return est;
}

} // namespace ehsim
