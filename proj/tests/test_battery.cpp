#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <vector>

#include "ehsim/battery.hpp"
#include "ehsim/rng.hpp"

using namespace ehsim;

namespace {

const BatteryParams kLossy{100.0, 0.0, 0.85, 0.80};

// Draws on a dyadic grid (multiples of 1/8, bounded) with power-of-two loss
// rates keep every battery operation exact in double precision, so algebraic
// identities can be checked with zero tolerance.
double dyadic(RngStream& rng, double max_value) {
    const double steps = max_value * 8.0;
    return static_cast<double>(rng.next_u64() % static_cast<std::uint64_t>(steps)) / 8.0;
}

} // namespace

TEST_CASE("net flow branches") {
    CHECK(net_flow(30.0, 10.0, kLossy) == 17.0);
    CHECK(net_flow(50.0, 50.0, kLossy) == 0.0);
    CHECK(net_flow(0.0, 10.0, kLossy) == -12.5);
}

TEST_CASE("charging step") {
    const BatteryState s{50.0, 3};
    const auto [next, out] = step(s, 30.0, 10.0, kLossy);
    CHECK(next.energy == 67.0);
    CHECK(next.frame_index == 4);
    CHECK(out.consumed == 10.0);
    CHECK(out.overflow_loss == 0.0);
    CHECK(out.stored == 17.0);
    CHECK_FALSE(out.outage);
    CHECK(out.demand_met);
}

TEST_CASE("outage step delivers everything the battery has") {
    const BatteryState s{5.0, 0};
    const auto [next, out] = step(s, 0.0, 10.0, kLossy);
    CHECK(next.energy == 0.0);
    CHECK(out.consumed == 4.0); // u + beta * e_prev
    CHECK(out.outage);
    CHECK_FALSE(out.demand_met);
    CHECK(out.drawn == 5.0);
}

TEST_CASE("overflow clamps at capacity and dissipates the excess") {
    const BatteryState s{95.0, 0};
    const auto [next, out] = step(s, 30.0, 10.0, kLossy);
    CHECK(next.energy == 100.0);
    CHECK(out.overflow_loss == 12.0);
    CHECK(out.consumed == 10.0);
    CHECK_FALSE(out.outage);
    CHECK(out.stored == 5.0);
}

TEST_CASE("available space is the capacity complement") {
    CHECK(available_space(BatteryState{100.0, 0}, kLossy) == 0.0);
    CHECK(available_space(BatteryState{0.0, 0}, kLossy) == 100.0);
    CHECK(available_space(BatteryState{67.0, 0}, kLossy) == 33.0);
}

TEST_CASE("underflow includes the exact boundary") {
    const BatteryParams b{100.0, 20.0, 0.85, 0.5};
    // Discharge from 30 to exactly e_min = 20: available space hits e_c.
    const auto [next, out] = step(BatteryState{30.0, 0}, 0.0, 5.0, b);
    CHECK(next.energy == 20.0);
    CHECK(out.underflow);
    const auto [next2, out2] = step(BatteryState{30.0, 0}, 0.0, 4.5, b);
    CHECK(next2.energy > 20.0);
    CHECK_FALSE(out2.underflow);
}

TEST_CASE("duality of the energy and available-space recursions") {
    // 10^4 random traces; exact equality on the dyadic grid.
    RngStream rng(555, 0);
    const std::vector<BatteryParams> variants = {
        {64.0, 0.0, 0.75, 0.5}, {64.0, 16.0, 0.5, 0.25}, {256.0, 0.0, 0.75, 0.5}};
    for (int trace = 0; trace < 10000; ++trace) {
        const BatteryParams& b = variants[trace % variants.size()];
        BatteryState state{dyadic(rng, b.e_max), 0};
        double space = b.e_max - state.energy;
        for (int i = 0; i < 50; ++i) {
            const double u = dyadic(rng, 40.0);
            const double p = dyadic(rng, 40.0);
            const double z = net_flow(u, p, b);
            auto [next, out] = step(state, u, p, b);
            space = std::min(std::max(space - z, 0.0), b.e_max);
            REQUIRE(space == b.e_max - next.energy);
            REQUIRE(space == available_space(next, b));
            state = next;
        }
    }
}

TEST_CASE("energy stays clamped to [0, e_max] on arbitrary traces") {
    RngStream rng(556, 0);
    BatteryState state{kLossy.e_max, 0};
    for (int i = 0; i < 200000; ++i) {
        const double u = rng.next_exponential(0.02);
        const double p = rng.next_exponential(0.02);
        auto [next, out] = step(state, u, p, kLossy);
        REQUIRE(next.energy >= 0.0);
        REQUIRE(next.energy <= kLossy.e_max);
        REQUIRE(out.consumed <= p);
        if (out.overflow_loss > 0.0)
            REQUIRE_FALSE(out.outage);
        if (out.outage && p > u)
            REQUIRE(out.consumed < p);
        state = next;
    }
}

TEST_CASE("perfect battery reduces to the lossless buffer recursion") {
    const BatteryParams perfect{500.0, 0.0, 1.0, 1.0};
    RngStream rng(557, 0);
    BatteryState state{250.0, 0};
    double buffer = 250.0;
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.next_exponential(0.05);
        const double p = rng.next_exponential(0.05);
        auto [next, out] = step(state, u, p, perfect);
        buffer = std::min(std::max(buffer + (u - p), 0.0), perfect.e_max);
        REQUIRE(next.energy == buffer);
        state = next;
    }
}

TEST_CASE("per-step energy accounting") {
    RngStream rng(558, 0);
    BatteryState state{50.0, 0};
    for (int i = 0; i < 100000; ++i) {
        const double u = rng.next_exponential(0.02);
        const double p = rng.next_exponential(0.02);
        auto [next, out] = step(state, u, p, kLossy);
        REQUIRE(out.stored <= kLossy.mu * std::max(u - p, 0.0) + 1e-12);
        // Delivered energy covers consumption, with equality unless clamped.
        const double delivered = out.drawn * kLossy.beta + u;
        REQUIRE(delivered >= out.consumed - 1e-9 * std::max(1.0, out.consumed));
        if (u < p)
            REQUIRE_THAT(delivered,
                         Catch::Matchers::WithinRel(out.consumed, 1e-12));
        state = next;
    }
}

TEST_CASE("step is order-preserving in the prior state") {
    RngStream rng(559, 0);
    for (int i = 0; i < 100000; ++i) {
        double ea = rng.next_unit() * kLossy.e_max;
        double eb = rng.next_unit() * kLossy.e_max;
        if (ea < eb)
            std::swap(ea, eb);
        const double u = rng.next_exponential(0.02);
        const double p = rng.next_exponential(0.02);
        auto [na, oa] = step(BatteryState{ea, 0}, u, p, kLossy);
        auto [nb, ob] = step(BatteryState{eb, 0}, u, p, kLossy);
        REQUIRE(na.energy >= nb.energy);
    }
}

TEST_CASE("battery parameter validation") {
    CHECK_THROWS_AS(validate(BatteryParams{0.0, 0.0, 0.5, 0.5}), config_error);
    CHECK_THROWS_AS(validate(BatteryParams{100.0, 100.0, 0.5, 0.5}), config_error);
    CHECK_THROWS_AS(validate(BatteryParams{100.0, 0.0, 0.0, 0.5}), config_error);
    CHECK_THROWS_AS(validate(BatteryParams{100.0, 0.0, 0.5, 1.5}), config_error);
    CHECK_NOTHROW(validate(BatteryParams{100.0, 0.0, 1.0, 1.0}));
}
