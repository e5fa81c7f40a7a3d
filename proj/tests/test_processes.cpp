#include <catch2/catch_amalgamated.hpp>

#include <algorithm>
#include <cmath>
#include <vector>

#include "ehsim/processes.hpp"

using namespace ehsim;

TEST_CASE("exponential arrivals have the configured mean") {
    const ArrivalProcess proc = ExponentialArrivals{0.01};
    RngStream rng(2024, 1);
    double sum = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i)
        sum += sample_arrival(proc, rng);
    CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(100.0, 0.5));
}

TEST_CASE("exponential tail matches the closed-form survival function") {
    // Pr{u > 300} = exp(-3) for rate 0.01.
    const ArrivalProcess proc = ExponentialArrivals{0.01};
    RngStream rng(99, 5);
    const int n = 1'000'000;
    int over = 0;
    for (int i = 0; i < n; ++i)
        over += sample_arrival(proc, rng) > 300.0;
    const double expect = std::exp(-3.0);
    const double sigma = std::sqrt(expect * (1.0 - expect) / n);
    CHECK_THAT(static_cast<double>(over) / n, Catch::Matchers::WithinAbs(expect, 3.0 * sigma));
}

TEST_CASE("degenerate empirical table is a constant") {
    const ArrivalProcess proc = EmpiricalArrivals{{50.0}};
    RngStream rng(1, 1);
    for (int i = 0; i < 100; ++i)
        REQUIRE(sample_arrival(proc, rng) == 50.0);
}

TEST_CASE("constant gain fading is deterministic") {
    const FadingProcess proc = ConstantGainFading{2.0};
    RngStream rng(1, 1);
    for (int i = 0; i < 100; ++i)
        REQUIRE(sample_fading(proc, rng) == 2.0);
}

TEST_CASE("rayleigh power gain has unit mean") {
    const FadingProcess proc = RayleighFading{};
    RngStream rng(7, 2);
    double sum = 0.0;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i)
        sum += sample_fading(proc, rng);
    CHECK_THAT(sum / n, Catch::Matchers::WithinAbs(1.0, 0.005));
}

TEST_CASE("rayleigh power gain CDF near zero") {
    // Pr{h_pow < 0.1} = 1 - exp(-0.1).
    const FadingProcess proc = RayleighFading{};
    RngStream rng(11, 3);
    const int n = 1'000'000;
    int below = 0;
    for (int i = 0; i < n; ++i)
        below += sample_fading(proc, rng) < 0.1;
    const double expect = 1.0 - std::exp(-0.1);
    const double sigma = std::sqrt(expect * (1.0 - expect) / n);
    CHECK_THAT(static_cast<double>(below) / n, Catch::Matchers::WithinAbs(expect, 3.0 * sigma));
}

TEST_CASE("Kolmogorov-Smirnov fit of exponential samples") {
    const double rate = 0.01;
    const ArrivalProcess proc = ExponentialArrivals{rate};
    RngStream rng(31337, 4);
    const int n = 100'000;
    std::vector<double> xs(n);
    for (double& x : xs)
        x = sample_arrival(proc, rng);
    std::sort(xs.begin(), xs.end());
    double d = 0.0;
    for (int i = 0; i < n; ++i) {
        const double cdf = 1.0 - std::exp(-rate * xs[i]);
        d = std::max(d, std::abs(cdf - static_cast<double>(i + 1) / n));
        d = std::max(d, std::abs(cdf - static_cast<double>(i) / n));
    }
    // 1% critical value for large n.
    CHECK(d < 1.628 / std::sqrt(static_cast<double>(n)));
}

TEST_CASE("invalid processes are rejected") {
    CHECK_THROWS_AS(validate(ArrivalProcess{ExponentialArrivals{0.0}}), config_error);
    CHECK_THROWS_AS(validate(ArrivalProcess{ExponentialArrivals{-1.0}}), config_error);
    CHECK_THROWS_AS(validate(ArrivalProcess{EmpiricalArrivals{{}}}), config_error);
    CHECK_THROWS_AS(validate(ArrivalProcess{EmpiricalArrivals{{1.0, -2.0}}}), config_error);
    CHECK_THROWS_AS(validate(FadingProcess{ConstantGainFading{0.0}}), config_error);
    CHECK_THROWS_AS(validate(FadingProcess{EmpiricalFading{{1.0, 0.0}}}), config_error);
    CHECK_NOTHROW(validate(ArrivalProcess{ExponentialArrivals{0.01}}));
    CHECK_NOTHROW(validate(FadingProcess{RayleighFading{}}));
}
