#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "dsprt/models.hpp"
#include "dsprt/stats.hpp"

using namespace dsprt;

TEST_CASE("h_function reference values") {
    // frozen from an independent high-precision evaluation
    CHECK(h_function(0.01, 0.01) == doctest::Approx(4.50321745313).epsilon(1e-10));
    CHECK(h_function(0.01, 0.001) == doctest::Approx(6.78268619684).epsilon(1e-10));
    CHECK(h_function(0.001, 0.01) == doctest::Approx(4.59266781103).epsilon(1e-10));
}

TEST_CASE("h_function domain and positivity") {
    CHECK_THROWS_AS(h_function(0.0, 0.5), std::domain_error);
    CHECK_THROWS_AS(h_function(0.5, 1.0), std::domain_error);
    for (double x : {0.001, 0.01, 0.1, 0.3})
        for (double y : {0.001, 0.01, 0.1, 0.3})
            CHECK(h_function(x, y) > 0.0);
}

TEST_CASE("wald thresholds") {
    const auto t1 = wald_thresholds(ErrorLevels(0.01, 0.01));
    CHECK(t1.A == doctest::Approx(4.59511985013).epsilon(1e-10));  // log 99
    CHECK(t1.B == doctest::Approx(4.59511985013).epsilon(1e-10));
    const auto t2 = wald_thresholds(ErrorLevels(0.01, 0.001));
    CHECK(t2.A == doctest::Approx(6.89770494313).epsilon(1e-10));  // log 990
    CHECK(t2.B == doctest::Approx(4.60416968565).epsilon(1e-10));  // log 99.9
    // thresholds grow as the error targets shrink
    double prevA = 0.0;
    for (double b : {0.1, 0.01, 0.001, 0.0001}) {
        const auto t = wald_thresholds(ErrorLevels(0.01, b));
        CHECK(t.A > prevA);
        prevA = t.A;
    }
}

TEST_CASE("error level validation") {
    CHECK_THROWS_AS(ErrorLevels(0.0, 0.1), std::invalid_argument);
    CHECK_THROWS_AS(ErrorLevels(0.1, 1.0), std::invalid_argument);
    CHECK_THROWS_AS(ErrorLevels(0.6, 0.5), std::invalid_argument);
    CHECK_NOTHROW(ErrorLevels(0.01, 0.01));
}

TEST_CASE("optimum two-sensor performance") {
    const auto p = sprt_performance_brownian({1.0, 1.0}, ErrorLevels(0.01, 0.01));
    CHECK(p.e0_delay == doctest::Approx(4.50321745313).epsilon(1e-10));
    CHECK(p.e1_delay == doctest::Approx(4.50321745313).epsilon(1e-10));
    // K-L at stopping = (|mu|^2/2) * delay
    CHECK(p.kl0 == doctest::Approx(p.e0_delay * 2.0 / 2.0).epsilon(1e-12));
    CHECK_THROWS_AS(sprt_performance_brownian({0.0}, ErrorLevels(0.01, 0.01)),
                    std::invalid_argument);
}

TEST_CASE("llr increment algebra") {
    const auto m = HypothesisModel::gaussian(2.0, 1.0);
    CHECK(m.llr_from_obs(1.0) == doctest::Approx(0.0));  // 2*1 - 4/2
    CHECK(m.llr_mean(1) == doctest::Approx(2.0));
    CHECK(m.llr_mean(0) == doctest::Approx(-2.0));
    CHECK(m.llr_sd() == doctest::Approx(2.0));
    CHECK_THROWS_AS(HypothesisModel::gaussian(1.0, 0.0), std::invalid_argument);
}

TEST_CASE("llr increment monte carlo mean") {
    const auto m = HypothesisModel::gaussian(1.0, 0.1);
    NormalSampler rng(12345);
    RunningStat s;
    const int n = 1'000'000;
    for (int i = 0; i < n; ++i) s.add(llr_increment(m, rng, 0));
    // E0[l] = -mu^2 h / 2 = -0.05, sd = sqrt(0.1)
    CHECK(std::abs(s.mean() - (-0.05)) < 4.0 * s.se());
    CHECK(s.sd() == doctest::Approx(std::sqrt(0.1)).epsilon(0.01));
}

TEST_CASE("gaussian absolute moments") {
    // E|X| for standard normal = sqrt(2/pi)
    CHECK(gaussian_abs_moment(0.0, 1.0, 1) ==
          doctest::Approx(std::sqrt(2.0 / M_PI)).epsilon(1e-12));
    // E|X|^2 = var + mean^2
    CHECK(gaussian_abs_moment(0.5, 2.0, 2) == doctest::Approx(4.25).epsilon(1e-12));
    // MC cross-check of E|X|^3, X ~ N(0.5, 1)
    NormalSampler rng(99);
    RunningStat s;
    for (int i = 0; i < 400'000; ++i) {
        const double x = 0.5 + rng();
        s.add(std::abs(x * x * x));
    }
    CHECK(std::abs(s.mean() - gaussian_abs_moment(0.5, 1.0, 3)) < 4.0 * s.se());
}

TEST_CASE("rng substreams are deterministic and distinct") {
    CHECK(substream_seed(1, 2, 3) == substream_seed(1, 2, 3));
    CHECK(substream_seed(1, 2, 3) != substream_seed(1, 2, 4));
    CHECK(substream_seed(1, 2, 3) != substream_seed(1, 3, 3));
    CHECK(substream_seed(1, 2, 3) != substream_seed(2, 2, 3));
    NormalSampler a(42), b(42);
    for (int i = 0; i < 100; ++i) CHECK(a() == b());
}
