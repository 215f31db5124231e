#include <catch2/catch_amalgamated.hpp>

#include "uavsim/fft.hpp"
#include "uavsim/rng.hpp"

using namespace uavsim;

TEST_CASE("counter rng is reproducible and counter-based") {
    CounterRng a(42), b(42);
    for (int i = 0; i < 1000; ++i) REQUIRE(a.next_u64() == b.next_u64());

    CounterRng c(43);
    bool all_equal = true;
    CounterRng a2(42);
    for (int i = 0; i < 64; ++i)
        if (a2.next_u64() != c.next_u64()) all_equal = false;
    REQUIRE_FALSE(all_equal);
}

TEST_CASE("uniform moments") {
    CounterRng rng(7);
    const int n = 200000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double u = rng.uniform();
        REQUIRE(u >= 0.0);
        REQUIRE(u < 1.0);
        sum += u;
        sum2 += u * u;
    }
    REQUIRE(sum / n == Catch::Approx(0.5).margin(0.005));
    REQUIRE(sum2 / n == Catch::Approx(1.0 / 3.0).margin(0.005));
}

TEST_CASE("gaussian moments and complex power") {
    CounterRng rng(11);
    const int n = 400000;
    double sum = 0.0, sum2 = 0.0;
    for (int i = 0; i < n; ++i) {
        const double g = rng.gaussian();
        sum += g;
        sum2 += g * g;
    }
    REQUIRE(sum / n == Catch::Approx(0.0).margin(0.01));
    REQUIRE(sum2 / n == Catch::Approx(1.0).margin(0.01));

    double power = 0.0;
    const double target = 3.5e-3;
    for (int i = 0; i < n; ++i) power += std::norm(rng.complex_gaussian(target));
    REQUIRE(power / n == Catch::Approx(target).epsilon(0.01));
}

TEST_CASE("poisson mean matches intensity") {
    CounterRng rng(5);
    const int n = 100000;
    long total = 0;
    for (int i = 0; i < n; ++i) total += rng.poisson(3.0);
    const double mean = static_cast<double>(total) / n;
    REQUIRE(mean > 2.95);
    REQUIRE(mean < 3.05);
}

TEST_CASE("fft recovers a pure tone") {
    const std::size_t n = 128;
    const int bin = 9;
    std::vector<cplx> x(n);
    for (std::size_t i = 0; i < n; ++i)
        x[i] = std::polar(1.0, 2.0 * kPi * bin * static_cast<double>(i) / n);
    auto spec = fft(x);
    std::size_t peak = 0;
    for (std::size_t i = 1; i < n; ++i)
        if (std::abs(spec[i]) > std::abs(spec[peak])) peak = i;
    REQUIRE(peak == static_cast<std::size_t>(bin));
    REQUIRE(std::abs(spec[peak]) == Catch::Approx(static_cast<double>(n)));
}

TEST_CASE("fft inverse round-trips") {
    CounterRng rng(3);
    std::vector<cplx> x(64);
    for (auto& v : x) v = {rng.gaussian(), rng.gaussian()};
    const auto y = fft(fft(x), true);
    for (std::size_t i = 0; i < x.size(); ++i) {
        REQUIRE(y[i].real() == Catch::Approx(x[i].real()).margin(1e-10));
        REQUIRE(y[i].imag() == Catch::Approx(x[i].imag()).margin(1e-10));
    }
}

TEST_CASE("fft parseval") {
    CounterRng rng(9);
    std::vector<cplx> x(256);
    for (auto& v : x) v = {rng.gaussian(), rng.gaussian()};
    double te = 0.0;
    for (const auto& v : x) te += std::norm(v);
    const auto spec = fft(x);
    double fe = 0.0;
    for (const auto& v : spec) fe += std::norm(v);
    REQUIRE(fe / x.size() == Catch::Approx(te).epsilon(1e-12));
}

TEST_CASE("fft rejects non-power-of-two") {
    std::vector<cplx> x(100);
    REQUIRE_THROWS_AS(fft_inplace(x), InputError);
}
