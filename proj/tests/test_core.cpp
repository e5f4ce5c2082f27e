#include <catch2/catch_amalgamated.hpp>

#include "mpcad/core.hpp"

using namespace mpcad;

TEST_CASE("round_half_up rounds halves toward positive infinity") {
    CHECK(round_half_up(0.5) == 1);
    CHECK(round_half_up(1.5) == 2);
    CHECK(round_half_up(2.4999) == 2);
    CHECK(round_half_up(-0.5) == 0);
    CHECK(round_half_up(-1.5) == -1);
    CHECK(round_half_up_i64(2147483648.5) == 2147483649LL);
}

TEST_CASE("vector arithmetic") {
    Vec3 a{1, 2, 3}, b{4, 5, 6};
    CHECK((a + b) == Vec3{5, 7, 9});
    CHECK((b - a) == Vec3{3, 3, 3});
    CHECK((a * 2.0) == Vec3{2, 4, 6});
    CHECK(dot(a, b) == 32.0);
    CHECK(norm(Vec3{3, 4, 0}) == 5.0);
}

TEST_CASE("rng streams are reproducible and seed-sensitive") {
    Rng a(42), b(42), c(43);
    for (int i = 0; i < 100; ++i) {
        double va = a.uniform();
        CHECK(va == b.uniform());
        CHECK(va >= 0.0);
        CHECK(va < 1.0);
    }
    bool differs = false;
    Rng a2(42);
    for (int i = 0; i < 10; ++i) differs |= a2.uniform() != c.uniform();
    CHECK(differs);
}

TEST_CASE("rng uniform_int covers inclusive bounds") {
    Rng rng(7);
    bool lo = false, hi = false;
    for (int i = 0; i < 1000; ++i) {
        int v = rng.uniform_int(2, 5);
        REQUIRE(v >= 2);
        REQUIRE(v <= 5);
        lo |= v == 2;
        hi |= v == 5;
    }
    CHECK(lo);
    CHECK(hi);
}

TEST_CASE("rng gaussian moments are plausible") {
    Rng rng(11);
    double sum = 0, sq = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) {
        double v = rng.gaussian(10.0, 2.0);
        sum += v;
        sq += v * v;
    }
    double mean = sum / n;
    double var = sq / n - mean * mean;
    CHECK(std::abs(mean - 10.0) < 0.1);
    CHECK(std::abs(var - 4.0) < 0.2);
}

TEST_CASE("error types carry their context") {
    io_error io("truncated", 17);
    CHECK(io.offset() == 17);
    CHECK(std::string(io.what()).find("byte offset 17") != std::string::npos);
    config_error cfg("detect.threshold", "expected a number");
    CHECK(cfg.key() == "detect.threshold");
    CHECK(std::string(cfg.what()).find("detect.threshold") != std::string::npos);
}

TEST_CASE("logistic midpoint and symmetry") {
    CHECK(logistic(0.0) == 0.5);
    CHECK(logistic(3.0) + logistic(-3.0) == Catch::Approx(1.0).epsilon(1e-12));
}
