#include <catch2/catch_amalgamated.hpp>

#include "plateuc/fd.hpp"
#include "plateuc/logsum.hpp"

using namespace plateuc;

TEST_CASE("fornberg weights reproduce classic stencils") {
    auto d2 = uniform_fd_weights(2, -1, 1);
    CHECK(d2[0] == Catch::Approx(1.0));
    CHECK(d2[1] == Catch::Approx(-2.0));
    CHECK(d2[2] == Catch::Approx(1.0));

    auto d1_onesided = uniform_fd_weights(1, 0, 2);
    CHECK(d1_onesided[0] == Catch::Approx(-1.5));
    CHECK(d1_onesided[1] == Catch::Approx(2.0));
    CHECK(d1_onesided[2] == Catch::Approx(-0.5));

    auto d2_onesided = uniform_fd_weights(2, 0, 3);
    CHECK(d2_onesided[0] == Catch::Approx(2.0));
    CHECK(d2_onesided[1] == Catch::Approx(-5.0));
    CHECK(d2_onesided[2] == Catch::Approx(4.0));
    CHECK(d2_onesided[3] == Catch::Approx(-1.0));

    // 6th order first derivative: (-1, 9, -45, 0, 45, -9, 1)/60
    auto d1_6 = uniform_fd_weights(1, -3, 3);
    CHECK(d1_6[0] == Catch::Approx(-1.0 / 60));
    CHECK(d1_6[2] == Catch::Approx(-45.0 / 60));
    CHECK(d1_6[3] == Catch::Approx(0.0).margin(1e-14));

    // 6th order second derivative center: -490/180
    auto d2_6 = uniform_fd_weights(2, -3, 3);
    CHECK(d2_6[3] == Catch::Approx(-490.0 / 180));
}

TEST_CASE("field derivatives hit their formal order") {
    auto f = [](double x, double y) { return std::sin(2 * x) * std::exp(y); };
    auto fx = [](double x, double y) { return 2 * std::cos(2 * x) * std::exp(y); };
    auto fyy = [](double x, double y) { return std::sin(2 * x) * std::exp(y); };

    double e2[2], e6[2];
    int idx = 0;
    for (int n : {33, 65}) {
        Grid g(n, n, -1, 1, -1, 1);
        GridField s = GridField::sample(g, f);
        GridField dx = deriv(s, 0, 1, 2), dy2 = deriv(s, 1, 2, 6);
        double a = 0, b = 0;
        for (int j = 0; j < n; ++j)
            for (int i = 0; i < n; ++i) {
                a = std::max(a, std::abs(dx.at(i, j) - fx(g.x(i), g.y(j))));
                b = std::max(b, std::abs(dy2.at(i, j) - fyy(g.x(i), g.y(j))));
            }
        e2[idx] = a;
        e6[idx] = b;
        ++idx;
    }
    CHECK(std::log2(e2[0] / e2[1]) > 1.7);
    CHECK(std::log2(e6[0] / e6[1]) > 4.5);  // one-sided edge windows dominate
}

TEST_CASE("13 point bilaplacian is exact on biharmonic quartics") {
    Grid g(33, 33, -1, 1, -1, 1);
    // x^4 - 3 x^2 y^2 and x^3 y are biharmonic up to constants: check exact values
    GridField q = GridField::sample(g, [](double x, double y) { return x * x * x * x + y * y * y * y; });
    // bilap(x^4 + y^4) = 24 + 24 = 48
    CHECK(biharmonic_13pt(q, 16, 16) == Catch::Approx(48.0).epsilon(1e-9));
    GridField h = GridField::sample(g, [](double x, double y) { return 2 * x * y; });
    CHECK(biharmonic_13pt(h, 10, 20) == Catch::Approx(0.0).margin(1e-10));
}

TEST_CASE("log accumulator matches direct sums and survives huge exponents") {
    LogAccumulator acc;
    double direct = 0;
    SplitMix64 rng(7);
    std::vector<double> logs;
    for (int k = 0; k < 1000; ++k) {
        double L = 40 * rng.symmetric();
        logs.push_back(L);
        direct += std::exp(L);
    }
    for (double L : logs) acc.add_log(L);
    CHECK(acc.log() == Catch::Approx(std::log(direct)).epsilon(1e-13));

    LogAccumulator big;
    big.add_log(900.0);
    big.add_log(901.0);
    // exp(900) overflows double, but the log-domain sum is exact
    CHECK(big.log() == Catch::Approx(901.0 + std::log1p(std::exp(-1.0))).epsilon(1e-14));
    CHECK(std::isinf(big.value()));

    LogAccumulator empty;
    CHECK(empty.empty());
    CHECK(std::isinf(empty.log()));
    CHECK(empty.log() < 0);
}

TEST_CASE("log_add agrees with direct addition") {
    CHECK(log_add(std::log(3.0), std::log(4.0)) == Catch::Approx(std::log(7.0)).epsilon(1e-14));
}
