#include <catch2/catch_amalgamated.hpp>
#include <cstdio>

#include "plateuc/grid.hpp"

using namespace plateuc;

TEST_CASE("grid indexing and spacing") {
    Grid g(5, 3, -1, 1, 0, 1);
    CHECK(g.hx() == Catch::Approx(0.5));
    CHECK(g.hy() == Catch::Approx(0.5));
    CHECK(g.x(2) == Catch::Approx(0.0));
    CHECK(g.y(2) == Catch::Approx(1.0));
    CHECK(g.index(4, 2) == g.size() - 1);
    CHECK_THROWS_AS(Grid(1, 3, 0, 1, 0, 1), invalid_parameter);
}

TEST_CASE("bilinear and bicubic reproduce polynomials") {
    Grid g(17, 17, -1, 1, -1, 1);
    GridField lin = GridField::sample(g, [](double x, double y) { return 2 * x - 3 * y + 1; });
    CHECK(lin.bilinear(0.13, -0.41) == Catch::Approx(2 * 0.13 + 3 * 0.41 + 1).epsilon(1e-13));
    CHECK(lin.bicubic(0.13, -0.41) == Catch::Approx(2 * 0.13 + 3 * 0.41 + 1).epsilon(1e-13));

    GridField cub = GridField::sample(g, [](double x, double y) { return x * x * x - x * y * y; });
    double exact = 0.37 * 0.37 * 0.37 - 0.37 * 0.62 * 0.62;
    CHECK(cub.bicubic(0.37, 0.62) == Catch::Approx(exact).margin(1e-13));
}

TEST_CASE("bicubic converges at fourth order") {
    auto f = [](double x, double y) { return std::sin(3 * x) * std::cos(2 * y); };
    double err[2];
    int idx = 0;
    for (int n : {33, 65}) {
        Grid g(n, n, -1, 1, -1, 1);
        GridField s = GridField::sample(g, f);
        double e = 0;
        for (int k = 0; k < 200; ++k) {
            double x = -0.9 + 1.8 * k / 199.0, y = 0.77 * x - 0.1;
            e = std::max(e, std::abs(s.bicubic(x, y) - f(x, y)));
        }
        err[idx++] = e;
    }
    double order = std::log2(err[0] / err[1]);
    CHECK(order > 3.5);
}

TEST_CASE("interpolation outside the hull is an error") {
    Grid g(9, 9, 0, 1, 0, 1);
    GridField s = GridField::sample(g, [](double, double) { return 1.0; });
    CHECK_THROWS_AS(s.bilinear(1.5, 0.5), numerical_failure);
    CHECK_THROWS_AS(s.bicubic(0.5, -0.2), numerical_failure);
}

TEST_CASE("field file round trip, text and binary") {
    Grid g(7, 5, -1, 1, 0, 2);
    GridField f = GridField::sample(g, [](double x, double y) { return std::exp(x) * y + 1.0 / 3.0; });
    f.mask.assign(g.size(), 0);
    for (std::size_t k = 0; k < g.size(); k += 2) f.mask[k] = 1;

    for (bool binary : {false, true}) {
        std::string path = binary ? "roundtrip_b.field" : "roundtrip_t.field";
        write_field(path, f, binary);
        GridField r = read_field(path);
        REQUIRE(r.grid == f.grid);
        REQUIRE(r.mask.size() == f.mask.size());
        for (std::size_t k = 0; k < f.v.size(); ++k) {
            CHECK(r.v[k] == f.v[k]);  // %.17g and binary are both exact
            CHECK(r.mask[k] == f.mask[k]);
        }
        std::remove(path.c_str());
    }
}

TEST_CASE("field reader rejects junk") {
    {
        std::ofstream out("bad.field");
        out << "not-a-field 3\n1 2\n";
    }
    CHECK_THROWS_AS(read_field("bad.field"), numerical_failure);
    CHECK_THROWS_AS(read_field("missing_file.field"), numerical_failure);
    std::remove("bad.field");
}
