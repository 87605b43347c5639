#include <catch2/catch_amalgamated.hpp>

#include "plateuc/geometry.hpp"

using namespace plateuc;

namespace {

BoundaryProfile profile_of(Func1D g, double r0 = 1.0, double M0 = 1.0) {
    BoundaryProfile p;
    p.g = std::move(g);
    p.radius = r0;
    p.shape_bound = M0;
    p.holder = 0.5;
    return p;
}

const ScalarFunc one = [](double, double) { return 1.0; };

}  // namespace

TEST_CASE("profile validation") {
    CHECK_NOTHROW(profile_of([](double) { return 0.0; }).validate());
    CHECK_NOTHROW(profile_of([](double t) { return 0.05 * t * t; }).validate());
    CHECK_THROWS_AS(profile_of([](double) { return 0.2; }).validate(), invalid_parameter);
    CHECK_THROWS_AS(profile_of([](double t) { return 0.5 * t; }).validate(), invalid_parameter);
    // wild profile violates the scaled norm bound
    CHECK_THROWS_AS(profile_of([](double t) { return 0.3 * std::sin(25 * t) * t * t; }).validate(),
                    invalid_parameter);
}

TEST_CASE("domain area for reference profiles") {
    // flat: (-1,1) x (0,2) has area 4
    DomainChart flat = build_domain(profile_of([](double) { return 0.0; }));
    CHECK(domain_area(flat, 1.0 / 128) == Catch::Approx(4.0).epsilon(2e-3));

    // zero-mean bump keeps area 4: integral of t^4 - 3t^2/5 over (-1,1) is 0
    DomainChart bump = build_domain(
        profile_of([](double t) { return 0.01 * (std::pow(t, 4) - 0.6 * t * t); }));
    CHECK(domain_area(bump, 1.0 / 128) == Catch::Approx(4.0).epsilon(2e-3));

    // parabola: 4 - integral of 0.05 t^2 = 4 - 1/30
    DomainChart par = build_domain(profile_of([](double t) { return 0.05 * t * t; }));
    CHECK(domain_area(par, 1.0 / 128) == Catch::Approx(4.0 - 1.0 / 30.0).epsilon(2e-3));
}

TEST_CASE("domain membership") {
    DomainChart par = build_domain(profile_of([](double t) { return 0.05 * t * t; }));
    CHECK(par.inside(0.0, 0.5));
    CHECK(par.inside(0.5, 0.10));
    CHECK_FALSE(par.inside(0.5, 0.01));   // below the graph
    CHECK_FALSE(par.inside(1.5, 0.5));    // outside the window
    CHECK_FALSE(par.inside(0.0, 2.5));    // above the box
}

TEST_CASE("masses of closed-form fields over half discs") {
    DomainChart flat = build_domain(profile_of([](double) { return 0.0; }));
    Quadrature q{1.0 / 256, 8};

    // 1 over the unit upper half disc: area pi/2
    Region half = Region::upper_half_disc(0, 0, 1, &flat);
    CHECK(region_mass(one, half, q).value == Catch::Approx(pi / 2).epsilon(2e-3));

    // x2 over half discs: pi r^4 / 8
    ScalarFunc height = [](double, double y) { return y; };
    for (double r : {0.5, 0.8}) {
        Region hr = Region::upper_half_disc(0, 0, r, &flat);
        CHECK(region_mass(height, hr, q).value ==
              Catch::Approx(pi * std::pow(r, 4) / 8).epsilon(5e-3));
    }

    // 2 x1 x2 over half discs: pi r^6 / 12
    ScalarFunc saddle = [](double x, double y) { return 2 * x * y; };
    for (double r : {0.5, 0.8}) {
        Region hr = Region::upper_half_disc(0, 0, r, &flat);
        CHECK(region_mass(saddle, hr, q).value ==
              Catch::Approx(pi * std::pow(r, 6) / 12).epsilon(5e-3));
    }
}

TEST_CASE("mass is monotone in the radius") {
    DomainChart par = build_domain(profile_of([](double t) { return 0.05 * t * t; }));
    ScalarFunc f = [](double x, double y) { return 1.0 + x + y * y; };
    Quadrature q{1.0 / 64, 8};
    double prev = 0.0;
    for (double r = 0.1; r < 1.01; r += 0.1) {
        Region reg = Region::disc(0, 0.4, r, &par);
        double m = region_mass(f, reg, q).value;
        CHECK(m >= prev);
        prev = m;
    }
}

TEST_CASE("quadrature converges on curved cut regions") {
    // area of the parabolic domain: refine the lattice, fit the order
    BoundaryProfile p = profile_of([](double t) { return 0.05 * t * t; });
    DomainChart dom = build_domain(p);
    double exact = 4.0 - 1.0 / 30.0;
    std::vector<double> errs;
    for (double cell : {1.0 / 32, 1.0 / 64, 1.0 / 128, 1.0 / 256}) {
        errs.push_back(std::abs(domain_area(dom, cell) - exact));
    }
    // least squares slope of log(err) vs log(h)
    double sx = 0, sy = 0, sxx = 0, sxy = 0;
    int n = 0;
    for (std::size_t k = 0; k < errs.size(); ++k) {
        if (errs[k] <= 0) continue;
        double lx = std::log(1.0 / (32 << k)), ly = std::log(errs[k]);
        sx += lx; sy += ly; sxx += lx * lx; sxy += lx * ly;
        ++n;
    }
    double slope = (n * sxy - sx * sy) / (n * sxx - sx * sx);
    CHECK(slope > 1.5);

    // half-disc mass of x2 under refinement as well
    ScalarFunc height = [](double, double y) { return y; };
    Region hr = Region::upper_half_disc(0, 0, 0.8, &dom);
    double ref = region_mass(height, hr, Quadrature{1.0 / 512, 8}).value;
    double e1 = std::abs(region_mass(height, hr, Quadrature{1.0 / 64, 8}).value - ref);
    double e2 = std::abs(region_mass(height, hr, Quadrature{1.0 / 256, 8}).value - ref);
    CHECK(e2 < e1);
}

TEST_CASE("empty intersections are flagged, not fatal") {
    DomainChart flat = build_domain(profile_of([](double) { return 0.0; }));
    Region below = Region::disc(0, -1.5, 0.2, &flat);  // entirely below the boundary
    MassResult m = region_mass(one, below, Quadrature{1.0 / 64, 8});
    CHECK(m.empty);
    CHECK(m.value == 0.0);
}

TEST_CASE("quadrature parameter validation") {
    Region r = Region::disc(0, 0, 1);
    CHECK_THROWS_AS(region_mass(one, r, Quadrature{-0.1, 8}), invalid_parameter);
    CHECK_THROWS_AS(region_mass(one, r, Quadrature{0.1, 0}), invalid_parameter);
}

TEST_CASE("boundary samples trace the graph") {
    BoundaryProfile p = profile_of([](double t) { return 0.05 * t * t; });
    DomainChart dom = build_domain(p);
    auto pts = dom.boundary_samples(33);
    REQUIRE(pts.size() == 33);
    CHECK(pts.front()[0] == Catch::Approx(-1.0));
    CHECK(pts.back()[0] == Catch::Approx(1.0));
    for (const auto& q : pts) CHECK(q[1] == Catch::Approx(0.05 * q[0] * q[0]).margin(1e-14));
}
