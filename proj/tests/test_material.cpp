#include <catch2/catch_amalgamated.hpp>

#include "plateuc/material.hpp"

using namespace plateuc;

namespace {

LameField constant_lame(double lam, double mu, double h) {
    LameField out;
    out.lambda = [lam](double, double) { return lam; };
    out.mu = [mu](double, double) { return mu; };
    out.thickness = h;
    return out;
}

}  // namespace

TEST_CASE("plate constants for reference moduli") {
    // lambda = mu = 1, h = 1
    PlateConstants pc = derive_plate_constants(constant_lame(1, 1, 1));
    CHECK(pc.poisson(0, 0) == Catch::Approx(0.25).epsilon(1e-15));
    CHECK(pc.youngs(0, 0) == Catch::Approx(2.5).epsilon(1e-15));
    CHECK(pc.bending(0, 0) == Catch::Approx(2.0 / 9.0).epsilon(1e-14));

    // lambda = 0 (Poisson ratio zero)
    PlateConstants pz = derive_plate_constants(constant_lame(0, 1, 1));
    CHECK(pz.poisson(0, 0) == Catch::Approx(0.0).margin(1e-15));
    CHECK(pz.youngs(0, 0) == Catch::Approx(2.0).epsilon(1e-15));
    CHECK(pz.bending(0, 0) == Catch::Approx(1.0 / 6.0).epsilon(1e-14));

    // thin plate: lambda = 1, mu = 2, h = 0.1.
    // Both closed forms give h^3/3 * mu(mu+lambda)/(2mu+lambda) = 1e-3/3 * 6/5 = 4e-4.
    PlateConstants pt = derive_plate_constants(constant_lame(1, 2, 0.1));
    CHECK(pt.bending(0, 0) == Catch::Approx(4e-4).epsilon(1e-13));
}

TEST_CASE("dual bending formulas agree for random admissible moduli") {
    SplitMix64 rng(2026);
    int accepted = 0;
    while (accepted < 100) {
        double lam = -0.5 + 3.5 * rng.uniform();
        double mu = 0.05 + 3.0 * rng.uniform();
        if (!(mu > 0.01) || !(2 * mu + 3 * lam > 0.01)) continue;
        ++accepted;
        double h = 0.2 + rng.uniform();
        PlateConstants pc = derive_plate_constants(constant_lame(lam, mu, h));
        // evaluation itself enforces the 1e-12 dual-formula agreement
        double B = pc.bending(0.3, -0.7);
        CHECK(B > 0);
        double nu = pc.poisson(0, 0);
        CHECK(nu > -1.0);
        CHECK(nu < 0.5);
    }
}

TEST_CASE("derive rejects degenerate input") {
    CHECK_THROWS_AS(derive_plate_constants(LameField{}), invalid_parameter);
    auto bad = constant_lame(1, 1, -1);
    CHECK_THROWS_AS(derive_plate_constants(bad), invalid_parameter);
    // mu + lambda <= 0 is outside the convexity range
    PlateConstants pc = derive_plate_constants(constant_lame(-2, 1, 1));
    CHECK_THROWS_AS(pc.bending(0, 0), numerical_failure);
}

TEST_CASE("stiffness screen flags near-zero nodes") {
    LameField lame;
    // stiffness collapses towards x = 1 by shrinking both moduli
    lame.lambda = [](double x, double) { return 1e-20 + (1 - x) * (1 - x); };
    lame.mu = [](double x, double) { return 1e-20 + (1 - x) * (1 - x); };
    lame.thickness = 1.0;
    PlateConstants pc = derive_plate_constants(lame);
    Grid g(9, 3, 0, 1, 0, 1);
    CHECK_THROWS_AS(validate_stiffness(pc, g), numerical_failure);

    PlateConstants good = derive_plate_constants(constant_lame(1, 1, 1));
    CHECK_NOTHROW(validate_stiffness(good, g));
}

TEST_CASE("strong convexity margins and worst nodes") {
    LameField lame = constant_lame(1, 1, 1);
    lame.alpha0 = 0.5;
    lame.gamma0 = 1.0;
    lame.Lambda0 = 10.0;
    Grid g(17, 17, -1, 1, -1, 1);
    ConvexityReport r = check_strong_convexity(lame, g);
    CHECK(r.ok());
    CHECK(r.shear_margin == Catch::Approx(0.5));
    CHECK(r.bulk_margin == Catch::Approx(4.0));
    CHECK(r.sum_min >= r.sum_lower_bound);

    // implied bound mu+lambda >= min(alpha0, gamma0/2) on a varying field
    LameField vary;
    vary.lambda = [](double x, double) { return 0.2 + 0.1 * x; };
    vary.mu = [](double x, double y) { return 0.8 + 0.05 * x * y; };
    vary.alpha0 = 0.5;
    vary.gamma0 = 1.2;
    vary.Lambda0 = 10.0;
    ConvexityReport rv = check_strong_convexity(vary, g);
    CHECK(rv.convex);
    CHECK(rv.sum_min >= rv.sum_lower_bound);

    LameField bad = constant_lame(-1, 0.4, 1);  // 2mu+3lam = -2.2 < 0
    bad.alpha0 = 0.1;
    bad.gamma0 = 0.5;
    ConvexityReport rb = check_strong_convexity(bad, g);
    CHECK_FALSE(rb.convex);
    CHECK(rb.bulk_margin < 0);
    CHECK(!rb.message.empty());
}

TEST_CASE("regularity surrogate catches oscillatory moduli") {
    LameField rough = constant_lame(1, 1, 1);
    rough.mu = [](double x, double) { return 1.0 + 0.5 * std::sin(40 * x); };
    rough.alpha0 = 0.1;
    rough.gamma0 = 0.1;
    rough.Lambda0 = 10.0;  // second differences reach ~800
    Grid g(65, 65, -1, 1, -1, 1);
    ConvexityReport r = check_strong_convexity(rough, g);
    CHECK(r.convex);
    CHECK_FALSE(r.regular);
}

TEST_CASE("stiffness tensor components and symmetry") {
    PlateConstants pc = derive_plate_constants(constant_lame(1, 1, 1));
    StiffnessTensor c = stiffness_tensor(pc);
    double B = 2.0 / 9.0, nu = 0.25;
    CHECK(c.component(0, 0, 0, 0, 0, 0) == Catch::Approx(B));
    CHECK(c.component(0, 0, 1, 1, 0, 0) == Catch::Approx(B * nu));         // = 1/18
    CHECK(c.component(0, 1, 0, 1, 0, 0) == Catch::Approx(B * (1 - nu)));   // = 1/6
    CHECK(c.component(0, 0, 1, 1, 0, 0) == Catch::Approx(1.0 / 18.0));
    CHECK(c.component(0, 1, 0, 1, 0, 0) == Catch::Approx(1.0 / 6.0));

    // major symmetry c_ijlk = c_lkij at random index combinations
    for (int i = 0; i < 2; ++i)
        for (int j = 0; j < 2; ++j)
            for (int l = 0; l < 2; ++l)
                for (int k = 0; k < 2; ++k)
                    CHECK(c.component(i, j, l, k, 0.2, 0.3) ==
                          Catch::Approx(c.component(l, k, i, j, 0.2, 0.3)).margin(1e-15));
}

TEST_CASE("tensor contraction against componentwise evaluation") {
    SplitMix64 rng(11);
    for (int trial = 0; trial < 10; ++trial) {
        double lam = rng.uniform() * 2;
        double mu = 0.2 + rng.uniform() * 2;
        if (!(2 * mu + 3 * lam > 0.01)) continue;
        PlateConstants pc = derive_plate_constants(constant_lame(lam, mu, 1));
        StiffnessTensor c = stiffness_tensor(pc);
        // H = hessian of x1 x2
        std::array<std::array<double, 2>, 2> H{{{0, 1}, {1, 0}}};
        auto s = c.contract(H, 0.1, 0.2);
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j) {
                double direct = 0;
                for (int l = 0; l < 2; ++l)
                    for (int k = 0; k < 2; ++k)
                        direct += c.component(i, j, l, k, 0.1, 0.2) * H[l][k];
                CHECK(s[i][j] == Catch::Approx(direct).margin(1e-15));
            }
        CHECK(s[0][0] == Catch::Approx(0.0).margin(1e-15));
        CHECK(s[0][1] == Catch::Approx(pc.bending(0, 0) * (1 - pc.poisson(0, 0))));
    }
}

TEST_CASE("expanded coefficients: drift field") {
    Grid sample(9, 9, -0.5, 0.5, -0.5, 0.5);

    // constant stiffness: drift vanishes, second-order coefficients vanish
    PlateConstants flat = derive_plate_constants(constant_lame(1, 1, 1));
    ExpandedCoefficients ec = expanded_coefficients(flat, sample);
    CHECK(ec.drift_x(0.2, 0.1) == Catch::Approx(0.0).margin(1e-9));
    CHECK(ec.drift_y(0.2, 0.1) == Catch::Approx(0.0).margin(1e-9));
    CHECK(ec.coeff_sup < 1e-6);

    // B = exp(x): drift = 2 grad(B)/B = (2, 0)
    PlateConstants expc;
    expc.bending = [](double x, double) { return std::exp(x); };
    expc.poisson = [](double, double) { return 0.25; };
    ExpandedCoefficients ee = expanded_coefficients(expc, sample);
    CHECK(ee.drift_x(0.3, 0.0) == Catch::Approx(2.0).epsilon(1e-8));
    CHECK(ee.drift_y(0.3, 0.0) == Catch::Approx(0.0).margin(1e-9));

    // B = 2/9 + 0.1 x^2 at (0.5, 0): drift_x = 2*0.1/(2/9+0.025)
    PlateConstants quad;
    quad.bending = [](double x, double) { return 2.0 / 9.0 + 0.1 * x * x; };
    quad.poisson = [](double, double) { return 0.25; };
    ExpandedCoefficients eq = expanded_coefficients(quad, sample);
    CHECK(eq.drift_x(0.5, 0.0) == Catch::Approx(0.8089887640449438).epsilon(1e-7));
    // and the diagonal second-order coefficient d2_xx(B)/B = 0.2/B
    CHECK(eq.hessian_coeff[0](0.5, 0.0) == Catch::Approx(0.2 / (2.0 / 9.0 + 0.025)).epsilon(1e-5));
}
