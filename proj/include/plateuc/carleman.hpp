#pragma once

// Weighted a-priori inequality check around a boundary point.  The weight is
// ρ(x) = φ(|x|) with φ(s) = s/(1+√s)², comparable to the distance itself but
// with the curvature the estimate needs near the origin.  For compactly
// supported test functions U the two weighted groups
//
//   G₁ = τ⁴r²∫ρ^{−2−2τ}U²,
//   G₂ = Σ_{k=0}^{3} τ^{6−2k}∫ρ^{2k+1−2τ}|D^kU|²
//
// are compared against ∫ρ^{8−2τ}(Δ²U)².  The empirical constant of a sweep is
// the largest observed ratio (G₁+G₂)/RHS — a lower bound for any constant the
// inequality could hold with, never an upper one.
//
// ρ^{−2τ} spans hundreds of orders of magnitude across the annulus, so every
// integral is accumulated in the log domain: terms enter as
// exponent·log ρ + log(integrand) and are combined by a shifted compensated
// exponential sum.

#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <utility>
#include <vector>

#include "plateuc/fd.hpp"
#include "plateuc/grid.hpp"

namespace plateuc {

struct CarlemanWeight {
    static double phi(double s) {
        double q = 1.0 + std::sqrt(s);
        return s / (q * q);
    }
    double operator()(double x, double y) const { return phi(std::hypot(x, y)); }
};

struct TestFunctionSpec {
    double r_in = 0.3, r_out = 0.7;   // support annulus radii
    std::string profile = "bump";     // "bump", "polybump", or "null"
    std::uint64_t seed = 1;
};

// Radial annular profile times a low-order trigonometric factor with seeded
// coefficients.  "bump" is the C-infinity exponential cutoff, "polybump" a
// polynomial one with five continuous derivatives, "null" the zero field.
// Everything outside the annulus is exactly zero by construction.
inline GridField make_test_function(const TestFunctionSpec& spec, int n) {
    if (n < 8) throw invalid_parameter("test function grid too small");
    Grid g(n, n, -1.0, 1.0, -1.0, 1.0);
    if (spec.profile == "null") return GridField(g);
    if (spec.profile != "bump" && spec.profile != "polybump")
        throw invalid_parameter("unknown test function profile: " + spec.profile);
    if (!(0.0 < spec.r_in && spec.r_in < spec.r_out && spec.r_out < 1.0))
        throw invalid_parameter("test function annulus must satisfy 0 < r_in < r_out < 1");

    SplitMix64 rng(spec.seed);
    std::array<double, 3> ac, as;
    for (int m = 0; m < 3; ++m) {
        ac[m] = 0.3 * rng.symmetric();
        as[m] = 0.3 * rng.symmetric();
    }
    bool smooth = spec.profile == "bump";
    double lo = spec.r_in, wdt = spec.r_out - spec.r_in;

    GridField U(g);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            double x = g.x(i), y = g.y(j);
            double t = (std::hypot(x, y) - lo) / wdt;
            if (t <= 0.0 || t >= 1.0) continue;
            double radial = smooth ? std::exp(4.0 - 1.0 / (t * (1.0 - t)))
                                   : std::pow(t * (1.0 - t), 6) * 4096.0;
            double theta = std::atan2(y, x), ang = 1.0;
            for (int m = 0; m < 3; ++m)
                ang += ac[m] * std::cos((m + 1) * theta) + as[m] * std::sin((m + 1) * theta);
            U.at(i, j) = radial * ang;
        }
    return U;
}

namespace detail {

// log(Σ hₓh_y · e^{p·logρ + logW}) with a shifted compensated sum; −inf for an
// empty sum, +inf when a positive integrand sits at ρ = 0 with p < 0.
inline double log_weighted_sum(const std::vector<double>& log_w,
                               const std::vector<double>& log_rho, double p,
                               double log_cell) {
    double m = -std::numeric_limits<double>::infinity();
    for (std::size_t n = 0; n < log_w.size(); ++n) {
        if (log_w[n] == -std::numeric_limits<double>::infinity()) continue;
        double l = p * log_rho[n] + log_w[n];
        if (std::isnan(l) || l == std::numeric_limits<double>::infinity()) return l;
        m = std::max(m, l);
    }
    if (m == -std::numeric_limits<double>::infinity()) return m;
    double sum = 0.0, comp = 0.0;
    for (std::size_t n = 0; n < log_w.size(); ++n) {
        if (log_w[n] == -std::numeric_limits<double>::infinity()) continue;
        double term = std::exp(p * log_rho[n] + log_w[n] - m);
        double t = sum + term;
        comp += std::abs(sum) >= std::abs(term) ? (sum - t) + term : (term - t) + sum;
        sum = t;
    }
    return m + std::log(sum + comp) + log_cell;
}

inline double log_sum_exp(double a, double b) {
    if (a == -std::numeric_limits<double>::infinity()) return b;
    if (b == -std::numeric_limits<double>::infinity()) return a;
    double m = std::max(a, b);
    return m + std::log(std::exp(a - m) + std::exp(b - m));
}

}  // namespace detail

// Log-domain images of the derivative stack |D^kU|², k = 0..3, and (Δ²U)²,
// all through 6th-order centered stencils, precomputed once per test function
// so a (τ, r) sweep reuses them.
struct DerivativeStack {
    Grid grid;
    std::array<std::vector<double>, 4> log_dk;
    std::vector<double> log_rhs;
    std::vector<double> log_rho;
    double log_cell = 0.0;
};

inline DerivativeStack derivative_stack(const GridField& U) {
    const Grid& g = U.grid;
    GridField ux = deriv(U, 0, 1, 6), uy = deriv(U, 1, 1, 6);
    GridField uxx = deriv(U, 0, 2, 6), uyy = deriv(U, 1, 2, 6), uxy = deriv(ux, 1, 1, 6);
    GridField uxxx = deriv(uxx, 0, 1, 6), uxxy = deriv(uxx, 1, 1, 6);
    GridField uxyy = deriv(uyy, 0, 1, 6), uyyy = deriv(uyy, 1, 1, 6);
    GridField bilap = laplacian(laplacian(U, 6), 6);

    DerivativeStack s;
    s.grid = g;
    s.log_cell = std::log(g.hx()) + std::log(g.hy());
    std::size_t nn = U.v.size();
    for (auto& lv : s.log_dk) lv.resize(nn);
    s.log_rhs.resize(nn);
    s.log_rho.resize(nn);

    CarlemanWeight w;
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            std::size_t n = g.index(i, j);
            double d0 = U.v[n] * U.v[n];
            double d1 = ux.v[n] * ux.v[n] + uy.v[n] * uy.v[n];
            double d2 = uxx.v[n] * uxx.v[n] + 2.0 * uxy.v[n] * uxy.v[n] +
                        uyy.v[n] * uyy.v[n];
            double d3 = uxxx.v[n] * uxxx.v[n] + 3.0 * uxxy.v[n] * uxxy.v[n] +
                        3.0 * uxyy.v[n] * uxyy.v[n] + uyyy.v[n] * uyyy.v[n];
            s.log_dk[0][n] = std::log(d0);
            s.log_dk[1][n] = std::log(d1);
            s.log_dk[2][n] = std::log(d2);
            s.log_dk[3][n] = std::log(d3);
            s.log_rhs[n] = std::log(bilap.v[n] * bilap.v[n]);
            s.log_rho[n] = std::log(w(g.x(i), g.y(j)));
        }
    return s;
}

struct EstimateCell {
    std::string fn;              // test function identifier
    double tau = 0, r = 0;
    double group1 = 0, group2 = 0, rhs = 0, ratio = 0;
    double log_group1 = 0, log_group2 = 0, log_rhs = 0;
    bool finite = false;         // ratio is well defined
    bool zero = false;           // both sides vanish identically
};

inline EstimateCell evaluate_estimate(const DerivativeStack& s, double tau, double r,
                                      const std::string& id = "") {
    if (!(tau >= 1.0)) throw invalid_parameter("estimate needs tau >= 1");
    if (!(r > 0.0 && r < 1.0)) throw invalid_parameter("estimate needs 0 < r < 1");
    const double ninf = -std::numeric_limits<double>::infinity();

    EstimateCell c;
    c.fn = id;
    c.tau = tau;
    c.r = r;

    double li0 = detail::log_weighted_sum(s.log_dk[0], s.log_rho, -2.0 - 2.0 * tau,
                                          s.log_cell);
    c.log_group1 = li0 == ninf ? ninf : 4.0 * std::log(tau) + 2.0 * std::log(r) + li0;
    c.group1 = li0 == ninf ? 0.0 : tau * tau * tau * tau * (r * r) * std::exp(li0);

    c.log_group2 = ninf;
    double g2 = 0.0;
    for (int k = 0; k <= 3; ++k) {
        double lik = detail::log_weighted_sum(s.log_dk[k], s.log_rho,
                                              2.0 * k + 1.0 - 2.0 * tau, s.log_cell);
        if (lik == ninf) continue;
        double lt = (6.0 - 2.0 * k) * std::log(tau) + lik;
        c.log_group2 = detail::log_sum_exp(c.log_group2, lt);
        g2 += std::pow(tau, 6 - 2 * k) * std::exp(lik);
    }
    c.group2 = g2;

    c.log_rhs = detail::log_weighted_sum(s.log_rhs, s.log_rho, 8.0 - 2.0 * tau, s.log_cell);
    c.rhs = c.log_rhs == ninf ? 0.0 : std::exp(c.log_rhs);

    double log_lhs = detail::log_sum_exp(c.log_group1, c.log_group2);
    c.zero = log_lhs == ninf && c.log_rhs == ninf;
    if (!c.zero && std::isfinite(log_lhs) && std::isfinite(c.log_rhs)) {
        c.ratio = std::exp(log_lhs - c.log_rhs);
        c.finite = std::isfinite(c.ratio);
    }
    return c;
}

inline EstimateCell evaluate_estimate(const GridField& U, double tau, double r,
                                      const std::string& id = "") {
    return evaluate_estimate(derivative_stack(U), tau, r, id);
}

struct CarlemanSweep {
    std::vector<EstimateCell> cells;
    double c_emp = 0.0;          // largest finite ratio — a lower bound for C
    std::size_t argmax = 0;
};

inline CarlemanSweep sweep(const std::vector<std::pair<std::string, GridField>>& family,
                           const std::vector<double>& taus, const std::vector<double>& rs) {
    if (family.empty()) throw invalid_parameter("sweep needs a nonempty family");
    CarlemanSweep sw;
    bool any = false;
    for (const auto& [id, U] : family) {
        DerivativeStack s = derivative_stack(U);
        for (double tau : taus)
            for (double r : rs) {
                EstimateCell c = evaluate_estimate(s, tau, r, id);
                if (c.finite && (!any || c.ratio > sw.c_emp)) {
                    sw.c_emp = c.ratio;
                    sw.argmax = sw.cells.size();
                    any = true;
                }
                sw.cells.push_back(std::move(c));
            }
    }
    if (!any) throw numerical_failure("no sweep cell produced a finite ratio");
    return sw;
}

inline void write_sweep_csv(const CarlemanSweep& sw, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_parameter("cannot open sweep output: " + path);
    out << "function,tau,r,lhs_group1,lhs_group2,rhs,ratio\n";
    char line[512];
    for (const auto& c : sw.cells) {
        std::snprintf(line, sizeof line, "%s,%.17g,%.17g,%.17g,%.17g,%.17g,%.17g\n",
                      c.fn.c_str(), c.tau, c.r, c.group1, c.group2, c.rhs,
                      c.finite ? c.ratio : std::numeric_limits<double>::quiet_NaN());
        out << line;
    }
}

}  // namespace plateuc
