#pragma once

// Boundary doubling measurements.  Masses m(s) = integral of u^2 over the
// disc of radius s around a boundary point (clipped to the domain), the
// frequency quotient m(r0)/m(r0/C), a least-squares vanishing exponent from
// the inner radii, the quasi-doubling inequality evaluated over a tau grid in
// the log domain, and the two-term balancing step that turns a feasible
// inequality into an explicit doubling bound m(2r) <= const * m(r).

#include <algorithm>
#include <array>
#include <cmath>
#include <fstream>
#include <limits>
#include <string>
#include <vector>

#include "plateuc/geometry.hpp"
#include "plateuc/grid.hpp"
#include "plateuc/logsum.hpp"

namespace plateuc {

struct FrequencyResult {
    double value = 1.0;
    double numerator = 0.0, denominator = 0.0;
    double r0 = 0.0, ratio = 4.0;
    bool infinite = false;  // denominator mass vanished
};

struct DoublingReport {
    std::array<double, 2> center{0.0, 0.0};
    std::vector<double> radii;      // ascending
    std::vector<double> masses;
    std::vector<double> log_slope;  // divided differences of log m vs log s
    double declared_ratio = 4.0;
    FrequencyResult freq;           // measured at r0 = radii.back()
    double kappa = std::numeric_limits<double>::quiet_NaN();
    std::size_t fit_count = 0;      // leading radii entering the exponent fit
    double doubling_sup = std::numeric_limits<double>::quiet_NaN();
    std::vector<double> pair_constants;  // row-major; D(s_i, s_j) for i > j
    bool degenerate = false;        // vanishing mass among the fit radii
};

namespace detail {

inline void check_disc_window(const DomainChart& chart, const std::array<double, 2>& P,
                              double s) {
    if (!(s > 0)) throw invalid_parameter("disc radius must be positive");
    const auto& rect = chart.bounding_rect();
    if (P[0] - s < rect[0] || P[0] + s > rect[1])
        throw invalid_parameter("disc of radius " + std::to_string(s) +
                                " leaves the chart window horizontally");
    double gmin = std::numeric_limits<double>::infinity();
    for (int k = 0; k <= 32; ++k) {
        double t = P[0] - s + 2.0 * s * k / 32.0;
        t = std::min(std::max(t, rect[0]), rect[1]);
        gmin = std::min(gmin, chart.profile.g(t));
    }
    if (P[1] + s - gmin > rect[3])
        throw invalid_parameter("disc of radius " + std::to_string(s) +
                                " rises above the chart window");
}

inline void check_boundary_center(const DomainChart& chart, const std::array<double, 2>& P) {
    double gap = std::abs(P[1] - chart.profile.g(P[0]));
    if (gap > 1e-6 * std::max(1.0, chart.profile.radius))
        throw invalid_parameter("measurement center must lie on the boundary graph; offset " +
                                std::to_string(gap));
}

// slope of the least-squares line through (x, y)
inline double lsq_slope(const std::vector<double>& x, const std::vector<double>& y) {
    double xb = 0, yb = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        xb += x[i];
        yb += y[i];
    }
    xb /= x.size();
    yb /= y.size();
    double num = 0, den = 0;
    for (std::size_t i = 0; i < x.size(); ++i) {
        num += (x[i] - xb) * (y[i] - yb);
        den += (x[i] - xb) * (x[i] - xb);
    }
    return num / den;
}

}  // namespace detail

inline std::vector<double> disc_masses(const ScalarFunc& u, const DomainChart& chart,
                                       const std::array<double, 2>& P,
                                       const std::vector<double>& radii,
                                       const Quadrature& quad = {}) {
    if (radii.empty()) throw invalid_parameter("no measurement radii");
    for (std::size_t i = 0; i + 1 < radii.size(); ++i)
        if (!(radii[i] < radii[i + 1]))
            throw invalid_parameter("radii must be strictly increasing");
    detail::check_disc_window(chart, P, radii.back());
    std::vector<double> out;
    out.reserve(radii.size());
    for (double s : radii)
        out.push_back(region_mass(u, Region::disc(P[0], P[1], s, &chart), quad).value);
    return out;
}

inline FrequencyResult frequency(const ScalarFunc& u, const DomainChart& chart,
                                 const std::array<double, 2>& P, double r0, double ratio = 4.0,
                                 const Quadrature& quad = {}) {
    if (!(ratio >= 1.0)) throw invalid_parameter("frequency ratio must be >= 1");
    detail::check_boundary_center(chart, P);
    detail::check_disc_window(chart, P, r0);
    FrequencyResult out;
    out.r0 = r0;
    out.ratio = ratio;
    if (ratio == 1.0) {
        // identical numerator and denominator by definition
        out.numerator = out.denominator =
            region_mass(u, Region::disc(P[0], P[1], r0, &chart), quad).value;
        out.value = 1.0;
        return out;
    }
    out.numerator = region_mass(u, Region::disc(P[0], P[1], r0, &chart), quad).value;
    out.denominator = region_mass(u, Region::disc(P[0], P[1], r0 / ratio, &chart), quad).value;
    if (out.denominator <= 0.0) {
        out.infinite = true;
        out.value = out.numerator > 0.0 ? std::numeric_limits<double>::infinity()
                                        : std::numeric_limits<double>::quiet_NaN();
        return out;
    }
    out.value = out.numerator / out.denominator;
    return out;
}

inline DoublingReport measure_masses(const ScalarFunc& u, const DomainChart& chart,
                                     const std::array<double, 2>& P,
                                     const std::vector<double>& radii, double declared_ratio = 4.0,
                                     const Quadrature& quad = {}) {
    if (radii.size() < 2) throw invalid_parameter("need at least two measurement radii");
    detail::check_boundary_center(chart, P);
    DoublingReport rep;
    rep.center = P;
    rep.radii = radii;
    rep.declared_ratio = declared_ratio;
    rep.masses = disc_masses(u, chart, P, radii, quad);
    rep.freq = frequency(u, chart, P, radii.back(), declared_ratio, quad);

    const std::size_t n = radii.size();
    rep.log_slope.assign(n, std::numeric_limits<double>::quiet_NaN());
    auto slope = [&](std::size_t a, std::size_t b) {
        if (rep.masses[a] <= 0.0 || rep.masses[b] <= 0.0)
            return std::numeric_limits<double>::quiet_NaN();
        return (std::log(rep.masses[b]) - std::log(rep.masses[a])) /
               (std::log(radii[b]) - std::log(radii[a]));
    };
    for (std::size_t i = 0; i < n; ++i)
        rep.log_slope[i] = slope(i == 0 ? 0 : i - 1, i + 1 == n ? i : i + 1);

    // exponent fit over the inner half of the radii range
    double cutoff = 0.5 * (radii.front() + radii.back());
    std::size_t nfit = 0;
    while (nfit < n && radii[nfit] <= cutoff) ++nfit;
    nfit = std::max<std::size_t>(nfit, 2);
    rep.fit_count = nfit;
    std::vector<double> ls, lm;
    for (std::size_t i = 0; i < nfit; ++i) {
        if (rep.masses[i] <= 0.0) {
            rep.degenerate = true;
            return rep;
        }
        ls.push_back(std::log(radii[i]));
        lm.push_back(std::log(rep.masses[i]));
    }
    rep.kappa = detail::lsq_slope(ls, lm);

    rep.pair_constants.assign(n * n, 0.0);
    double sup = 0.0;
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            if (rep.masses[j] <= 0.0) {
                rep.degenerate = true;
                continue;
            }
            double d = rep.masses[i] / rep.masses[j] *
                       std::pow(radii[j] / radii[i], rep.kappa);
            rep.pair_constants[i * n + j] = d;
            sup = std::max(sup, d);
        }
    if (!rep.degenerate) rep.doubling_sup = sup;
    return rep;
}

// Solver fields live on the sheared frame; evaluation shears back to physical
// coordinates through the boundary graph.
inline ScalarFunc sheared_evaluator(const GridField& u, const DomainChart& chart) {
    Func1D g = chart.profile.g;
    auto eval = u.bicubic_eval();
    return [g, eval](double x1, double x2) { return eval(x1, x2 - g(x1)); };
}

inline DoublingReport measure_masses(const GridField& u, const DomainChart& chart,
                                     const std::array<double, 2>& P,
                                     const std::vector<double>& radii,
                                     double declared_ratio = 4.0) {
    Quadrature quad{std::min(u.grid.hx(), u.grid.hy()), 8};
    return measure_masses(sheared_evaluator(u, chart), chart, P, radii, declared_ratio, quad);
}

inline FrequencyResult frequency(const GridField& u, const DomainChart& chart,
                                 const std::array<double, 2>& P, double r0, double ratio = 4.0) {
    Quadrature quad{std::min(u.grid.hx(), u.grid.hy()), 8};
    return frequency(sheared_evaluator(u, chart), chart, P, r0, ratio, quad);
}

// ---------------------------------------------------------------------------
// Quasi-doubling inequality over a tau grid.

struct QuasiDoublingCell {
    double tau = 0.0;
    double log_lhs = 0.0, log_rhs_base = 0.0;  // RHS = candidate * exp(log_rhs_base)
    double c_min = 0.0;  // smallest constant closing the inequality at this tau
    double slack = 0.0;  // RHS - LHS at the candidate constant
};

struct QuasiDoublingCheck {
    double r = 0.0, rbar = 0.0, rbar0 = 0.0;
    double c_candidate = 1.0;
    double mass_r = 0.0, mass_2r = 0.0, mass_rbar = 0.0, mass_rbar0 = 0.0;
    std::vector<QuasiDoublingCell> cells;
    double c_min_best = std::numeric_limits<double>::infinity();
    double tau_best = 0.0;
    bool feasible = false;  // candidate >= c_min somewhere on the grid
    bool trivial = false;   // zero field; any nonnegative constant works
};

namespace detail {

inline double safe_log(double m) {
    return m > 0.0 ? std::log(m) : -std::numeric_limits<double>::infinity();
}

inline QuasiDoublingCell qd_cell(double r, double rbar, double rbar0, double mr, double m2r,
                                 double mrbar, double mrbar0, double tau, double candidate) {
    QuasiDoublingCell c;
    c.tau = tau;
    c.log_lhs = log_add(std::log(rbar) - 2.0 * tau * std::log(2.0 * r) + safe_log(m2r),
                        (1.0 - 2.0 * tau) * std::log(rbar) + safe_log(mrbar));
    c.log_rhs_base = log_add(-2.0 * tau * std::log(r / 4.0) + safe_log(mr),
                             -2.0 * tau * std::log(rbar0 / 2.0) + safe_log(mrbar0));
    const double ninf = -std::numeric_limits<double>::infinity();
    if (c.log_lhs == ninf)
        c.c_min = 0.0;
    else if (c.log_rhs_base == ninf)
        c.c_min = std::numeric_limits<double>::infinity();
    else
        c.c_min = std::exp(c.log_lhs - c.log_rhs_base);
    c.slack = candidate * std::exp(c.log_rhs_base) - std::exp(c.log_lhs);
    return c;
}

}  // namespace detail

inline QuasiDoublingCheck quasi_doubling_check(const ScalarFunc& v, double r, double rbar,
                                               double rbar0, const std::vector<double>& taus,
                                               double c_candidate, const Quadrature& quad = {}) {
    if (!(r > 0.0) || !(2.0 * r < rbar) || !(rbar < 0.5 * rbar0))
        throw invalid_parameter("quasi-doubling radii must satisfy 0 < 2r < rbar < rbar0/2");
    if (taus.empty()) throw invalid_parameter("empty tau grid");
    if (!(c_candidate >= 0.0)) throw invalid_parameter("candidate constant must be nonnegative");
    for (std::size_t i = 0; i + 1 < taus.size(); ++i)
        if (!(taus[i] < taus[i + 1])) throw invalid_parameter("tau grid must be increasing");
    if (!(taus.front() > 0.0)) throw invalid_parameter("tau values must be positive");

    QuasiDoublingCheck q;
    q.r = r;
    q.rbar = rbar;
    q.rbar0 = rbar0;
    q.c_candidate = c_candidate;
    auto half_mass = [&](double rho) {
        return region_mass(v, Region::upper_half_disc(0.0, 0.0, rho), quad).value;
    };
    q.mass_r = half_mass(r);
    q.mass_2r = half_mass(2.0 * r);
    q.mass_rbar = half_mass(rbar);
    q.mass_rbar0 = half_mass(rbar0);

    q.trivial = q.mass_2r == 0.0 && q.mass_rbar == 0.0;
    for (double tau : taus) {
        QuasiDoublingCell c = detail::qd_cell(r, rbar, rbar0, q.mass_r, q.mass_2r, q.mass_rbar,
                                              q.mass_rbar0, tau, c_candidate);
        if (c.c_min < q.c_min_best) {
            q.c_min_best = c.c_min;
            q.tau_best = tau;
        }
        if (c_candidate >= c.c_min) q.feasible = true;
        q.cells.push_back(c);
    }
    return q;
}

inline QuasiDoublingCheck quasi_doubling_check(const GridField& v, double r, double rbar,
                                               double rbar0, const std::vector<double>& taus,
                                               double c_candidate) {
    const Grid& g = v.grid;
    if (g.x0 > -rbar0 || g.x1 < rbar0 || g.y0 > 0.0 || g.y1 < rbar0)
        throw invalid_parameter("field grid does not cover the outer half disc");
    Quadrature quad{std::min(g.hx(), g.hy()), 8};
    return quasi_doubling_check(v.bicubic_eval(), r, rbar, rbar0, taus, c_candidate, quad);
}

// ---------------------------------------------------------------------------
// Two-term balancing: pick tau* so the two right-hand terms agree in log
// scale, then rearrange the inequality at tau* into m(2r) <= const * m(r).

struct DoublingStatement {
    double radius_small = 0.0, radius_large = 0.0;  // the bound pairs (r, 2r)
    double tau_star = 0.0;
    bool tau_clamped = false;
    double constant = std::numeric_limits<double>::infinity();
    double shape = 0.0;       // 2 / rbar; const = candidate * N^k * shape at balance
    double k = 0.0;           // exponent matching const = candidate * N^k * shape
    double n_ratio = 0.0;     // mass ratio m(rbar0)/m(r) driving the balance
    double implied_exponent = 0.0;  // log2 of the measured ratio m(2r)/m(r)
    bool feasible = false;
};

// the constant in m(2r) <= const * m(r) obtained at a given tau
inline double induced_constant(const QuasiDoublingCheck& q, double tau) {
    if (!(q.mass_r > 0.0)) return std::numeric_limits<double>::infinity();
    return q.c_candidate / q.rbar *
           (std::pow(8.0, 2.0 * tau) +
            std::pow(4.0 * q.r / q.rbar0, 2.0 * tau) * q.mass_rbar0 / q.mass_r);
}

inline DoublingStatement optimize_tau_to_doubling(const QuasiDoublingCheck& q,
                                                  double n_frequency) {
    if (!(n_frequency >= 1.0)) throw invalid_parameter("frequency must be >= 1");
    if (q.cells.empty()) throw invalid_parameter("quasi-doubling check has an empty tau grid");
    DoublingStatement st;
    st.radius_small = q.r;
    st.radius_large = 2.0 * q.r;
    st.shape = 2.0 / q.rbar;
    if (!(q.mass_r > 0.0)) return st;  // cannot divide; no-statement flag

    st.n_ratio = q.mass_rbar0 / q.mass_r;
    double lo = q.cells.front().tau, hi = q.cells.back().tau;
    double tau_raw = std::log(st.n_ratio) / (2.0 * std::log(2.0 * q.rbar0 / q.r));
    st.tau_star = std::min(std::max(tau_raw, lo), hi);
    st.tau_clamped = st.tau_star != tau_raw;
    st.constant = induced_constant(q, st.tau_star);
    st.k = n_frequency > 1.0
               ? std::log(st.constant / (q.c_candidate * st.shape)) / std::log(n_frequency)
               : 0.0;
    st.implied_exponent = std::log2(q.mass_2r / q.mass_r);
    QuasiDoublingCell at = detail::qd_cell(q.r, q.rbar, q.rbar0, q.mass_r, q.mass_2r,
                                           q.mass_rbar, q.mass_rbar0, st.tau_star,
                                           q.c_candidate);
    st.feasible = q.c_candidate >= at.c_min;
    return st;
}

// Does d * (s/r)^(log2 d) dominate every measured mass ratio m(s)/m(r)?
struct FunctionalFormCheck {
    double d_effective = 0.0;
    double exponent = 0.0;   // log2 of d_effective
    double worst_gap = -std::numeric_limits<double>::infinity();
    bool holds = false;
};

inline FunctionalFormCheck doubling_functional_form(const DoublingReport& rep,
                                                    double d_effective) {
    if (!(d_effective > 0.0)) throw invalid_parameter("doubling constant must be positive");
    FunctionalFormCheck out;
    out.d_effective = d_effective;
    out.exponent = std::log2(d_effective);
    const std::size_t n = rep.radii.size();
    for (std::size_t i = 0; i < n; ++i)
        for (std::size_t j = 0; j < i; ++j) {
            if (rep.masses[j] <= 0.0) continue;
            double lhs = rep.masses[i] / rep.masses[j];
            double rhs = d_effective * std::pow(rep.radii[i] / rep.radii[j], out.exponent);
            out.worst_gap = std::max(out.worst_gap, lhs - rhs);
        }
    out.holds = out.worst_gap <= 0.0;
    return out;
}

inline void write_doubling_csv(const DoublingReport& rep, const std::string& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_parameter("cannot open doubling output: " + path);
    out << "radius,mass,log_slope\n";
    char line[256];
    for (std::size_t i = 0; i < rep.radii.size(); ++i) {
        std::snprintf(line, sizeof line, "%.17g,%.17g,%.17g\n", rep.radii[i], rep.masses[i],
                      rep.log_slope[i]);
        out << line;
    }
}

}  // namespace plateuc
