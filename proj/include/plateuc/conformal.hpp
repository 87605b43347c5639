#pragma once

// Conformal chart flattening the graph boundary.
//
// The map is represented in closed form as a holomorphic function on the
// reference rectangle R = (-1,1) x (0,1),
//
//   F(z) = s z + sum_k a_k (e^{i k pi z / 2} - 1),      z = y1 + i y2,
//
// whose modes decay exponentially upward and vanish at the origin, so
// F(0) = 0 holds structurally.  Phi = (Re F, Im F) is then conformal wherever
// F' != 0, with Jacobian [[Re F', -Im F'], [Im F', Re F']] available exactly;
// the Cauchy-Riemann relations hold by construction rather than to stencil
// accuracy.  The free coefficients are fitted so the bottom edge traces the
// boundary graph: a fixed-point loop alternates between reading off the
// boundary correspondence t(y1) = Re F(y1, 0) and least-squares fitting
// Im F(y1, 0) = g(t(y1)), with a truncated-SVD solve for stability.
//
// The base scale is s = r0/4 (reduced if the domain box is too shallow), so
// the flat-boundary chart is exactly F(z) = (r0/4) z.

#include <Eigen/Dense>

#include <array>
#include <cmath>
#include <complex>
#include <cstdio>
#include <fstream>
#include <optional>
#include <string>
#include <vector>

#include "plateuc/fd.hpp"
#include "plateuc/geometry.hpp"
#include "plateuc/grid.hpp"

namespace plateuc {

struct ConformalChart {
    BoundaryProfile profile;
    double r0 = 1.0;
    double scale = 0.0;                       // leading coefficient s
    std::vector<std::complex<double>> modes;  // a_k, k = 1..modes.size()

    Grid grid;                     // sampling of R = (-1,1) x (0,1)
    GridField phi, psi, jacobian;  // components of Phi and Frobenius |DPhi|

    // measured constants
    double K = 0.0, c0 = 1.0, C0 = 0.0, r1 = 0.0;

    std::complex<double> F(std::complex<double> z) const {
        std::complex<double> out = scale * z;
        for (std::size_t k = 0; k < modes.size(); ++k) {
            std::complex<double> e = std::exp(std::complex<double>(0, (k + 1) * pi / 2.0) * z);
            out += modes[k] * (e - 1.0);
        }
        return out;
    }

    std::complex<double> Fp(std::complex<double> z) const {
        std::complex<double> out = scale;
        for (std::size_t k = 0; k < modes.size(); ++k) {
            std::complex<double> w(0, (k + 1) * pi / 2.0);
            out += modes[k] * w * std::exp(w * z);
        }
        return out;
    }

    std::complex<double> Fpp(std::complex<double> z) const {
        std::complex<double> out = 0.0;
        for (std::size_t k = 0; k < modes.size(); ++k) {
            std::complex<double> w(0, (k + 1) * pi / 2.0);
            out += modes[k] * w * w * std::exp(w * z);
        }
        return out;
    }

    std::array<double, 2> map(double y1, double y2) const {
        std::complex<double> v = F({y1, y2});
        return {v.real(), v.imag()};
    }

    // row-major [ d1 phi, d2 phi, d1 psi, d2 psi ]
    std::array<double, 4> jacobian_at(double y1, double y2) const {
        std::complex<double> d = Fp({y1, y2});
        return {d.real(), -d.imag(), d.imag(), d.real()};
    }

    std::array<double, 4> inverse_jacobian_at(double y1, double y2) const {
        std::complex<double> d = Fp({y1, y2});
        double n2 = std::norm(d);
        if (n2 < 1e-24) throw numerical_failure("degenerate chart Jacobian");
        return {d.real() / n2, d.imag() / n2, -d.imag() / n2, d.real() / n2};
    }

    double grad_phi_sq(double y1, double y2) const { return std::norm(Fp({y1, y2})); }

    // gradient of |grad phi|^2 = |F'|^2 in chart coordinates
    std::array<double, 2> grad_phi_sq_gradient(double y1, double y2) const {
        std::complex<double> d = Fp({y1, y2}), dd = Fpp({y1, y2});
        std::complex<double> q = dd * std::conj(d);
        return {2 * q.real(), -2 * q.imag()};
    }

    std::optional<std::array<double, 2>> try_invert(double x1, double x2,
                                                    double tol = 1e-12) const {
        std::complex<double> target(x1, x2);
        std::complex<double> d0 = Fp(0.0);
        if (std::norm(d0) < 1e-24) return std::nullopt;
        std::complex<double> z = target / d0;
        for (int it = 0; it < 80; ++it) {
            std::complex<double> d = Fp(z);
            if (std::norm(d) < 1e-24) return std::nullopt;
            std::complex<double> step = (F(z) - target) / d;
            z -= step;
            if (std::abs(step) < tol) return std::array<double, 2>{z.real(), z.imag()};
        }
        return std::nullopt;
    }

    std::array<double, 2> invert(double x1, double x2) const {
        auto y = try_invert(x1, x2);
        if (!y)
            throw numerical_failure("chart inversion failed at (" + std::to_string(x1) + ", " +
                                    std::to_string(x2) + ")");
        return *y;
    }
};

struct ChartBounds {
    double jac_min = 0, jac_max = 0;          // range of |DPhi|
    double inv_jac_min = 0, inv_jac_max = 0;  // range of |DPhi^{-1}|
    double ratio_min = 0, ratio_max = 0;      // range of |Phi(y)|/|y|
    double K = 0, c0 = 0, C0 = 0, r1 = 0;
    double boundary_residual = 0;  // max |psi - g(phi)| on the bottom edge
    double origin_offset = 0;      // |Phi(0,0)|
    bool grad_window_ok = false;
    bool inv_grad_window_ok = false;
    bool ratio_window_ok = false;
    bool containment_ok = false;

    bool ok() const {
        return grad_window_ok && inv_grad_window_ok && ratio_window_ok && containment_ok &&
               boundary_residual <= 1e-6 && origin_offset <= 1e-10;
    }
};

namespace detail {

// Least-squares fit of the bottom-edge trace by truncated SVD.
inline void fit_boundary_modes(ConformalChart& chart, int nsamples, int iters) {
    const int M = static_cast<int>(chart.modes.size());
    Eigen::MatrixXd A(nsamples, 2 * M);
    Eigen::VectorXd rhs(nsamples);
    std::vector<double> ys(nsamples);
    for (int s = 0; s < nsamples; ++s) ys[s] = -1.0 + 2.0 * s / (nsamples - 1);

    for (int s = 0; s < nsamples; ++s)
        for (int k = 0; k < M; ++k) {
            double arg = (k + 1) * pi * ys[s] / 2.0;
            A(s, 2 * k) = std::sin(arg);            // Im part of alpha_k basis
            A(s, 2 * k + 1) = std::cos(arg) - 1.0;  // Im part of i beta_k basis
        }

    Eigen::BDCSVD<Eigen::MatrixXd> svd(A, Eigen::ComputeThinU | Eigen::ComputeThinV);
    svd.setThreshold(1e-12);

    for (int it = 0; it < iters; ++it) {
        for (int s = 0; s < nsamples; ++s) {
            double t = chart.F({ys[s], 0.0}).real();
            rhs[s] = chart.profile(t);
        }
        Eigen::VectorXd c = svd.solve(rhs);
        double drift = 0.0;
        for (int k = 0; k < M; ++k) {
            std::complex<double> next(c[2 * k], c[2 * k + 1]);
            drift = std::max(drift, std::abs(next - chart.modes[k]));
            chart.modes[k] = next;
        }
        if (drift < 1e-15) break;
    }
}

}  // namespace detail

inline ConformalChart build_chart(const BoundaryProfile& profile, int n = 129, int nmodes = 16,
                                  int fit_samples = 257, int fit_iters = 40) {
    profile.validate();
    if (n < 16) throw invalid_parameter("chart grid needs at least 16 nodes per axis");
    if (nmodes < 1 || fit_samples < 4 * nmodes)
        throw invalid_parameter("chart fit needs fit_samples >= 4*nmodes, nmodes >= 1");

    ConformalChart chart;
    chart.profile = profile;
    chart.r0 = profile.radius;
    double top = 2.0 * profile.shape_bound * profile.radius;
    chart.scale = std::min(profile.radius / 4.0, top / 1.25);
    chart.modes.assign(nmodes, 0.0);

    detail::fit_boundary_modes(chart, fit_samples, fit_iters);

    chart.grid = Grid(n, n, -1.0, 1.0, 0.0, 1.0);
    chart.phi = GridField(chart.grid);
    chart.psi = GridField(chart.grid);
    chart.jacobian = GridField(chart.grid);
    for (int j = 0; j < n; ++j)
        for (int i = 0; i < n; ++i) {
            auto x = chart.map(chart.grid.x(i), chart.grid.y(j));
            chart.phi.at(i, j) = x[0];
            chart.psi.at(i, j) = x[1];
            chart.jacobian.at(i, j) =
                std::sqrt(2.0 * chart.grad_phi_sq(chart.grid.x(i), chart.grid.y(j)));
        }

    // orientation: det DPhi = |F'|^2 > 0, sampled at nodes and cell centers
    for (int j = 0; j < 2 * n - 1; ++j)
        for (int i = 0; i < 2 * n - 1; ++i) {
            double y1 = -1.0 + i / (2.0 * (n - 1)) * 2.0, y2 = j / (2.0 * (n - 1));
            if (chart.grad_phi_sq(y1, y2) <= 0.0)
                throw numerical_failure("chart orientation failure: det DPhi <= 0 at (" +
                                        std::to_string(y1) + ", " + std::to_string(y2) + ")");
        }
    // injectivity spot check: image cells keep positive orientation
    for (int j = 0; j + 1 < n; ++j)
        for (int i = 0; i + 1 < n; ++i) {
            double ax = chart.phi.at(i + 1, j) - chart.phi.at(i, j);
            double ay = chart.psi.at(i + 1, j) - chart.psi.at(i, j);
            double bx = chart.phi.at(i, j + 1) - chart.phi.at(i, j);
            double by = chart.psi.at(i, j + 1) - chart.psi.at(i, j);
            if (ax * by - ay * bx <= 0.0)
                throw numerical_failure("chart orientation failure: flipped image cell at (" +
                                        std::to_string(i) + ", " + std::to_string(j) + ")");
        }
    return chart;
}

inline ChartBounds verify_bounds(const ConformalChart& chart, int nprobe = 64) {
    ChartBounds b;
    const Grid& g = chart.grid;
    double fmin = std::numeric_limits<double>::infinity(), fmax = 0.0;
    b.ratio_min = std::numeric_limits<double>::infinity();
    b.ratio_max = 0.0;

    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            double y1 = g.x(i), y2 = g.y(j);
            double f = std::sqrt(chart.grad_phi_sq(y1, y2));
            fmin = std::min(fmin, f);
            fmax = std::max(fmax, f);
            double yn = std::hypot(y1, y2);
            if (yn > 0) {
                auto x = chart.map(y1, y2);
                double ratio = std::hypot(x[0], x[1]) / yn;
                b.ratio_min = std::min(b.ratio_min, ratio);
                b.ratio_max = std::max(b.ratio_max, ratio);
            }
        }
    // the origin ratio tends to |F'(0)|
    double f0 = std::abs(chart.Fp(0.0));
    b.ratio_min = std::min(b.ratio_min, f0);
    b.ratio_max = std::max(b.ratio_max, f0);

    b.jac_min = std::sqrt(2.0) * fmin;
    b.jac_max = std::sqrt(2.0) * fmax;
    b.inv_jac_min = std::sqrt(2.0) / fmax;
    b.inv_jac_max = std::sqrt(2.0) / fmin;

    if (!(b.ratio_min > 0))
        throw numerical_failure("no finite K: the chart maps a point far from scale with |y|");
    b.K = chart.r0 / b.ratio_min;
    b.c0 = 1.0;
    double need = std::max(chart.r0 / (2.0 * b.jac_min), chart.r0 * b.inv_jac_max / 4.0);
    b.C0 = std::max(1.0 + 1e-6, need * (1.0 + 1e-9));

    const double slack = 1e-12 * chart.r0;
    b.grad_window_ok =
        b.jac_max <= chart.r0 / 2.0 + slack && b.jac_min >= b.c0 * chart.r0 / (2.0 * b.C0) - slack;
    b.inv_grad_window_ok = b.inv_jac_min >= 4.0 / chart.r0 - slack / (chart.r0 * chart.r0) &&
                           b.inv_jac_max <= 4.0 * b.C0 / (b.c0 * chart.r0) + slack;
    b.ratio_window_ok = b.ratio_max <= chart.r0 / 2.0 + slack && b.K < 1e12;

    auto origin = chart.map(0.0, 0.0);
    b.origin_offset = std::hypot(origin[0], origin[1]);

    double rb = 0.0;
    int nedge = 2 * g.nx - 1;
    for (int s = 0; s < nedge; ++s) {
        double y1 = -1.0 + 2.0 * s / (nedge - 1);
        auto x = chart.map(y1, 0.0);
        rb = std::max(rb, std::abs(x[1] - chart.profile(x[0])));
    }
    b.boundary_residual = rb;
    b.r1 = std::min(chart.map(1.0, 0.0)[0], -chart.map(-1.0, 0.0)[0]);

    // containment probe: B_{r0/K} cap Omega subset Phi(R).  Enlarging K only
    // weakens the other K-bound, so K may be grown until the probe passes.
    DomainChart domain(chart.profile);
    auto probe = [&](double K) {
        double rad = chart.r0 / K;
        for (int a = 0; a < nprobe; ++a)
            for (int r = 1; r <= nprobe / 4; ++r) {
                double rho = rad * (r - 0.5) / (nprobe / 4.0);
                double th = 2.0 * pi * a / nprobe;
                double x1 = rho * std::cos(th), x2 = rho * std::sin(th);
                if (!domain.inside(x1, x2)) continue;
                auto y = chart.try_invert(x1, x2, 1e-12);
                double tol = 1e-9;
                if (!y || (*y)[0] < -1 - tol || (*y)[0] > 1 + tol || (*y)[1] < -tol ||
                    (*y)[1] > 1 + tol)
                    return false;
            }
        return true;
    };
    b.containment_ok = false;
    for (int tries = 0; tries < 24 && !b.containment_ok; ++tries) {
        if (probe(b.K)) b.containment_ok = true;
        else b.K *= 1.25;
    }
    return b;
}

// Fill the chart's measured constants from a verification pass.
inline ChartBounds measure_chart(ConformalChart& chart) {
    ChartBounds b = verify_bounds(chart);
    chart.K = b.K;
    chart.c0 = b.c0;
    chart.C0 = b.C0;
    chart.r1 = b.r1;
    return b;
}

namespace detail {

// Sheared ordinate of a physical point; bottom-edge images may undershoot the
// graph by the boundary-fit residual, so small negative values snap to zero.
inline double sheared_eta(double x2, double gx, double span) {
    double eta = x2 - gx;
    if (eta < 0.0 && eta > -1e-6 * span) return 0.0;
    return eta;
}

}  // namespace detail

// w(y) = u(Phi(y)) for a field stored in the sheared solver frame.
inline GridField pullback(const GridField& sheared, const ConformalChart& chart) {
    GridField w(chart.grid);
    auto eval = sheared.bicubic_eval();
    double span = sheared.grid.y1 - sheared.grid.y0;
    for (int j = 0; j < chart.grid.ny; ++j)
        for (int i = 0; i < chart.grid.nx; ++i) {
            auto x = chart.map(chart.grid.x(i), chart.grid.y(j));
            w.at(i, j) = eval(x[0], detail::sheared_eta(x[1], chart.profile(x[0]), span));
        }
    return w;
}

inline GridField pullback(const ScalarFunc& physical, const ConformalChart& chart) {
    GridField w(chart.grid);
    for (int j = 0; j < chart.grid.ny; ++j)
        for (int i = 0; i < chart.grid.nx; ++i) {
            auto x = chart.map(chart.grid.x(i), chart.grid.y(j));
            w.at(i, j) = physical(x[0], x[1]);
        }
    return w;
}

// max over interior chart nodes of |(lap u)(Phi(y)) - |grad phi|^{-2} (lap w)(y)|,
// normalized by the magnitude of the pulled-back Laplacian.
inline double laplacian_pullback_check(const GridField& sheared, const GridField& w,
                                       const ConformalChart& chart) {
    if (!(w.grid == chart.grid)) throw invalid_parameter("w must live on the chart grid");

    GridField dxx = deriv(sheared, 0, 2), dee = deriv(sheared, 1, 2), de = deriv(sheared, 1, 1);
    GridField dxe = deriv(deriv(sheared, 1, 1), 0, 1);
    GridField lap_u(sheared.grid);
    for (int i = 0; i < sheared.grid.nx; ++i) {
        double gp = chart.profile.slope(sheared.grid.x(i));
        double gpp = chart.profile.curvature(sheared.grid.x(i));
        for (int j = 0; j < sheared.grid.ny; ++j)
            lap_u.at(i, j) = dxx.at(i, j) - 2 * gp * dxe.at(i, j) +
                             (1 + gp * gp) * dee.at(i, j) - gpp * de.at(i, j);
    }
    auto lap_u_eval = lap_u.bicubic_eval();
    GridField lap_w = laplacian(w);

    double span = sheared.grid.y1 - sheared.grid.y0;
    double worst = 0.0, scale = 0.0;
    for (int j = 1; j < chart.grid.ny - 1; ++j)
        for (int i = 1; i < chart.grid.nx - 1; ++i) {
            double y1 = chart.grid.x(i), y2 = chart.grid.y(j);
            auto x = chart.map(y1, y2);
            double lhs = lap_u_eval(x[0], detail::sheared_eta(x[1], chart.profile(x[0]), span));
            double rhs = lap_w.at(i, j) / chart.grad_phi_sq(y1, y2);
            worst = std::max(worst, std::abs(lhs - rhs));
            scale = std::max(scale, std::abs(lhs));
        }
    // floor the normalization so harmonic fields (both sides near zero) pass
    return worst / std::max(scale, 1.0);
}

// ---- serialization ----------------------------------------------------------

inline void write_chart(const ConformalChart& chart, const std::string& prefix) {
    write_field(prefix + ".phi", chart.phi);
    write_field(prefix + ".psi", chart.psi);

    std::ofstream out(prefix + ".chart");
    if (!out) throw invalid_parameter("cannot open " + prefix + ".chart for writing");
    char buf[64];
    auto num = [&buf](double v) {
        std::snprintf(buf, sizeof buf, "%.17g", v);
        return std::string(buf);
    };
    out << "plateuc-chart 1\n";
    out << "r0 " << num(chart.r0) << "\n";
    out << "scale " << num(chart.scale) << "\n";
    out << "grid " << chart.grid.nx << " " << chart.grid.ny << "\n";
    out << "K " << num(chart.K) << "\n";
    out << "c0 " << num(chart.c0) << "\n";
    out << "C0 " << num(chart.C0) << "\n";
    out << "r1 " << num(chart.r1) << "\n";
    out << "modes " << chart.modes.size() << "\n";
    for (const auto& m : chart.modes) out << num(m.real()) << " " << num(m.imag()) << "\n";
}

// Rebuilds closed-form data and fields; the profile is not serialized and must
// be supplied by the caller.
inline ConformalChart read_chart(const std::string& prefix, const BoundaryProfile& profile) {
    std::ifstream in(prefix + ".chart");
    if (!in) throw invalid_parameter("cannot open " + prefix + ".chart");
    std::string tag;
    int version = 0;
    in >> tag >> version;
    if (tag != "plateuc-chart" || version != 1)
        throw invalid_parameter("not a chart file: " + prefix + ".chart");

    ConformalChart chart;
    chart.profile = profile;
    int nx = 0, ny = 0;
    std::size_t nmodes = 0;
    std::string key;
    while (in >> key) {
        if (key == "r0") in >> chart.r0;
        else if (key == "scale") in >> chart.scale;
        else if (key == "grid") in >> nx >> ny;
        else if (key == "K") in >> chart.K;
        else if (key == "c0") in >> chart.c0;
        else if (key == "C0") in >> chart.C0;
        else if (key == "r1") in >> chart.r1;
        else if (key == "modes") {
            in >> nmodes;
            chart.modes.resize(nmodes);
            for (auto& m : chart.modes) {
                double re, im;
                in >> re >> im;
                m = {re, im};
            }
        } else {
            throw invalid_parameter("unknown chart key: " + key);
        }
    }
    if (!in.eof() && in.fail()) throw invalid_parameter("malformed chart file");
    chart.phi = read_field(prefix + ".phi");
    chart.psi = read_field(prefix + ".psi");
    chart.grid = chart.phi.grid;
    if (nx != chart.grid.nx || ny != chart.grid.ny)
        throw invalid_parameter("chart grid does not match its field files");
    chart.jacobian = GridField(chart.grid);
    for (int j = 0; j < ny; ++j)
        for (int i = 0; i < nx; ++i)
            chart.jacobian.at(i, j) =
                std::sqrt(2.0 * chart.grad_phi_sq(chart.grid.x(i), chart.grid.y(j)));
    return chart;
}

}  // namespace plateuc
