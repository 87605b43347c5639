#pragma once

// Finite-difference stencils of arbitrary order via Fornberg's recurrence,
// plus whole-field derivative helpers. Interior nodes get centered stencils;
// nodes near an edge fall back to shifted one-sided windows of the same
// formal accuracy.

#include <vector>

#include "plateuc/grid.hpp"

namespace plateuc {

// Weights w_i so that f^(m)(z) ~= sum_i w_i f(xs[i]).
inline std::vector<double> fd_weights(int m, double z, const std::vector<double>& xs) {
    const int n = static_cast<int>(xs.size());
    if (m < 0 || n < m + 1) throw invalid_parameter("fd_weights: not enough nodes for derivative order");
    // B. Fornberg, "Generation of finite difference formulas on arbitrarily
    // spaced grids", Math. Comp. 51 (1988).
    std::vector<std::vector<double>> c(n, std::vector<double>(m + 1, 0.0));
    double c1 = 1.0;
    double c4 = xs[0] - z;
    c[0][0] = 1.0;
    for (int i = 1; i < n; ++i) {
        int mn = std::min(i, m);
        double c2 = 1.0;
        double c5 = c4;
        c4 = xs[i] - z;
        for (int j = 0; j < i; ++j) {
            double c3 = xs[i] - xs[j];
            c2 *= c3;
            if (j == i - 1) {
                for (int k = mn; k >= 1; --k)
                    c[i][k] = c1 * (k * c[i - 1][k - 1] - c5 * c[i - 1][k]) / c2;
                c[i][0] = -c1 * c5 * c[i - 1][0] / c2;
            }
            for (int k = mn; k >= 1; --k)
                c[j][k] = (c4 * c[j][k] - k * c[j][k - 1]) / c3;
            c[j][0] = c4 * c[j][0] / c3;
        }
        c1 = c2;
    }
    std::vector<double> w(n);
    for (int i = 0; i < n; ++i) w[i] = c[i][m];
    return w;
}

// Stencil on integer offsets lo..hi (inclusive) for the m-th derivative at
// offset `at`, in units of spacing 1. Divide by h^m for a real grid.
inline std::vector<double> uniform_fd_weights(int m, int lo, int hi, double at = 0.0) {
    std::vector<double> xs;
    xs.reserve(hi - lo + 1);
    for (int k = lo; k <= hi; ++k) xs.push_back(static_cast<double>(k));
    return fd_weights(m, at, xs);
}

namespace detail {

// Window [i0, i0+np-1] for a stencil at node i on an axis of n nodes:
// centered when it fits, shifted into range otherwise.
inline int stencil_start(int i, int n, int np) {
    int i0 = i - np / 2;
    if (i0 < 0) i0 = 0;
    if (i0 + np > n) i0 = n - np;
    return i0;
}

// Number of points for an m-th derivative of formal order `acc`: one-sided
// windows need m+acc points; symmetric windows get the parity boost for free.
inline int stencil_points(int m, int acc) {
    int np = m + acc;
    if (np % 2 == 0) ++np;
    return np;
}

}  // namespace detail

// Derivative of a nodal field along one axis (0 = x, 1 = y), all nodes.
inline GridField deriv(const GridField& f, int axis, int m, int acc = 2) {
    const Grid& g = f.grid;
    const int n = axis == 0 ? g.nx : g.ny;
    const double h = axis == 0 ? g.hx() : g.hy();
    const int np = std::min(detail::stencil_points(m, acc), n);
    if (np < m + 1) throw invalid_parameter("deriv: grid too small for requested derivative");
    const double hm = std::pow(h, m);

    // Precompute the weights for every distinct window position.
    std::vector<std::vector<double>> wtab(n);
    for (int i = 0; i < n; ++i) {
        int i0 = detail::stencil_start(i, n, np);
        wtab[i] = uniform_fd_weights(m, i0 - i, i0 - i + np - 1, 0.0);
        for (double& w : wtab[i]) w /= hm;
    }

    GridField out(g);
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            int idx = axis == 0 ? i : j;
            int i0 = detail::stencil_start(idx, n, np);
            const std::vector<double>& w = wtab[idx];
            double s = 0.0;
            for (int k = 0; k < np; ++k)
                s += w[k] * (axis == 0 ? f.at(i0 + k, j) : f.at(i, i0 + k));
            out.at(i, j) = s;
        }
    }
    return out;
}

inline GridField laplacian(const GridField& f, int acc = 2) {
    GridField a = deriv(f, 0, 2, acc);
    GridField b = deriv(f, 1, 2, acc);
    for (std::size_t k = 0; k < a.v.size(); ++k) a.v[k] += b.v[k];
    return a;
}

// Classic 13-point bilaplacian at one interior node (2 layers of margin).
inline double biharmonic_13pt(const GridField& f, int i, int j) {
    const double hx = f.grid.hx(), hy = f.grid.hy();
    double d4x = (f.at(i - 2, j) - 4 * f.at(i - 1, j) + 6 * f.at(i, j) - 4 * f.at(i + 1, j) +
                  f.at(i + 2, j)) /
                 (hx * hx * hx * hx);
    double d4y = (f.at(i, j - 2) - 4 * f.at(i, j - 1) + 6 * f.at(i, j) - 4 * f.at(i, j + 1) +
                  f.at(i, j + 2)) /
                 (hy * hy * hy * hy);
    double d2x2y = (f.at(i - 1, j - 1) - 2 * f.at(i, j - 1) + f.at(i + 1, j - 1) -
                    2 * f.at(i - 1, j) + 4 * f.at(i, j) - 2 * f.at(i + 1, j) +
                    f.at(i - 1, j + 1) - 2 * f.at(i, j + 1) + f.at(i + 1, j + 1)) /
                   (hx * hx * hy * hy);
    return d4x + 2 * d2x2y + d4y;
}

// Central finite differences of point functions, for coefficient fields whose
// closed-form derivatives are not supplied. Step sizes balance truncation
// against round-off for first and second differences.
namespace fdpoint {

inline double step1(double x) { return 6e-6 * std::max(1.0, std::abs(x)); }
inline double step2(double x) { return 1.25e-4 * std::max(1.0, std::abs(x)); }

inline double d1(const ScalarFunc& f, double x, double y, int axis) {
    double h = step1(axis == 0 ? x : y);
    return axis == 0 ? (f(x + h, y) - f(x - h, y)) / (2 * h)
                     : (f(x, y + h) - f(x, y - h)) / (2 * h);
}

inline double d2(const ScalarFunc& f, double x, double y, int axis) {
    double h = step2(axis == 0 ? x : y);
    return axis == 0 ? (f(x + h, y) - 2 * f(x, y) + f(x - h, y)) / (h * h)
                     : (f(x, y + h) - 2 * f(x, y) + f(x, y - h)) / (h * h);
}

inline double d2_cross(const ScalarFunc& f, double x, double y) {
    double hx = step2(x), hy = step2(y);
    return (f(x + hx, y + hy) - f(x + hx, y - hy) - f(x - hx, y + hy) + f(x - hx, y - hy)) /
           (4 * hx * hy);
}

inline double d1(const Func1D& f, double x) {
    double h = step1(x);
    return (f(x + h) - f(x - h)) / (2 * h);
}

inline double d2(const Func1D& f, double x) {
    double h = step2(x);
    return (f(x + h) - 2 * f(x) + f(x - h)) / (h * h);
}

}  // namespace fdpoint

}  // namespace plateuc
