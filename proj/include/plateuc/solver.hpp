#pragma once

// Fourth-order supported-plate solver.
//
// The curved domain {x2 > g(x1)} is mapped to a rectangle by the shear
// (xi, eta) = (x1, x2 - g(x1)), which is volume preserving, and the plate
// energy is minimized over nodal values on the sheared grid.  Physical
// Hessians come from the chain rule
//
//   d/dx1 = d/dxi - g' d/deta,        d/dx2 = d/deta
//
// so H22 = D_ee, H12 = D_xe - g' D_ee, H11 = D_xx - 2g' D_xe + g'^2 D_ee
// - g'' D_e.  The energy density B[(1-nu)(H11^2 + 2 H12^2 + H22^2)
// + nu (tr H)^2] is split into squares with positive weights,
//
//   B (1+nu)/2 (H11 + H22)^2 + B (1-nu)/2 (H11 - H22)^2 + 2B(1-nu) H12^2,
//
// valid for nu in (-1, 1), so the assembled matrix is symmetric positive
// semi-definite by construction.  Diagonal terms are collocated at nodes;
// the mixed term is collocated at cell centers with a compact corner
// difference.  The matrix is stored in operator form (energy Hessian divided
// by the cell area), so on a uniform grid with constant coefficients each
// interior row is the classical 13-point biharmonic stencil, center 20/h^4.
//
// The supported edge eta = 0 carries a single Dirichlet layer (value zero);
// the row above it stays free, which enforces the natural moment condition
// weakly.  The remaining outer boundary carries clamped data: two node
// layers prescribed from a user field, encoding value and normal slope.

#include <Eigen/SparseCholesky>
#include <Eigen/SparseCore>
#include <Eigen/SparseLU>

#include <algorithm>
#include <cmath>
#include <string>
#include <utility>
#include <vector>

#include "plateuc/fd.hpp"
#include "plateuc/geometry.hpp"
#include "plateuc/grid.hpp"
#include "plateuc/material.hpp"

namespace plateuc {

struct PlateProblem {
    DomainChart chart;
    StiffnessTensor tensor;
    ScalarFunc outer_data;        // clamped data on the outer layers, physical coords
    ScalarFunc source;            // optional volume load; empty means homogeneous
    int nx = 65, ny = 65;         // sheared solver grid
    bool supported_bottom = true; // false clamps all four edges (two data layers)

    Grid solver_grid() const {
        const auto& r = chart.bounding_rect();
        return Grid(nx, ny, r[0], r[1], 0.0, r[3]);
    }
};

struct SolveReport {
    double interior_residual = 0.0;        // scaled l2 of the strong form
    double boundary_value_residual = 0.0;  // max |u| on the supported edge
    double boundary_moment_residual = 0.0; // max natural-condition defect there
    int unknowns = 0;
    long long nonzeros = 0;
    std::string factorization = "none";
};

// Node roles on the sheared grid.
enum class NodeRole : std::uint8_t { unknown, supported, outer };

struct AssembledSystem {
    Grid grid;
    Eigen::SparseMatrix<double> matrix;  // unknowns only, symmetric PSD
    Eigen::VectorXd rhs;
    std::vector<int> unknown_index;      // grid node -> row, or -1
    std::vector<NodeRole> role;
    std::vector<double> fixed_values;    // meaningful where role != unknown
    int unknowns = 0;
};

namespace detail {

// One linear functional of nodal values, with coalesced coefficients.
struct Functional {
    std::vector<std::pair<std::size_t, double>> terms;

    void add(std::size_t node, double coeff) {
        if (coeff == 0.0) return;
        for (auto& t : terms)
            if (t.first == node) {
                t.second += coeff;
                return;
            }
        terms.emplace_back(node, coeff);
    }
};

// Accumulate weight * f f^T into triplets/rhs, honoring fixed nodes.  Mirror
// triplets are emitted back to back so the assembled matrix is symmetric to
// the last bit.
inline void scatter(const Functional& f, double weight, const AssembledSystem& sys,
                    std::vector<Eigen::Triplet<double>>& trips, Eigen::VectorXd& rhs) {
    const auto& t = f.terms;
    for (std::size_t p = 0; p < t.size(); ++p) {
        int up = sys.unknown_index[t[p].first];
        double fp = sys.role[t[p].first] == NodeRole::unknown ? 0.0 : sys.fixed_values[t[p].first];
        for (std::size_t q = p; q < t.size(); ++q) {
            int uq = sys.unknown_index[t[q].first];
            double v = weight * t[p].second * t[q].second;
            if (p == q) {
                if (up >= 0) trips.emplace_back(up, up, v);
                continue;
            }
            double fq =
                sys.role[t[q].first] == NodeRole::unknown ? 0.0 : sys.fixed_values[t[q].first];
            if (up >= 0 && uq >= 0) {
                trips.emplace_back(up, uq, v);
                trips.emplace_back(uq, up, v);
            } else if (up >= 0) {
                rhs[up] -= v * fq;
            } else if (uq >= 0) {
                rhs[uq] -= v * fp;
            }
        }
    }
}

// Nodal second difference in eta, one-sided at the walls.
inline Functional eta_second_difference(const Grid& g, int i, int j) {
    Functional f;
    double c = 1.0 / (g.hy() * g.hy());
    if (j >= 1 && j <= g.ny - 2) {
        f.add(g.index(i, j - 1), c);
        f.add(g.index(i, j), -2 * c);
        f.add(g.index(i, j + 1), c);
    } else if (j == 0) {
        static const double w[4] = {2, -5, 4, -1};
        for (int k = 0; k < 4; ++k) f.add(g.index(i, j + k), w[k] * c);
    } else {
        static const double w[4] = {2, -5, 4, -1};
        for (int k = 0; k < 4; ++k) f.add(g.index(i, j - k), w[k] * c);
    }
    return f;
}

}  // namespace detail

inline AssembledSystem assemble_weak_form(const PlateProblem& p) {
    if (p.nx < 5 || p.ny < 5)
        throw invalid_parameter("plate solver needs at least 5 nodes per axis");
    if (!p.tensor.bending || !p.tensor.poisson)
        throw invalid_parameter("stiffness tensor not set");
    if (!p.outer_data) throw invalid_parameter("outer boundary data not set");

    AssembledSystem sys;
    sys.grid = p.solver_grid();
    const Grid& g = sys.grid;
    const BoundaryProfile& prof = p.chart.profile;
    const double hx = g.hx(), hy = g.hy();

    sys.role.resize(g.size());
    sys.unknown_index.assign(g.size(), -1);
    sys.fixed_values.assign(g.size(), 0.0);
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            std::size_t n = g.index(i, j);
            double xi = g.x(i), x2 = g.y(j) + prof(xi);
            if (p.supported_bottom && j == 0) {
                sys.role[n] = NodeRole::supported;
            } else if (i <= 1 || i >= g.nx - 2 || j >= g.ny - 2 ||
                       (!p.supported_bottom && j <= 1)) {
                sys.role[n] = NodeRole::outer;
                sys.fixed_values[n] = p.outer_data(xi, x2);
            } else {
                sys.role[n] = NodeRole::unknown;
                sys.unknown_index[n] = sys.unknowns++;
            }
        }

    sys.rhs = Eigen::VectorXd::Zero(sys.unknowns);
    std::vector<Eigen::Triplet<double>> trips;
    trips.reserve(static_cast<std::size_t>(sys.unknowns) * 96);

    // Nodal sites: the two diagonal-energy squares.
    for (int j = 1; j <= g.ny - 2; ++j)
        for (int i = 1; i <= g.nx - 2; ++i) {
            double xi = g.x(i);
            double gp = prof.slope(xi), gpp = prof.curvature(xi);
            double x2 = g.y(j) + prof(xi);
            double B = p.tensor.bending(xi, x2), nu = p.tensor.poisson(xi, x2);

            detail::Functional h11, h22;
            h22.add(g.index(i, j - 1), 1 / (hy * hy));
            h22.add(g.index(i, j), -2 / (hy * hy));
            h22.add(g.index(i, j + 1), 1 / (hy * hy));

            h11.add(g.index(i - 1, j), 1 / (hx * hx));
            h11.add(g.index(i, j), -2 / (hx * hx));
            h11.add(g.index(i + 1, j), 1 / (hx * hx));
            if (gp != 0.0) {
                double c = -2 * gp / (4 * hx * hy);
                h11.add(g.index(i + 1, j + 1), c);
                h11.add(g.index(i - 1, j - 1), c);
                h11.add(g.index(i + 1, j - 1), -c);
                h11.add(g.index(i - 1, j + 1), -c);
                double c2 = gp * gp / (hy * hy);
                h11.add(g.index(i, j - 1), c2);
                h11.add(g.index(i, j), -2 * c2);
                h11.add(g.index(i, j + 1), c2);
            }
            if (gpp != 0.0) {
                h11.add(g.index(i, j + 1), -gpp / (2 * hy));
                h11.add(g.index(i, j - 1), gpp / (2 * hy));
            }

            detail::Functional sum = h22, dif;
            for (auto& t : h11.terms) sum.add(t.first, t.second);
            dif = h11;
            for (auto& t : h22.terms) dif.add(t.first, -t.second);

            detail::scatter(sum, B * (1 + nu) / 2, sys, trips, sys.rhs);
            detail::scatter(dif, B * (1 - nu) / 2, sys, trips, sys.rhs);
        }

    // Cell sites: the mixed-derivative square.
    for (int j = 0; j <= g.ny - 2; ++j)
        for (int i = 0; i <= g.nx - 2; ++i) {
            double xic = g.x(i) + hx / 2;
            double gp = prof.slope(xic);
            double x2c = g.y(j) + hy / 2 + prof(xic);
            double B = p.tensor.bending(xic, x2c), nu = p.tensor.poisson(xic, x2c);

            detail::Functional h12;
            double k = 1.0 / (hx * hy);
            h12.add(g.index(i, j), k);
            h12.add(g.index(i + 1, j + 1), k);
            h12.add(g.index(i + 1, j), -k);
            h12.add(g.index(i, j + 1), -k);
            if (gp != 0.0) {
                for (int di = 0; di <= 1; ++di)
                    for (int dj = 0; dj <= 1; ++dj) {
                        detail::Functional dee = detail::eta_second_difference(g, i + di, j + dj);
                        for (auto& t : dee.terms) h12.add(t.first, -gp * 0.25 * t.second);
                    }
            }
            detail::scatter(h12, 2 * B * (1 - nu), sys, trips, sys.rhs);
        }

    if (p.source)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i) {
                int u = sys.unknown_index[g.index(i, j)];
                if (u >= 0) sys.rhs[u] += p.source(g.x(i), g.y(j) + prof(g.x(i)));
            }

    sys.matrix.resize(sys.unknowns, sys.unknowns);
    sys.matrix.setFromTriplets(trips.begin(), trips.end());
    if (sys.unknowns == 0) throw numerical_failure("assembly produced no unknowns");
    return sys;
}

// Physical Hessian entries and Laplacian of a sheared-frame field.
struct PhysicalDerivatives {
    GridField h11, h12, h22, lap;
};

namespace detail {

inline GridField physical_dx1(const GridField& f, const BoundaryProfile& prof) {
    GridField dxi = deriv(f, 0, 1), deta = deriv(f, 1, 1);
    GridField out(f.grid);
    for (int i = 0; i < f.grid.nx; ++i) {
        double gp = prof.slope(f.grid.x(i));
        for (int j = 0; j < f.grid.ny; ++j)
            out.at(i, j) = dxi.at(i, j) - gp * deta.at(i, j);
    }
    return out;
}

inline GridField physical_dx2(const GridField& f) { return deriv(f, 1, 1); }

}  // namespace detail

inline PhysicalDerivatives physical_hessian(const GridField& w, const BoundaryProfile& prof) {
    GridField dxx = deriv(w, 0, 2), dee = deriv(w, 1, 2), de = deriv(w, 1, 1);
    GridField dxe = deriv(deriv(w, 1, 1), 0, 1);
    PhysicalDerivatives out{GridField(w.grid), GridField(w.grid), GridField(w.grid),
                            GridField(w.grid)};
    for (int i = 0; i < w.grid.nx; ++i) {
        double gp = prof.slope(w.grid.x(i)), gpp = prof.curvature(w.grid.x(i));
        for (int j = 0; j < w.grid.ny; ++j) {
            double a = dxx.at(i, j) - 2 * gp * dxe.at(i, j) + gp * gp * dee.at(i, j) -
                       gpp * de.at(i, j);
            double b = dxe.at(i, j) - gp * dee.at(i, j);
            double c = dee.at(i, j);
            out.h11.at(i, j) = a;
            out.h12.at(i, j) = b;
            out.h22.at(i, j) = c;
            out.lap.at(i, j) = a + c;
        }
    }
    return out;
}

// Strong form div div of the moment tensor, evaluated on the sheared grid.
inline GridField strong_operator(const GridField& w, const PlateProblem& p) {
    const Grid& g = w.grid;
    const BoundaryProfile& prof = p.chart.profile;
    PhysicalDerivatives d = physical_hessian(w, prof);

    GridField m11(g), m12(g), m22(g);
    for (int i = 0; i < g.nx; ++i) {
        double xi = g.x(i);
        for (int j = 0; j < g.ny; ++j) {
            double x2 = g.y(j) + prof(xi);
            double B = p.tensor.bending(xi, x2), nu = p.tensor.poisson(xi, x2);
            m11.at(i, j) = B * (1 - nu) * d.h11.at(i, j) + B * nu * d.lap.at(i, j);
            m12.at(i, j) = B * (1 - nu) * d.h12.at(i, j);
            m22.at(i, j) = B * (1 - nu) * d.h22.at(i, j) + B * nu * d.lap.at(i, j);
        }
    }

    GridField t11 = detail::physical_dx1(detail::physical_dx1(m11, prof), prof);
    GridField t12 = detail::physical_dx2(detail::physical_dx1(m12, prof));
    GridField t21 = detail::physical_dx1(detail::physical_dx2(m12), prof);
    GridField t22 = detail::physical_dx2(detail::physical_dx2(m22));

    GridField out(g);
    for (std::size_t n = 0; n < g.size(); ++n)
        out.v[n] = t11.v[n] + t12.v[n] + t21.v[n] + t22.v[n];
    return out;
}

inline SolveReport residuals(const GridField& u, const PlateProblem& p) {
    const Grid& g = u.grid;
    const BoundaryProfile& prof = p.chart.profile;
    SolveReport rep;

    GridField lu = strong_operator(u, p);
    if (p.source)
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                lu.at(i, j) -= p.source(g.x(i), g.y(j) + prof(g.x(i)));

    double acc = 0.0;
    for (int j = 1; j <= g.ny - 3; ++j)
        for (int i = 2; i <= g.nx - 3; ++i) acc += lu.at(i, j) * lu.at(i, j);
    rep.interior_residual = std::sqrt(acc * g.hx() * g.hy());

    PhysicalDerivatives d = physical_hessian(u, prof);
    for (int i = 0; i < g.nx; ++i) {
        double xi = g.x(i);
        rep.boundary_value_residual =
            std::max(rep.boundary_value_residual, std::abs(u.at(i, 0)));
        double gp = prof.slope(xi), len = std::hypot(gp, 1.0);
        double n1 = gp / len, n2 = -1.0 / len;
        double dnn = n1 * n1 * d.h11.at(i, 0) + 2 * n1 * n2 * d.h12.at(i, 0) +
                     n2 * n2 * d.h22.at(i, 0);
        double x2 = prof(xi);
        double B = p.tensor.bending(xi, x2), nu = p.tensor.poisson(xi, x2);
        double moment = B * (1 - nu) * dnn + B * nu * d.lap.at(i, 0);
        rep.boundary_moment_residual = std::max(rep.boundary_moment_residual, std::abs(moment));
    }
    return rep;
}

inline std::pair<GridField, SolveReport> solve(const PlateProblem& p) {
    AssembledSystem sys = assemble_weak_form(p);
    Eigen::VectorXd sol;
    std::string method = "ldlt";

    Eigen::SimplicialLDLT<Eigen::SparseMatrix<double>> ldlt(sys.matrix);
    if (ldlt.info() == Eigen::Success) {
        sol = ldlt.solve(sys.rhs);
    }
    if (ldlt.info() != Eigen::Success || !sol.allFinite()) {
        Eigen::SparseLU<Eigen::SparseMatrix<double>> lu(sys.matrix);
        if (lu.info() != Eigen::Success)
            throw numerical_failure(
                "plate system factorization failed; the operator is singular at the assembled "
                "resolution (" + std::to_string(sys.unknowns) + " unknowns)");
        sol = lu.solve(sys.rhs);
        method = "lu";
        if (!sol.allFinite())
            throw numerical_failure("plate solve produced non-finite values");
    }

    GridField u(sys.grid);
    for (std::size_t n = 0; n < sys.grid.size(); ++n)
        u.v[n] = sys.unknown_index[n] >= 0 ? sol[sys.unknown_index[n]] : sys.fixed_values[n];

    SolveReport rep = residuals(u, p);
    rep.unknowns = sys.unknowns;
    rep.nonzeros = sys.matrix.nonZeros();
    rep.factorization = method;
    return {std::move(u), rep};
}

// Evaluate a sheared-frame field at physical coordinates.
inline ScalarFunc physical_solution(const GridField& w, const BoundaryProfile& prof) {
    Func1D g = prof.g;
    auto eval = w.bicubic_eval();
    return [g, eval](double x1, double x2) { return eval(x1, x2 - g(x1)); };
}

}  // namespace plateuc
