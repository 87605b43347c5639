#pragma once

// Flattening stage: carry a plate solution through the conformal chart.
//
// With w = u∘Φ the physical equation B(Δ²u + ã·∇Δu + q̃₂(u)) = 0 turns into
// the normalized form (leading Δ² coefficient one)
//
//   ℒ(w) = Δ²w + b·∇Δw + Q₂(w) = 0   in R,
//   b = |∇φ|²(2∇(|∇φ|⁻²) + (DΦ)⁻¹(ã∘Φ)),
//
// and the boundary pair u = 0, moment = 0 becomes w = 0 together with the
// oblique condition Δw + γ(y₁)∂_{y₂}w = 0 on the bottom edge, where
//
//   γ(y₁) = ((1−ν)/2)·|∇φ|²·∂_{y₂}(|∇φ|⁻²) at (y₁, 0).
//
// The exponential twist v = e^{½y₂γ(y₁)}w (inverse w = a·v with
// a = e^{−½y₂γ(y₁)}) converts the oblique condition into the clean pair
// v = Δv = 0, at the price of the drift 4∇a/a + b and a second-order
// remainder p₂ in the interior equation.
//
// Q₂ and p₂ are never expanded in closed form.  The full transformed operator
// is evaluated numerically — nested laplacians for (Δ²u)∘Φ, M = (DΦ)⁻¹
// compositions for the physical gradient and Hessian — and identified leading
// terms are subtracted where a remainder is wanted.  The same evaluator also
// serves constant-coefficient model operators (flat chart, synthetic drift)
// used as oracles.

#include <array>
#include <cmath>

#include "plateuc/conformal.hpp"
#include "plateuc/material.hpp"

namespace plateuc {

struct TwistData {
    Func1D gamma;  // oblique-condition coefficient along the bottom edge
    GridField a;   // e^{−½y₂γ(y₁)} sampled on the working grid
};

struct FlattenedOperator {
    Grid grid;
    GridField inv_factor;  // |∇φ|⁻² samples (identically 1 for model operators)
    GridField b1, b2;      // drift vector samples
    double drift_sup = 0.0;

    bool chart_based = false;
    ConformalChart chart;          // set when chart_based
    ScalarFunc bending, poisson;   // physical material fields (chart_based)
    ExpandedCoefficients physical; // ã and q̃₂ coefficients (chart_based)

    // closed-form drift b = −2∇|∇φ|²/|∇φ|² + (DΦ)ᵀ(ã∘Φ)
    std::array<double, 2> drift_at(double y1, double y2) const {
        if (!chart_based) throw invalid_parameter("model operator has no closed-form drift");
        std::complex<double> d = chart.Fp({y1, y2});
        double q = std::norm(d);
        if (q < 1e-24) throw numerical_failure("degenerate chart Jacobian in drift");
        auto gg = chart.grad_phi_sq_gradient(y1, y2);
        auto x = chart.map(y1, y2);
        double a1 = physical.drift_x(x[0], x[1]), a2 = physical.drift_y(x[0], x[1]);
        return {-2.0 * gg[0] / q + d.real() * a1 + d.imag() * a2,
                -2.0 * gg[1] / q - d.imag() * a1 + d.real() * a2};
    }
};

// One-sided 3-point first derivative at the left end of [0, ∞), order 2.
inline double edge_derivative(const Func1D& f, double step) {
    if (!(step > 0)) throw invalid_parameter("edge derivative needs a positive step");
    return (-3.0 * f(0.0) + 4.0 * f(step) - f(2.0 * step)) / (2.0 * step);
}

// γ from an arbitrary conformal-factor field: ((1−ν)/2)·q·∂⁺_{y₂}(q⁻¹) at
// (y₁, 0), with the one-sided edge stencil.  Split out so synthetic factor
// profiles can exercise the same code path as real charts.
inline Func1D gamma_from_factor(ScalarFunc factor_sq, Func1D nu_edge, double step) {
    return [factor_sq, nu_edge, step](double y1) {
        double q0 = factor_sq(y1, 0.0);
        if (!(q0 > 0)) throw numerical_failure("conformal factor vanishes on the edge");
        double dinv = edge_derivative(
            [&factor_sq, y1](double y2) { return 1.0 / factor_sq(y1, y2); }, step);
        return 0.5 * (1.0 - nu_edge(y1)) * q0 * dinv;
    };
}

inline TwistData make_twist(Func1D gamma, const Grid& grid) {
    TwistData t;
    t.gamma = std::move(gamma);
    t.a = GridField(grid);
    for (int i = 0; i < grid.nx; ++i) {
        double g = t.gamma(grid.x(i));
        if (!std::isfinite(g)) throw numerical_failure("twist coefficient is not finite");
        for (int j = 0; j < grid.ny; ++j) t.a.at(i, j) = std::exp(-0.5 * grid.y(j) * g);
    }
    return t;
}

inline TwistData gamma_coefficient(const ConformalChart& chart, const PlateConstants& pc) {
    if (chart.grid.nx < 2) throw invalid_parameter("chart has no sampling grid");
    ConformalChart c = chart;
    ScalarFunc nu = pc.poisson;
    double step = chart.grid.hy();
    Func1D nu_edge = [c, nu](double y1) {
        auto x = c.map(y1, 0.0);
        return nu(x[0], x[1]);
    };
    ScalarFunc factor = [c](double y1, double y2) { return c.grad_phi_sq(y1, y2); };
    return make_twist(gamma_from_factor(factor, nu_edge, step), chart.grid);
}

inline TwistData constant_twist(const Grid& grid, double gamma_value) {
    return make_twist([gamma_value](double) { return gamma_value; }, grid);
}

// v = e^{½y₂γ}w = w/a.  The edge row is untouched: a(y₁,0) = 1 exactly.
inline GridField to_v(const GridField& w, const TwistData& twist) {
    if (!(w.grid == twist.a.grid)) throw invalid_parameter("field not on the twist grid");
    GridField v = w;
    for (std::size_t n = 0; n < v.v.size(); ++n) v.v[n] /= twist.a.v[n];
    return v;
}

inline GridField from_v(const GridField& v, const TwistData& twist) {
    if (!(v.grid == twist.a.grid)) throw invalid_parameter("field not on the twist grid");
    GridField w = v;
    for (std::size_t n = 0; n < w.v.size(); ++n) w.v[n] *= twist.a.v[n];
    return w;
}

inline FlattenedOperator assemble_flattened_operator(const ConformalChart& chart,
                                                     const PlateConstants& pc) {
    if (chart.grid.nx < 2) throw invalid_parameter("chart has no sampling grid");
    if (!pc.bending || !pc.poisson) throw invalid_parameter("plate constants not derived");

    FlattenedOperator op;
    op.chart_based = true;
    op.chart = chart;
    op.grid = chart.grid;
    op.bending = pc.bending;
    op.poisson = pc.poisson;

    double xmin = chart.phi.v[0], xmax = xmin, ymin = chart.psi.v[0], ymax = ymin;
    for (std::size_t n = 0; n < chart.phi.v.size(); ++n) {
        xmin = std::min(xmin, chart.phi.v[n]);
        xmax = std::max(xmax, chart.phi.v[n]);
        ymin = std::min(ymin, chart.psi.v[n]);
        ymax = std::max(ymax, chart.psi.v[n]);
    }
    op.physical = expanded_coefficients(
        pc, Grid(17, 17, xmin, xmax + 1e-12, ymin, ymax + 1e-12));

    op.inv_factor = GridField(op.grid);
    op.b1 = GridField(op.grid);
    op.b2 = GridField(op.grid);
    for (int j = 0; j < op.grid.ny; ++j)
        for (int i = 0; i < op.grid.nx; ++i) {
            double y1 = op.grid.x(i), y2 = op.grid.y(j);
            double q = chart.grad_phi_sq(y1, y2);
            if (!(std::sqrt(q) >= 1e-12))
                throw numerical_failure("degenerate chart: |DPhi| below 1e-12 at (" +
                                        std::to_string(y1) + ", " + std::to_string(y2) + ")");
            op.inv_factor.at(i, j) = 1.0 / q;
            auto b = op.drift_at(y1, y2);
            op.b1.at(i, j) = b[0];
            op.b2.at(i, j) = b[1];
            op.drift_sup = std::max(op.drift_sup, std::hypot(b[0], b[1]));
        }
    return op;
}

// Constant-coefficient model: ℒ = Δ² + drift·∇Δ, unit conformal factor.
inline FlattenedOperator constant_coefficient_operator(const Grid& grid,
                                                       std::array<double, 2> drift) {
    FlattenedOperator op;
    op.grid = grid;
    op.inv_factor = GridField(grid);
    op.b1 = GridField(grid);
    op.b2 = GridField(grid);
    for (std::size_t n = 0; n < op.inv_factor.v.size(); ++n) {
        op.inv_factor.v[n] = 1.0;
        op.b1.v[n] = drift[0];
        op.b2.v[n] = drift[1];
    }
    op.drift_sup = std::hypot(drift[0], drift[1]);
    return op;
}

// ℒ_num(w): the full transformed operator, evaluated chart-side.
//   ℒ(w) = |∇φ|⁴·[ (Δ²u)∘Φ + (ã∘Φ)·(∇Δu)∘Φ + (q̃₂u)∘Φ ]
// with (Δu)∘Φ = |∇φ|⁻²Δw, (Δ²u)∘Φ = |∇φ|⁻²Δ(|∇φ|⁻²Δw),
// (∇Δu)∘Φ = Mᵀ∇(|∇φ|⁻²Δw) and (∂²ₗₖu)∘Φ = m_hl ∂_h(m_sk ∂_s w).
inline GridField transformed_operator(const FlattenedOperator& op, const GridField& w) {
    if (!(w.grid == op.grid)) throw invalid_parameter("field not on the operator grid");
    const Grid& g = op.grid;
    GridField lw = laplacian(w);
    GridField out(g);

    if (!op.chart_based) {
        GridField llw = laplacian(lw);
        GridField lx = deriv(lw, 0, 1, 4), ly = deriv(lw, 1, 1, 4);
        for (std::size_t n = 0; n < out.v.size(); ++n)
            out.v[n] = llw.v[n] + op.b1.v[n] * lx.v[n] + op.b2.v[n] * ly.v[n];
        return out;
    }

    GridField lap_u(g);
    for (std::size_t n = 0; n < lap_u.v.size(); ++n)
        lap_u.v[n] = op.inv_factor.v[n] * lw.v[n];
    GridField bl = laplacian(lap_u);
    GridField lx = deriv(lap_u, 0, 1, 4), ly = deriv(lap_u, 1, 1, 4);

    GridField wx = deriv(w, 0, 1, 4), wy = deriv(w, 1, 1, 4);
    GridField G1(g), G2(g);
    std::vector<std::array<double, 4>> M(g.size());
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            std::size_t n = g.index(i, j);
            M[n] = op.chart.inverse_jacobian_at(g.x(i), g.y(j));
            G1.v[n] = M[n][0] * wx.v[n] + M[n][2] * wy.v[n];
            G2.v[n] = M[n][1] * wx.v[n] + M[n][3] * wy.v[n];
        }
    GridField G1x = deriv(G1, 0, 1, 4), G1y = deriv(G1, 1, 1, 4);
    GridField G2x = deriv(G2, 0, 1, 4), G2y = deriv(G2, 1, 1, 4);

    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i) {
            std::size_t n = g.index(i, j);
            const auto& m = M[n];
            double H11 = m[0] * G1x.v[n] + m[2] * G1y.v[n];
            double H21 = m[1] * G1x.v[n] + m[3] * G1y.v[n];
            double H12 = m[0] * G2x.v[n] + m[2] * G2y.v[n];
            double H22 = m[1] * G2x.v[n] + m[3] * G2y.v[n];
            auto x = op.chart.map(g.x(i), g.y(j));
            double a1 = op.physical.drift_x(x[0], x[1]);
            double a2 = op.physical.drift_y(x[0], x[1]);
            double gl1 = m[0] * lx.v[n] + m[2] * ly.v[n];
            double gl2 = m[1] * lx.v[n] + m[3] * ly.v[n];
            double q2t = op.physical.hessian_coeff[0](x[0], x[1]) * H11 +
                         op.physical.hessian_coeff[1](x[0], x[1]) * H12 +
                         op.physical.hessian_coeff[2](x[0], x[1]) * H21 +
                         op.physical.hessian_coeff[3](x[0], x[1]) * H22;
            double inv = op.inv_factor.v[n];
            out.v[n] = (inv * bl.v[n] + a1 * gl1 + a2 * gl2 + q2t) / (inv * inv);
        }
    return out;
}

// Q₂ remainder: ℒ_num(w) minus the identified leading terms Δ²w + b·∇Δw,
// with Δ² evaluated as nested laplacians to match the operator composition.
inline GridField q2_remainder(const FlattenedOperator& op, const GridField& w) {
    GridField out = transformed_operator(op, w);
    GridField lw = laplacian(w);
    GridField llw = laplacian(lw);
    GridField lx = deriv(lw, 0, 1, 4), ly = deriv(lw, 1, 1, 4);
    for (std::size_t n = 0; n < out.v.size(); ++n)
        out.v[n] -= llw.v[n] + op.b1.v[n] * lx.v[n] + op.b2.v[n] * ly.v[n];
    return out;
}

struct FlattenReport {
    double w_edge_max = 0;        // max |w(y₁,0)|
    double oblique_edge_max = 0;  // max |Δw + γ∂_{y₂}w| on the edge
    double v_edge_max = 0;        // max |v(y₁,0)|
    double lap_v_edge_max = 0;    // max |Δv| on the edge
    double edge_identity_gap = 0; // max |(Δw + γ∂_{y₂}w) − Δv| on the edge
    double interior_max = 0;      // residual of the v-equation, sup over interior
    double interior_l2 = 0;       // same residual in the scaled l2 norm
};

// Residuals of the flattened problem pair.  The interior residual is the
// v-equation Δ²v + (4∇a/a + b)·∇Δv + p₂(v); by the twist identities this
// equals ℒ(w)/a with w = a·v, which is how it is evaluated (p₂ is the implied
// remainder, never formed).  Interior norms skip a 4-node margin where the
// shifted stencils of the nested composition lose smoothness.
inline FlattenReport boundary_residuals_flattened(const GridField& w, const GridField& v,
                                                  const TwistData& twist,
                                                  const FlattenedOperator& op) {
    if (!(w.grid == op.grid) || !(v.grid == op.grid) || !(twist.a.grid == op.grid))
        throw invalid_parameter("report fields must share the operator grid");
    const Grid& g = op.grid;
    FlattenReport r;

    GridField lw = laplacian(w), wy = deriv(w, 1, 1, 4), lv = laplacian(v);
    for (int i = 0; i < g.nx; ++i) {
        double oblique = lw.at(i, 0) + twist.gamma(g.x(i)) * wy.at(i, 0);
        r.w_edge_max = std::max(r.w_edge_max, std::abs(w.at(i, 0)));
        r.oblique_edge_max = std::max(r.oblique_edge_max, std::abs(oblique));
        r.v_edge_max = std::max(r.v_edge_max, std::abs(v.at(i, 0)));
        r.lap_v_edge_max = std::max(r.lap_v_edge_max, std::abs(lv.at(i, 0)));
        r.edge_identity_gap = std::max(r.edge_identity_gap, std::abs(oblique - lv.at(i, 0)));
    }

    GridField res = transformed_operator(op, w);
    double sum = 0.0;
    for (int j = 4; j < g.ny - 4; ++j)
        for (int i = 4; i < g.nx - 4; ++i) {
            double val = res.at(i, j) / twist.a.at(i, j);
            r.interior_max = std::max(r.interior_max, std::abs(val));
            sum += val * val;
        }
    r.interior_l2 = std::sqrt(sum * g.hx() * g.hy());
    return r;
}

}  // namespace plateuc
