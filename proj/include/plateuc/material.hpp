#pragma once

// Material layer: Lame moduli -> plate constants (Young modulus, Poisson
// ratio, bending stiffness), the fourth-order stiffness tensor, and the
// coefficients of the expanded fourth-order operator
//
//   B * (biharmonic(u) + drift . grad(laplacian(u)) + sum_ij c_ij d2_ij u)
//
// with drift = 2 grad(B)/B and c_ij = d2_ij(B(1-nu) + nu B delta_ij)/B.
//
// The bending stiffness has two equivalent closed forms,
//   h^3/12 * E/(1-nu^2)   and   h^3/3 * mu(mu+lambda)/(2mu+lambda);
// every evaluation computes both and insists they agree, which catches
// inconsistent moduli early.

#include <array>
#include <sstream>

#include "plateuc/fd.hpp"
#include "plateuc/grid.hpp"

namespace plateuc {

struct LameField {
    ScalarFunc lambda, mu;
    double thickness = 1.0;
    // constants of the strong convexity condition and the regularity bound:
    // mu >= alpha0, 2mu+3lambda >= gamma0, C2 norms <= Lambda0
    double alpha0 = 0.0;
    double gamma0 = 0.0;
    double Lambda0 = std::numeric_limits<double>::infinity();
};

struct PlateConstants {
    ScalarFunc youngs, poisson, bending;
    double thickness = 1.0;
};

inline constexpr double bending_dual_rel_tol = 1e-12;

inline PlateConstants derive_plate_constants(const LameField& lame) {
    if (!lame.lambda || !lame.mu) throw invalid_parameter("Lame moduli not set");
    if (!(lame.thickness > 0)) throw invalid_parameter("plate thickness must be positive");
    ScalarFunc lam = lame.lambda, mu = lame.mu;
    double h = lame.thickness;

    auto sum_guard = [](double l, double m, double x, double y) {
        if (!(m + l > 0)) {
            std::ostringstream os;
            os << "mu+lambda = " << m + l << " at (" << x << ", " << y
               << "); material outside the convexity range";
            throw numerical_failure(os.str());
        }
    };

    PlateConstants out;
    out.thickness = h;
    out.youngs = [lam, mu, sum_guard](double x, double y) {
        double l = lam(x, y), m = mu(x, y);
        sum_guard(l, m, x, y);
        return m * (2 * m + 3 * l) / (m + l);
    };
    out.poisson = [lam, mu, sum_guard](double x, double y) {
        double l = lam(x, y), m = mu(x, y);
        sum_guard(l, m, x, y);
        return l / (2 * (m + l));
    };
    out.bending = [lam, mu, h, sum_guard](double x, double y) {
        double l = lam(x, y), m = mu(x, y);
        sum_guard(l, m, x, y);
        double E = m * (2 * m + 3 * l) / (m + l);
        double nu = l / (2 * (m + l));
        double b1 = h * h * h / 12.0 * E / (1.0 - nu * nu);
        double b2 = h * h * h / 3.0 * m * (m + l) / (2 * m + l);
        if (std::abs(b1 - b2) > bending_dual_rel_tol * std::max(std::abs(b1), std::abs(b2))) {
            std::ostringstream os;
            os << "bending stiffness formulas disagree at (" << x << ", " << y << "): " << b1
               << " vs " << b2;
            throw numerical_failure(os.str());
        }
        if (!(b2 > 0)) {
            std::ostringstream os;
            os << "non-positive bending stiffness " << b2 << " at (" << x << ", " << y << ")";
            throw numerical_failure(os.str());
        }
        return b2;
    };
    return out;
}

// Degenerate-stiffness screen over a sample grid: any node whose stiffness
// falls below 1e-14 of the grid maximum is treated as numerically zero.
inline void validate_stiffness(const PlateConstants& pc, const Grid& g) {
    GridField b = GridField::sample(g, pc.bending);
    double bmax = 0.0;
    for (double v : b.v) bmax = std::max(bmax, std::abs(v));
    for (int j = 0; j < g.ny; ++j)
        for (int i = 0; i < g.nx; ++i)
            if (std::abs(b.at(i, j)) < 1e-14 * bmax) {
                std::ostringstream os;
                os << "degenerate bending stiffness at node (" << i << ", " << j << "), ("
                   << g.x(i) << ", " << g.y(j) << "): " << b.at(i, j) << " vs grid max " << bmax;
                throw numerical_failure(os.str());
            }
}

struct ConvexityReport {
    bool convex = false;     // pointwise inequalities hold on the sample grid
    bool regular = false;    // C2 norm surrogate within Lambda0
    double shear_margin = 0.0;   // min(mu - alpha0)
    double bulk_margin = 0.0;    // min(2mu+3lambda - gamma0)
    double sum_min = 0.0;        // min(mu+lambda)
    double sum_lower_bound = 0.0;  // min(alpha0, gamma0/2), implied lower bound
    double c2_norm = 0.0;
    std::array<double, 2> worst_shear{0, 0}, worst_bulk{0, 0};
    std::string message;

    bool ok() const { return convex && regular; }
};

namespace detail {

// sup of |f|, |grad f|, |hess f| approximated by divided differences on the
// sample grid
inline double c2_surrogate(const ScalarFunc& f, const Grid& g) {
    GridField s = GridField::sample(g, f);
    double m = 0.0;
    for (double v : s.v) m = std::max(m, std::abs(v));
    for (GridField d : {deriv(s, 0, 1), deriv(s, 1, 1)})
        for (double v : d.v) m = std::max(m, std::abs(v));
    GridField dx = deriv(s, 0, 1);
    for (GridField d : {deriv(s, 0, 2), deriv(s, 1, 2), deriv(dx, 1, 1)})
        for (double v : d.v) m = std::max(m, std::abs(v));
    return m;
}

}  // namespace detail

inline ConvexityReport check_strong_convexity(const LameField& lame, const Grid& g) {
    ConvexityReport r;
    r.shear_margin = std::numeric_limits<double>::infinity();
    r.bulk_margin = std::numeric_limits<double>::infinity();
    r.sum_min = std::numeric_limits<double>::infinity();
    for (int j = 0; j < g.ny; ++j) {
        for (int i = 0; i < g.nx; ++i) {
            double x = g.x(i), y = g.y(j);
            double l = lame.lambda(x, y), m = lame.mu(x, y);
            if (m - lame.alpha0 < r.shear_margin) {
                r.shear_margin = m - lame.alpha0;
                r.worst_shear = {x, y};
            }
            if (2 * m + 3 * l - lame.gamma0 < r.bulk_margin) {
                r.bulk_margin = 2 * m + 3 * l - lame.gamma0;
                r.worst_bulk = {x, y};
            }
            r.sum_min = std::min(r.sum_min, m + l);
        }
    }
    r.sum_lower_bound = std::min(lame.alpha0, lame.gamma0 / 2.0);
    r.convex = r.shear_margin >= 0 && r.bulk_margin >= 0;
    r.c2_norm = std::max(detail::c2_surrogate(lame.lambda, g), detail::c2_surrogate(lame.mu, g));
    r.regular = r.c2_norm <= lame.Lambda0;
    std::ostringstream os;
    if (!r.convex) {
        if (r.shear_margin < 0)
            os << "shear condition fails at (" << r.worst_shear[0] << ", " << r.worst_shear[1]
               << "), margin " << r.shear_margin << "; ";
        if (r.bulk_margin < 0)
            os << "bulk condition fails at (" << r.worst_bulk[0] << ", " << r.worst_bulk[1]
               << "), margin " << r.bulk_margin << "; ";
    }
    if (!r.regular) os << "C2 surrogate " << r.c2_norm << " exceeds bound " << lame.Lambda0;
    r.message = os.str();
    return r;
}

// c_ijlk = B(1-nu) delta_il delta_jk + B nu delta_ij delta_lk, indices 0-based.
struct StiffnessTensor {
    ScalarFunc bending, poisson;

    double component(int i, int j, int l, int k, double x, double y) const {
        double B = bending(x, y), nu = poisson(x, y);
        double c = 0.0;
        if (i == l && j == k) c += B * (1.0 - nu);
        if (i == j && l == k) c += B * nu;
        return c;
    }

    // sigma_ij = c_ijlk H_lk for a symmetric 2x2 matrix H
    std::array<std::array<double, 2>, 2> contract(const std::array<std::array<double, 2>, 2>& H,
                                                  double x, double y) const {
        double B = bending(x, y), nu = poisson(x, y);
        double tr = H[0][0] + H[1][1];
        std::array<std::array<double, 2>, 2> s{};
        for (int i = 0; i < 2; ++i)
            for (int j = 0; j < 2; ++j)
                s[i][j] = B * (1.0 - nu) * H[i][j] + (i == j ? B * nu * tr : 0.0);
        return s;
    }
};

inline StiffnessTensor stiffness_tensor(const PlateConstants& pc) {
    return StiffnessTensor{pc.bending, pc.poisson};
}

struct ExpandedCoefficients {
    ScalarFunc drift_x, drift_y;               // 2 grad(B)/B
    std::array<ScalarFunc, 4> hessian_coeff;   // c_ij, row-major (00, 01, 10, 11)
    double coeff_sup = 0.0;                    // max_i,j sup |c_ij| over the sample grid
};

inline ExpandedCoefficients expanded_coefficients(const PlateConstants& pc, const Grid& sample) {
    ScalarFunc B = pc.bending, nu = pc.poisson;
    ExpandedCoefficients out;
    out.drift_x = [B](double x, double y) { return 2.0 * fdpoint::d1(B, x, y, 0) / B(x, y); };
    out.drift_y = [B](double x, double y) { return 2.0 * fdpoint::d1(B, x, y, 1) / B(x, y); };
    for (int i = 0; i < 2; ++i) {
        for (int j = 0; j < 2; ++j) {
            // inner field: B(1-nu) off the diagonal, plain B on it
            ScalarFunc inner;
            if (i == j) {
                inner = B;
            } else {
                inner = [B, nu](double x, double y) { return B(x, y) * (1.0 - nu(x, y)); };
            }
            ScalarFunc coeff;
            if (i == j) {
                int axis = i;
                coeff = [inner, B, axis](double x, double y) {
                    return fdpoint::d2(inner, x, y, axis) / B(x, y);
                };
            } else {
                coeff = [inner, B](double x, double y) {
                    return fdpoint::d2_cross(inner, x, y) / B(x, y);
                };
            }
            out.hessian_coeff[2 * i + j] = coeff;
        }
    }
    for (const auto& c : out.hessian_coeff) {
        for (int j = 0; j < sample.ny; ++j)
            for (int i = 0; i < sample.nx; ++i)
                out.coeff_sup = std::max(out.coeff_sup, std::abs(c(sample.x(i), sample.y(j))));
    }
    return out;
}

}  // namespace plateuc
