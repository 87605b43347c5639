#pragma once

// Curved-boundary geometry: the boundary graph profile with its scaled
// regularity norm, the reference domain above the graph, measurement regions
// (discs, half discs, rectangles, optionally clipped to the domain), and the
// quadrature used for all L2 masses.
//
// Quadrature: cells of a lattice anchored at the origin.  Cells entirely
// inside a region use the midpoint rule; cells crossing the region boundary
// are subdivided (8x8 by default) and the subcell centers are tested
// individually.  Anchoring the lattice at the origin makes masses of nested
// regions monotone by construction, since every region sees the same cells
// and subcells.

#include <algorithm>
#include <array>
#include <sstream>
#include <vector>

#include "plateuc/fd.hpp"
#include "plateuc/grid.hpp"

namespace plateuc {

struct BoundaryProfile {
    Func1D g;
    double radius = 1.0;       // half-width of the boundary window
    double shape_bound = 1.0;  // bound M with |g|_norm <= M * radius
    double holder = 0.5;       // Holder exponent of the 4th derivative

    double operator()(double t) const { return g(t); }
    double slope(double t) const { return fdpoint::d1(g, t); }
    double curvature(double t) const { return fdpoint::d2(g, t); }

    // Scaled C^{4,alpha} norm surrogate:
    //   sum_{i<=4} radius^i sup|g^(i)| + radius^(4+alpha) [g^(4)]_alpha,
    // with derivatives by divided differences at two sampling scales and the
    // Holder seminorm sampled over dyadic separations.  Stencil windows shift
    // inward near the ends so the profile is never evaluated outside its
    // window.
    double scaled_norm_surrogate(int nsamples = 257) const {
        auto deriv_at = [this](int m, double t, double step) {
            double base = std::min(std::max(t, -radius + 3 * step), radius - 3 * step);
            std::vector<double> xs(7);
            for (int k = 0; k < 7; ++k) xs[k] = base + (k - 3) * step;
            auto w = fd_weights(m, t, xs);
            double acc = 0.0;
            for (int k = 0; k < 7; ++k) acc += w[k] * g(xs[k]);
            return acc;
        };
        double sup[5] = {0, 0, 0, 0, 0};
        for (double step : {radius / (nsamples - 1.0), radius / 8.0}) {
            for (int m = 0; m <= 4; ++m)
                for (int s = 0; s < nsamples; ++s) {
                    double t = -radius + 2.0 * radius * s / (nsamples - 1);
                    sup[m] = std::max(sup[m], std::abs(deriv_at(m, t, step)));
                }
        }
        double total = 0.0, rpow = 1.0;
        for (int m = 0; m <= 4; ++m, rpow *= radius) total += rpow * sup[m];

        double fine = radius / (nsamples - 1.0);
        std::vector<double> d4(nsamples);
        for (int s = 0; s < nsamples; ++s) {
            double t = -radius + 2.0 * radius * s / (nsamples - 1);
            d4[s] = deriv_at(4, t, fine);
        }
        double seminorm = 0.0;
        for (int gap = 1; gap < nsamples; gap *= 2) {
            for (int s = 0; s + gap < nsamples; ++s) {
                double dt = gap * 2.0 * radius / (nsamples - 1);
                seminorm = std::max(seminorm, std::abs(d4[s + gap] - d4[s]) / std::pow(dt, holder));
            }
        }
        return total + std::pow(radius, 4 + holder) * seminorm;
    }

    void validate() const {
        if (!g) throw invalid_parameter("boundary profile not set");
        if (!(radius > 0) || !(shape_bound > 0) || !(holder > 0) || holder > 1)
            throw invalid_parameter("boundary profile constants out of range");
        if (std::abs(g(0.0)) > 1e-10)
            throw invalid_parameter("profile must vanish at the origin; g(0) = " +
                                    std::to_string(g(0.0)));
        if (std::abs(fdpoint::d1(g, 0.0)) > 1e-10)
            throw invalid_parameter("profile must be tangent at the origin; g'(0) = " +
                                    std::to_string(fdpoint::d1(g, 0.0)));
        double norm = scaled_norm_surrogate();
        if (norm > shape_bound * radius)
            throw invalid_parameter("profile norm surrogate " + std::to_string(norm) +
                                    " exceeds bound " + std::to_string(shape_bound * radius));
    }

};

class DomainChart;

struct Region {
    enum class Shape { disc, upper_half_disc, rectangle };
    Shape shape = Shape::disc;
    double cx = 0, cy = 0, radius = 1;       // disc variants
    double rx0 = 0, rx1 = 0, ry0 = 0, ry1 = 0;  // rectangle
    const DomainChart* clip = nullptr;       // intersect with the domain when set

    static Region disc(double cx, double cy, double r, const DomainChart* clip = nullptr) {
        Region out;
        out.shape = Shape::disc;
        out.cx = cx;
        out.cy = cy;
        out.radius = r;
        out.clip = clip;
        return out;
    }
    static Region upper_half_disc(double cx, double cy, double r,
                                  const DomainChart* clip = nullptr) {
        Region out = disc(cx, cy, r, clip);
        out.shape = Shape::upper_half_disc;
        return out;
    }
    static Region rectangle(double x0, double x1, double y0, double y1,
                            const DomainChart* clip = nullptr) {
        Region out;
        out.shape = Shape::rectangle;
        out.rx0 = x0;
        out.rx1 = x1;
        out.ry0 = y0;
        out.ry1 = y1;
        out.clip = clip;
        return out;
    }

    bool contains(double x, double y) const;
    std::array<double, 4> bbox() const;
    // +1 fully inside, -1 fully outside, 0 cut
    int classify_cell(double x0, double x1, double y0, double y1) const;
};

class DomainChart {
  public:
    BoundaryProfile profile;

    DomainChart() = default;
    explicit DomainChart(const BoundaryProfile& p) : profile(p) {
        profile.validate();
        double r = profile.radius, top = 2.0 * profile.shape_bound * profile.radius;
        rect_ = {-r, r, -top, top};
    }

    const std::array<double, 4>& bounding_rect() const { return rect_; }

    bool inside(double x, double y) const {
        return x > rect_[0] && x < rect_[1] && y > rect_[2] && y < rect_[3] && y > profile.g(x);
    }

    std::vector<std::array<double, 2>> boundary_samples(int n) const {
        std::vector<std::array<double, 2>> pts;
        pts.reserve(n);
        for (int i = 0; i < n; ++i) {
            double t = -profile.radius + 2.0 * profile.radius * i / (n - 1);
            pts.push_back({t, profile.g(t)});
        }
        return pts;
    }

    // optional structured node mask over the bounding rectangle
    void attach_grid(int nx, int ny) {
        if (nx < 16 || ny < 16)
            throw invalid_parameter("domain grid needs at least 16 nodes per axis");
        grid_ = Grid(nx, ny, rect_[0], rect_[1], rect_[2], rect_[3]);
        mask_.assign(grid_.size(), 0);
        for (int j = 0; j < ny; ++j)
            for (int i = 0; i < nx; ++i)
                mask_[grid_.index(i, j)] = inside(grid_.x(i), grid_.y(j)) ? 1 : 0;
    }

    bool has_grid() const { return grid_.nx > 0; }
    const Grid& grid() const {
        if (!has_grid()) throw invalid_parameter("domain has no attached grid");
        return grid_;
    }
    bool interior_node(int i, int j) const { return mask_[grid_.index(i, j)] != 0; }

    // conservative cell classification against the domain
    int classify_cell(double x0, double x1, double y0, double y1) const {
        if (x1 <= rect_[0] || x0 >= rect_[1] || y1 <= rect_[2] || y0 >= rect_[3]) return -1;
        bool rect_full = x0 >= rect_[0] && x1 <= rect_[1] && y0 >= rect_[2] && y1 <= rect_[3];
        double gmin = std::numeric_limits<double>::infinity(), gmax = -gmin;
        for (int k = 0; k <= 4; ++k) {
            double val = profile.g(x0 + (x1 - x0) * k / 4.0);
            gmin = std::min(gmin, val);
            gmax = std::max(gmax, val);
        }
        double slack = (gmax - gmin) + 1e-12;
        if (rect_full && y0 >= gmax + slack) return +1;
        if (y1 <= gmin - slack) return -1;
        return 0;
    }

  private:
    std::array<double, 4> rect_{-1, 1, -2, 2};
    Grid grid_;
    std::vector<std::uint8_t> mask_;
};

inline DomainChart build_domain(const BoundaryProfile& p) { return DomainChart(p); }

inline DomainChart build_domain(const BoundaryProfile& p, int nx, int ny) {
    DomainChart chart(p);
    chart.attach_grid(nx, ny);
    return chart;
}

inline bool Region::contains(double x, double y) const {
    bool in;
    switch (shape) {
        case Shape::disc:
            in = (x - cx) * (x - cx) + (y - cy) * (y - cy) < radius * radius;
            break;
        case Shape::upper_half_disc:
            in = y > cy && (x - cx) * (x - cx) + (y - cy) * (y - cy) < radius * radius;
            break;
        case Shape::rectangle:
            in = x > rx0 && x < rx1 && y > ry0 && y < ry1;
            break;
        default:
            in = false;
    }
    if (in && clip) in = clip->inside(x, y);
    return in;
}

inline std::array<double, 4> Region::bbox() const {
    std::array<double, 4> b;
    switch (shape) {
        case Shape::disc: b = {cx - radius, cx + radius, cy - radius, cy + radius}; break;
        case Shape::upper_half_disc: b = {cx - radius, cx + radius, cy, cy + radius}; break;
        case Shape::rectangle: b = {rx0, rx1, ry0, ry1}; break;
        default: b = {0, 0, 0, 0};
    }
    if (clip) {
        const auto& r = clip->bounding_rect();
        b[0] = std::max(b[0], r[0]);
        b[1] = std::min(b[1], r[1]);
        b[2] = std::max(b[2], r[2]);
        b[3] = std::min(b[3], r[3]);
    }
    return b;
}

inline int Region::classify_cell(double x0, double x1, double y0, double y1) const {
    double ccx = 0.5 * (x0 + x1), ccy = 0.5 * (y0 + y1);
    double half_diag = 0.5 * std::hypot(x1 - x0, y1 - y0);
    int s;
    switch (shape) {
        case Shape::disc: {
            double d = std::hypot(ccx - cx, ccy - cy);
            s = d + half_diag <= radius ? +1 : (d - half_diag >= radius ? -1 : 0);
            break;
        }
        case Shape::upper_half_disc: {
            double d = std::hypot(ccx - cx, ccy - cy);
            int sd = d + half_diag <= radius ? +1 : (d - half_diag >= radius ? -1 : 0);
            int sy = y0 >= cy ? +1 : (y1 <= cy ? -1 : 0);
            s = (sd == -1 || sy == -1) ? -1 : (sd == +1 && sy == +1 ? +1 : 0);
            break;
        }
        case Shape::rectangle: {
            if (x1 <= rx0 || x0 >= rx1 || y1 <= ry0 || y0 >= ry1) s = -1;
            else if (x0 >= rx0 && x1 <= rx1 && y0 >= ry0 && y1 <= ry1) s = +1;
            else s = 0;
            break;
        }
        default: s = -1;
    }
    if (s == -1 || !clip) return s;
    int sc = clip->classify_cell(x0, x1, y0, y1);
    if (sc == -1) return -1;
    return (s == +1 && sc == +1) ? +1 : 0;
}

struct Quadrature {
    double cell = 1.0 / 128.0;  // lattice spacing
    int subdiv = 8;             // cut cells are sampled subdiv x subdiv
};

struct MassResult {
    double value = 0.0;
    bool empty = false;       // no cell intersected the region
    long cells = 0, cut_cells = 0;
};

// integral of f^2 over the region
inline MassResult region_mass(const ScalarFunc& f, const Region& region, const Quadrature& quad) {
    if (!(quad.cell > 0) || quad.subdiv < 1) throw invalid_parameter("bad quadrature parameters");
    const double h = quad.cell;
    const auto bb = region.bbox();
    MassResult out;
    if (!(bb[1] > bb[0]) || !(bb[3] > bb[2])) {
        out.empty = true;
        return out;
    }
    const long kx0 = static_cast<long>(std::floor(bb[0] / h)) - 1;
    const long kx1 = static_cast<long>(std::ceil(bb[1] / h)) + 1;
    const long ky0 = static_cast<long>(std::floor(bb[2] / h)) - 1;
    const long ky1 = static_cast<long>(std::ceil(bb[3] / h)) + 1;
    const int ns = quad.subdiv;
    const double sub_w = h * h / (ns * ns);
    double total = 0.0, comp = 0.0;
    auto add = [&](double t) {
        double y = t - comp;
        double s = total + y;
        comp = (s - total) - y;
        total = s;
    };
    for (long ky = ky0; ky < ky1; ++ky) {
        for (long kx = kx0; kx < kx1; ++kx) {
            double x0 = kx * h, x1 = (kx + 1) * h, y0 = ky * h, y1 = (ky + 1) * h;
            int cls = region.classify_cell(x0, x1, y0, y1);
            if (cls == -1) continue;
            if (cls == +1) {
                double fc = f(0.5 * (x0 + x1), 0.5 * (y0 + y1));
                add(fc * fc * h * h);
                ++out.cells;
            } else {
                ++out.cut_cells;
                bool any = false;
                for (int b = 0; b < ns; ++b) {
                    double sy = y0 + (b + 0.5) * h / ns;
                    for (int a = 0; a < ns; ++a) {
                        double sx = x0 + (a + 0.5) * h / ns;
                        if (!region.contains(sx, sy)) continue;
                        double fv = f(sx, sy);
                        add(fv * fv * sub_w);
                        any = true;
                    }
                }
                if (any) ++out.cells;
            }
        }
    }
    out.value = total;
    out.empty = out.cells == 0;
    return out;
}

// area of the domain within its bounding rectangle
inline double domain_area(const DomainChart& domain, double cell = 1.0 / 256.0) {
    const auto& r = domain.bounding_rect();
    Region whole = Region::rectangle(r[0], r[1], r[2], r[3], &domain);
    return region_mass([](double, double) { return 1.0; }, whole, Quadrature{cell, 8}).value;
}

}  // namespace plateuc
