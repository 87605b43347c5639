#pragma once

// Structured rectangular grids, nodal fields, interpolation, and field file I/O.
//
// File format: a short text header followed by a row-major float64 payload,
// either text (one grid row per line, %.17g) or raw little-endian binary.
//
//   plateuc-field 1
//   <nx> <ny>
//   <x0> <x1> <y0> <y1>
//   mask <0|1>
//   format <text|binary>
//   <payload> [<mask payload>]

#include <cstdint>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <vector>

#include "plateuc/common.hpp"

namespace plateuc {

struct Grid {
    int nx = 0, ny = 0;
    double x0 = 0, x1 = 0, y0 = 0, y1 = 0;

    Grid() = default;
    Grid(int nx_, int ny_, double x0_, double x1_, double y0_, double y1_)
        : nx(nx_), ny(ny_), x0(x0_), x1(x1_), y0(y0_), y1(y1_) {
        if (nx < 2 || ny < 2 || !(x1 > x0) || !(y1 > y0))
            throw invalid_parameter("degenerate grid");
    }

    double hx() const { return (x1 - x0) / (nx - 1); }
    double hy() const { return (y1 - y0) / (ny - 1); }
    double x(int i) const { return x0 + i * hx(); }
    double y(int j) const { return y0 + j * hy(); }
    std::size_t size() const { return static_cast<std::size_t>(nx) * ny; }
    std::size_t index(int i, int j) const { return static_cast<std::size_t>(j) * nx + i; }

    bool contains(double px, double py, double tol = 0.0) const {
        return px >= x0 - tol && px <= x1 + tol && py >= y0 - tol && py <= y1 + tol;
    }

    bool operator==(const Grid& o) const {
        return nx == o.nx && ny == o.ny && x0 == o.x0 && x1 == o.x1 && y0 == o.y0 && y1 == o.y1;
    }
};

struct GridField {
    Grid grid;
    std::vector<double> v;
    std::vector<std::uint8_t> mask;  // empty, or one flag per node

    GridField() = default;
    explicit GridField(const Grid& g) : grid(g), v(g.size(), 0.0) {}

    double& at(int i, int j) { return v[grid.index(i, j)]; }
    double at(int i, int j) const { return v[grid.index(i, j)]; }
    bool has_mask() const { return !mask.empty(); }
    std::uint8_t mask_at(int i, int j) const { return mask.empty() ? 1 : mask[grid.index(i, j)]; }

    static GridField sample(const Grid& g, const ScalarFunc& f) {
        GridField out(g);
        for (int j = 0; j < g.ny; ++j)
            for (int i = 0; i < g.nx; ++i)
                out.at(i, j) = f(g.x(i), g.y(j));
        return out;
    }

    // Bilinear interpolation; points must lie inside the grid rectangle.
    double bilinear(double px, double py) const {
        locate(px, py);
        double fx = (px - grid.x0) / grid.hx();
        double fy = (py - grid.y0) / grid.hy();
        int i = clamp_cell(static_cast<int>(std::floor(fx)), grid.nx);
        int j = clamp_cell(static_cast<int>(std::floor(fy)), grid.ny);
        double tx = fx - i, ty = fy - j;
        return (1 - tx) * (1 - ty) * at(i, j) + tx * (1 - ty) * at(i + 1, j) +
               (1 - tx) * ty * at(i, j + 1) + tx * ty * at(i + 1, j + 1);
    }

    // Bicubic interpolation: tensor-product 4-point Lagrange on the enclosing
    // node window, clamped at the edges of the grid.
    double bicubic(double px, double py) const {
        locate(px, py);
        double fx = (px - grid.x0) / grid.hx();
        double fy = (py - grid.y0) / grid.hy();
        int i = clamp_cell(static_cast<int>(std::floor(fx)), grid.nx);
        int j = clamp_cell(static_cast<int>(std::floor(fy)), grid.ny);
        int i0 = std::min(std::max(i - 1, 0), std::max(grid.nx - 4, 0));
        int j0 = std::min(std::max(j - 1, 0), std::max(grid.ny - 4, 0));
        double wx[4], wy[4];
        lagrange4(fx - i0, wx);
        lagrange4(fy - j0, wy);
        double s = 0.0;
        for (int b = 0; b < 4; ++b) {
            double row = 0.0;
            for (int a = 0; a < 4; ++a) row += wx[a] * at(i0 + a, j0 + b);
            s += wy[b] * row;
        }
        return s;
    }

    ScalarFunc bicubic_eval() const {
        const GridField* self = this;
        return [self](double x, double y) { return self->bicubic(x, y); };
    }

  private:
    void locate(double px, double py) const {
        double tol = 1e-9 * std::max(grid.x1 - grid.x0, grid.y1 - grid.y0);
        if (!grid.contains(px, py, tol))
            throw numerical_failure("interpolation point (" + std::to_string(px) + ", " +
                                    std::to_string(py) + ") outside grid hull");
    }

    static int clamp_cell(int i, int n) { return std::min(std::max(i, 0), n - 2); }

    // weights of cubic Lagrange interpolation at local coordinate t in [0,3]
    static void lagrange4(double t, double w[4]) {
        w[0] = -(t - 1) * (t - 2) * (t - 3) / 6.0;
        w[1] = t * (t - 2) * (t - 3) / 2.0;
        w[2] = -t * (t - 1) * (t - 3) / 2.0;
        w[3] = t * (t - 1) * (t - 2) / 6.0;
    }
};

inline void write_field(const std::string& path, const GridField& f, bool binary = false) {
    std::ofstream out(path, binary ? std::ios::binary : std::ios::out);
    if (!out) throw numerical_failure("cannot open '" + path + "' for writing");
    const Grid& g = f.grid;
    char head[256];
    std::snprintf(head, sizeof head, "plateuc-field 1\n%d %d\n%.17g %.17g %.17g %.17g\nmask %d\nformat %s\n",
                  g.nx, g.ny, g.x0, g.x1, g.y0, g.y1, f.has_mask() ? 1 : 0, binary ? "binary" : "text");
    out << head;
    if (binary) {
        out.write(reinterpret_cast<const char*>(f.v.data()),
                  static_cast<std::streamsize>(f.v.size() * sizeof(double)));
        if (f.has_mask())
            out.write(reinterpret_cast<const char*>(f.mask.data()),
                      static_cast<std::streamsize>(f.mask.size()));
    } else {
        char buf[40];
        for (int j = 0; j < g.ny; ++j) {
            for (int i = 0; i < g.nx; ++i) {
                std::snprintf(buf, sizeof buf, "%.17g", f.at(i, j));
                out << buf << (i + 1 < g.nx ? ' ' : '\n');
            }
        }
        if (f.has_mask()) {
            for (int j = 0; j < g.ny; ++j)
                for (int i = 0; i < g.nx; ++i)
                    out << int(f.mask[g.index(i, j)]) << (i + 1 < g.nx ? ' ' : '\n');
        }
    }
    if (!out) throw numerical_failure("write failed for '" + path + "'");
}

inline GridField read_field(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw numerical_failure("cannot open field file '" + path + "'");
    std::string tag, fmt_key, fmt;
    int version = 0;
    in >> tag >> version;
    if (tag != "plateuc-field" || version != 1)
        throw numerical_failure("'" + path + "' is not a version-1 field file");
    Grid g;
    int has_mask = 0;
    std::string mask_key;
    in >> g.nx >> g.ny >> g.x0 >> g.x1 >> g.y0 >> g.y1 >> mask_key >> has_mask >> fmt_key >> fmt;
    if (!in || mask_key != "mask" || fmt_key != "format" || g.nx < 2 || g.ny < 2)
        throw numerical_failure("malformed field header in '" + path + "'");
    GridField f(g);
    if (has_mask) f.mask.assign(g.size(), 0);
    if (fmt == "binary") {
        in.get();  // newline after header
        in.read(reinterpret_cast<char*>(f.v.data()),
                static_cast<std::streamsize>(f.v.size() * sizeof(double)));
        if (has_mask)
            in.read(reinterpret_cast<char*>(f.mask.data()),
                    static_cast<std::streamsize>(f.mask.size()));
    } else if (fmt == "text") {
        for (double& x : f.v) in >> x;
        if (has_mask) {
            int m;
            for (auto& b : f.mask) {
                in >> m;
                b = static_cast<std::uint8_t>(m);
            }
        }
    } else {
        throw numerical_failure("unknown payload format '" + fmt + "' in '" + path + "'");
    }
    if (!in) throw numerical_failure("truncated payload in '" + path + "'");
    return f;
}

}  // namespace plateuc
