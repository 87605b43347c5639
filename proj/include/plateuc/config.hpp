#pragma once

// Pipeline configuration: flat text with named blocks and key = value lines.
// Values are arithmetic expressions (numbers included); field-valued keys keep
// their expression so they can be evaluated pointwise later.  Unknown blocks
// or keys are rejected to catch typos before any compute starts.

#include <cctype>
#include <fstream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "plateuc/expr.hpp"
#include "plateuc/geometry.hpp"
#include "plateuc/material.hpp"

namespace plateuc {

struct ConfigFile {
    std::map<std::string, std::map<std::string, std::string>> blocks;
    std::string raw;
};

namespace detail {

inline std::string trim(const std::string& s) {
    std::size_t a = s.find_first_not_of(" \t\r");
    if (a == std::string::npos) return "";
    std::size_t b = s.find_last_not_of(" \t\r");
    return s.substr(a, b - a + 1);
}

}  // namespace detail

inline ConfigFile parse_config(const std::string& text) {
    ConfigFile cf;
    cf.raw = text;
    std::istringstream in(text);
    std::string line, block;
    int lineno = 0;
    while (std::getline(in, line)) {
        ++lineno;
        std::size_t hash = line.find('#');
        if (hash != std::string::npos) line.erase(hash);
        line = detail::trim(line);
        if (line.empty()) continue;
        if (line.front() == '[') {
            if (line.back() != ']')
                throw invalid_parameter("config line " + std::to_string(lineno) +
                                        ": unterminated block header");
            block = detail::trim(line.substr(1, line.size() - 2));
            if (block.empty())
                throw invalid_parameter("config line " + std::to_string(lineno) +
                                        ": empty block name");
            cf.blocks[block];
            continue;
        }
        std::size_t eq = line.find('=');
        if (eq == std::string::npos || block.empty())
            throw invalid_parameter("config line " + std::to_string(lineno) +
                                    ": expected key = value inside a block");
        std::string key = detail::trim(line.substr(0, eq));
        std::string value = detail::trim(line.substr(eq + 1));
        if (key.empty() || value.empty())
            throw invalid_parameter("config line " + std::to_string(lineno) +
                                    ": empty key or value");
        auto& kv = cf.blocks[block];
        if (kv.count(key))
            throw invalid_parameter("config line " + std::to_string(lineno) + ": duplicate key '" +
                                    key + "' in block [" + block + "]");
        kv[key] = value;
    }
    return cf;
}

struct PipelineConfig {
    std::string raw;

    Expression lambda, mu;
    double thickness = 0.3;

    Expression g_expr;
    double radius = 1.0, shape_bound = 1.0, holder = 0.5;

    int solve_nx = 129, solve_ny = 65, chart_n = 65, carleman_n = 257;
    int chart_modes = 8, chart_fit_samples = 257;

    Expression outer;  // clamped data in physical coordinates

    int family_count = 4;
    double family_r_in = 0.3, family_r_out = 0.7;
    std::string family_profile = "bump";
    std::uint64_t family_seed = 1;

    std::vector<double> taus{2, 5, 10, 20, 50};
    std::vector<double> rs{0.4, 0.8};

    std::vector<double> radii{0.05, 0.1, 0.2, 0.4};
    double center_x = 0.0, declared_ratio = 4.0;
    double qd_r = 0.05, qd_rbar = 0.2, qd_rbar0 = 0.8, qd_c = 10.0;

    std::string out_dir = "out";

    LameField lame() const {
        LameField lf;
        lf.lambda = lambda.as_field();
        lf.mu = mu.as_field();
        lf.thickness = thickness;
        return lf;
    }

    BoundaryProfile boundary() const {
        BoundaryProfile p;
        p.g = g_expr.as_profile();
        p.radius = radius;
        p.shape_bound = shape_bound;
        p.holder = holder;
        return p;
    }
};

namespace detail {

struct BlockReader {
    const std::string name;
    const std::map<std::string, std::string>* kv;
    std::set<std::string> seen;

    bool has(const std::string& key) {
        if (!kv) return false;
        seen.insert(key);
        return kv->count(key) != 0;
    }
    std::string text(const std::string& key) { return kv->at(key); }

    Expression expr(const std::string& key) {
        try {
            return Expression(kv->at(key));
        } catch (const std::exception& e) {
            throw invalid_parameter("config [" + name + "] " + key + ": " + e.what());
        }
    }
    double scalar(const std::string& key) {
        double v = expr(key)(0.0, 0.0);
        if (!std::isfinite(v))
            throw invalid_parameter("config [" + name + "] " + key + ": not finite");
        return v;
    }
    int integer(const std::string& key) {
        double v = scalar(key);
        double r = std::round(v);
        if (std::abs(v - r) > 1e-9)
            throw invalid_parameter("config [" + name + "] " + key + ": expected an integer");
        return static_cast<int>(r);
    }
    std::vector<double> list(const std::string& key) {
        std::istringstream in(kv->at(key));
        std::vector<double> out;
        std::string tok;
        while (in >> tok) {
            try {
                out.push_back(Expression(tok)(0.0, 0.0));
            } catch (const std::exception& e) {
                throw invalid_parameter("config [" + name + "] " + key + ": " + e.what());
            }
        }
        return out;
    }
    void finish() const {
        if (!kv) return;
        for (const auto& [key, value] : *kv)
            if (!seen.count(key))
                throw invalid_parameter("config [" + name + "]: unknown key '" + key + "'");
    }
};

inline void check_pow2p1(int n, const std::string& what) {
    int m = n - 1;
    if (n < 17 || (m & (m - 1)) != 0)
        throw invalid_parameter("config: " + what + " = " + std::to_string(n) +
                                " must be a power of two plus one, at least 17");
}

}  // namespace detail

inline PipelineConfig assemble_pipeline_config(const ConfigFile& cf) {
    static const std::set<std::string> known = {"material", "profile", "grids",  "chart",
                                               "data",     "family",  "sweep",  "doubling",
                                               "output"};
    for (const auto& [name, kv] : cf.blocks) {
        (void)kv;
        if (!known.count(name))
            throw invalid_parameter("config: unknown block [" + name + "]");
    }
    auto block = [&](const std::string& name) -> detail::BlockReader {
        auto it = cf.blocks.find(name);
        return {name, it == cf.blocks.end() ? nullptr : &it->second, {}};
    };

    PipelineConfig pc;
    pc.raw = cf.raw;

    if (!cf.blocks.count("material"))
        throw invalid_parameter("config: missing required block [material]");
    auto mat = block("material");
    if (!mat.has("lambda") || !mat.has("mu"))
        throw invalid_parameter("config: [material] must define lambda and mu");
    pc.lambda = mat.expr("lambda");
    pc.mu = mat.expr("mu");
    if (mat.has("thickness")) pc.thickness = mat.scalar("thickness");
    mat.finish();
    if (!(pc.thickness > 0)) throw invalid_parameter("config: [material] thickness must be > 0");

    if (!cf.blocks.count("profile"))
        throw invalid_parameter("config: missing required block [profile]");
    auto prof = block("profile");
    if (!prof.has("g")) throw invalid_parameter("config: [profile] must define g");
    pc.g_expr = prof.expr("g");
    if (prof.has("radius")) pc.radius = prof.scalar("radius");
    if (prof.has("shape_bound")) pc.shape_bound = prof.scalar("shape_bound");
    if (prof.has("holder")) pc.holder = prof.scalar("holder");
    prof.finish();

    auto grids = block("grids");
    if (grids.has("solve_nx")) pc.solve_nx = grids.integer("solve_nx");
    if (grids.has("solve_ny")) pc.solve_ny = grids.integer("solve_ny");
    if (grids.has("chart_n")) pc.chart_n = grids.integer("chart_n");
    if (grids.has("carleman_n")) pc.carleman_n = grids.integer("carleman_n");
    grids.finish();
    detail::check_pow2p1(pc.solve_nx, "solve_nx");
    detail::check_pow2p1(pc.solve_ny, "solve_ny");
    detail::check_pow2p1(pc.chart_n, "chart_n");
    detail::check_pow2p1(pc.carleman_n, "carleman_n");

    auto chart = block("chart");
    if (chart.has("modes")) pc.chart_modes = chart.integer("modes");
    if (chart.has("fit_samples")) pc.chart_fit_samples = chart.integer("fit_samples");
    chart.finish();

    auto data = block("data");
    pc.outer = data.has("outer") ? data.expr("outer") : Expression("y");
    data.finish();

    auto family = block("family");
    if (family.has("count")) pc.family_count = family.integer("count");
    if (family.has("r_in")) pc.family_r_in = family.scalar("r_in");
    if (family.has("r_out")) pc.family_r_out = family.scalar("r_out");
    if (family.has("profile")) pc.family_profile = family.text("profile");
    if (family.has("seed")) pc.family_seed = static_cast<std::uint64_t>(family.integer("seed"));
    family.finish();
    if (pc.family_count < 1) throw invalid_parameter("config: [family] count must be >= 1");

    auto sweep = block("sweep");
    if (sweep.has("taus")) pc.taus = sweep.list("taus");
    if (sweep.has("rs")) pc.rs = sweep.list("rs");
    sweep.finish();
    if (pc.taus.empty() || pc.rs.empty())
        throw invalid_parameter("config: [sweep] taus and rs must be nonempty");

    auto dbl = block("doubling");
    if (dbl.has("radii")) pc.radii = dbl.list("radii");
    if (dbl.has("center")) pc.center_x = dbl.scalar("center");
    if (dbl.has("ratio")) pc.declared_ratio = dbl.scalar("ratio");
    if (dbl.has("qd_r")) pc.qd_r = dbl.scalar("qd_r");
    if (dbl.has("qd_rbar")) pc.qd_rbar = dbl.scalar("qd_rbar");
    if (dbl.has("qd_rbar0")) pc.qd_rbar0 = dbl.scalar("qd_rbar0");
    if (dbl.has("qd_c")) pc.qd_c = dbl.scalar("qd_c");
    dbl.finish();
    if (pc.radii.size() < 2)
        throw invalid_parameter("config: [doubling] needs at least two radii");

    auto output = block("output");
    if (output.has("dir")) pc.out_dir = output.text("dir");
    output.finish();

    return pc;
}

inline PipelineConfig parse_pipeline_config(const std::string& text) {
    return assemble_pipeline_config(parse_config(text));
}

inline PipelineConfig load_pipeline_config(const std::string& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_parameter("cannot open config file: " + path);
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_pipeline_config(ss.str());
}

}  // namespace plateuc
