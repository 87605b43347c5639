// Command-line front end.  Every subcommand reads the same config format;
// `pipeline` chains all stages with a run manifest, the single-stage
// subcommands run just their piece (recomputing prerequisites in memory)
// and write only their own artifacts.
//
// Exit codes: 0 success, 2 invalid input, 3 numerical failure.

#include <cstdio>
#include <filesystem>

#include <CLI11.hpp>

#include "plateuc/pipeline.hpp"

namespace {

using namespace plateuc;
namespace fs = std::filesystem;

struct CommonOpts {
    std::string config_path;
    std::string out_dir;
    bool force = false;
    int resolution = 0;  // overrides the configured solve/chart resolution
};

void add_common(CLI::App* cmd, CommonOpts& o, bool wants_force = false) {
    cmd->add_option("--config", o.config_path, "configuration file")->required();
    cmd->add_option("--out", o.out_dir, "output directory (overrides [output] dir)");
    cmd->add_option("--resolution", o.resolution, "override the stage grid resolution");
    if (wants_force) cmd->add_flag("--force", o.force, "recompute even if outputs are current");
}

PipelineConfig load(const CommonOpts& o) {
    PipelineConfig cfg = load_pipeline_config(o.config_path);
    if (!o.out_dir.empty()) cfg.out_dir = o.out_dir;
    if (o.resolution > 0) {
        detail::check_pow2p1(o.resolution, "--resolution");
        cfg.solve_nx = o.resolution;
        cfg.solve_ny = o.resolution / 2 + 1;
        cfg.chart_n = o.resolution;
        cfg.carleman_n = o.resolution;
    }
    fs::create_directories(cfg.out_dir);
    return cfg;
}

std::pair<GridField, SolveReport> solve_from_config(const PipelineConfig& cfg) {
    PlateProblem p;
    p.chart = DomainChart(cfg.boundary());
    p.tensor = stiffness_tensor(derive_plate_constants(cfg.lame()));
    p.outer_data = cfg.outer.as_field();
    p.nx = cfg.solve_nx;
    p.ny = cfg.solve_ny;
    return solve(p);
}

ConformalChart chart_from_config(const PipelineConfig& cfg) {
    ConformalChart chart =
        build_chart(cfg.boundary(), cfg.chart_n, cfg.chart_modes, cfg.chart_fit_samples);
    ChartBounds b = measure_chart(chart);
    if (!b.ok())
        throw numerical_failure("chart bounds check failed (boundary residual " +
                                std::to_string(b.boundary_residual) + ")");
    return chart;
}

int cmd_solve(const CommonOpts& o) {
    PipelineConfig cfg = load(o);
    auto [u, rep] = solve_from_config(cfg);
    write_field((fs::path(cfg.out_dir) / "u.dat").string(), u);
    std::printf("solve: %d unknowns, interior residual %.3e, moment residual %.3e -> %s\n",
                rep.unknowns, rep.interior_residual, rep.boundary_moment_residual,
                (fs::path(cfg.out_dir) / "u.dat").c_str());
    return 0;
}

int cmd_chart(const CommonOpts& o) {
    PipelineConfig cfg = load(o);
    ConformalChart chart = chart_from_config(cfg);
    write_chart(chart, (fs::path(cfg.out_dir) / "chart").string());
    std::printf("flatten-chart: K = %.6g, c0 = %.6g, C0 = %.6g, r1 = %.6g -> %s.{phi,psi,chart}\n",
                chart.K, chart.c0, chart.C0, chart.r1,
                (fs::path(cfg.out_dir) / "chart").c_str());
    return 0;
}

int cmd_transform(const CommonOpts& o) {
    PipelineConfig cfg = load(o);
    auto [u, srep] = solve_from_config(cfg);
    ConformalChart chart = chart_from_config(cfg);
    PlateConstants pc = derive_plate_constants(cfg.lame());
    GridField w = pullback(u, chart);
    TwistData twist = gamma_coefficient(chart, pc);
    FlattenedOperator op = assemble_flattened_operator(chart, pc);
    GridField v = to_v(w, twist);
    FlattenReport rep = boundary_residuals_flattened(w, v, twist, op);
    write_field((fs::path(cfg.out_dir) / "w.dat").string(), w);
    write_field((fs::path(cfg.out_dir) / "v.dat").string(), v);
    std::printf("transform: edge identity gap %.3e, v edge max %.3e -> %s/{w,v}.dat\n",
                rep.edge_identity_gap, rep.v_edge_max, cfg.out_dir.c_str());
    return 0;
}

int cmd_reflect(const CommonOpts& o) {
    PipelineConfig cfg = load(o);
    auto [u, srep] = solve_from_config(cfg);
    ConformalChart chart = chart_from_config(cfg);
    PlateConstants pc = derive_plate_constants(cfg.lame());
    GridField w = pullback(u, chart);
    TwistData twist = gamma_coefficient(chart, pc);
    FlattenedOperator op = assemble_flattened_operator(chart, pc);
    GridField v = to_v(w, twist);
    FlattenReport frep = boundary_residuals_flattened(w, v, twist, op);
    SourceField src = compute_source(v, twist, op);
    ReflectedField rf = make_reflected(v, src, 10.0 * frep.v_edge_max + 1e-14);
    ExtensionReport ext = verify_extension(rf);
    write_field((fs::path(cfg.out_dir) / "vbar.dat").string(), rf.vbar);
    write_field((fs::path(cfg.out_dir) / "fbar.dat").string(), rf.fbar);
    std::printf("reflect: odd defect %.3e, residual sup %.3e -> %s/{vbar,fbar}.dat\n",
                odd_defect(rf.vbar), ext.sup, cfg.out_dir.c_str());
    return 0;
}

int cmd_sweep(const CommonOpts& o) {
    PipelineConfig cfg = load(o);
    std::vector<std::pair<std::string, GridField>> family;
    for (int i = 0; i < cfg.family_count; ++i) {
        TestFunctionSpec spec;
        spec.r_in = cfg.family_r_in;
        spec.r_out = cfg.family_r_out;
        spec.profile = cfg.family_profile;
        spec.seed = cfg.family_seed + static_cast<std::uint64_t>(i);
        family.emplace_back("fn" + std::to_string(i), make_test_function(spec, cfg.carleman_n));
    }
    CarlemanSweep sw = sweep(family, cfg.taus, cfg.rs);
    std::string path = (fs::path(cfg.out_dir) / "carleman_sweep.csv").string();
    write_sweep_csv(sw, path);
    std::printf("carleman-sweep: %zu cells, empirical constant %.6g -> %s\n", sw.cells.size(),
                sw.c_emp, path.c_str());
    return 0;
}

int cmd_doubling(const CommonOpts& o) {
    PipelineConfig cfg = load(o);
    auto [u, srep] = solve_from_config(cfg);
    DomainChart domain(cfg.boundary());
    std::array<double, 2> P{cfg.center_x, cfg.boundary().g(cfg.center_x)};
    std::vector<double> radii = cfg.radii;
    std::sort(radii.begin(), radii.end());
    DoublingReport rep = measure_masses(u, domain, P, radii, cfg.declared_ratio);
    std::string path = (fs::path(cfg.out_dir) / "doubling.csv").string();
    write_doubling_csv(rep, path);
    std::printf("doubling: kappa = %.4f, frequency = %.6g -> %s\n", rep.kappa, rep.freq.value,
                path.c_str());
    return 0;
}

int cmd_pipeline(const CommonOpts& o) {
    PipelineConfig cfg = load(o);
    RunManifest m = run_pipeline(cfg, o.force);
    for (const auto& s : m.stages) {
        if (s.status == "ok")
            std::printf("  [ok]      %-14s %.2fs\n", s.name.c_str(), s.seconds);
        else if (s.status == "skipped")
            std::printf("  [skipped] %-14s\n", s.name.c_str());
        else
            std::printf("  [failed]  %-14s %s\n", s.name.c_str(), s.error.c_str());
    }
    if (m.reused) std::printf("pipeline: outputs current, nothing recomputed\n");
    if (const StageRecord* f = m.failed_stage()) {
        std::fprintf(stderr, "pipeline failed at stage %s: %s\n", f->name.c_str(),
                     f->error.c_str());
        return f->error_kind == "invalid_parameter" ? 2 : 3;
    }
    std::printf("pipeline: manifest -> %s\n",
                (fs::path(cfg.out_dir) / "manifest.json").c_str());
    return 0;
}

int cmd_plot_data(const CommonOpts& o, const std::string& plot_dir) {
    PipelineConfig cfg = load(o);
    std::string dest = plot_dir.empty()
                           ? (fs::path(cfg.out_dir) / "plots").string()
                           : plot_dir;
    auto files = emit_plot_data(cfg.out_dir, dest);
    for (const auto& f : files)
        std::printf("plot-data: %s\n", (fs::path(dest) / f).c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"curved-plate unique-continuation toolkit"};
    app.require_subcommand(1);

    CommonOpts o;
    std::string plot_dir;
    auto* c_solve = app.add_subcommand("solve", "solve the supported-plate problem");
    auto* c_chart = app.add_subcommand("flatten-chart", "build and verify the conformal chart");
    auto* c_transform = app.add_subcommand("transform", "pull back and twist the solution");
    auto* c_reflect = app.add_subcommand("reflect", "oddly reflect and verify the extension");
    auto* c_sweep = app.add_subcommand("carleman-sweep", "sweep the weighted inequality");
    auto* c_doubling = app.add_subcommand("doubling", "measure boundary doubling");
    auto* c_pipeline = app.add_subcommand("pipeline", "run every stage with a manifest");
    auto* c_plot = app.add_subcommand("plot-data", "emit plot-ready column files");
    for (auto* c : {c_solve, c_chart, c_transform, c_reflect, c_sweep, c_doubling})
        add_common(c, o);
    add_common(c_pipeline, o, true);
    add_common(c_plot, o);
    c_plot->add_option("--plot-dir", plot_dir, "destination (default: <out>/plots)");

    CLI11_PARSE(app, argc, argv);

    try {
        if (c_solve->parsed()) return cmd_solve(o);
        if (c_chart->parsed()) return cmd_chart(o);
        if (c_transform->parsed()) return cmd_transform(o);
        if (c_reflect->parsed()) return cmd_reflect(o);
        if (c_sweep->parsed()) return cmd_sweep(o);
        if (c_doubling->parsed()) return cmd_doubling(o);
        if (c_pipeline->parsed()) return cmd_pipeline(o);
        if (c_plot->parsed()) return cmd_plot_data(o, plot_dir);
    } catch (const plateuc::invalid_parameter& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    } catch (const plateuc::numerical_failure& e) {
        std::fprintf(stderr, "numerical failure: %s\n", e.what());
        return 3;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return 2;
    }
    return 0;
}
