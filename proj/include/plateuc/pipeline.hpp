#pragma once

// End-to-end driver: solve -> flatten-chart -> transform -> reflect ->
// carleman-sweep -> doubling, each stage writing its artifacts under one
// output directory and recording status, timing, metrics, and output
// checksums in a JSON run manifest.  A failing stage stops everything
// downstream; the manifest still records what happened.  A completed run
// whose config hash and output checksums still match is not recomputed
// unless forced.

#include <chrono>
#include <filesystem>
#include <fstream>
#include <map>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "plateuc/carleman.hpp"
#include "plateuc/config.hpp"
#include "plateuc/conformal.hpp"
#include "plateuc/doubling.hpp"
#include "plateuc/flatten.hpp"
#include "plateuc/reflect.hpp"
#include "plateuc/solver.hpp"

namespace plateuc {

inline constexpr const char* pipeline_version = "1.0.0";

struct StageRecord {
    std::string name;
    std::string status = "pending";  // ok | failed | skipped
    std::string error, error_kind;   // error_kind: invalid_parameter | numerical_failure | other
    double seconds = 0.0;
    std::vector<std::pair<std::string, double>> metrics;
};

struct OutputRecord {
    std::string path;  // relative to the output directory
    std::string checksum;
};

struct RunManifest {
    std::string config_hash;
    std::string version = pipeline_version;
    std::uint64_t base_seed = 0;
    bool reused = false;
    std::vector<StageRecord> stages;
    std::vector<OutputRecord> outputs;

    bool ok() const {
        for (const auto& s : stages)
            if (s.status != "ok") return false;
        return !stages.empty();
    }
    const StageRecord* failed_stage() const {
        for (const auto& s : stages)
            if (s.status == "failed") return &s;
        return nullptr;
    }
};

namespace detail {

inline std::string hex64(std::uint64_t v) {
    char buf[17];
    std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
    return buf;
}

inline std::string slurp_file(const std::filesystem::path& p) {
    std::ifstream in(p, std::ios::binary);
    if (!in) throw invalid_parameter("cannot open " + p.string());
    std::ostringstream ss;
    ss << in.rdbuf();
    return ss.str();
}

inline std::string checksum_file(const std::filesystem::path& p) {
    return hex64(fnv1a(slurp_file(p)));
}

}  // namespace detail

inline nlohmann::ordered_json manifest_to_json(const RunManifest& m) {
    nlohmann::ordered_json j;
    j["tool"] = "plateuc";
    j["version"] = m.version;
    j["config_hash"] = m.config_hash;
    j["base_seed"] = m.base_seed;
    j["reused"] = m.reused;
    j["stages"] = nlohmann::ordered_json::array();
    for (const auto& s : m.stages) {
        nlohmann::ordered_json js;
        js["name"] = s.name;
        js["status"] = s.status;
        js["seconds"] = s.seconds;
        if (!s.error.empty()) {
            js["error"] = s.error;
            js["error_kind"] = s.error_kind;
        }
        nlohmann::ordered_json jm = nlohmann::ordered_json::object();
        for (const auto& [k, v] : s.metrics) jm[k] = v;
        js["metrics"] = jm;
        j["stages"].push_back(js);
    }
    j["outputs"] = nlohmann::ordered_json::array();
    for (const auto& o : m.outputs) j["outputs"].push_back({{"path", o.path}, {"checksum", o.checksum}});
    return j;
}

inline RunManifest manifest_from_json(const nlohmann::json& j) {
    RunManifest m;
    m.version = j.at("version").get<std::string>();
    m.config_hash = j.at("config_hash").get<std::string>();
    m.base_seed = j.at("base_seed").get<std::uint64_t>();
    m.reused = j.value("reused", false);
    for (const auto& js : j.at("stages")) {
        StageRecord s;
        s.name = js.at("name").get<std::string>();
        s.status = js.at("status").get<std::string>();
        s.seconds = js.value("seconds", 0.0);
        s.error = js.value("error", "");
        s.error_kind = js.value("error_kind", "");
        if (js.contains("metrics"))
            for (const auto& [k, v] : js.at("metrics").items())
                s.metrics.emplace_back(k, v.get<double>());
        m.stages.push_back(std::move(s));
    }
    for (const auto& jo : j.at("outputs"))
        m.outputs.push_back({jo.at("path").get<std::string>(), jo.at("checksum").get<std::string>()});
    return m;
}

inline void write_manifest(const RunManifest& m, const std::filesystem::path& path) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_parameter("cannot open manifest output: " + path.string());
    out << manifest_to_json(m).dump(2) << "\n";
}

inline std::optional<RunManifest> read_manifest(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) return std::nullopt;
    try {
        return manifest_from_json(nlohmann::json::parse(in));
    } catch (const std::exception&) {
        return std::nullopt;
    }
}

namespace detail {

// Scratch shared between stages of one run.
struct PipelineState {
    PlateConstants constants;
    DomainChart domain;
    GridField u;                   // sheared-frame plate solution
    ConformalChart chart;
    ChartBounds bounds;
    GridField w, v;                // pulled-back and twisted fields
    TwistData twist;
    FlattenedOperator op;
    FlattenReport flat_report;
    DoublingReport doubling_report;

    bool have_u = false, have_chart = false, have_v = false;
};

struct StageRunner {
    RunManifest& manifest;
    const std::filesystem::path out_dir;
    bool stop = false;

    template <class Fn>
    void run(const std::string& name, Fn&& body) {
        StageRecord rec;
        rec.name = name;
        if (stop) {
            rec.status = "skipped";
            manifest.stages.push_back(std::move(rec));
            return;
        }
        auto t0 = std::chrono::steady_clock::now();
        try {
            body(rec);
            rec.status = "ok";
        } catch (const invalid_parameter& e) {
            rec.status = "failed";
            rec.error = e.what();
            rec.error_kind = "invalid_parameter";
            stop = true;
        } catch (const numerical_failure& e) {
            rec.status = "failed";
            rec.error = e.what();
            rec.error_kind = "numerical_failure";
            stop = true;
        } catch (const std::exception& e) {
            rec.status = "failed";
            rec.error = e.what();
            rec.error_kind = "other";
            stop = true;
        }
        rec.seconds =
            std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
        manifest.stages.push_back(std::move(rec));
    }

    void record_output(const std::string& rel) {
        manifest.outputs.push_back({rel, checksum_file(out_dir / rel)});
    }
};

inline void stage_solve(const PipelineConfig& cfg, PipelineState& st, StageRecord& rec,
                        StageRunner& runner) {
    st.constants = derive_plate_constants(cfg.lame());
    st.domain = DomainChart(cfg.boundary());

    PlateProblem p;
    p.chart = st.domain;
    p.tensor = stiffness_tensor(st.constants);
    p.outer_data = cfg.outer.as_field();
    p.nx = cfg.solve_nx;
    p.ny = cfg.solve_ny;

    // refinement ladder up to the configured resolution, for convergence plots
    std::vector<int> ladder;
    for (int n = 33; n < cfg.solve_nx; n = 2 * n - 1) ladder.push_back(n);
    ladder.push_back(cfg.solve_nx);
    for (int n : ladder) {
        PlateProblem q = p;
        q.nx = n;
        q.ny = (n - 1) * (cfg.solve_ny - 1) / (cfg.solve_nx - 1) + 1;
        auto [un, repn] = solve(q);
        rec.metrics.emplace_back("ladder_interior_" + std::to_string(n), repn.interior_residual);
        rec.metrics.emplace_back("ladder_moment_" + std::to_string(n),
                                 repn.boundary_moment_residual);
        if (n == cfg.solve_nx) {
            st.u = std::move(un);
            rec.metrics.emplace_back("interior_residual", repn.interior_residual);
            rec.metrics.emplace_back("boundary_value_residual", repn.boundary_value_residual);
            rec.metrics.emplace_back("boundary_moment_residual", repn.boundary_moment_residual);
            rec.metrics.emplace_back("unknowns", repn.unknowns);
        }
    }
    st.have_u = true;
    write_field((runner.out_dir / "u.dat").string(), st.u);
    runner.record_output("u.dat");
}

inline void stage_chart(const PipelineConfig& cfg, PipelineState& st, StageRecord& rec,
                        StageRunner& runner) {
    st.chart = build_chart(cfg.boundary(), cfg.chart_n, cfg.chart_modes, cfg.chart_fit_samples);
    st.bounds = measure_chart(st.chart);
    rec.metrics.emplace_back("K", st.bounds.K);
    rec.metrics.emplace_back("c0", st.bounds.c0);
    rec.metrics.emplace_back("C0", st.bounds.C0);
    rec.metrics.emplace_back("r1", st.bounds.r1);
    rec.metrics.emplace_back("boundary_residual", st.bounds.boundary_residual);
    rec.metrics.emplace_back("jac_min", st.bounds.jac_min);
    rec.metrics.emplace_back("jac_max", st.bounds.jac_max);
    if (!st.bounds.ok())
        throw numerical_failure("chart bounds check failed (boundary residual " +
                                std::to_string(st.bounds.boundary_residual) + ")");
    st.have_chart = true;
    write_chart(st.chart, (runner.out_dir / "chart").string());
    runner.record_output("chart.phi");
    runner.record_output("chart.psi");
    runner.record_output("chart.chart");
}

inline void stage_transform(const PipelineConfig& cfg, PipelineState& st, StageRecord& rec,
                            StageRunner& runner) {
    (void)cfg;
    st.w = pullback(st.u, st.chart);
    st.twist = gamma_coefficient(st.chart, st.constants);
    st.op = assemble_flattened_operator(st.chart, st.constants);
    st.v = to_v(st.w, st.twist);
    st.flat_report = boundary_residuals_flattened(st.w, st.v, st.twist, st.op);
    rec.metrics.emplace_back("w_edge_max", st.flat_report.w_edge_max);
    rec.metrics.emplace_back("oblique_edge_max", st.flat_report.oblique_edge_max);
    rec.metrics.emplace_back("v_edge_max", st.flat_report.v_edge_max);
    rec.metrics.emplace_back("lap_v_edge_max", st.flat_report.lap_v_edge_max);
    rec.metrics.emplace_back("edge_identity_gap", st.flat_report.edge_identity_gap);
    rec.metrics.emplace_back("interior_max", st.flat_report.interior_max);
    rec.metrics.emplace_back("interior_l2", st.flat_report.interior_l2);
    st.have_v = true;
    write_field((runner.out_dir / "w.dat").string(), st.w);
    write_field((runner.out_dir / "v.dat").string(), st.v);
    runner.record_output("w.dat");
    runner.record_output("v.dat");
}

inline void stage_reflect(const PipelineConfig& cfg, PipelineState& st, StageRecord& rec,
                          StageRunner& runner) {
    (void)cfg;
    SourceField src = compute_source(st.v, st.twist, st.op);
    double tol = 10.0 * st.flat_report.v_edge_max + 1e-14;
    ReflectedField rf = make_reflected(st.v, src, tol);
    ExtensionReport ext = verify_extension(rf);
    rec.metrics.emplace_back("odd_defect_v", odd_defect(rf.vbar));
    rec.metrics.emplace_back("residual_sup", ext.sup);
    rec.metrics.emplace_back("residual_l2", ext.l2);
    rec.metrics.emplace_back("midline_band_sup", ext.midline_band_sup);
    rec.metrics.emplace_back("d2_jump", ext.d2_jump);
    rec.metrics.emplace_back("d3_jump", ext.d3_jump);
    write_field((runner.out_dir / "vbar.dat").string(), rf.vbar);
    write_field((runner.out_dir / "fbar.dat").string(), rf.fbar);
    runner.record_output("vbar.dat");
    runner.record_output("fbar.dat");
}

inline void stage_sweep(const PipelineConfig& cfg, StageRecord& rec, StageRunner& runner) {
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
    rec.metrics.emplace_back("c_emp", sw.c_emp);
    rec.metrics.emplace_back("cells", static_cast<double>(sw.cells.size()));
    write_sweep_csv(sw, (runner.out_dir / "carleman_sweep.csv").string());
    runner.record_output("carleman_sweep.csv");
}

inline void stage_doubling(const PipelineConfig& cfg, PipelineState& st, StageRecord& rec,
                           StageRunner& runner) {
    std::array<double, 2> P{cfg.center_x, cfg.boundary().g(cfg.center_x)};
    std::vector<double> radii = cfg.radii;
    std::sort(radii.begin(), radii.end());
    st.doubling_report = measure_masses(st.u, st.domain, P, radii, cfg.declared_ratio);
    rec.metrics.emplace_back("kappa", st.doubling_report.kappa);
    rec.metrics.emplace_back("frequency", st.doubling_report.freq.value);
    rec.metrics.emplace_back("doubling_sup", st.doubling_report.doubling_sup);
    write_doubling_csv(st.doubling_report, (runner.out_dir / "doubling.csv").string());
    runner.record_output("doubling.csv");

    std::vector<double> taus = cfg.taus;
    std::sort(taus.begin(), taus.end());
    QuasiDoublingCheck qd =
        quasi_doubling_check(st.v, cfg.qd_r, cfg.qd_rbar, cfg.qd_rbar0, taus, cfg.qd_c);
    rec.metrics.emplace_back("qd_c_min_best", qd.c_min_best);
    rec.metrics.emplace_back("qd_tau_best", qd.tau_best);
    rec.metrics.emplace_back("qd_feasible", qd.feasible ? 1.0 : 0.0);

    nlohmann::ordered_json js;
    js["center"] = {P[0], P[1]};
    js["kappa"] = st.doubling_report.kappa;
    js["frequency"] = st.doubling_report.freq.value;
    js["doubling_sup"] = st.doubling_report.doubling_sup;
    js["quasi_doubling"] = {{"r", qd.r},
                            {"rbar", qd.rbar},
                            {"rbar0", qd.rbar0},
                            {"c_candidate", qd.c_candidate},
                            {"c_min_best", qd.c_min_best},
                            {"tau_best", qd.tau_best},
                            {"feasible", qd.feasible}};
    double n_freq = st.doubling_report.freq.value;
    if (!st.doubling_report.freq.infinite && std::isfinite(n_freq) && n_freq >= 1.0) {
        DoublingStatement stmt = optimize_tau_to_doubling(qd, n_freq);
        rec.metrics.emplace_back("tau_star", stmt.tau_star);
        rec.metrics.emplace_back("doubling_constant", stmt.constant);
        rec.metrics.emplace_back("exponent_k", stmt.k);
        rec.metrics.emplace_back("implied_exponent", stmt.implied_exponent);
        js["statement"] = {{"tau_star", stmt.tau_star},
                           {"tau_clamped", stmt.tau_clamped},
                           {"constant", stmt.constant},
                           {"shape", stmt.shape},
                           {"k", stmt.k},
                           {"implied_exponent", stmt.implied_exponent},
                           {"feasible", stmt.feasible}};
    }
    {
        std::ofstream out(runner.out_dir / "doubling_summary.json", std::ios::binary);
        if (!out) throw invalid_parameter("cannot open doubling summary output");
        out << js.dump(2) << "\n";
    }
    runner.record_output("doubling_summary.json");
}

}  // namespace detail

// True when a previous manifest at `path` matches this config and every
// recorded output still has the recorded checksum.
inline bool run_is_current(const RunManifest& prev, const std::string& config_hash,
                           const std::filesystem::path& out_dir) {
    if (prev.config_hash != config_hash || !prev.ok()) return false;
    for (const auto& o : prev.outputs) {
        std::error_code ec;
        if (!std::filesystem::exists(out_dir / o.path, ec)) return false;
        try {
            if (detail::checksum_file(out_dir / o.path) != o.checksum) return false;
        } catch (const std::exception&) {
            return false;
        }
    }
    return true;
}

inline RunManifest run_pipeline(const PipelineConfig& cfg, bool force = false) {
    std::filesystem::path out_dir(cfg.out_dir);
    std::filesystem::create_directories(out_dir);
    std::string hash = detail::hex64(fnv1a(cfg.raw));

    if (!force) {
        if (auto prev = read_manifest(out_dir / "manifest.json");
            prev && run_is_current(*prev, hash, out_dir)) {
            prev->reused = true;
            write_manifest(*prev, out_dir / "manifest.json");
            return *prev;
        }
    }

    RunManifest manifest;
    manifest.config_hash = hash;
    manifest.base_seed = cfg.family_seed;

    detail::PipelineState st;
    detail::StageRunner runner{manifest, out_dir};
    runner.run("solve", [&](StageRecord& rec) { detail::stage_solve(cfg, st, rec, runner); });
    runner.run("flatten-chart",
               [&](StageRecord& rec) { detail::stage_chart(cfg, st, rec, runner); });
    runner.run("transform",
               [&](StageRecord& rec) { detail::stage_transform(cfg, st, rec, runner); });
    runner.run("reflect", [&](StageRecord& rec) { detail::stage_reflect(cfg, st, rec, runner); });
    runner.run("carleman-sweep", [&](StageRecord& rec) { detail::stage_sweep(cfg, rec, runner); });
    runner.run("doubling",
               [&](StageRecord& rec) { detail::stage_doubling(cfg, st, rec, runner); });

    write_manifest(manifest, out_dir / "manifest.json");
    return manifest;
}

// ---- plot data -------------------------------------------------------------

namespace detail {

inline std::vector<std::vector<std::string>> read_csv(const std::filesystem::path& path) {
    std::ifstream in(path, std::ios::binary);
    if (!in) throw invalid_parameter("cannot open report file: " + path.string());
    std::vector<std::vector<std::string>> rows;
    std::string line;
    while (std::getline(in, line)) {
        if (!line.empty() && line.back() == '\r') line.pop_back();
        if (line.empty()) continue;
        std::vector<std::string> row;
        std::istringstream ss(line);
        std::string cell;
        while (std::getline(ss, cell, ',')) row.push_back(cell);
        rows.push_back(std::move(row));
    }
    return rows;
}

inline void write_xy(const std::filesystem::path& path, const std::string& header,
                     const std::vector<std::array<double, 2>>& rows) {
    std::ofstream out(path, std::ios::binary);
    if (!out) throw invalid_parameter("cannot open plot output: " + path.string());
    out << "# " << header << "\n";
    char line[128];
    for (const auto& r : rows) {
        std::snprintf(line, sizeof line, "%.17g %.17g\n", r[0], r[1]);
        out << line;
    }
}

}  // namespace detail

// Turns the run artifacts into two-column files ready for gnuplot:
//   mass_loglog.dat          log10(radius) vs log10(mass), from doubling.csv
//   ratio_tau_r<r>.dat       tau vs max ratio over the family, one file per r
//   residual_resolution.dat  grid nodes vs boundary-moment residual ladder
// Missing inputs are an error naming the file; a report with no data rows
// produces a header-only plot file.
inline std::vector<std::string> emit_plot_data(const std::string& run_dir,
                                               const std::string& plot_dir) {
    namespace fs = std::filesystem;
    fs::path in(run_dir), out(plot_dir);
    fs::create_directories(out);
    std::vector<std::string> written;

    auto doubling = detail::read_csv(in / "doubling.csv");
    std::vector<std::array<double, 2>> mass_rows;
    for (std::size_t k = 1; k < doubling.size(); ++k) {
        double s = std::stod(doubling[k][0]), m = std::stod(doubling[k][1]);
        if (s > 0 && m > 0) mass_rows.push_back({std::log10(s), std::log10(m)});
    }
    detail::write_xy(out / "mass_loglog.dat", "log10(radius) log10(mass)", mass_rows);
    written.push_back("mass_loglog.dat");

    auto sweep_rows = detail::read_csv(in / "carleman_sweep.csv");
    std::map<std::string, std::map<double, double>> by_r;  // r label -> tau -> max ratio
    for (std::size_t k = 1; k < sweep_rows.size(); ++k) {
        if (sweep_rows[k].size() < 7) continue;
        double tau = std::stod(sweep_rows[k][1]);
        double ratio = std::stod(sweep_rows[k][6]);
        if (!std::isfinite(ratio)) continue;
        auto& slot = by_r[sweep_rows[k][2]][tau];
        slot = std::max(slot, ratio);
    }
    for (const auto& [rlabel, cells] : by_r) {
        std::vector<std::array<double, 2>> rows;
        for (const auto& [tau, ratio] : cells) rows.push_back({tau, ratio});
        char short_label[32];
        std::snprintf(short_label, sizeof short_label, "%.12g", std::stod(rlabel));
        std::string name = std::string("ratio_tau_r") + short_label + ".dat";
        detail::write_xy(out / name, std::string("tau max_ratio (r = ") + short_label + ")",
                         rows);
        written.push_back(name);
    }

    auto manifest = read_manifest(in / "manifest.json");
    if (!manifest)
        throw invalid_parameter("cannot open report file: " +
                                (in / "manifest.json").string());
    std::vector<std::array<double, 2>> ladder;
    for (const auto& s : manifest->stages)
        if (s.name == "solve")
            for (const auto& [k, v] : s.metrics)
                if (k.rfind("ladder_moment_", 0) == 0)
                    ladder.push_back({std::stod(k.substr(14)), v});
    std::sort(ladder.begin(), ladder.end(),
              [](const auto& a, const auto& b) { return a[0] < b[0]; });
    detail::write_xy(out / "residual_resolution.dat", "grid_nodes boundary_moment_residual",
                     ladder);
    written.push_back("residual_resolution.dat");

    return written;
}

}  // namespace plateuc
