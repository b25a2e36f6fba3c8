#include <omp.h>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

#include "CLI11.hpp"
#include "fatigue/config.hpp"

using namespace fatigue;

namespace {

constexpr int kInputError = 2;
constexpr int kSolverError = 3;

struct Common {
    std::string config;
    std::string out;
    bool quiet = false;
    int snapshots = -1;
    int threads = 0;
};

RunConfig load(const Common& o) {
    if (!std::filesystem::exists(o.config)) throw InputError("config file not found: " + o.config);
    RunConfig c = read_config(o.config);
    if (!o.out.empty()) c.out_dir = o.out;
    if (o.snapshots >= 0) c.snapshot_stride = o.snapshots;
    if (o.threads > 0) c.threads = o.threads;
    if (c.threads > 0) {
        omp_set_num_threads(c.threads);
        if (c.threads > 1) c.solver.exec = Exec::Parallel;
    }
    return c;
}

int cmd_matpoint(const Common& o) {
    const RunConfig c = load(o);
    PointRunOptions opt;
    opt.point = c.point;
    const PointTrace tr = run_point(c.load.control, sample_all(c.load), c.material, opt);
    std::filesystem::create_directories(c.out_dir);
    const auto path = (std::filesystem::path(c.out_dir) / "point_trace.csv").string();
    write_point_trace_csv(tr, c.material.n_surfaces(), path);
    if (!o.quiet) {
        const auto& last = tr.rows.back();
        std::fprintf(stderr, "%zu rows written to %s  (alpha %.6g, D %.6g)\n", tr.rows.size(), path.c_str(),
                     last.alpha, last.D_cum);
    }
    return 0;
}

int cmd_run(const Common& o) {
    const RunConfig c = load(o);
    Mesh mesh = build_mesh(c.mesh);
    FeModel model(std::move(mesh), c.material, c.load, c.solver);
    const auto rows = model.run(c.out_dir, c.snapshot_stride, o.quiet);
    if (!o.quiet) {
        double worst = 0.0;
        for (const auto& r : rows) worst = std::max(worst, r.balance_residual);
        std::fprintf(stderr, "%zu steps written to %s/trace.csv  (max balance residual %.3g)\n", rows.size() - 1,
                     c.out_dir.c_str(), worst);
    }
    return 0;
}

int cmd_check_energy(const std::string& trace, double threshold, bool quiet) {
    std::ifstream is(trace);
    if (!is) throw InputError("cannot read trace " + trace);
    const EnergyCheck r = check_energy(is, threshold);
    const bool pass = r.first_failure < 0;
    std::printf("%s: %d steps, max balance residual %.3e at step %d (threshold %.1e)\n", pass ? "PASS" : "FAIL",
                r.steps, r.max_residual, r.worst_step, threshold);
    if (!pass && !quiet) std::printf("first failing step: %d\n", r.first_failure);
    return pass ? 0 : 1;
}

int cmd_gen_mesh(const Common& o) {
    const RunConfig c = read_config(o.config);
    const Mesh m = build_mesh(c.mesh);
    const std::string path = o.out.empty() ? "mesh.txt" : o.out;
    write_mesh(m, path);
    if (!o.quiet) std::fprintf(stderr, "%d nodes, %d elements written to %s\n", m.n_nodes(), m.n_elements(), path.c_str());
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Cyclic plasticity and fatigue phase-field solver"};
    app.require_subcommand(1);
    Common o;
    std::string trace;
    double threshold = 1e-5;

    auto add_common = [&](CLI::App* sc, bool fe) {
        sc->add_option("--config", o.config, "run configuration file")->required();
        sc->add_option("--out", o.out, fe ? "output directory" : "output directory");
        sc->add_flag("-q,--quiet", o.quiet, "suppress progress output");
        if (fe) {
            sc->add_option("--snapshots", o.snapshots, "VTK snapshot stride in steps (0 disables)");
            sc->add_option("--threads", o.threads, "OpenMP threads for element assembly");
        }
    };
    auto* mp = app.add_subcommand("matpoint", "single material point under a cyclic schedule");
    add_common(mp, false);
    auto* run = app.add_subcommand("run", "finite-element staggered run");
    add_common(run, true);
    auto* ce = app.add_subcommand("check-energy", "recompute the power balance of a trace.csv");
    ce->add_option("trace", trace, "trace.csv path")->required();
    ce->add_option("--threshold", threshold, "relative balance tolerance");
    ce->add_flag("-q,--quiet", o.quiet, "only print the verdict");
    auto* gm = app.add_subcommand("gen-mesh", "write the mesh described by a config to a mesh file");
    gm->add_option("--config", o.config, "run configuration file")->required();
    gm->add_option("--out", o.out, "mesh file path (default mesh.txt)");
    gm->add_flag("-q,--quiet", o.quiet, "suppress progress output");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int code = app.exit(e);
        return code == 0 ? 0 : kInputError;
    }

    try {
        if (mp->parsed()) return cmd_matpoint(o);
        if (run->parsed()) return cmd_run(o);
        if (ce->parsed()) return cmd_check_energy(trace, threshold, o.quiet);
        if (gm->parsed()) return cmd_gen_mesh(o);
    } catch (const InputError& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kInputError;
    } catch (const std::invalid_argument& e) {
        std::fprintf(stderr, "input error: %s\n", e.what());
        return kInputError;
    } catch (const SolverError& e) {
        std::fprintf(stderr, "solver failure: %s\n", e.what());
        return kSolverError;
    } catch (const std::exception& e) {
        std::fprintf(stderr, "error: %s\n", e.what());
        return kSolverError;
    }
    return kInputError;
}
