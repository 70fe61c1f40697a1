#include "exdyn/runner.hpp"

#include <cmath>
#include <filesystem>
#include <fstream>
#include <sstream>

#include "exdyn/bath.hpp"
#include "exdyn/errors.hpp"
#include "exdyn/units.hpp"

namespace exdyn {

namespace fs = std::filesystem;

namespace {

std::ostringstream csv_stream() {
    std::ostringstream os;
    os.precision(12);
    return os;
}

nlohmann::ordered_json invariants_json(const InvariantReport& r) {
    return {{"max_trace_drift", r.max_trace_drift},
            {"max_hermiticity_error", r.max_hermiticity_error},
            {"min_eigenvalue", r.min_eigenvalue}};
}

nlohmann::ordered_json base_manifest(const ScenarioConfig& cfg, const std::string& command) {
    nlohmann::ordered_json m;
    m["tool"] = "exdyn";
    m["version"] = kToolVersion;
    m["command"] = command;
    m["config_hash"] = cfg.hash();
    m["preset"] = cfg.preset_name;
    m["threads"] = cfg.threads;
    return m;
}

std::vector<std::string> band_columns() { return {"band0", "band1", "band2"}; }

bool field_free(const ControlField& f) { return f.empty() || f.max_abs() == 0.0; }

ControlField resolve_field(const ScenarioConfig& cfg, const TimeGrid& grid) {
    if (cfg.field_file.empty()) return ControlField::zeros(grid);
    return read_field_csv(cfg.field_file);
}

struct HeomRun {
    HeomTrajectory traj;
    std::size_t ado_count{0};
    bool block_diagonal{false};
};

HeomRun run_heom(const ExcitonSystem& sys, const ScenarioConfig& cfg, const Operator& rho0,
                 const ControlField& field, const TimeGrid& grid) {
    const auto& spec = sys.spec;
    const BathExpansion high = expand_brownian(spec.high, spec.temperature, spec.n_matsubara_high);
    const BathExpansion low = expand_debye(spec.low, spec.temperature, spec.n_matsubara_low);
    HierarchySpace space =
        enumerate_hierarchy(spec.n_sites, spec.n_matsubara_high, spec.n_matsubara_low, cfg.heom.order,
                            cfg.heom.max_ados);
    HeomOptions opt;
    opt.scaling = cfg.heom.scaling;
    opt.include_residual = cfg.heom.include_residual;
    opt.threads = cfg.threads;
    opt.block_diagonal = cfg.heom.block_diagonal_when_possible && field_free(field) &&
                         is_manifold_block_diagonal(rho0, sys.eigen);
    HeomRun run;
    run.ado_count = space.size();
    run.block_diagonal = opt.block_diagonal;
    const HeomModel model(sys, high, low, std::move(space), opt);
    HeomPropagateOptions popt;
    popt.record_every = cfg.propagation.record_every;
    run.traj = propagate_heom(rho0, model, field, grid, popt);
    return run;
}

}  // namespace

void Artifacts::merge(const Artifacts& other, const std::string& prefix) {
    for (const auto& [name, content] : other.files) files.emplace_back(prefix + name, content);
}

std::string trajectory_csv(const std::vector<double>& times, const std::vector<Eigen::VectorXd>& pops,
                           const EigenSystem& eigen) {
    auto os = csv_stream();
    os << "t_fs";
    for (int a = 0; a < eigen.dimension(); ++a) os << ",pop_" << eigen.label(a);
    for (const auto& b : band_columns()) os << ',' << b;
    os << '\n';
    for (std::size_t r = 0; r < times.size(); ++r) {
        os << times[r];
        double band[3] = {0.0, 0.0, 0.0};
        for (int a = 0; a < eigen.dimension(); ++a) {
            os << ',' << pops[r](a);
            band[eigen.manifold[a]] += pops[r](a);
        }
        for (double b : band) os << ',' << b;
        os << '\n';
    }
    return os.str();
}

std::string depth_norms_csv(const std::vector<double>& times, const std::vector<std::vector<double>>& norms) {
    auto os = csv_stream();
    os << "t_fs,depth,max_ado_norm\n";
    for (std::size_t r = 0; r < times.size(); ++r)
        for (std::size_t d = 0; d < norms[r].size(); ++d) os << times[r] << ',' << d << ',' << norms[r][d] << '\n';
    return os.str();
}

Artifacts run_model(const ScenarioConfig& cfg) {
    const ExcitonSystem sys = build_system(cfg.spec);
    Artifacts a;
    a.add("levels.csv", eigen_report_csv(sys));
    auto os = csv_stream();
    os << "from,to,energy_eV,dipole_ea0\n";
    const Operator mu = sys.eigen.to_eigen(sys.mu.cast<cplx>());
    for (int i = 0; i < sys.dimension(); ++i)
        for (int f = 0; f < sys.dimension(); ++f)
            if (sys.eigen.manifold[f] == sys.eigen.manifold[i] + 1)
                os << sys.eigen.label(i) << ',' << sys.eigen.label(f) << ','
                   << units::wavenumber_to_ev(sys.eigen.energies(f) - sys.eigen.energies(i)) << ','
                   << std::abs(mu(f, i)) << '\n';
    a.add("transitions.csv", os.str());
    a.manifest = base_manifest(cfg, "model");
    a.manifest["dimension"] = sys.dimension();
    return a;
}

Artifacts run_bath_check(const ScenarioConfig& cfg) {
    const auto& spec = cfg.spec;
    const BathExpansion high = expand_brownian(spec.high, spec.temperature, spec.n_matsubara_high);
    const BathExpansion low = expand_debye(spec.low, spec.temperature, spec.n_matsubara_low);
    Artifacts a;
    auto dump = [&](const SpectralDensity& j, const BathExpansion& e) {
        auto os = csv_stream();
        os << "t_fs,re_alpha_cm2,im_alpha_cm2,re_expansion_cm2,im_expansion_cm2\n";
        for (int i = 0; i <= 200; ++i) {
            const double t = 5.0 * i;
            const cplx fit = e.evaluate(t);
            os << t << ',';
            try {
                const cplx ref = response_oracle(j, t, spec.temperature);
                os << ref.real() << ',' << ref.imag();
            } catch (const NumericalError&) {
                os << "nan,nan";  // Debye real part diverges at t = 0
            }
            os << ',' << fit.real() << ',' << fit.imag() << '\n';
        }
        return os.str();
    };
    a.add("bath_high.csv", dump(spec.high, high));
    a.add("bath_low.csv", dump(spec.low, low));
    a.manifest = base_manifest(cfg, "bath-check");
    a.manifest["residual_high_cm1"] = high.residual;
    a.manifest["residual_low_cm1"] = low.residual;
    return a;
}

Artifacts run_propagate(const ScenarioConfig& cfg) {
    const ExcitonSystem sys = build_system(cfg.spec);
    const TimeGrid grid = TimeGrid::covering(cfg.propagation.t_final, cfg.propagation.dt);
    const ControlField field = resolve_field(cfg, grid);
    const Operator rho0 = initial_density(sys, cfg.propagation.initial_state);
    Artifacts a;
    a.manifest = base_manifest(cfg, "propagate");
    a.manifest["integrator"] = {{"scheme", "rk4"}, {"dt_fs", grid.dt}, {"t_final_fs", grid.t_final()}};
    a.manifest["tolerances"] = {{"trace", Tolerances{}.trace},
                                {"hermiticity", Tolerances{}.hermiticity},
                                {"positivity_floor", Tolerances{}.positivity_floor}};
    if (cfg.method == Method::markov) {
        const QmeModel model = QmeModel::build(sys, build_dissipators(sys));
        PropagateOptions opt;
        opt.record_every = cfg.propagation.record_every;
        const Trajectory traj = propagate(rho0, model, field, grid, opt);
        a.add("trajectory.csv", trajectory_csv(traj.times, traj.populations, sys.eigen));
        a.manifest["method"] = "markov";
        a.manifest["invariants"] = invariants_json(traj.invariants);
    } else {
        const HeomRun run = run_heom(sys, cfg, rho0, field, grid);
        a.add("trajectory.csv", trajectory_csv(run.traj.times, run.traj.populations, sys.eigen));
        a.add("heom_diagnostics.csv", depth_norms_csv(run.traj.times, run.traj.depth_norms));
        a.manifest["method"] = "heom";
        a.manifest["heom"] = {{"order", cfg.heom.order},
                              {"ado_count", run.ado_count},
                              {"block_diagonal", run.block_diagonal}};
        a.manifest["invariants"] = invariants_json(run.traj.invariants);
    }
    return a;
}

namespace {

std::string oct_log_csv(const std::vector<OCTIteration>& log) {
    auto os = csv_stream();
    os << "iter,J,target_pop,intensity_GV2m2fs,lambda\n";
    for (const auto& it : log)
        os << it.iter << ',' << it.j << ',' << it.target_pop << ',' << it.intensity << ',' << it.lambda << '\n';
    return os.str();
}

}  // namespace

namespace {

Artifacts optimize_with_result(const ScenarioConfig& cfg, ControlField* field_out) {
    const OCTConfig oc = cfg.oct ? *cfg.oct : OCTConfig{};
    const ExcitonSystem sys = build_system(cfg.spec);
    const QmeModel model = QmeModel::build(sys, build_dissipators(sys));
    const OCTResult res = oct_iterate(sys, model, oc);
    if (field_out) *field_out = res.field;
    Artifacts a;
    a.add("field.csv", field_csv(res.field));
    a.add("oct_log.csv", oct_log_csv(res.log));
    a.add("spectrogram.csv", spectrogram_csv(xfrog(res.field, cfg.xfrog)));

    // replay over the control window plus 50 fs of free decay
    const TimeGrid grid = TimeGrid::covering(oc.t_final + 50.0, oc.dt);
    PropagateOptions opt;
    opt.record_every = cfg.propagation.record_every;
    const Trajectory traj = propagate(initial_density(sys, oc.initial), model, res.field, grid, opt);
    a.add("trajectory.csv", trajectory_csv(traj.times, traj.populations, sys.eigen));

    a.manifest = base_manifest(cfg, "optimize");
    a.manifest["oct"] = {{"iterations", res.log.size()},
                         {"converged", res.converged},
                         {"non_monotonic_steps", res.non_monotonic_steps},
                         {"i0_internal", oc.resolved_i0()},
                         {"i0_conversion", "1 a.u. field = 514.22 GV/m, 1 a.u. time = 0.0241888433 fs"}};
    a.manifest["invariants"] = invariants_json(traj.invariants);
    return a;
}

}  // namespace

Artifacts run_optimize(const ScenarioConfig& cfg) { return optimize_with_result(cfg, nullptr); }

Artifacts run_xfrog(const ScenarioConfig& cfg, const std::string& field_path) {
    const ControlField f = read_field_csv(field_path);
    Artifacts a;
    a.add("spectrogram.csv", spectrogram_csv(xfrog(f, cfg.xfrog)));
    a.manifest = base_manifest(cfg, "xfrog");
    a.manifest["field_file"] = field_path;
    return a;
}

Artifacts run_fit2g(const ScenarioConfig& cfg, const std::string& field_path) {
    const ControlField f = read_field_csv(field_path);
    const TwoGaussianFit fit = fit_two_gaussians(f, cfg.xfrog);
    Artifacts a;
    a.add("field_2g.csv", field_csv(fit.field));
    auto os = csv_stream();
    os << "component,amplitude_GVm,center_fs,width_fs,omega_eV,phase_rad\n";
    for (int i = 0; i < 2; ++i) {
        const auto& g = fit.components[i];
        os << i + 1 << ',' << g.amplitude << ',' << g.center << ',' << g.width << ','
           << units::rad_per_fs_to_ev(g.omega) << ',' << g.phase << '\n';
    }
    a.add("fit2g.csv", os.str());
    a.manifest = base_manifest(cfg, "fit2g");
    a.manifest["field_file"] = field_path;
    a.manifest["relative_rms_residual"] = fit.residual;
    return a;
}

// ---------------------------------------------------------------------------

namespace {

ScenarioConfig preset_run(const std::string& name, Method method, const std::string& initial, double t_final,
                          int order, int threads) {
    ScenarioConfig c = scenario_from_preset(name);
    c.method = method;
    c.propagation.initial_state = initial;
    c.propagation.t_final = t_final;
    // field-free hierarchy runs only carry intra-manifold phases; 0.2 fs agrees
    // with 0.05 fs to ~2e-5 in the populations
    if (method == Method::heom) {
        c.propagation.dt = 0.2;
        c.propagation.record_every = 5;
    }
    c.heom.order = order;
    c.threads = threads;
    return c;
}

std::string top_two_exciton(const std::string& name) {
    const ExcitonSystem sys = build_system(preset(name));
    return sys.eigen.label(sys.eigen.manifold_offset(2) + sys.eigen.manifold_size(2) - 1);
}

int default_order(const std::string& name) { return preset(name).n_sites >= 4 ? 5 : 7; }

Artifacts sub_run(const ScenarioConfig& c, const std::string& prefix, Artifacts& into) {
    Artifacts r = run_propagate(c);
    into.merge(r, prefix);
    into.manifest["runs"][prefix] = r.manifest;
    return r;
}

Artifacts optimize_and_analyse(const std::string& name, int threads, const std::string& prefix, Artifacts& into,
                               ControlField* field_out) {
    ScenarioConfig c = scenario_from_preset(name);
    c.threads = threads;
    c.oct = OCTConfig{};
    c.oct->max_iters = 150;
    Artifacts r = optimize_with_result(c, field_out);
    into.merge(r, prefix);
    into.manifest["runs"][prefix] = r.manifest;
    return r;
}

}  // namespace

std::vector<std::string> reproduce_tags() { return {"fig1", "fig2", "fig3", "fig4", "fig5", "fig6", "fig7", "fig8"}; }

Artifacts reproduce(const std::string& tag, int threads) {
    Artifacts out;
    out.manifest["tool"] = "exdyn";
    out.manifest["version"] = kToolVersion;
    out.manifest["command"] = "reproduce " + tag;
    if (tag == "fig1") {
        for (const auto& name : {"dimerA", "dimerB", "tetramerA", "tetramerB"}) {
            ScenarioConfig c = scenario_from_preset(name);
            Artifacts r = run_model(c);
            out.merge(r, std::string(name) + "_");
            out.manifest["runs"][name] = r.manifest;
        }
    } else if (tag == "fig2" || tag == "fig3") {
        // field-free decay of the two-exciton band under the hierarchy
        sub_run(preset_run("monomer", Method::heom, "11", 500.0, 7, threads), "monomer_heom_", out);
        sub_run(preset_run("monomer", Method::markov, "11", 500.0, 7, threads), "monomer_markov_", out);
        const std::vector<std::string> names =
            tag == "fig2" ? std::vector<std::string>{"dimerA", "dimerB", "tetramerA", "tetramerB"}
                          : std::vector<std::string>{"dimerA", "dimerB"};
        for (const auto& name : names) {
            for (const auto& init : {std::string("2_1"), top_two_exciton(name)}) {
                sub_run(preset_run(name, Method::heom, init, tag == "fig2" ? 1000.0 : 500.0, default_order(name),
                                   threads),
                        name + "_" + init + "_heom_", out);
            }
        }
    } else if (tag == "fig4" || tag == "fig5") {
        const std::string c = tag == "fig4" ? "A" : "B";
        for (const auto& base : {std::string("dimer"), std::string("tetramer")}) {
            const std::string name = base + c;
            for (const auto& init : {std::string("2_1"), top_two_exciton(name)})
                for (Method m : {Method::heom, Method::markov})
                    sub_run(preset_run(name, m, init, 500.0, default_order(name), threads),
                            name + "_" + init + (m == Method::heom ? "_heom_" : "_markov_"), out);
        }
    } else if (tag == "fig6" || tag == "fig7") {
        const std::string base = tag == "fig6" ? "dimer" : "tetramer";
        for (const auto& c : {"A", "B"}) optimize_and_analyse(base + c, threads, base + c + "_", out, nullptr);
    } else if (tag == "fig8") {
        for (const auto& c : {"A", "B"}) {
            const std::string name = std::string("dimer") + c;
            ControlField opt;
            optimize_and_analyse(name, threads, name + "_opt_", out, &opt);
            const TwoGaussianFit fit = fit_two_gaussians(opt);
            out.add(name + "_simplified_field.csv", field_csv(fit.field));
            const ExcitonSystem sys = build_system(preset(name));
            const QmeModel model = QmeModel::build(sys, build_dissipators(sys));
            const TimeGrid grid = TimeGrid::covering(fit.field.t_final() + 50.0, fit.field.dt);
            PropagateOptions po;
            po.record_every = 20;
            const Trajectory traj = propagate(site_projector(sys, "0"), model, fit.field, grid, po);
            out.add(name + "_simplified_trajectory.csv", trajectory_csv(traj.times, traj.populations, sys.eigen));
            out.manifest["runs"][name + "_simplified"] = {{"relative_rms_residual", fit.residual}};
        }
    } else {
        throw ConfigError("unknown reproduce tag '" + tag + "' (expected fig1..fig8)");
    }
    return out;
}

void write_artifacts(const Artifacts& art, const std::string& dir, double wall_seconds) {
    std::vector<fs::path> written;
    auto cleanup = [&] {
        std::error_code ec;
        for (const auto& p : written) fs::remove(p, ec);
    };
    try {
        std::error_code ec;
        fs::create_directories(dir, ec);
        if (ec) throw IoError("cannot create output directory '" + dir + "': " + ec.message());
        nlohmann::ordered_json manifest = art.manifest;
        manifest["outputs"] = nlohmann::ordered_json::array();
        for (const auto& [name, content] : art.files) {
            const fs::path p = fs::path(dir) / name;
            std::ofstream out(p, std::ios::binary);
            if (!out) throw IoError("cannot write '" + p.string() + "'");
            written.push_back(p);
            out << content;
            if (!out) throw IoError("failed writing '" + p.string() + "'");
            manifest["outputs"].push_back(name);
        }
        manifest["wall_clock_seconds"] = wall_seconds;
        const fs::path mp = fs::path(dir) / "manifest.json";
        std::ofstream out(mp, std::ios::binary);
        if (!out) throw IoError("cannot write '" + mp.string() + "'");
        written.push_back(mp);
        out << manifest.dump(2) << '\n';
        if (!out) throw IoError("failed writing '" + mp.string() + "'");
    } catch (...) {
        cleanup();
        throw;
    }
}

int exit_code_of(const std::exception& e) {
    if (dynamic_cast<const ConfigError*>(&e)) return 2;
    if (dynamic_cast<const MemoryBudgetError*>(&e)) return 3;
    if (dynamic_cast<const NumericalError*>(&e)) return 4;
    if (dynamic_cast<const IoError*>(&e)) return 5;
    return 1;
}

}  // namespace exdyn
