// exdyn command-line front end.

#include <chrono>
#include <iostream>
#include <optional>

#include <CLI11.hpp>

#include "exdyn/errors.hpp"
#include "exdyn/runner.hpp"
#include "exdyn/units.hpp"

using namespace exdyn;

namespace {

struct Common {
    std::string config;
    std::string preset;
    std::string out;
    int threads{0};
    std::optional<long> seed;  // reserved, everything is deterministic
};

void add_common(CLI::App* app, Common& c) {
    app->add_option("--config", c.config, "scenario YAML file");
    app->add_option("--preset", c.preset, "preset name (overrides the config preset)");
    app->add_option("--out", c.out, "output directory");
    app->add_option("--threads", c.threads, "worker threads")->check(CLI::Range(1, 1024));
    app->add_option("--seed", c.seed, "reserved; all algorithms are deterministic");
}

ScenarioConfig resolve(const Common& c) {
    ScenarioConfig cfg;
    if (!c.config.empty()) cfg = load_scenario(c.config);
    if (!c.preset.empty()) {
        ScenarioConfig p = scenario_from_preset(c.preset);
        p.method = cfg.method;
        p.heom = cfg.heom;
        p.propagation = cfg.propagation;
        p.field_file = cfg.field_file;
        p.oct = cfg.oct;
        p.xfrog = cfg.xfrog;
        p.output_dir = cfg.output_dir;
        p.threads = cfg.threads;
        cfg = p;
    }
    if (c.config.empty() && c.preset.empty()) throw ConfigError("give --config or --preset");
    if (!c.out.empty()) cfg.output_dir = c.out;
    if (c.threads > 0) cfg.threads = c.threads;
    return cfg;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"exdyn: dissipative two-exciton dynamics"};
    app.require_subcommand(1);

    Common common;
    auto* model = app.add_subcommand("model", "eigenstates, levels and transition dipoles");
    auto* bath = app.add_subcommand("bath-check", "bath correlation function vs its exponential expansion");
    auto* prop = app.add_subcommand("propagate", "Markovian or hierarchy propagation");
    auto* opt = app.add_subcommand("optimize", "optimal control field design");
    auto* xf = app.add_subcommand("xfrog", "XFROG spectrogram of a field CSV");
    auto* fit = app.add_subcommand("fit2g", "fit a field CSV to two Gaussian pulses");
    auto* rep = app.add_subcommand("reproduce", "figure reproduction batteries");
    for (auto* s : {model, bath, prop, opt, xf, fit}) add_common(s, common);

    std::string method, initial;
    std::optional<int> order;
    std::optional<double> t_final, dt;
    prop->add_option("--method", method, "markov or heom")->check(CLI::IsMember({"markov", "heom"}));
    prop->add_option("--order", order, "hierarchy truncation depth");
    prop->add_option("--initial", initial, "initial state label (e.g. 2_3 or 11)");
    prop->add_option("--t-final", t_final, "final time in fs");
    prop->add_option("--dt", dt, "time step in fs");

    std::string target, opt_initial;
    std::optional<double> oct_t, i0_au, lambda0;
    std::optional<int> max_iters;
    opt->add_option("--target", target, "target site label (default |1N>)");
    opt->add_option("--initial", opt_initial, "initial state label");
    opt->add_option("--T", oct_t, "control time in fs");
    opt->add_option("--i0", i0_au, "intensity constraint in atomic units");
    opt->add_option("--max-iters", max_iters, "iteration limit");
    opt->add_option("--lambda0", lambda0, "initial penalty (default: automatic)");

    std::string field_path;
    for (auto* s : {xf, fit}) s->add_option("--field", field_path, "field CSV (t_fs,E_GVm)")->required();

    std::string tag, rep_out = "reproduce";
    int rep_threads = 1;
    std::optional<long> rep_seed;
    rep->add_option("tag", tag, "fig1..fig8")->required();
    rep->add_option("--out", rep_out, "output directory");
    rep->add_option("--threads", rep_threads, "worker threads")->check(CLI::Range(1, 1024));
    rep->add_option("--seed", rep_seed, "reserved; all algorithms are deterministic");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : 2;
    }

    const auto start = std::chrono::steady_clock::now();
    try {
        Artifacts art;
        std::string out_dir;
        if (rep->parsed()) {
            art = reproduce(tag, rep_threads);
            out_dir = rep_out;
        } else {
            ScenarioConfig cfg = resolve(common);
            if (prop->parsed()) {
                if (!method.empty()) cfg.method = method == "heom" ? Method::heom : Method::markov;
                if (order) cfg.heom.order = *order;
                if (!initial.empty()) cfg.propagation.initial_state = initial;
                if (t_final) cfg.propagation.t_final = *t_final;
                if (dt) cfg.propagation.dt = *dt;
            }
            if (opt->parsed()) {
                OCTConfig oc = cfg.oct ? *cfg.oct : OCTConfig{};
                if (!target.empty()) oc.target = target;
                if (!opt_initial.empty()) oc.initial = opt_initial;
                if (oct_t) oc.t_final = *oct_t;
                if (i0_au) oc.i0 = units::au_intensity_to_internal(*i0_au);
                if (max_iters) oc.max_iters = *max_iters;
                if (lambda0) oc.lambda0 = *lambda0;
                cfg.oct = oc;
            }
            cfg.validate();
            out_dir = cfg.output_dir;
            if (model->parsed()) art = run_model(cfg);
            else if (bath->parsed()) art = run_bath_check(cfg);
            else if (prop->parsed()) art = run_propagate(cfg);
            else if (opt->parsed()) art = run_optimize(cfg);
            else if (xf->parsed()) art = run_xfrog(cfg, field_path);
            else art = run_fit2g(cfg, field_path);
        }
        const double wall = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        write_artifacts(art, out_dir, wall);
        std::cout << "wrote " << art.files.size() + 1 << " files to " << out_dir << '\n';
        return 0;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return exit_code_of(e);
    }
}
