// Acceptance battery: one PASS/FAIL line per criterion. Tolerances are fixed
// here and never adjusted to the observed numbers.
//
//   exdyn_acceptance            all criteria
//   exdyn_acceptance 1 4 8      a subset

#include <chrono>
#include <cstdio>
#include <functional>
#include <iostream>
#include <map>
#include <optional>
#include <set>
#include <sstream>
#include <string>
#include <thread>

#include "exdyn/bath.hpp"
#include "exdyn/control.hpp"
#include "exdyn/errors.hpp"
#include "exdyn/heom.hpp"
#include "exdyn/markovian.hpp"
#include "exdyn/scenario.hpp"
#include "exdyn/units.hpp"
#include "oracles.hpp"

using namespace exdyn;

namespace {

struct Outcome {
    bool pass{true};
    std::ostringstream detail;

    void check(bool ok, const std::string& what) {
        pass = pass && ok;
        detail << (detail.tellp() > 0 ? "; " : "") << what << (ok ? "" : " [x]");
    }
};

std::string fmt(double v, int digits = 4) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.*g", digits, v);
    return buf;
}

double ev_gap(const EigenSystem& e, const std::string& to, const std::string& from) {
    return units::wavenumber_to_ev(e.energies(e.index(to)) - e.energies(e.index(from)));
}

double coeff(const ExcitonSystem& s, const std::string& site, const std::string& eig) {
    return std::abs(s.eigen.coefficients(s.basis.index(site), s.eigen.index(eig)));
}

double dipole(const ExcitonSystem& s, const std::string& to, const std::string& from) {
    const Operator mu = s.eigen.to_eigen(s.mu.cast<cplx>());
    return std::abs(mu(s.eigen.index(to), s.eigen.index(from)));
}

std::string top_two(const EigenSystem& e) { return e.label(e.manifold_offset(2) + e.manifold_size(2) - 1); }

int hardware_threads() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

// ---------------------------------------------------------------------------

Outcome eigenstructure() {
    Outcome o;
    const double tol = 0.005;
    const std::map<std::string, std::array<double, 3>> want = {{"dimerA", {0.654, 0.654, 0.378}},
                                                                {"dimerB", {0.537, 0.537, 0.650}}};
    for (const auto& [name, c] : want) {
        const ExcitonSystem s = build_system(preset(name));
        const std::array<double, 3> got = {coeff(s, "11", "2_1"), coeff(s, "22", "2_1"), coeff(s, "12", "2_1")};
        bool ok = true;
        for (int i = 0; i < 3; ++i) ok = ok && std::abs(got[i] - c[i]) <= tol;
        o.check(ok, name + " 2_1=(" + fmt(got[0]) + "," + fmt(got[1]) + "," + fmt(got[2]) + ")");
    }
    for (const auto& [name, gap] : std::map<std::string, double>{{"dimerA", 2518.0}, {"dimerB", 1203.0}}) {
        const ExcitonSystem s = build_system(preset(name));
        const double g = s.eigen.energies(s.eigen.index("2_3")) - s.eigen.energies(s.eigen.index("2_2"));
        o.check(std::abs(g - gap) <= 0.01 * gap, name + " gap " + fmt(g, 5) + " cm-1");
    }
    return o;
}

Outcome transition_energies() {
    Outcome o;
    struct Row {
        const char* preset;
        const char* to;
        const char* from;
        double ev;
    };
    const Row rows[] = {{"dimerA", "1_1", "0_1", 2.06},    {"dimerB", "1_1", "0_1", 2.06},
                        {"dimerA", "2_1", "1_1", 1.88},    {"dimerB", "2_1", "1_1", 2.04},
                        {"dimerB", "2_3", "1_1", 2.30},    {"tetramerA", "1_1", "0_1", 2.03},
                        {"tetramerB", "1_1", "0_1", 2.03}, {"tetramerB", "2_1", "1_1", 2.01},
                        {"tetramerA", "2_5", "1_1", 2.12}};
    std::map<std::string, ExcitonSystem> cache;
    for (const auto& r : rows) {
        if (!cache.count(r.preset)) cache.emplace(r.preset, build_system(preset(r.preset)));
        const double v = ev_gap(cache.at(r.preset).eigen, r.to, r.from);
        o.check(std::abs(v - r.ev) <= 0.01,
                std::string(r.preset) + " " + r.from + "->" + r.to + " " + fmt(v) + " eV");
    }
    return o;
}

Outcome overlaps_and_dipoles() {
    Outcome o;
    const ExcitonSystem db = build_system(preset("dimerB"));
    const double ov = std::pow(coeff(db, "12", "2_1"), 2);
    o.check(std::abs(ov - 0.42) <= 0.02, "dimerB |<12|2_1>|^2 " + fmt(ov));
    const double rd = dipole(db, "2_1", "1_1") / dipole(db, "2_3", "1_1");
    o.check(std::abs(rd - 13.0) <= 2.0, "dimerB mu ratio " + fmt(rd));
    const ExcitonSystem ta = build_system(preset("tetramerA"));
    const ExcitonSystem tb = build_system(preset("tetramerB"));
    const double rt = dipole(tb, "2_1", "1_1") / dipole(tb, "2_4", "1_1");
    o.check(std::abs(rt - 5.0) <= 1.0, "tetramerB mu ratio " + fmt(rt));
    const double o1 = std::pow(coeff(ta, "14", "2_5"), 2);
    const double o2 = std::pow(coeff(tb, "14", "2_1"), 2);
    const double o3 = std::pow(coeff(tb, "14", "2_4"), 2);
    o.check(std::abs(o1 - 0.32) <= 0.02, "tetramerA |<14|2_5>|^2 " + fmt(o1));
    o.check(std::abs(o2 - 0.03) <= 0.02, "tetramerB |<14|2_1>|^2 " + fmt(o2));
    o.check(std::abs(o3 - 0.37) <= 0.02, "tetramerB |<14|2_4>|^2 " + fmt(o3));
    return o;
}

// Time (fs) at which the two-exciton band first drops to `level`; nullopt if never.
std::optional<double> crossing(const std::vector<double>& t, const std::vector<double>& band, double level) {
    for (std::size_t i = 1; i < t.size(); ++i)
        if (band[i] <= level) {
            const double f = (band[i - 1] - level) / (band[i - 1] - band[i]);
            return t[i - 1] + f * (t[i] - t[i - 1]);
        }
    return std::nullopt;
}

std::vector<double> band_series(const std::vector<Eigen::VectorXd>& pops, const EigenSystem& e, int m) {
    std::vector<double> out;
    for (const auto& p : pops) out.push_back(p.segment(e.manifold_offset(m), e.manifold_size(m)).sum());
    return out;
}

struct Decay {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> pops;
};

Decay markov_decay(const ExcitonSystem& s, const std::string& init, double t_final) {
    const QmeModel model = QmeModel::build(s, build_dissipators(s));
    const TimeGrid grid = TimeGrid::covering(t_final, 0.05);
    PropagateOptions po;
    po.record_every = 20;  // 1 fs
    const Trajectory tr = propagate(initial_density(s, init), model, ControlField::zeros(grid), grid, po);
    return {tr.times, tr.populations};
}

HeomTrajectory heom_decay(const ExcitonSystem& s, const std::string& init, double t_final, int order,
                          bool block, int threads, double stop_below = -1.0) {
    // block-diagonal runs carry only intra-manifold phases; 0.2 fs matches 0.05 fs to ~2e-5
    const double dt = block ? 0.2 : 0.05;
    const auto& spec = s.spec;
    HeomOptions opt;
    opt.block_diagonal = block;
    opt.threads = threads;
    const HeomModel model(s, expand_brownian(spec.high, spec.temperature, spec.n_matsubara_high),
                          expand_debye(spec.low, spec.temperature, spec.n_matsubara_low),
                          enumerate_hierarchy(spec.n_sites, spec.n_matsubara_high, spec.n_matsubara_low, order), opt);
    const TimeGrid grid = TimeGrid::covering(t_final, dt);
    HeomPropagateOptions po;
    po.record_every = static_cast<int>(std::lround(1.0 / dt));  // 1 fs
    po.stop_below = stop_below;
    return propagate_heom(initial_density(s, init), model, ControlField::zeros(grid), grid, po);
}

Outcome monomer_decay() {
    Outcome o;
    const ExcitonSystem mono = build_system(preset("monomer"));
    const double e1 = std::exp(-1.0);
    const Decay mk = markov_decay(mono, "11", 500.0);
    const auto t_mk = crossing(mk.times, band_series(mk.pops, mono.eigen, 2), e1);
    const HeomTrajectory hm = heom_decay(mono, "11", 500.0, 7, true, 1);
    const auto t_hm = crossing(hm.times, band_series(hm.populations, mono.eigen, 2), e1);
    o.check(t_mk && std::abs(*t_mk - 100.0) <= 30.0, "markov 1/e " + (t_mk ? fmt(*t_mk) : "never") + " fs");
    o.check(t_hm && std::abs(*t_hm - 100.0) <= 30.0, "heom 1/e " + (t_hm ? fmt(*t_hm) : "never") + " fs");
    const double t_mono = t_mk ? *t_mk : 0.0;
    for (const auto& name : {"dimerA", "dimerB", "tetramerA", "tetramerB"}) {
        const ExcitonSystem s = build_system(preset(name));
        for (const auto& init : {std::string("2_1"), top_two(s.eigen)}) {
            const Decay d = markov_decay(s, init, 1000.0);
            const auto t = crossing(d.times, band_series(d.pops, s.eigen, 2), e1);
            o.check(!t || *t > t_mono, std::string(name) + " from " + init + " 1/e " + (t ? fmt(*t) : ">1000") + " fs");
        }
    }
    return o;
}

Outcome ordering() {
    Outcome o;
    const int threads = hardware_threads();
    for (const auto& base : {std::string("dimer"), std::string("tetramer")}) {
        const int order = base == "dimer" ? 7 : 5;
        std::map<char, std::optional<double>> half;
        for (char c : {'A', 'B'}) {
            const ExcitonSystem s = build_system(preset(base + c));
            const std::string init = top_two(s.eigen);
            try {
                const HeomTrajectory tr = heom_decay(s, init, 2000.0, order, true, threads, 0.5);
                half[c] = crossing(tr.times, band_series(tr.populations, s.eigen, 2), 0.5);
                o.check(half[c] && *half[c] >= 200.0 && *half[c] <= 2000.0,
                        base + c + " from " + init + " t_half " + (half[c] ? fmt(*half[c]) : ">2000") + " fs");
            } catch (const NumericalError& e) {
                half[c] = std::nullopt;
                o.check(false, base + c + " L=" + std::to_string(order) + " diverged: " + e.what());
            }
        }
        o.check(half['A'] && half['B'] && *half['B'] > *half['A'], base + " B slower than A");
    }
    return o;
}

Outcome heom_markov_contrast() {
    Outcome o;
    const int threads = hardware_threads();
    {
        const ExcitonSystem s = build_system(preset("dimerB"));
        const Decay mk = markov_decay(s, "2_3", 500.0);
        try {
            const HeomTrajectory hm = heom_decay(s, "2_3", 500.0, 7, true, threads);
            const auto a = band_series(hm.populations, s.eigen, 2), b = band_series(mk.pops, s.eigen, 2);
            double dev = 0.0;
            for (std::size_t i = 0; i < std::min(a.size(), b.size()); ++i) dev = std::max(dev, std::abs(a[i] - b[i]));
            o.check(dev < 0.1, "dimerB max band-2 deviation " + fmt(dev));
        } catch (const NumericalError& e) {
            o.check(false, std::string("dimerB heom diverged: ") + e.what());
        }
    }
    {
        const ExcitonSystem s = build_system(preset("dimerA"));
        const int i1 = s.eigen.index("2_1"), i2 = s.eigen.index("2_2");
        auto peak = [&](const std::vector<double>& t, const std::vector<Eigen::VectorXd>& p) {
            double m = 0.0;
            for (std::size_t i = 0; i < t.size() && t[i] < 200.0; ++i) m = std::max(m, p[i](i1) + p[i](i2));
            return m;
        };
        const Decay mk = markov_decay(s, "2_3", 200.0);
        const double pm = peak(mk.times, mk.pops);
        o.check(pm < 0.1, "dimerA markov 2_1+2_2 peak " + fmt(pm));
        try {
            const HeomTrajectory hm = heom_decay(s, "2_3", 200.0, 7, true, threads);
            const double ph = peak(hm.times, hm.populations);
            o.check(ph > 0.2, "dimerA heom 2_1+2_2 peak " + fmt(ph));
        } catch (const NumericalError& e) {
            o.check(false, std::string("dimerA heom diverged: ") + e.what());
        }
    }
    return o;
}

Outcome invariants() {
    Outcome o;
    const Tolerances tol;
    const ExcitonSystem db = build_system(preset("dimerB"));

    // invariants of a driven Markovian run and a field-free hierarchy run
    {
        const QmeModel model = QmeModel::build(db, build_dissipators(db));
        const TimeGrid grid = TimeGrid::covering(100.0, 0.05);
        ControlField f = ControlField::zeros(grid);
        for (std::size_t j = 0; j < f.samples.size(); ++j) {
            const double t = j * grid.dt;
            f.samples[j] = 2.0 * std::pow(std::sin(M_PI * t / 100.0), 2) * std::cos(units::ev_to_rad_per_fs(2.06) * t);
        }
        PropagateOptions po;
        po.enforce = false;
        const InvariantReport r = propagate(initial_density(db, "0"), model, f, grid, po).invariants;
        o.check(r.max_trace_drift < tol.trace && r.max_hermiticity_error < tol.hermiticity &&
                    r.min_eigenvalue >= tol.positivity_floor,
                "markov trace " + sci(r.max_trace_drift) + " herm " + sci(r.max_hermiticity_error) + " eig " +
                    sci(r.min_eigenvalue));
    }
    std::optional<HeomTrajectory> l7;
    try {
        l7 = heom_decay(db, "2_3", 200.0, 7, true, hardware_threads());
        const InvariantReport& r = l7->invariants;
        o.check(r.max_trace_drift < tol.trace && r.max_hermiticity_error < tol.hermiticity &&
                    r.min_eigenvalue >= tol.positivity_floor,
                "heom trace " + sci(r.max_trace_drift) + " herm " + sci(r.max_hermiticity_error) + " eig " +
                    sci(r.min_eigenvalue));
    } catch (const NumericalError& e) {
        o.check(false, std::string("heom invariants: ") + e.what());
    }

    // eta -> 0 versus the exact unitary evolution under a static field
    {
        AggregateSpec spec = preset("dimerB");
        spec.high.eta = 0.0;
        spec.low.eta = 0.0;
        spec.ic.eta = 0.0;
        const ExcitonSystem s = build_system(spec);
        HeomOptions opt;
        opt.include_residual = true;
        const HeomModel model(s, expand_brownian(spec.high, spec.temperature, spec.n_matsubara_high),
                              expand_debye(spec.low, spec.temperature, spec.n_matsubara_low),
                              enumerate_hierarchy(spec.n_sites, spec.n_matsubara_high, spec.n_matsubara_low, 3), opt);
        const double e0 = 0.6, t_final = 30.0;
        const TimeGrid grid = TimeGrid::covering(t_final, 0.0025);
        ControlField f = ControlField::zeros(grid);
        std::fill(f.samples.begin(), f.samples.end(), e0);
        HeomPropagateOptions po;
        po.record_every = static_cast<int>(grid.n_steps);
        po.store_states = true;
        const HeomTrajectory tr = propagate_heom(initial_density(s, "0"), model, f, grid, po);
        const Eigen::MatrixXcd rho0 = s.eigen.to_site(initial_density(s, "0"));
        const Eigen::MatrixXcd exact = oracle::unitary_evolve(s.h_ex, s.mu, e0, rho0, t_final);
        const double err = (s.eigen.to_site(tr.states.back()) - exact).cwiseAbs().maxCoeff();
        o.check(err < 1e-6, "eta->0 vs unitary " + sci(err));
    }

    // truncation order 7 versus 8
    try {
        if (!l7) throw NumericalError("order 7 run unavailable");
        const HeomTrajectory l8 = heom_decay(db, "2_3", 200.0, 8, true, hardware_threads());
        double dev = 0.0;
        for (std::size_t i = 0; i < l7->populations.size(); ++i)
            dev = std::max(dev, (l7->populations[i] - l8.populations[i]).cwiseAbs().maxCoeff());
        o.check(dev < 0.01, "order 7 vs 8 max population difference " + sci(dev) + " over 200 fs");
    } catch (const NumericalError& e) {
        o.check(false, std::string("order 7 vs 8: ") + e.what());
    }

    // serial versus parallel right-hand side
    {
        const auto& spec = db.spec;
        auto model_with = [&](int threads) {
            HeomOptions opt;
            opt.threads = threads;
            return HeomModel(db, expand_brownian(spec.high, spec.temperature, spec.n_matsubara_high),
                             expand_debye(spec.low, spec.temperature, spec.n_matsubara_low),
                             enumerate_hierarchy(spec.n_sites, spec.n_matsubara_high, spec.n_matsubara_low, 7), opt);
        };
        const HeomModel serial = model_with(1), parallel = model_with(4);
        const TimeGrid grid = TimeGrid::covering(10.0, 0.05);
        const ControlField f = ControlField::zeros(grid);
        HeomPropagateOptions po;
        po.record_every = static_cast<int>(grid.n_steps);
        po.store_states = true;
        const Operator rho0 = initial_density(db, "2_3");
        const Operator a = propagate_heom(rho0, serial, f, grid, po).states.back();
        const Operator b = propagate_heom(rho0, parallel, f, grid, po).states.back();
        const double rel = (a - b).norm() / a.norm();
        o.check(rel < 1e-12, "serial vs parallel " + sci(rel));
    }
    return o;
}

Outcome bath_fidelity() {
    Outcome o;
    const AggregateSpec spec = preset("dimerA");
    const double kelvin = 300.0;
    {
        const BrownianBath& b = spec.high;
        const BathExpansion e = expand_brownian(b, kelvin, spec.n_matsubara_high);
        auto j = [&](double w) { return oracle::brownian_j(b.eta, b.omega0, b.width, w); };
        const double jp0 = b.eta * b.width / b.omega0;
        const double scale = std::abs(oracle::response_quadrature(j, jp0, 0.0, kelvin));
        double worst = 0.0;
        for (double t = 0.0; t <= 1000.0; t += 5.0)
            worst = std::max(worst, std::abs(e.evaluate(t) - oracle::response_quadrature(j, jp0, t, kelvin)) / scale);
        o.check(worst <= 0.02, "brownian max error / |alpha(0)| " + fmt(worst));
    }
    {
        // the Drude real part diverges logarithmically at t = 0; the scale is the
        // expansion's own alpha(0) and the first sample sits at 5 fs
        const DebyeBath& d = spec.low;
        const BathExpansion e = expand_debye(d, kelvin, spec.n_matsubara_low);
        auto j = [&](double w) { return oracle::debye_j(d.eta, d.cutoff, w); };
        const double scale = std::abs(e.at_zero());
        double worst = 0.0, where = 0.0;
        for (double t = 5.0; t <= 1000.0; t += 5.0) {
            const double err = std::abs(e.evaluate(t) - oracle::response_quadrature(j, d.eta, t, kelvin)) / scale;
            if (err > worst) worst = err, where = t;
        }
        o.check(worst <= 0.02, "debye max error / |alpha(0)| " + fmt(worst) + " at " + fmt(where) + " fs");
    }
    return o;
}

// ---------------------------------------------------------------------------

struct OptimizedDimer {
    ExcitonSystem system;
    OCTResult result;
};

std::map<std::string, OptimizedDimer>& optimized() {
    static std::map<std::string, OptimizedDimer> cache;
    return cache;
}

const OptimizedDimer& optimize_dimer(const std::string& name) {
    auto& cache = optimized();
    if (!cache.count(name)) {
        ExcitonSystem s = build_system(preset(name));
        const QmeModel model = QmeModel::build(s, build_dissipators(s));
        OCTResult r = oct_iterate(s, model, OCTConfig{});
        cache.emplace(name, OptimizedDimer{std::move(s), std::move(r)});
    }
    return cache.at(name);
}

// Bright 0->1 and 1->2 transitions (|mu| >= 10% of the strongest), eV.
std::vector<double> bright_resonances(const ExcitonSystem& s) {
    const Operator mu = s.eigen.to_eigen(s.mu.cast<cplx>());
    double strongest = 0.0;
    std::vector<std::pair<double, double>> all;
    for (int i = 0; i < s.dimension(); ++i)
        for (int f = 0; f < s.dimension(); ++f)
            if (s.eigen.manifold[f] == s.eigen.manifold[i] + 1) {
                all.emplace_back(units::wavenumber_to_ev(s.eigen.energies(f) - s.eigen.energies(i)), std::abs(mu(f, i)));
                strongest = std::max(strongest, std::abs(mu(f, i)));
            }
    std::vector<double> out;
    for (const auto& [e, m] : all)
        if (m >= 0.1 * strongest) out.push_back(e);
    return out;
}

double target_population_at_end(const ExcitonSystem& s, const ControlField& field, bool heom) {
    const Operator target = site_projector(s, std::to_string(1) + std::to_string(s.n_sites()));
    const Operator rho0 = initial_density(s, "0");
    const TimeGrid grid = TimeGrid::covering(field.t_final(), field.dt);
    Operator rho;
    if (heom) {
        const auto& spec = s.spec;
        HeomOptions opt;
        opt.threads = hardware_threads();
        const HeomModel model(s, expand_brownian(spec.high, spec.temperature, spec.n_matsubara_high),
                              expand_debye(spec.low, spec.temperature, spec.n_matsubara_low),
                              enumerate_hierarchy(spec.n_sites, spec.n_matsubara_high, spec.n_matsubara_low, 7), opt);
        HeomPropagateOptions po;
        po.record_every = static_cast<int>(grid.n_steps);
        po.store_states = true;
        rho = propagate_heom(rho0, model, field, grid, po).states.back();
    } else {
        const QmeModel model = QmeModel::build(s, build_dissipators(s));
        PropagateOptions po;
        po.record_every = static_cast<int>(grid.n_steps);
        po.store_states = true;
        rho = propagate(rho0, model, field, grid, po).states.back();
    }
    return (target * rho).trace().real();
}

Outcome oct_behaviour() {
    Outcome o;
    const OCTConfig defaults;
    for (const auto& name : {"dimerA", "dimerB"}) {
        const OptimizedDimer& d = optimize_dimer(name);
        const auto& log = d.result.log;
        const std::string p = std::string(name) + " ";
        int rises = 0;
        for (std::size_t k = 1; k < log.size(); ++k) rises += log[k].j >= log[k - 1].j;
        const double mono = log.size() > 1 ? double(rises) / double(log.size() - 1) : 0.0;
        o.check(mono >= 0.9, p + "monotone fraction " + fmt(mono) + " of " + std::to_string(log.size() - 1));
        const double dev = std::abs(log.back().intensity - defaults.resolved_i0()) / defaults.resolved_i0();
        o.check(dev < 0.05, p + "|I-I0|/I0 " + fmt(dev));
        o.check(log.back().max_residue < 1e-10, p + "field residue " + sci(log.back().max_residue));
        const Spectrogram sg = xfrog(d.result.field, XFROGConfig{});
        const double frac = spectrogram_ridge_fraction(sg, bright_resonances(d.system), 0.15);
        o.check(frac >= 0.75, p + "ridge energy near resonances " + fmt(frac));
        const double pm = target_population_at_end(d.system, d.result.field, false);
        try {
            const double ph = target_population_at_end(d.system, d.result.field, true);
            o.check(ph >= 0.5 * pm && ph <= 2.0 * pm, p + "target markov " + fmt(pm) + " heom " + fmt(ph));
        } catch (const NumericalError& e) {
            o.check(false, p + "heom replay: " + e.what());
        }
    }
    return o;
}

double peak_two_exciton(const ExcitonSystem& s, const ControlField& field) {
    const QmeModel model = QmeModel::build(s, build_dissipators(s));
    const TimeGrid grid = TimeGrid::covering(field.t_final() + 50.0, field.dt);
    PropagateOptions po;
    po.record_every = 10;
    const Trajectory tr = propagate(initial_density(s, "0"), model, field, grid, po);
    double m = 0.0;
    for (std::size_t i = 0; i < tr.times.size(); ++i) m = std::max(m, tr.band(i, 2, s.eigen));
    return m;
}

Outcome two_gaussian_robustness() {
    Outcome o;
    std::map<std::string, double> kept;
    for (const auto& name : {"dimerA", "dimerB"}) {
        const OptimizedDimer& d = optimize_dimer(name);
        const TwoGaussianFit fit = fit_two_gaussians(d.result.field);
        const double full = peak_two_exciton(d.system, d.result.field);
        const double simple = peak_two_exciton(d.system, fit.field);
        kept[name] = simple / full;
        o.detail << (o.detail.tellp() > 0 ? "; " : "") << name << " peak " << fmt(full) << " -> " << fmt(simple)
                 << " (fit residual " << fmt(fit.residual, 3) << ")";
    }
    o.check(kept["dimerB"] >= 0.7, "dimerB retains " + fmt(kept["dimerB"]));
    o.check(kept["dimerA"] < kept["dimerB"], "dimerA retains " + fmt(kept["dimerA"]) + " < dimerB");
    return o;
}

}  // namespace

int main(int argc, char** argv) {
    struct Criterion {
        int id;
        std::function<Outcome()> run;
        double budget_s;
    };
    const std::vector<Criterion> all = {
        {1, eigenstructure, 1.0},     {2, transition_energies, 1.0},      {3, overlaps_and_dipoles, 1.0},
        {4, monomer_decay, 10.0},     {5, ordering, 600.0},               {6, heom_markov_contrast, 600.0},
        {7, invariants, 60.0},        {8, bath_fidelity, 10.0},           {9, oct_behaviour, 1800.0},
        {10, two_gaussian_robustness, 600.0}};
    std::set<int> wanted;
    for (int i = 1; i < argc; ++i) wanted.insert(std::atoi(argv[i]));
    int passed = 0, run = 0;
    for (const auto& c : all) {
        if (!wanted.empty() && !wanted.count(c.id)) continue;
        const auto start = std::chrono::steady_clock::now();
        Outcome o;
        try {
            o = c.run();
        } catch (const std::exception& e) {
            o.check(false, std::string("error: ") + e.what());
        }
        const double secs = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
        o.check(secs <= c.budget_s, "wall " + fmt(secs, 3) + " s of " + fmt(c.budget_s) + " s");
        std::cout << "criterion " << c.id << ": " << (o.pass ? "PASS" : "FAIL") << " " << o.detail.str()
                  << std::endl;
        ++run;
        passed += o.pass;
    }
    std::cout << passed << "/" << run << " criteria passed" << std::endl;
    return 0;
}
