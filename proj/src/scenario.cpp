#include "exdyn/scenario.hpp"

#include <cmath>
#include <cstdint>
#include <fstream>
#include <set>
#include <sstream>

#include <nlohmann/json.hpp>
#include <yaml-cpp/yaml.h>

#include "exdyn/errors.hpp"
#include "exdyn/units.hpp"

namespace exdyn {

namespace {

using Keys = std::set<std::string>;

void check_keys(const YAML::Node& node, const Keys& allowed, const std::string& where) {
    if (!node.IsMap()) throw ConfigError("'" + where + "' must be a mapping");
    for (const auto& kv : node) {
        const auto key = kv.first.as<std::string>();
        if (!allowed.count(key)) throw ConfigError("unknown key '" + key + "' in " + where);
    }
}

template <typename T>
void read(const YAML::Node& node, const char* key, T& out, const std::string& where) {
    if (!node[key]) return;
    try {
        out = node[key].as<T>();
    } catch (const YAML::Exception&) {
        throw ConfigError("bad value for '" + std::string(key) + "' in " + where);
    }
}

// Energy given either in cm^-1 (`key`) or eV (`key_ev`).
void read_energy(const YAML::Node& node, const std::string& key, double& out, const std::string& where) {
    const bool cm = static_cast<bool>(node[key]);
    const bool ev = static_cast<bool>(node[key + "_ev"]);
    if (cm && ev) throw ConfigError("give either '" + key + "' or '" + key + "_ev' in " + where);
    if (cm) read(node, key.c_str(), out, where);
    if (ev) {
        double v = 0.0;
        read(node, (key + "_ev").c_str(), v, where);
        out = units::ev_to_wavenumber(v);
    }
}

void require_positive(double v, const std::string& what) {
    if (!(v > 0.0) || !std::isfinite(v)) throw ConfigError(what + " must be positive");
}

}  // namespace

std::string fnv1a_hex(const std::string& text) {
    std::uint64_t h = 14695981039346656037ull;
    for (unsigned char c : text) {
        h ^= c;
        h *= 1099511628211ull;
    }
    std::ostringstream os;
    os << std::hex;
    os.width(16);
    os.fill('0');
    os << h;
    return os.str();
}

ScenarioConfig scenario_from_preset(const std::string& name) {
    ScenarioConfig c;
    c.preset_name = name;
    c.spec = preset(name);
    return c;
}

ScenarioConfig parse_scenario(const std::string& text) {
    YAML::Node root;
    try {
        root = YAML::Load(text);
    } catch (const YAML::Exception& e) {
        throw ConfigError(std::string("malformed YAML: ") + e.what());
    }
    if (root.IsNull()) root = YAML::Node(YAML::NodeType::Map);
    check_keys(root, {"preset", "aggregate", "temperature", "baths", "ic", "method", "heom", "propagation",
                      "field_file", "oct", "xfrog", "output_dir", "threads"},
               "scenario");

    ScenarioConfig c;
    if (root["preset"]) c = scenario_from_preset(root["preset"].as<std::string>());

    if (const auto a = root["aggregate"]) {
        const std::string w = "aggregate";
        check_keys(a, {"n_sites", "e_energy", "e_energy_ev", "anharmonicity", "anharmonicity_ev", "j_coupling",
                       "j_ef_factor", "mu_e", "mu_f_factor", "kappa"},
                   w);
        read(a, "n_sites", c.spec.n_sites, w);
        read_energy(a, "e_energy", c.spec.e_energy, w);
        read_energy(a, "anharmonicity", c.spec.anharmonicity, w);
        read(a, "j_coupling", c.spec.j_coupling, w);
        read(a, "j_ef_factor", c.spec.j_ef_factor, w);
        read(a, "mu_e", c.spec.mu_e, w);
        read(a, "mu_f_factor", c.spec.mu_f_factor, w);
        read(a, "kappa", c.spec.kappa, w);
    }
    read(root, "temperature", c.spec.temperature, "scenario");
    if (const auto b = root["baths"]) {
        check_keys(b, {"high", "low"}, "baths");
        if (const auto h = b["high"]) {
            check_keys(h, {"eta", "omega0", "width", "matsubara"}, "baths.high");
            read(h, "eta", c.spec.high.eta, "baths.high");
            read(h, "omega0", c.spec.high.omega0, "baths.high");
            read(h, "width", c.spec.high.width, "baths.high");
            read(h, "matsubara", c.spec.n_matsubara_high, "baths.high");
        }
        if (const auto l = b["low"]) {
            check_keys(l, {"eta", "cutoff", "matsubara"}, "baths.low");
            read(l, "eta", c.spec.low.eta, "baths.low");
            read(l, "cutoff", c.spec.low.cutoff, "baths.low");
            read(l, "matsubara", c.spec.n_matsubara_low, "baths.low");
        }
    }
    if (const auto ic = root["ic"]) {
        check_keys(ic, {"eta", "cutoff"}, "ic");
        read(ic, "eta", c.spec.ic.eta, "ic");
        read(ic, "cutoff", c.spec.ic.cutoff, "ic");
    }
    if (root["method"]) {
        const auto m = root["method"].as<std::string>();
        if (m == "markov") c.method = Method::markov;
        else if (m == "heom") c.method = Method::heom;
        else throw ConfigError("method must be 'markov' or 'heom'");
    }
    if (const auto h = root["heom"]) {
        check_keys(h, {"order", "max_ados", "scaling", "block_diagonal", "residual"}, "heom");
        read(h, "order", c.heom.order, "heom");
        read(h, "max_ados", c.heom.max_ados, "heom");
        read(h, "block_diagonal", c.heom.block_diagonal_when_possible, "heom");
        read(h, "residual", c.heom.include_residual, "heom");
        if (h["scaling"]) {
            const auto s = h["scaling"].as<std::string>();
            if (s == "unit") c.heom.scaling = AdoScaling::unit_numerator;
            else if (s == "real-rate") c.heom.scaling = AdoScaling::real_rate_prefactor;
            else throw ConfigError("heom.scaling must be 'unit' or 'real-rate'");
        }
    }
    if (const auto p = root["propagation"]) {
        check_keys(p, {"dt", "t_final", "record_every", "initial_state"}, "propagation");
        read(p, "dt", c.propagation.dt, "propagation");
        read(p, "t_final", c.propagation.t_final, "propagation");
        read(p, "record_every", c.propagation.record_every, "propagation");
        read(p, "initial_state", c.propagation.initial_state, "propagation");
    }
    read(root, "field_file", c.field_file, "scenario");
    if (const auto o = root["oct"]) {
        check_keys(o, {"target", "initial_state", "t_final", "dt", "i0_au", "lambda0", "max_iters", "tolerance",
                       "guess_width", "guess_fraction"},
                   "oct");
        OCTConfig oc;
        read(o, "target", oc.target, "oct");
        read(o, "initial_state", oc.initial, "oct");
        read(o, "t_final", oc.t_final, "oct");
        read(o, "dt", oc.dt, "oct");
        double i0_au = 0.005;
        read(o, "i0_au", i0_au, "oct");
        require_positive(i0_au, "oct.i0_au");
        oc.i0 = units::au_intensity_to_internal(i0_au);
        read(o, "lambda0", oc.lambda0, "oct");
        read(o, "max_iters", oc.max_iters, "oct");
        read(o, "tolerance", oc.tolerance, "oct");
        read(o, "guess_width", oc.guess_width, "oct");
        read(o, "guess_fraction", oc.guess_fraction, "oct");
        c.oct = oc;
    }
    if (const auto x = root["xfrog"]) {
        check_keys(x, {"tau", "delta", "t_step", "omega_min", "omega_max", "omega_step"}, "xfrog");
        read(x, "tau", c.xfrog.tau, "xfrog");
        read(x, "delta", c.xfrog.delta, "xfrog");
        read(x, "t_step", c.xfrog.t_step, "xfrog");
        read(x, "omega_min", c.xfrog.omega_min, "xfrog");
        read(x, "omega_max", c.xfrog.omega_max, "xfrog");
        read(x, "omega_step", c.xfrog.omega_step, "xfrog");
    }
    read(root, "output_dir", c.output_dir, "scenario");
    read(root, "threads", c.threads, "scenario");
    c.validate();
    return c;
}

ScenarioConfig load_scenario(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("cannot read config '" + path + "'");
    std::ostringstream ss;
    ss << in.rdbuf();
    return parse_scenario(ss.str());
}

void ScenarioConfig::validate() const {
    spec.validate();
    if (heom.order < 0 || heom.order > 64) throw ConfigError("heom.order must be in [0, 64]");
    if (heom.max_ados == 0) throw ConfigError("heom.max_ados must be positive");
    require_positive(propagation.dt, "propagation.dt");
    require_positive(propagation.t_final, "propagation.t_final");
    TimeGrid::covering(propagation.t_final, propagation.dt);
    if (propagation.record_every < 1) throw ConfigError("propagation.record_every must be >= 1");
    if (oct) oct->validate();
    xfrog.validate();
    if (threads < 1 || threads > 1024) throw ConfigError("threads must be in [1, 1024]");
    if (output_dir.empty()) throw ConfigError("output_dir must not be empty");
}

std::string ScenarioConfig::canonical() const {
    nlohmann::ordered_json j;
    j["preset"] = preset_name;
    j["aggregate"] = {{"n_sites", spec.n_sites},
                      {"e_energy", spec.e_energy},
                      {"anharmonicity", spec.anharmonicity},
                      {"j_coupling", spec.j_coupling},
                      {"j_ef_factor", spec.j_ef_factor},
                      {"mu_e", spec.mu_e},
                      {"mu_f_factor", spec.mu_f_factor},
                      {"kappa", spec.kappa}};
    j["temperature"] = spec.temperature;
    j["baths"] = {{"high",
                   {{"eta", spec.high.eta},
                    {"omega0", spec.high.omega0},
                    {"width", spec.high.width},
                    {"matsubara", spec.n_matsubara_high}}},
                  {"low", {{"eta", spec.low.eta}, {"cutoff", spec.low.cutoff}, {"matsubara", spec.n_matsubara_low}}}};
    j["ic"] = {{"eta", spec.ic.eta}, {"cutoff", spec.ic.cutoff}};
    j["method"] = method == Method::heom ? "heom" : "markov";
    j["heom"] = {{"order", heom.order},
                 {"max_ados", heom.max_ados},
                 {"scaling", heom.scaling == AdoScaling::unit_numerator ? "unit" : "real-rate"},
                 {"block_diagonal", heom.block_diagonal_when_possible},
                 {"residual", heom.include_residual}};
    j["propagation"] = {{"dt", propagation.dt},
                        {"t_final", propagation.t_final},
                        {"record_every", propagation.record_every},
                        {"initial_state", propagation.initial_state}};
    j["field_file"] = field_file;
    if (oct)
        j["oct"] = {{"target", oct->target},         {"initial_state", oct->initial},
                    {"t_final", oct->t_final},       {"dt", oct->dt},
                    {"i0", oct->resolved_i0()},      {"lambda0", oct->lambda0},
                    {"max_iters", oct->max_iters},   {"tolerance", oct->tolerance},
                    {"guess_width", oct->guess_width}, {"guess_fraction", oct->guess_fraction}};
    j["xfrog"] = {{"tau", xfrog.tau},           {"delta", xfrog.delta},         {"t_step", xfrog.t_step},
                  {"omega_min", xfrog.omega_min}, {"omega_max", xfrog.omega_max}, {"omega_step", xfrog.omega_step}};
    return j.dump();
}

std::string ScenarioConfig::hash() const { return fnv1a_hex(canonical()); }

Operator initial_density(const ExcitonSystem& system, const std::string& label) {
    if (label.find('_') != std::string::npos) {
        int idx = 0;
        try {
            idx = system.eigen.index(label);
        } catch (const std::exception&) {
            throw ConfigError("unknown eigenstate label '" + label + "'");
        }
        return eigen_projector(system.eigen, idx);
    }
    return site_projector(system, label);
}

}  // namespace exdyn
