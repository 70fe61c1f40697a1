#include <cmath>

#include "exdyn/errors.hpp"
#include "exdyn/parameters.hpp"
#include "exdyn/units.hpp"

namespace exdyn {

void AggregateSpec::validate() const {
    auto fail = [](const std::string& what) { throw ConfigError("aggregate: " + what); };
    if (n_sites < 1) fail("n_sites must be >= 1");
    if (!(e_energy > 0.0)) fail("e_energy must be positive");
    if (!(temperature > 0.0)) fail("temperature must be positive");
    if (!(mu_e >= 0.0) || !(mu_f_factor >= 0.0)) fail("dipoles must be non-negative");
    if (!std::isfinite(anharmonicity) || !std::isfinite(j_coupling) || !std::isfinite(j_ef_factor) ||
        !std::isfinite(kappa))
        fail("non-finite coupling parameter");
    if (high.eta < 0.0 || low.eta < 0.0 || ic.eta < 0.0) fail("coupling strengths must be >= 0");
    if (!(low.cutoff > 0.0) || !(ic.cutoff > 0.0) || !(high.width > 0.0)) fail("cutoffs must be positive");
    if (high.eta > 0.0 && !(high.omega0 > high.width / 2.0))
        fail("Brownian oscillator must be underdamped (omega0 > width/2)");
    if (n_matsubara_high < 0 || n_matsubara_low < 0) fail("Matsubara counts must be >= 0");
}

namespace {

AggregateSpec pbi(int n_sites, double anharmonicity_ev) {
    AggregateSpec s;
    s.n_sites = n_sites;
    s.e_energy = units::ev_to_wavenumber(2.13);
    s.anharmonicity = units::ev_to_wavenumber(anharmonicity_ev);
    s.j_coupling = -515.0;
    s.j_ef_factor = std::sqrt(2.0);
    s.mu_e = 3.34;
    s.mu_f_factor = std::sqrt(2.0);
    s.kappa = 1.0;
    s.temperature = 300.0;
    s.high = {0.44, 1415.0, 100.0};
    s.low = {2.0, 100.0};
    s.ic = {0.4, 1000.0};
    s.n_matsubara_high = 1;
    s.n_matsubara_low = 1;
    return s;
}

constexpr double kCaseA = -0.26;
constexpr double kCaseB = -0.04;

}  // namespace

AggregateSpec preset(const std::string& name) {
    if (name == "monomer") return pbi(1, kCaseA);
    if (name == "dimerA") return pbi(2, kCaseA);
    if (name == "dimerB") return pbi(2, kCaseB);
    if (name == "trimerA") return pbi(3, kCaseA);
    if (name == "trimerB") return pbi(3, kCaseB);
    if (name == "tetramerA") return pbi(4, kCaseA);
    if (name == "tetramerB") return pbi(4, kCaseB);
    throw ConfigError("unknown preset '" + name + "'");
}

std::vector<std::string> preset_names() {
    return {"monomer", "dimerA", "dimerB", "trimerA", "trimerB", "tetramerA", "tetramerB"};
}

}  // namespace exdyn
