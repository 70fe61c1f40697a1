// parameters.hpp: plain parameter records describing one aggregate scenario

#pragma once

#include <string>
#include <vector>

namespace exdyn {

// Debye (overdamped) spectral density J(w) = eta * w * L^2 / (w^2 + L^2).
struct DebyeBath {
    double eta{0.0};
    double cutoff{100.0};  // cm^-1
};

// Damped Brownian oscillator spectral density
// J(w) = eta * w0^3 * w * L / ((w^2 - w0^2)^2 + L^2 w^2).
struct BrownianBath {
    double eta{0.0};
    double omega0{1415.0};  // cm^-1
    double width{100.0};    // cm^-1
};

// Internal-conversion (S_n -> S_1) spectrum, Debye shaped.
struct ICSpectrum {
    double eta{0.0};
    double cutoff{1000.0};  // cm^-1
};

// Homogeneous linear aggregate. Energies in cm^-1, dipoles in e*a0.
struct AggregateSpec {
    int n_sites{1};
    double e_energy{0.0};
    double anharmonicity{0.0};  // E_f - 2 E_e
    double j_coupling{0.0};     // nearest neighbour only
    double j_ef_factor{1.0};    // J^(ef) / J
    double mu_e{1.0};
    double mu_f_factor{1.0};  // mu_f / mu_e
    double kappa{1.0};
    double temperature{300.0};  // K

    BrownianBath high;
    DebyeBath low;
    ICSpectrum ic;
    int n_matsubara_high{1};
    int n_matsubara_low{1};

    // Throws ConfigError on out-of-range values.
    void validate() const;
};

// Built-in PBI presets: "monomer", "dimerA", "dimerB", "trimerA", "trimerB",
// "tetramerA", "tetramerB". Throws ConfigError for unknown names.
AggregateSpec preset(const std::string& name);
std::vector<std::string> preset_names();

}  // namespace exdyn
