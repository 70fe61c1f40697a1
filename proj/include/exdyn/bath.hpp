// bath.hpp: spectral densities, their sum-of-exponentials response expansions
// and detailed-balance weighted spectra.

#pragma once

#include <array>
#include <variant>
#include <vector>

#include "exdyn/linalg.hpp"
#include "exdyn/parameters.hpp"

namespace exdyn {

using SpectralDensity = std::variant<DebyeBath, BrownianBath>;

// J(omega) in cm^-1 for omega in cm^-1; odd in omega.
double spectral_density(const SpectralDensity& j, double omega);

// One term c * exp(-gamma t); c in cm^-2, gamma in cm^-1.
struct ExpTerm {
    cplx amplitude;
    cplx rate;
};

struct BathExpansion {
    std::vector<ExpTerm> terms;
    // sum over the discarded Matsubara terms of c_k / nu_k (cm^-1)
    double residual{0.0};
    int matsubara_count{0};
    // leading terms that are not Matsubara terms: 1 (Debye) or 2 (Brownian pair)
    int oscillatory_count{0};

    // sum_k c_k exp(-gamma_k t), t in fs, result in cm^-2
    cplx evaluate(double t_fs) const;
    cplx at_zero() const { return evaluate(0.0); }
};

// Matsubara frequency nu_k = 2 pi k / beta in cm^-1.
double matsubara_frequency(int k, double temperature);

BathExpansion expand_debye(const DebyeBath& bath, double temperature, int n_matsubara);
BathExpansion expand_brownian(const BrownianBath& bath, double temperature, int n_matsubara);

// Coefficients of the two-noise decomposition of the Brownian pair
// b1 e^{-W1 t} + b2 e^{-W2 t}:
//   alpha_{1;+} = (b1 + b2*)/2, alpha_{1;-} = -i (b1 - b2*)/2,
//   alpha_{2;+} = (b1* + b2)/2, alpha_{2;-} = -i (-b1* + b2)/2,
// and the common scale c0 = sqrt(|b1 b2|).
struct BrownianPairCoefficients {
    std::array<cplx, 2> alpha_plus;
    std::array<cplx, 2> alpha_minus;
    double c0{0.0};
};
BrownianPairCoefficients brownian_pair_coefficients(const BathExpansion& expansion);

// Direct quadrature of
//   alpha(t) = 1/pi int_0^inf J(w) [coth(beta w / 2) cos(w t) - i sin(w t)] dw.
// Throws NumericalError when the quadrature does not converge (e.g. the
// logarithmically divergent Debye real part at t = 0).
cplx response_oracle(const SpectralDensity& j, double t_fs, double temperature);

// C(w) = 2 [1 + n(w)] J(w) for w > 0, 2 n(|w|) J(|w|) for w < 0, continuous at 0.
double thermal_spectrum(const SpectralDensity& j, double omega, double temperature);

}  // namespace exdyn
