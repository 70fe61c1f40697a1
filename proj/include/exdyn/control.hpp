// control.hpp: optimal-control field design on the Markovian propagator, XFROG
// spectrograms and the two-Gaussian pulse simplification.

#pragma once

#include <array>
#include <string>
#include <vector>

#include "exdyn/field.hpp"
#include "exdyn/markovian.hpp"

namespace exdyn {

struct OCTConfig {
    std::string target{};           // site label; empty selects |1N>
    std::string initial{"0"};       // site label of the pure initial state
    double t_final{50.0};           // fs
    double dt{0.01};                // fs; the on-the-fly update turns unstable near 0.05 for small lambda
    double i0{0.0};                 // (GV/m)^2 fs; <= 0 selects 0.005 a.u.
    double lambda0{0.0};            // <= 0 selects the automatic first-iteration estimate
    int max_iters{150};
    double tolerance{1e-6};         // on |J_k - J_{k-1}|
    double guess_width{3.0};        // fs, Gaussian coherence width of the initial guess
    double guess_fraction{0.1};     // initial guess intensity / I0
    double residue_tolerance{1e-10};

    void validate() const;
    double resolved_i0() const;
};

struct FunctionalValue {
    double j{0.0};
    double target_pop{0.0};
    double intensity{0.0};
};

struct OCTIteration {
    int iter{0};
    double j{0.0};
    double target_pop{0.0};
    double intensity{0.0};
    double lambda{0.0};
    double max_residue{0.0};  // largest imaginary residue of the field update (GV/m)
};

struct OCTResult {
    ControlField field;
    std::vector<OCTIteration> log;
    bool converged{false};
    int non_monotonic_steps{0};
};

// Pure-state projector |label><label| in the eigenbasis.
Operator site_projector(const ExcitonSystem& system, const std::string& label);

// J = Tr{O rho(T)} - lambda/2 (I - I0). Throws NumericalError for nonzero endpoint samples.
FunctionalValue functional_eval(const ControlField& field, const QmeModel& model, const Operator& rho0,
                                const Operator& target, double lambda, double i0);

// (i / lambda) k Tr{sigma [mu, rho]} sin^2(pi t / T) for one time point; k converts the
// dipole-field energy to a rate. `residue` receives the discarded imaginary part.
double field_value(const Operator& sigma, const Operator& rho, const Operator& mu, double lambda,
                   double t, double t_final, double* residue = nullptr);

// Pointwise field from stored trajectories on the same grid.
ControlField field_update(const std::vector<Operator>& rho_traj, const std::vector<Operator>& sigma_traj,
                          const Operator& mu, double lambda, const TimeGrid& grid, double residue_tolerance = 1e-10);

ControlField initial_guess(const OCTConfig& config, const EigenSystem& eigen);

OCTResult oct_iterate(const ExcitonSystem& system, const QmeModel& model, const OCTConfig& config);

// Mean 0 -> one-exciton transition energy, eV.
double mean_one_exciton_ev(const EigenSystem& eigen);

struct XFROGConfig {
    double tau{5.0};          // fs
    double delta{1.0};        // fs
    double t_step{0.5};       // fs
    double omega_min{1.6};    // eV
    double omega_max{2.6};    // eV
    double omega_step{0.005}; // eV

    void validate() const;
};

struct Spectrogram {
    std::vector<double> times;   // fs
    std::vector<double> omegas;  // eV
    std::vector<double> values;  // times.size() x omegas.size(), time-major

    double at(std::size_t it, std::size_t iw) const { return values[it * omegas.size() + iw]; }
    double total() const;
};

// Erf-shoulder gate of full width tau and edge width delta.
double xfrog_gate(double t, double tau, double delta);

Spectrogram xfrog(const ControlField& field, const XFROGConfig& config);

std::string spectrogram_csv(const Spectrogram& s);

// Share of the spectrogram energy in time slices whose ridge (peak frequency)
// lies within `half_width` (eV) of one of the listed resonances (eV). The gate
// alone smears a pure carrier over ~0.8 eV, so the ridge is compared rather
// than the raw energy distribution.
double spectrogram_ridge_fraction(const Spectrogram& s, const std::vector<double>& resonances_ev,
                                  double half_width);

struct GaussianComponent {
    double amplitude{0.0};  // GV/m
    double center{0.0};     // fs
    double width{1.0};      // fs (standard deviation)
    double omega{0.0};      // rad/fs
    double phase{0.0};      // rad
};

struct TwoGaussianFit {
    std::array<GaussianComponent, 2> components;
    double residual{0.0};       // RMS misfit / RMS field
    ControlField field;         // resampled simplified field
};

double two_gaussian_value(const std::array<GaussianComponent, 2>& c, double t);

// Least-squares fit with a deterministic multi-start from the two largest
// spectrogram ridges.
TwoGaussianFit fit_two_gaussians(const ControlField& field, const XFROGConfig& xfrog_config = {});

}  // namespace exdyn
