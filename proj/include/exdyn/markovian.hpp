// markovian.hpp: Redfield-type dissipators in the exciton eigenbasis, the
// quantum master equation and the adjoint (backward) equation used by OCT.

#pragma once

#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "exdyn/exciton_model.hpp"
#include "exdyn/field.hpp"

namespace exdyn {

// All operators in the exciton eigenbasis, entries in cm^-1.
struct DissipatorSet {
    std::vector<Operator> xi_ic;  // one per site, coupling Pi_m^(IC)
    std::vector<Operator> xi_m;   // one per site, coupling h_m (high-frequency bath)
    Operator xi_tot;              // coupling h_tot (low-frequency bath)
};

using SpectrumFn = std::function<double(double)>;

// Xi_ab = V_ab * S(E_b - E_a) with V given in the eigenbasis.
Operator build_xi(const Operator& coupling_eigen, const SpectrumFn& spectrum, const EigenSystem& eigen);

// Debye IC spectrum, clamped to zero for omega <= 0.
double ic_spectrum(const ICSpectrum& ic, double omega);

DissipatorSet build_dissipators(const ExcitonSystem& system);

// Everything the QME right-hand side needs, eigenbasis.
struct QmeModel {
    struct Channel {
        Operator v;
        Operator xi;
    };
    Eigen::VectorXd energies;
    Operator mu;
    std::vector<Channel> channels;
    Operator k;  // sum_c V_c Xi_c
    // Field-free right-hand sides as sparse matrices acting on column-major
    // vec(rho) and vec(sigma); empty for large dimensions, where the operator
    // form is used.
    Eigen::SparseMatrix<cplx, Eigen::RowMajor> super_rho;
    Eigen::SparseMatrix<cplx, Eigen::RowMajor> super_sigma;

    static QmeModel build(const ExcitonSystem& system, const DissipatorSet& dissipators);
    // Coherent dynamics only.
    static QmeModel coherent(const ExcitonSystem& system);
    int dimension() const { return static_cast<int>(energies.size()); }
};

// d rho / dt (per fs) at field value E (GV/m):
//   i hbar d rho/dt = [H, rho] - E [mu, rho] - i hbar R rho,
//   R rho = sum_c [V_c, Xi_c rho - rho Xi_c^dagger].
Operator qme_rhs(const Operator& rho, double field, const QmeModel& model);

// d sigma / dt for the adjoint equation; Tr{sigma rho} is conserved.
Operator sigma_rhs(const Operator& sigma, double field, const QmeModel& model);

struct InvariantReport {
    double max_trace_drift{0.0};
    double max_hermiticity_error{0.0};
    double min_eigenvalue{1.0};
};

struct Tolerances {
    double trace{1e-8};
    double hermiticity{1e-10};
    double positivity_floor{-1e-4};
};

struct Trajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> populations;  // eigenstate populations per record
    std::vector<Operator> states;              // eigenbasis rho per record, when stored
    InvariantReport invariants;

    double band(std::size_t record, int manifold, const EigenSystem& eigen) const;
};

struct PropagateOptions {
    int record_every{1};
    bool store_states{false};
    // Throw NumericalError when a drift exceeds the tolerance (positivity is monitored only).
    bool enforce{true};
    Tolerances tolerances{};
};

// Classical fixed-step RK4 on rho (eigenbasis); the field is sampled at the
// stage times by linear interpolation.
Trajectory propagate(const Operator& rho0, const QmeModel& model, const ControlField& field,
                     const TimeGrid& grid, const PropagateOptions& options = {});

// One RK4 step of size dt (negative for backward) with field values at the
// start, midpoint and end of the step.
Operator rk4_qme_step(const Operator& rho, double dt, double e0, double e_mid, double e1,
                      const QmeModel& model);
Operator rk4_sigma_step(const Operator& sigma, double dt, double e0, double e_mid, double e1,
                        const QmeModel& model);

// sigma(T) = target, integrated down to t = 0. Entry j holds sigma(t_j).
std::vector<Operator> propagate_sigma_backward(const Operator& target, const QmeModel& model,
                                               const ControlField& field, const TimeGrid& grid,
                                               double hermiticity_tol = 1e-10);

void update_invariants(InvariantReport& report, const Operator& rho);

}  // namespace exdyn
