#include "exdyn/markovian.hpp"

#include <cmath>
#include <functional>

#include "exdyn/bath.hpp"
#include "exdyn/errors.hpp"
#include "exdyn/units.hpp"

namespace exdyn {

namespace {

constexpr double kRate = units::rad_per_fs_per_wavenumber;

// dimension up to which the field-free generators are stored as dense matrices
constexpr int kSuperoperatorMaxDim = 32;

Operator diag_to_eigen(const Eigen::VectorXd& diag, const EigenSystem& eigen) {
    const RealOperator& c = eigen.coefficients;
    return (c.transpose() * diag.asDiagonal() * c).cast<cplx>();
}

void add_field_term(Operator& out, const Operator& x, double field, const QmeModel& m) {
    if (field != 0.0) out += (I * kRate * units::wavenumber_per_dipole_field * field) * (m.mu * x - x * m.mu);
}

Operator qme_rhs_operator(const Operator& rho, const QmeModel& m) {
    const int d = m.dimension();
    Operator out(d, d);
    for (int b = 0; b < d; ++b)
        for (int a = 0; a < d; ++a) out(a, b) = -I * (m.energies(a) - m.energies(b)) * rho(a, b);
    if (!m.channels.empty()) {
        out.noalias() -= m.k * rho;
        out.noalias() -= rho * m.k.adjoint();
        for (const auto& c : m.channels) {
            const Operator vr = c.v * rho;
            out.noalias() += vr * c.xi.adjoint();
            out.noalias() += c.xi * rho * c.v;
        }
    }
    return kRate * out;
}

Operator sigma_rhs_operator(const Operator& sigma, const QmeModel& m) {
    const int d = m.dimension();
    Operator out(d, d);
    for (int b = 0; b < d; ++b)
        for (int a = 0; a < d; ++a) out(a, b) = -I * (m.energies(a) - m.energies(b)) * sigma(a, b);
    if (!m.channels.empty()) {
        out.noalias() += m.k.adjoint() * sigma;
        out.noalias() += sigma * m.k;
        for (const auto& c : m.channels) {
            const Operator sv = sigma * c.v;
            out.noalias() -= c.xi.adjoint() * sv;
            out.noalias() -= c.v * sigma * c.xi;
        }
    }
    return kRate * out;
}

// Columns are the images of the unit matrices E_ab; basis-change roundoff
// below 1e-14 of the largest entry is dropped.
Eigen::SparseMatrix<cplx, Eigen::RowMajor> probe(const std::function<Operator(const Operator&)>& f, int d) {
    Eigen::MatrixXcd s(d * d, d * d);
    Operator unit = Operator::Zero(d, d);
    for (int j = 0; j < d * d; ++j) {
        unit(j % d, j / d) = 1.0;
        s.col(j) = f(unit).reshaped();
        unit(j % d, j / d) = 0.0;
    }
    const double floor = 1e-14 * s.cwiseAbs().maxCoeff();
    return s.sparseView(1.0, floor);
}

Operator apply_super(const Eigen::SparseMatrix<cplx, Eigen::RowMajor>& s, const Operator& x) {
    const int d = static_cast<int>(x.rows());
    Operator out(d, d);
    out.reshaped().noalias() = s * x.reshaped();
    return out;
}

void finalize(QmeModel& m) {
    const int d = m.dimension();
    if (d > kSuperoperatorMaxDim) return;
    m.super_rho = probe([&](const Operator& x) { return qme_rhs_operator(x, m); }, d);
    m.super_sigma = probe([&](const Operator& x) { return sigma_rhs_operator(x, m); }, d);
}

}  // namespace

Operator build_xi(const Operator& v, const SpectrumFn& spectrum, const EigenSystem& eigen) {
    const int d = eigen.dimension();
    Operator xi = Operator::Zero(d, d);
    for (int a = 0; a < d; ++a)
        for (int b = 0; b < d; ++b)
            if (v(a, b) != cplx(0.0)) xi(a, b) = v(a, b) * spectrum(eigen.energies(b) - eigen.energies(a));
    return xi;
}

double ic_spectrum(const ICSpectrum& ic, double w) {
    if (w <= 0.0) return 0.0;
    return ic.eta * w * ic.cutoff * ic.cutoff / (w * w + ic.cutoff * ic.cutoff);
}

DissipatorSet build_dissipators(const ExcitonSystem& sys) {
    const auto& spec = sys.spec;
    const auto& eig = sys.eigen;
    const double temp = spec.temperature;
    const SpectralDensity high = spec.high;
    const SpectralDensity low = spec.low;
    const SpectrumFn s_ic = [&](double w) { return ic_spectrum(spec.ic, w); };
    const SpectrumFn s_high = [&](double w) { return 0.5 * thermal_spectrum(high, w, temp); };
    const SpectrumFn s_low = [&](double w) { return 0.5 * thermal_spectrum(low, w, temp); };

    DissipatorSet out;
    for (int m = 0; m < sys.n_sites(); ++m) {
        const Operator pi = eig.to_eigen(sys.pi_ic[m].cast<cplx>());
        out.xi_ic.push_back(build_xi(pi, s_ic, eig));
        out.xi_m.push_back(build_xi(diag_to_eigen(sys.h_m[m], eig), s_high, eig));
    }
    out.xi_tot = build_xi(diag_to_eigen(sys.h_tot, eig), s_low, eig);
    return out;
}

QmeModel QmeModel::coherent(const ExcitonSystem& sys) {
    QmeModel m;
    m.energies = sys.eigen.energies;
    m.mu = sys.eigen.to_eigen(sys.mu.cast<cplx>());
    m.k = Operator::Zero(sys.dimension(), sys.dimension());
    finalize(m);
    return m;
}

QmeModel QmeModel::build(const ExcitonSystem& sys, const DissipatorSet& dis) {
    QmeModel m = coherent(sys);
    const auto& eig = sys.eigen;
    auto add = [&](Operator v, const Operator& xi) {
        if (xi.cwiseAbs().maxCoeff() == 0.0) return;
        m.k += v * xi;
        m.channels.push_back({std::move(v), xi});
    };
    for (int s = 0; s < sys.n_sites(); ++s) {
        add(eig.to_eigen(sys.pi_ic[s].cast<cplx>()), dis.xi_ic[s]);
        add(diag_to_eigen(sys.h_m[s], eig), dis.xi_m[s]);
    }
    add(diag_to_eigen(sys.h_tot, eig), dis.xi_tot);
    finalize(m);
    return m;
}

Operator qme_rhs(const Operator& rho, double field, const QmeModel& m) {
    Operator out = m.super_rho.size() ? apply_super(m.super_rho, rho) : qme_rhs_operator(rho, m);
    add_field_term(out, rho, field, m);
    return out;
}

Operator sigma_rhs(const Operator& sigma, double field, const QmeModel& m) {
    Operator out = m.super_sigma.size() ? apply_super(m.super_sigma, sigma) : sigma_rhs_operator(sigma, m);
    add_field_term(out, sigma, field, m);
    return out;
}

Operator rk4_qme_step(const Operator& rho, double dt, double e0, double em, double e1, const QmeModel& m) {
    const Operator k1 = qme_rhs(rho, e0, m);
    const Operator k2 = qme_rhs(rho + 0.5 * dt * k1, em, m);
    const Operator k3 = qme_rhs(rho + 0.5 * dt * k2, em, m);
    const Operator k4 = qme_rhs(rho + dt * k3, e1, m);
    return rho + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

Operator rk4_sigma_step(const Operator& s, double dt, double e0, double em, double e1, const QmeModel& m) {
    const Operator k1 = sigma_rhs(s, e0, m);
    const Operator k2 = sigma_rhs(s + 0.5 * dt * k1, em, m);
    const Operator k3 = sigma_rhs(s + 0.5 * dt * k2, em, m);
    const Operator k4 = sigma_rhs(s + dt * k3, e1, m);
    return s + (dt / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

void update_invariants(InvariantReport& r, const Operator& rho) {
    r.max_trace_drift = std::max(r.max_trace_drift, std::abs(rho.trace() - 1.0));
    r.max_hermiticity_error = std::max(r.max_hermiticity_error, hermiticity_error(rho));
    const Operator herm = 0.5 * (rho + rho.adjoint());
    Eigen::SelfAdjointEigenSolver<Operator> solver(herm, Eigen::EigenvaluesOnly);
    r.min_eigenvalue = std::min(r.min_eigenvalue, solver.eigenvalues().minCoeff());
}

double Trajectory::band(std::size_t record, int manifold, const EigenSystem& eigen) const {
    double p = 0.0;
    for (int a = 0; a < eigen.dimension(); ++a)
        if (eigen.manifold[a] == manifold) p += populations.at(record)(a);
    return p;
}

namespace {

void check_or_throw(const InvariantReport& r, const Tolerances& tol, double t) {
    if (!(r.max_trace_drift <= tol.trace))
        throw NumericalError("trace drift " + sci(r.max_trace_drift) + " at t = " + std::to_string(t));
    if (!(r.max_hermiticity_error <= tol.hermiticity))
        throw NumericalError("Hermiticity drift " + sci(r.max_hermiticity_error) +
                             " at t = " + std::to_string(t));
}

}  // namespace

Trajectory propagate(const Operator& rho0, const QmeModel& model, const ControlField& field,
                     const TimeGrid& grid, const PropagateOptions& opt) {
    if (rho0.rows() != model.dimension() || rho0.cols() != model.dimension())
        throw ConfigError("initial density operator has wrong dimension");
    const int every = std::max(1, opt.record_every);
    Trajectory traj;
    Operator rho = rho0;
    auto record = [&](int j) {
        traj.times.push_back(grid.t(j));
        traj.populations.push_back(rho.diagonal().real());
        if (opt.store_states) traj.states.push_back(rho);
        update_invariants(traj.invariants, rho);
        if (opt.enforce) check_or_throw(traj.invariants, opt.tolerances, grid.t(j));
    };
    record(0);
    for (int j = 0; j < grid.n_steps; ++j) {
        const double t = grid.t(j);
        rho = rk4_qme_step(rho, grid.dt, field.value_at(t), field.value_at(t + 0.5 * grid.dt),
                           field.value_at(t + grid.dt), model);
        if (!rho.allFinite()) throw NumericalError("QME propagation produced non-finite values");
        if ((j + 1) % every == 0 || j + 1 == grid.n_steps) record(j + 1);
    }
    return traj;
}

std::vector<Operator> propagate_sigma_backward(const Operator& target, const QmeModel& model,
                                               const ControlField& field, const TimeGrid& grid,
                                               double hermiticity_tol) {
    std::vector<Operator> out(grid.n_steps + 1);
    out[grid.n_steps] = target;
    Operator s = target;
    for (int j = grid.n_steps; j > 0; --j) {
        const double t = grid.t(j);
        s = rk4_sigma_step(s, -grid.dt, field.value_at(t), field.value_at(t - 0.5 * grid.dt),
                           field.value_at(t - grid.dt), model);
        if (!s.allFinite()) throw NumericalError("sigma propagation produced non-finite values");
        if (hermiticity_error(s) > hermiticity_tol)
            throw NumericalError("sigma lost Hermiticity at t = " + std::to_string(grid.t(j - 1)));
        out[j - 1] = s;
    }
    return out;
}

}  // namespace exdyn
