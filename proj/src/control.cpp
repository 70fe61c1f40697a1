#include "exdyn/control.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <optional>
#include <sstream>

#include <unsupported/Eigen/NonLinearOptimization>
#include <unsupported/Eigen/NumericalDiff>

#include "exdyn/errors.hpp"
#include "exdyn/units.hpp"

namespace exdyn {

namespace {

constexpr double kPi = std::numbers::pi;
// rate (rad/fs) of a unit dipole-field interaction
constexpr double kField = units::rad_per_fs_per_wavenumber * units::wavenumber_per_dipole_field;

// The first iteration is redone with lambda rescaled until its intensity is in this band.
constexpr double kTrustLow = 0.8;
constexpr double kTrustHigh = 1.25;
constexpr int kMaxLambdaRetries = 12;
constexpr double kRunawayField = 1e3;  // GV/m

double envelope(double t, double t_final) {
    const double s = std::sin(kPi * t / t_final);
    return s * s;
}

}  // namespace

void OCTConfig::validate() const {
    if (!(t_final > 0.0)) throw ConfigError("OCT t_final must be positive");
    if (!(dt > 0.0)) throw ConfigError("OCT dt must be positive");
    if (!std::isfinite(i0)) throw ConfigError("OCT i0 must be finite");
    if (max_iters < 1) throw ConfigError("OCT max_iters must be at least 1");
    if (!(tolerance >= 0.0)) throw ConfigError("OCT tolerance must be non-negative");
    if (!(guess_width > 0.0)) throw ConfigError("OCT guess width must be positive");
    if (!(guess_fraction > 0.0)) throw ConfigError("OCT guess fraction must be positive");
    TimeGrid::covering(t_final, dt);
}

double OCTConfig::resolved_i0() const { return i0 > 0.0 ? i0 : units::au_intensity_to_internal(0.005); }

Operator site_projector(const ExcitonSystem& system, const std::string& label) {
    int idx = 0;
    try {
        idx = system.basis.index(label);
    } catch (const std::exception&) {
        throw ConfigError("unknown site label '" + label + "'");
    }
    Operator p = Operator::Zero(system.dimension(), system.dimension());
    p(idx, idx) = 1.0;
    return system.eigen.to_eigen(p);
}

FunctionalValue functional_eval(const ControlField& field, const QmeModel& model, const Operator& rho0,
                                const Operator& target, double lambda, double i0) {
    if (field.samples.size() < 2) throw ConfigError("field needs at least two samples");
    if (field.samples.front() != 0.0 || field.samples.back() != 0.0)
        throw NumericalError("field must vanish at t = 0 and t = T");
    const TimeGrid grid{field.dt, static_cast<int>(field.samples.size()) - 1};
    PropagateOptions opt;
    opt.record_every = grid.n_steps;
    opt.store_states = true;
    const Trajectory traj = propagate(rho0, model, field, grid, opt);
    FunctionalValue v;
    v.target_pop = (target * traj.states.back()).trace().real();
    v.intensity = field.intensity();
    v.j = v.target_pop - 0.5 * lambda * (v.intensity - i0);
    return v;
}

double field_value(const Operator& sigma, const Operator& rho, const Operator& mu, double lambda, double t,
                   double t_final, double* residue) {
    const cplx tr = (sigma * (mu * rho - rho * mu)).trace();
    const cplx e = I * kField * tr / lambda * envelope(t, t_final);
    if (residue) *residue = std::abs(e.imag());
    return e.real();
}

namespace {

// Field from the update formula evaluated implicitly at the step midpoint,
// linearized in the field: E = E0 / (1 - (h/2) a g1) with
// g1 = Tr{(M^+ sigma)(M rho)}, M = i k [mu, .]. Only the damping branch is kept;
// the explicit form oscillates step to step once a h |g1| > 2.
double midpoint_field(const Operator& sigma, const Operator& rho, const Operator& mu, double lambda, double t,
                      double t_final, double dt, double* residue) {
    const double e0 = field_value(sigma, rho, mu, lambda, t, t_final, residue);
    const Operator a = sigma * mu - mu * sigma;
    const Operator b = mu * rho - rho * mu;
    const double g1 = -kField * kField * (a * b).trace().real();
    const double denom = 1.0 - 0.5 * dt * envelope(t, t_final) / lambda * g1;
    return e0 / std::max(1.0, denom);
}

}  // namespace

ControlField field_update(const std::vector<Operator>& rho_traj, const std::vector<Operator>& sigma_traj,
                          const Operator& mu, double lambda, const TimeGrid& grid, double residue_tolerance) {
    if (!(lambda > 0.0)) throw ConfigError("lambda must be positive");
    const std::size_t n = static_cast<std::size_t>(grid.n_steps) + 1;
    if (rho_traj.size() != n || sigma_traj.size() != n)
        throw ConfigError("trajectories do not match the time grid");
    ControlField f;
    f.dt = grid.dt;
    f.lambda = lambda;
    f.samples.resize(n);
    for (std::size_t j = 0; j < n; ++j) {
        double residue = 0.0;
        f.samples[j] = field_value(sigma_traj[j], rho_traj[j], mu, lambda, grid.t(j), grid.t_final(), &residue);
        if (residue > residue_tolerance)
            throw NumericalError("field update has imaginary residue " + sci(residue));
    }
    f.samples.front() = 0.0;
    f.samples.back() = 0.0;
    return f;
}

double mean_one_exciton_ev(const EigenSystem& eigen) {
    const int off = eigen.manifold_offset(1), n = eigen.manifold_size(1);
    double sum = 0.0;
    for (int k = 0; k < n; ++k) sum += eigen.energies(off + k) - eigen.energies(0);
    return units::wavenumber_to_ev(sum / n);
}

ControlField initial_guess(const OCTConfig& cfg, const EigenSystem& eigen) {
    cfg.validate();
    const TimeGrid grid = TimeGrid::covering(cfg.t_final, cfg.dt);
    const double w = units::ev_to_rad_per_fs(mean_one_exciton_ev(eigen));
    const double tc = 0.5 * cfg.t_final;
    ControlField f = ControlField::zeros(grid);
    for (int j = 1; j < grid.n_steps; ++j) {
        const double t = grid.t(j);
        const double g = std::exp(-(t - tc) * (t - tc) / (2.0 * cfg.guess_width * cfg.guess_width));
        f.samples[j] = envelope(t, cfg.t_final) * g * std::cos(w * (t - tc));
    }
    const double scale = std::sqrt(cfg.guess_fraction * cfg.resolved_i0() / f.intensity());
    for (double& v : f.samples) v *= scale;
    return f;
}

OCTResult oct_iterate(const ExcitonSystem& system, const QmeModel& model, const OCTConfig& cfg) {
    cfg.validate();
    const int n = system.n_sites();
    const std::string target_label =
        cfg.target.empty() ? (n == 1 ? std::string("11") : SiteLabel{1, n}.str()) : cfg.target;
    const Operator target = site_projector(system, target_label);
    const Operator rho0 = site_projector(system, cfg.initial);
    const TimeGrid grid = TimeGrid::covering(cfg.t_final, cfg.dt);
    const double i0 = cfg.resolved_i0();

    OCTResult res;
    ControlField current = initial_guess(cfg, system.eigen);
    double lambda = cfg.lambda0;
    if (!(lambda > 0.0)) {
        // lambda that gives the first update the budget intensity if rho were unchanged
        const auto sigma = propagate_sigma_backward(target, model, current, grid);
        PropagateOptions opt;
        opt.store_states = true;
        opt.record_every = 1;
        const Trajectory fwd = propagate(rho0, model, current, grid, opt);
        const ControlField g = field_update(fwd.states, sigma, model.mu, 1.0, grid, cfg.residue_tolerance);
        const double ig = g.intensity();
        lambda = ig > 0.0 ? std::sqrt(ig / i0) : 1.0;
    }

    // Forward states under the current field.
    std::vector<Operator> rho_old(grid.n_steps + 1);
    {
        PropagateOptions opt;
        opt.store_states = true;
        opt.record_every = 1;
        opt.enforce = false;
        rho_old = propagate(rho0, model, current, grid, opt).states;
    }

    // Backward sweep: sigma is stepped under the field built from itself and the
    // previous forward states; the forward sweep then does the same with the new
    // rho. Both return nothing when the field runs away.
    auto backward = [&](double lam) {
        std::vector<Operator> sigma(grid.n_steps + 1);
        sigma[grid.n_steps] = target;
        Operator s = target;
        for (int j = grid.n_steps; j > 0; --j) {
            const double e = j == grid.n_steps
                                 ? 0.0
                                 : midpoint_field(s, rho_old[j], model.mu, lam, grid.t(j), grid.t_final(), grid.dt, nullptr);
            if (!std::isfinite(e) || std::abs(e) > kRunawayField) return std::optional<std::vector<Operator>>{};
            s = rk4_sigma_step(s, -grid.dt, e, e, e, model);
            sigma[j - 1] = s;
        }
        return std::optional<std::vector<Operator>>{std::move(sigma)};
    };
    std::vector<Operator> rho_new(grid.n_steps + 1);
    auto forward = [&](const std::vector<Operator>& sigma, double lam, int it, double& max_residue) {
        ControlField next = ControlField::zeros(grid);
        next.lambda = lam;
        next.iteration = it;
        Operator rho = rho0;
        rho_new[0] = rho;
        max_residue = 0.0;
        for (int j = 0; j < grid.n_steps; ++j) {
            double residue = 0.0;
            const double e =
                j == 0 ? 0.0
                       : midpoint_field(sigma[j], rho, model.mu, lam, grid.t(j), grid.t_final(), grid.dt, &residue);
            max_residue = std::max(max_residue, residue);
            if (!std::isfinite(e) || std::abs(e) > kRunawayField) return std::optional<ControlField>{};
            next.samples[j] = e;
            rho = rk4_qme_step(rho, grid.dt, e, e, e, model);
            rho_new[j + 1] = rho;
        }
        next.samples.back() = 0.0;
        return std::optional<ControlField>{std::move(next)};
    };

    double previous_j = 0.0;
    for (int it = 1; it <= cfg.max_iters; ++it) {
        std::optional<ControlField> next;
        double max_residue = 0.0;
        for (int trial = 0;; ++trial) {
            const auto sigma = backward(lambda);
            next.reset();
            if (sigma) next = forward(*sigma, lambda, it, max_residue);
            if (trial == kMaxLambdaRetries) break;
            if (!next) {
                lambda *= 4.0;
                continue;
            }
            const double ratio = next->intensity() / i0;
            if (it > 1) break;
            if (ratio >= kTrustLow && ratio <= kTrustHigh) break;
            if (!(ratio > 0.0)) break;
            lambda *= std::sqrt(ratio);
        }
        if (!next) throw NumericalError("OCT field update diverged at iteration " + std::to_string(it));
        if (max_residue > cfg.residue_tolerance)
            throw NumericalError("field update has imaginary residue " + sci(max_residue));

        const FunctionalValue v = functional_eval(*next, model, rho0, target, lambda, i0);
        res.log.push_back({it, v.j, v.target_pop, v.intensity, lambda, max_residue});
        if (it > 1 && v.j < previous_j) ++res.non_monotonic_steps;
        const bool in_band = std::abs(v.intensity / i0 - 1.0) <= 0.05;
        const bool small_step = it > 1 && std::abs(v.j - previous_j) < cfg.tolerance;
        previous_j = v.j;
        current = std::move(*next);
        std::swap(rho_old, rho_new);
        if (!in_band && v.intensity > 0.0) lambda *= std::sqrt(v.intensity / i0);
        if (small_step && in_band) {
            res.converged = true;
            break;
        }
    }
    res.field = std::move(current);
    return res;
}

void XFROGConfig::validate() const {
    if (!(tau > 0.0) || !(delta > 0.0)) throw ConfigError("XFROG tau and delta must be positive");
    if (!(t_step > 0.0)) throw ConfigError("XFROG time step must be positive");
    if (!(omega_step > 0.0) || !(omega_max > omega_min) || !(omega_min >= 0.0))
        throw ConfigError("XFROG frequency grid is invalid");
}

double Spectrogram::total() const {
    double s = 0.0;
    for (double v : values) s += v;
    return s;
}

double xfrog_gate(double t, double tau, double delta) {
    return 0.5 * (std::erf(2.0 * (t + 0.5 * tau) / delta) - std::erf(2.0 * (t - 0.5 * tau) / delta));
}

Spectrogram xfrog(const ControlField& field, const XFROGConfig& cfg) {
    cfg.validate();
    if (field.samples.size() < 2) throw ConfigError("field needs at least two samples");
    const double w_max = units::ev_to_rad_per_fs(cfg.omega_max);
    if (kPi / field.dt < w_max)
        throw ConfigError("field sampling violates the Nyquist limit of the frequency grid");

    Spectrogram s;
    const double t_final = field.t_final();
    const int nt = static_cast<int>(std::floor(t_final / cfg.t_step + 1e-9)) + 1;
    for (int k = 0; k < nt; ++k) s.times.push_back(k * cfg.t_step);
    const int nw = static_cast<int>(std::floor((cfg.omega_max - cfg.omega_min) / cfg.omega_step + 1e-9)) + 1;
    for (int k = 0; k < nw; ++k) s.omegas.push_back(cfg.omega_min + k * cfg.omega_step);
    s.values.assign(static_cast<std::size_t>(nt) * nw, 0.0);

    const double reach = 0.5 * cfg.tau + 4.0 * cfg.delta;
    const int ns = static_cast<int>(field.samples.size());
    std::vector<double> gated;
    std::vector<double> ts;
    for (int it = 0; it < nt; ++it) {
        const double tc = s.times[it];
        const int j0 = std::max(0, static_cast<int>(std::floor((tc - reach) / field.dt)));
        const int j1 = std::min(ns - 1, static_cast<int>(std::ceil((tc + reach) / field.dt)));
        gated.clear();
        ts.clear();
        for (int j = j0; j <= j1; ++j) {
            const double t = j * field.dt;
            const double w = (j == 0 || j == ns - 1) ? 0.5 : 1.0;
            gated.push_back(w * field.dt * field.samples[j] * xfrog_gate(t - tc, cfg.tau, cfg.delta));
            ts.push_back(t);
        }
        for (int iw = 0; iw < nw; ++iw) {
            const double w = units::ev_to_rad_per_fs(s.omegas[iw]);
            double re = 0.0, im = 0.0;
            for (std::size_t q = 0; q < gated.size(); ++q) {
                re += gated[q] * std::cos(w * ts[q]);
                im -= gated[q] * std::sin(w * ts[q]);
            }
            s.values[static_cast<std::size_t>(it) * nw + iw] = re * re + im * im;
        }
    }
    return s;
}

std::string spectrogram_csv(const Spectrogram& s) {
    std::ostringstream os;
    os.precision(10);
    os << "t_fs,omega_eV,I\n";
    for (std::size_t it = 0; it < s.times.size(); ++it)
        for (std::size_t iw = 0; iw < s.omegas.size(); ++iw)
            os << s.times[it] << ',' << s.omegas[iw] << ',' << s.at(it, iw) << '\n';
    return os.str();
}

double spectrogram_ridge_fraction(const Spectrogram& s, const std::vector<double>& res, double half_width) {
    double in = 0.0, all = 0.0;
    for (std::size_t it = 0; it < s.times.size(); ++it) {
        std::size_t peak = 0;
        double slice = 0.0;
        for (std::size_t iw = 0; iw < s.omegas.size(); ++iw) {
            slice += s.at(it, iw);
            if (s.at(it, iw) > s.at(it, peak)) peak = iw;
        }
        all += slice;
        const double w = s.omegas[peak];
        if (std::any_of(res.begin(), res.end(), [&](double r) { return std::abs(w - r) <= half_width; })) in += slice;
    }
    return all > 0.0 ? in / all : 0.0;
}

double two_gaussian_value(const std::array<GaussianComponent, 2>& c, double t) {
    double v = 0.0;
    for (const auto& g : c) {
        const double x = (t - g.center) / g.width;
        v += g.amplitude * std::exp(-0.5 * x * x) * std::cos(g.omega * t + g.phase);
    }
    return v;
}

namespace {

std::array<GaussianComponent, 2> unpack(const Eigen::VectorXd& x) {
    std::array<GaussianComponent, 2> c;
    for (int i = 0; i < 2; ++i)
        c[i] = {x(5 * i), x(5 * i + 1), std::abs(x(5 * i + 2)) + 1e-12, x(5 * i + 3), x(5 * i + 4)};
    return c;
}

struct FitFunctor {
    using Scalar = double;
    using InputType = Eigen::VectorXd;
    using ValueType = Eigen::VectorXd;
    using JacobianType = Eigen::MatrixXd;
    enum { InputsAtCompileTime = Eigen::Dynamic, ValuesAtCompileTime = Eigen::Dynamic };

    const ControlField* field;
    int points;
    int inputs() const { return 10; }
    int values() const { return points; }
    int operator()(const Eigen::VectorXd& x, Eigen::VectorXd& r) const {
        const auto c = unpack(x);
        for (int j = 0; j < points; ++j) r(j) = two_gaussian_value(c, j * field->dt) - field->samples[j];
        return 0;
    }
};

double rms_misfit(const std::array<GaussianComponent, 2>& c, const ControlField& f) {
    double s = 0.0, n = 0.0;
    for (std::size_t j = 0; j < f.samples.size(); ++j) {
        const double d = two_gaussian_value(c, j * f.dt) - f.samples[j];
        s += d * d;
        n += f.samples[j] * f.samples[j];
    }
    return n > 0.0 ? std::sqrt(s / n) : 0.0;
}

// Amplitudes and phases by linear least squares for fixed centers, widths, carriers.
std::array<GaussianComponent, 2> linear_start(const ControlField& f, std::array<GaussianComponent, 2> c,
                                              bool single) {
    const int m = single ? 2 : 4;
    Eigen::MatrixXd a(f.samples.size(), m);
    Eigen::VectorXd b(f.samples.size());
    for (std::size_t j = 0; j < f.samples.size(); ++j) {
        const double t = j * f.dt;
        for (int i = 0; i < m / 2; ++i) {
            const double x = (t - c[i].center) / c[i].width;
            const double g = std::exp(-0.5 * x * x);
            a(j, 2 * i) = g * std::cos(c[i].omega * t);
            a(j, 2 * i + 1) = -g * std::sin(c[i].omega * t);
        }
        b(j) = f.samples[j];
    }
    const Eigen::VectorXd p = a.colPivHouseholderQr().solve(b);
    for (int i = 0; i < m / 2; ++i) {
        c[i].amplitude = std::hypot(p(2 * i), p(2 * i + 1));
        c[i].phase = std::atan2(p(2 * i + 1), p(2 * i));
    }
    if (single) c[1].amplitude = 0.0;
    return c;
}

}  // namespace

TwoGaussianFit fit_two_gaussians(const ControlField& field, const XFROGConfig& xcfg) {
    if (field.samples.size() < 12) throw ConfigError("field too short for a two-Gaussian fit");
    if (field.max_abs() == 0.0) throw ConfigError("cannot fit a zero field");

    // two largest ridges of the spectrogram
    const Spectrogram s = xfrog(field, xcfg);
    std::size_t best = 0;
    for (std::size_t k = 1; k < s.values.size(); ++k)
        if (s.values[k] > s.values[best]) best = k;
    const std::size_t nw = s.omegas.size();
    const double t1 = s.times[best / nw], w1 = s.omegas[best % nw];
    std::size_t second = best;
    double second_val = -1.0;
    for (std::size_t k = 0; k < s.values.size(); ++k) {
        const double t = s.times[k / nw], w = s.omegas[k % nw];
        if (std::abs(t - t1) <= xcfg.tau && std::abs(w - w1) <= 0.1) continue;
        if (s.values[k] > second_val) {
            second_val = s.values[k];
            second = k;
        }
    }
    const double t2 = s.times[second / nw], w2 = s.omegas[second % nw];

    const int points = static_cast<int>(field.samples.size());
    TwoGaussianFit out;
    out.residual = std::numeric_limits<double>::infinity();
    for (bool single : {true, false}) {
        for (double width : {2.0, 4.0, 8.0}) {
            std::array<GaussianComponent, 2> c;
            c[0] = {0.0, t1, width, units::ev_to_rad_per_fs(w1), 0.0};
            c[1] = {0.0, t2, width, units::ev_to_rad_per_fs(w2), 0.0};
            c = linear_start(field, c, single);
            Eigen::VectorXd x(10);
            for (int i = 0; i < 2; ++i)
                x.segment<5>(5 * i) << c[i].amplitude, c[i].center, c[i].width, c[i].omega, c[i].phase;
            FitFunctor fun{&field, points};
            Eigen::NumericalDiff<FitFunctor> num(fun);
            Eigen::LevenbergMarquardt<Eigen::NumericalDiff<FitFunctor>> lm(num);
            lm.parameters.ftol = 1e-15;
            lm.parameters.xtol = 1e-15;
            lm.parameters.maxfev = 20000;
            lm.minimize(x);
            const auto fitted = unpack(x);
            const double r = rms_misfit(fitted, field);
            if (std::isfinite(r) && r < out.residual) {
                out.residual = r;
                out.components = fitted;
            }
        }
    }
    for (auto& g : out.components) {
        if (g.amplitude < 0.0) {
            g.amplitude = -g.amplitude;
            g.phase += kPi;
        }
        g.phase = std::remainder(g.phase, 2.0 * kPi);
    }
    if (out.components[1].amplitude > out.components[0].amplitude)
        std::swap(out.components[0], out.components[1]);

    out.field.dt = field.dt;
    out.field.samples.resize(field.samples.size());
    for (std::size_t j = 0; j < field.samples.size(); ++j)
        out.field.samples[j] = two_gaussian_value(out.components, j * field.dt);
    out.field.samples.front() = 0.0;
    out.field.samples.back() = 0.0;
    return out;
}

}  // namespace exdyn
