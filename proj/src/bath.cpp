#include "exdyn/bath.hpp"

#include <cmath>
#include <limits>
#include <numbers>

#include <boost/math/quadrature/exp_sinh.hpp>
#include <boost/math/quadrature/gauss_kronrod.hpp>
#include <boost/math/quadrature/ooura_fourier_integrals.hpp>

#include "exdyn/errors.hpp"
#include "exdyn/units.hpp"

namespace exdyn {

namespace {

constexpr double kTailRelTol = 1e-6;
constexpr int kTailCap = 100000;

double beta_checked(double temperature) {
    if (!(temperature > 0.0)) throw ConfigError("temperature must be positive");
    return units::beta_of(temperature);
}

// Sums term(k) for k > n until |term| < tol * |sum|, then adds the integral
// estimate of the remaining tail for terms decaying like k^-power.
template <class Term>
double matsubara_tail(int n, double power, Term term) {
    double sum = 0.0;
    double last = 0.0;
    int k = n + 1;
    for (; k <= n + kTailCap; ++k) {
        last = term(k);
        sum += last;
        if (std::abs(last) < kTailRelTol * std::abs(sum)) break;
    }
    const double kk = static_cast<double>(std::min(k, n + kTailCap));
    const double tail = last * std::pow(kk, power) / ((power - 1.0) * std::pow(kk + 0.5, power - 1.0));
    return sum + tail;
}

cplx coth(cplx z) { return 1.0 / std::tanh(z); }

}  // namespace

double spectral_density(const SpectralDensity& j, double w) {
    return std::visit(
        [w](const auto& b) -> double {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, DebyeBath>) {
                return b.eta * w * b.cutoff * b.cutoff / (w * w + b.cutoff * b.cutoff);
            } else {
                const double w02 = b.omega0 * b.omega0;
                const double den = (w * w - w02) * (w * w - w02) + b.width * b.width * w * w;
                return b.eta * w02 * b.omega0 * w * b.width / den;
            }
        },
        j);
}

cplx BathExpansion::evaluate(double t_fs) const {
    const double tau = t_fs * units::rad_per_fs_per_wavenumber;
    cplx sum{0.0, 0.0};
    for (const auto& term : terms) sum += term.amplitude * std::exp(-term.rate * tau);
    return sum;
}

double matsubara_frequency(int k, double temperature) {
    return 2.0 * std::numbers::pi * k / beta_checked(temperature);
}

BathExpansion expand_debye(const DebyeBath& bath, double temperature, int n_matsubara) {
    if (n_matsubara < 0) throw ConfigError("n_matsubara must be >= 0");
    if (!(bath.cutoff > 0.0)) throw ConfigError("Debye cutoff must be positive");
    const double beta = beta_checked(temperature);
    const double lam = bath.cutoff;
    const double nu1 = 2.0 * std::numbers::pi / beta;
    const double nearest = std::max(1.0, std::round(lam / nu1));
    if (std::abs(lam - nearest * nu1) < 1e-9 * lam)
        throw ConfigError("Debye cutoff coincides with a Matsubara frequency");

    const double pref = bath.eta * lam * lam;
    BathExpansion out;
    out.oscillatory_count = 1;
    out.matsubara_count = n_matsubara;
    out.terms.push_back({pref / 2.0 * cplx(1.0 / std::tan(beta * lam / 2.0), -1.0), lam});
    auto ck = [&](int k) {
        const double nu = k * nu1;
        return 2.0 * pref / beta * nu / (nu * nu - lam * lam);
    };
    for (int k = 1; k <= n_matsubara; ++k) out.terms.push_back({ck(k), k * nu1});
    if (bath.eta > 0.0)
        out.residual = matsubara_tail(n_matsubara, 2.0, [&](int k) { return ck(k) / (k * nu1); });
    return out;
}

BathExpansion expand_brownian(const BrownianBath& bath, double temperature, int n_matsubara) {
    if (n_matsubara < 0) throw ConfigError("n_matsubara must be >= 0");
    if (!(bath.omega0 > bath.width / 2.0)) throw ConfigError("Brownian oscillator is not underdamped");
    const double beta = beta_checked(temperature);
    const double w0 = bath.omega0;
    const double lam = bath.width;
    const double xi = std::sqrt(w0 * w0 - lam * lam / 4.0);
    const cplx rate1{lam / 2.0, xi};
    const cplx rate2{lam / 2.0, -xi};
    const double pref = bath.eta * w0 * w0 * w0 / (4.0 * xi);

    BathExpansion out;
    out.oscillatory_count = 2;
    out.matsubara_count = n_matsubara;
    out.terms.push_back({-pref * (coth(I * beta * rate1 / 2.0) - 1.0), rate1});
    out.terms.push_back({pref * (coth(I * beta * rate2 / 2.0) - 1.0), rate2});

    const double nu1 = 2.0 * std::numbers::pi / beta;
    auto ck = [&](int k) {
        const double nu = k * nu1;
        const double a = nu * nu + w0 * w0;
        return -2.0 * bath.eta * w0 * w0 * w0 * lam / beta * nu / (a * a - lam * lam * nu * nu);
    };
    for (int k = 1; k <= n_matsubara; ++k) out.terms.push_back({ck(k), k * nu1});
    if (bath.eta > 0.0)
        out.residual = matsubara_tail(n_matsubara, 4.0, [&](int k) { return ck(k) / (k * nu1); });
    return out;
}

BrownianPairCoefficients brownian_pair_coefficients(const BathExpansion& e) {
    if (e.oscillatory_count != 2 || e.terms.size() < 2)
        throw ConfigError("expansion does not start with a Brownian oscillatory pair");
    const cplx b1 = e.terms[0].amplitude;
    const cplx b2 = e.terms[1].amplitude;
    BrownianPairCoefficients out;
    out.alpha_plus = {(b1 + std::conj(b2)) / 2.0, (std::conj(b1) + b2) / 2.0};
    out.alpha_minus = {-I * (b1 - std::conj(b2)) / 2.0, -I * (-std::conj(b1) + b2) / 2.0};
    out.c0 = std::sqrt(std::abs(b1 * b2));
    return out;
}

double thermal_spectrum(const SpectralDensity& j, double w, double temperature) {
    if (temperature < 0.0) throw ConfigError("temperature must be >= 0");
    if (temperature == 0.0) return w > 0.0 ? 2.0 * spectral_density(j, w) : 0.0;
    const double beta = units::beta_of(temperature);
    const double x = beta * w;
    if (std::abs(x) < 1e-8) {
        // 2 J(w) / (1 - e^{-beta w}) -> 2 J'(0) / beta
        const double h = 1e-6 * (std::abs(w) > 0.0 ? std::abs(w) : 1.0);
        const double slope = spectral_density(j, h) / h;
        return 2.0 * slope / beta;
    }
    return 2.0 * spectral_density(j, w) / (-std::expm1(-x));
}

cplx response_oracle(const SpectralDensity& j, double t_fs, double temperature) {
    if (t_fs < 0.0) throw ConfigError("response_oracle requires t >= 0");
    const double beta = beta_checked(temperature);
    const double tau = t_fs * units::rad_per_fs_per_wavenumber;

    // weight J(w) coth(beta w / 2) / pi, finite at w -> 0
    auto even = [&](double w) {
        if (w <= 0.0) {
            const double h = 1e-9;
            return 2.0 * spectral_density(j, h) / h / beta / std::numbers::pi;
        }
        return spectral_density(j, w) / std::tanh(beta * w / 2.0) / std::numbers::pi;
    };
    auto odd = [&](double w) { return spectral_density(j, w) / std::numbers::pi; };

    // breakpoints around the spectral features
    std::vector<double> cuts{0.0};
    double scale = 0.0;
    std::visit(
        [&](const auto& b) {
            using T = std::decay_t<decltype(b)>;
            if constexpr (std::is_same_v<T, DebyeBath>) {
                scale = b.cutoff;
                for (double f : {0.5, 1.0, 2.0, 5.0, 10.0}) cuts.push_back(f * b.cutoff);
            } else {
                scale = b.omega0;
                for (double f : {-20.0, -5.0, -2.0, 0.0, 2.0, 5.0, 20.0}) {
                    const double c = b.omega0 + f * b.width;
                    if (c > cuts.back()) cuts.push_back(c);
                }
                cuts.push_back(3.0 * b.omega0);
            }
        },
        j);
    const double w_max = std::max(50.0 * scale, 2.0e4);
    cuts.push_back(w_max);
    // subdivide so that each panel holds a bounded number of oscillations
    if (tau > 0.0) {
        const double panel = 20.0 * 2.0 * std::numbers::pi / tau;
        std::vector<double> fine{cuts.front()};
        for (std::size_t i = 1; i < cuts.size(); ++i) {
            const double a = fine.back();
            const double b = cuts[i];
            const int pieces = std::max(1, static_cast<int>(std::ceil((b - a) / panel)));
            for (int p = 1; p <= pieces; ++p) fine.push_back(a + (b - a) * p / pieces);
        }
        cuts = std::move(fine);
    }

    using boost::math::quadrature::gauss_kronrod;
    double re = 0.0, im = 0.0, err = 0.0, mag = 0.0;
    for (std::size_t i = 0; i + 1 < cuts.size(); ++i) {
        double e1 = 0.0, l1 = 0.0, e2 = 0.0, l2 = 0.0;
        re += gauss_kronrod<double, 61>::integrate(
            [&](double w) { return even(w) * std::cos(w * tau); }, cuts[i], cuts[i + 1], 15, 1e-11, &e1, &l1);
        im -= gauss_kronrod<double, 61>::integrate(
            [&](double w) { return odd(w) * std::sin(w * tau); }, cuts[i], cuts[i + 1], 15, 1e-11, &e2, &l2);
        err += (e1 + e2) * (cuts[i + 1] - cuts[i]) / 2.0;
        mag += l1 + l2;
    }

    // tail [w_max, inf)
    if (tau > 0.0) {
        boost::math::quadrature::ooura_fourier_cos<double> cos_int;
        boost::math::quadrature::ooura_fourier_sin<double> sin_int;
        const double c = std::cos(w_max * tau);
        const double s = std::sin(w_max * tau);
        auto fe = [&](double u) { return even(w_max + u); };
        auto fo = [&](double u) { return odd(w_max + u); };
        const auto ec = cos_int.integrate(fe, tau);
        const auto es = sin_int.integrate(fe, tau);
        const auto oc = cos_int.integrate(fo, tau);
        const auto os = sin_int.integrate(fo, tau);
        re += c * ec.first - s * es.first;
        im -= s * oc.first + c * os.first;
        const double tail_err = std::abs(ec.first) * ec.second + std::abs(es.first) * es.second +
                                std::abs(oc.first) * oc.second + std::abs(os.first) * os.second;
        err += tail_err;
        if (!std::isfinite(re) || !std::isfinite(im))
            throw NumericalError("response_oracle: non-finite Fourier tail");
    } else {
        boost::math::quadrature::exp_sinh<double> tail;
        double e = 0.0, l1 = 0.0;
        try {
            re += tail.integrate([&](double u) { return even(w_max + u); }, 1e-10, &e, &l1);
        } catch (const std::exception& ex) {
            throw NumericalError(std::string("response_oracle: quadrature failed: ") + ex.what());
        }
        err += e;
        // Debye: J(w) ~ 1/w so the t = 0 real part diverges logarithmically
        if (std::holds_alternative<DebyeBath>(j) && std::get<DebyeBath>(j).eta > 0.0)
            throw NumericalError("response_oracle: Debye real part diverges at t = 0");
    }
    const cplx result{re, im};
    if (!std::isfinite(re) || !std::isfinite(im) || err > 1e-6 * std::max(std::abs(result), 1e-2 * mag))
        throw NumericalError("response_oracle: quadrature did not converge");
    return result;
}

}  // namespace exdyn
