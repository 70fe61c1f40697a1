#include "exdyn/exciton_model.hpp"

#include <algorithm>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include "exdyn/errors.hpp"

namespace exdyn {

namespace {

constexpr double kDegeneracyGap = 1e-8;

bool nearest_neighbours(int a, int b) { return std::abs(a - b) == 1; }

}  // namespace

std::string SiteLabel::str() const {
    if (first == 0) return "0";
    const bool wide = first > 9 || second > 9;
    std::string out = std::to_string(first);
    if (second != 0) {
        if (wide) out += "-";
        out += std::to_string(second);
    }
    return out;
}

SiteBasis::SiteBasis(int n_sites) : n_sites_(n_sites) {
    if (n_sites < 1) throw ConfigError("site basis needs at least one site");
    labels_.push_back({0, 0});
    for (int m = 1; m <= n_sites; ++m) labels_.push_back({m, 0});
    for (int m = 1; m <= n_sites; ++m) labels_.push_back({m, m});
    for (int m = 1; m <= n_sites; ++m)
        for (int n = m + 1; n <= n_sites; ++n) labels_.push_back({m, n});
    for (int i = 0; i < dimension(); ++i) lookup_.emplace(labels_[i], i);
}

int SiteBasis::index(const SiteLabel& label) const {
    auto it = lookup_.find(label);
    if (it == lookup_.end()) throw std::out_of_range("label not in site basis: " + label.str());
    return it->second;
}

int SiteBasis::index_of_single(int m) const { return index(SiteLabel{m, 0}); }

int SiteBasis::index_of_double(int m, int n) const {
    return index(SiteLabel{std::min(m, n), std::max(m, n)});
}

int SiteBasis::index(const std::string& text) const {
    if (text == "0") return 0;
    const auto dash = text.find('-');
    try {
        if (dash != std::string::npos)
            return index_of_double(std::stoi(text.substr(0, dash)), std::stoi(text.substr(dash + 1)));
        if (text.size() == 1) return index_of_single(std::stoi(text));
        if (text.size() == 2 && n_sites_ < 10)
            return index_of_double(text[0] - '0', text[1] - '0');
    } catch (const std::invalid_argument&) {
    }
    throw std::out_of_range("cannot parse site label '" + text + "'");
}

SiteBasis enumerate_basis(int n_sites) { return SiteBasis(n_sites); }

std::string EigenSystem::label(int alpha) const {
    return std::to_string(manifold.at(alpha)) + "_" + std::to_string(rank.at(alpha));
}

int EigenSystem::index(int m, int k) const {
    for (int a = 0; a < dimension(); ++a)
        if (manifold[a] == m && rank[a] == k) return a;
    throw std::out_of_range("no eigenstate " + std::to_string(m) + "_" + std::to_string(k));
}

int EigenSystem::index(const std::string& text) const {
    const auto us = text.find('_');
    if (us == std::string::npos) throw std::out_of_range("bad eigenstate label '" + text + "'");
    return index(std::stoi(text.substr(0, us)), std::stoi(text.substr(us + 1)));
}

int EigenSystem::manifold_size(int m) const {
    return static_cast<int>(std::count(manifold.begin(), manifold.end(), m));
}

int EigenSystem::manifold_offset(int m) const {
    const auto it = std::find(manifold.begin(), manifold.end(), m);
    return static_cast<int>(it - manifold.begin());
}

Operator EigenSystem::to_eigen(const Operator& site_op) const {
    const Operator c = coefficients.cast<cplx>();
    return c.adjoint() * site_op * c;
}

Operator EigenSystem::to_site(const Operator& eigen_op) const {
    const Operator c = coefficients.cast<cplx>();
    return c * eigen_op * c.adjoint();
}

RealOperator build_hamiltonian(const AggregateSpec& spec, const SiteBasis& basis) {
    const int n = basis.n_sites();
    const int d = basis.dimension();
    const double e = spec.e_energy;
    const double e_f = 2.0 * e + spec.anharmonicity;
    const double j = spec.j_coupling;
    const double j_ef = spec.j_ef_factor * spec.j_coupling;

    RealOperator h = RealOperator::Zero(d, d);
    for (int m = 1; m <= n; ++m) {
        const int s = basis.index_of_single(m);
        const int f = basis.index_of_double(m, m);
        h(s, s) = e;
        h(f, f) = e_f;
        for (int k = 1; k <= n; ++k)
            if (nearest_neighbours(m, k)) h(s, basis.index_of_single(k)) = j;
    }
    for (int i = 0; i < d; ++i) {
        const SiteLabel& p = basis.label(i);
        if (p.manifold() != 2 || p.is_local_double()) continue;
        h(i, i) = 2.0 * e;
        // |mn> <-> |mm>, |nn>
        if (nearest_neighbours(p.first, p.second)) {
            for (int site : {p.first, p.second}) {
                const int f = basis.index_of_double(site, site);
                h(i, f) = j_ef;
                h(f, i) = j_ef;
            }
        }
        // |mn> <-> |mk>: one excitation hops between neighbours
        for (int k = 0; k < d; ++k) {
            const SiteLabel& q = basis.label(k);
            if (k == i || q.manifold() != 2 || q.is_local_double()) continue;
            int shared = 0, a = 0, b = 0;
            if (p.first == q.first) { shared = 1; a = p.second; b = q.second; }
            else if (p.first == q.second) { shared = 1; a = p.second; b = q.first; }
            else if (p.second == q.first) { shared = 1; a = p.first; b = q.second; }
            else if (p.second == q.second) { shared = 1; a = p.first; b = q.first; }
            if (shared && nearest_neighbours(a, b)) h(i, k) = j;
        }
    }
    return h;
}

RealOperator build_dipole(const AggregateSpec& spec, const SiteBasis& basis) {
    const int n = basis.n_sites();
    const int d = basis.dimension();
    const double mu_f = spec.mu_f_factor * spec.mu_e;
    RealOperator mu = RealOperator::Zero(d, d);
    auto set = [&](int a, int b, double v) {
        mu(a, b) = v;
        mu(b, a) = v;
    };
    for (int m = 1; m <= n; ++m) {
        const int s = basis.index_of_single(m);
        set(s, 0, spec.mu_e);
        set(basis.index_of_double(m, m), s, mu_f);
        for (int k = 1; k <= n; ++k)
            if (k != m) set(basis.index_of_double(m, k), s, spec.mu_e);
    }
    return mu;
}

std::vector<Eigen::VectorXd> build_site_couplings(const AggregateSpec& spec,
                                                  const SiteBasis& basis) {
    const int d = basis.dimension();
    std::vector<Eigen::VectorXd> out;
    for (int m = 1; m <= basis.n_sites(); ++m) {
        Eigen::VectorXd h = Eigen::VectorXd::Zero(d);
        for (int i = 0; i < d; ++i) {
            const SiteLabel& l = basis.label(i);
            if (l.manifold() == 1 && l.first == m) h(i) = 1.0;
            else if (l.is_local_double() && l.first == m) h(i) = spec.kappa;
            else if (l.manifold() == 2 && !l.is_local_double() && (l.first == m || l.second == m))
                h(i) = 1.0;
        }
        out.push_back(std::move(h));
    }
    return out;
}

std::vector<RealOperator> build_ic_couplings(const SiteBasis& basis) {
    const int d = basis.dimension();
    std::vector<RealOperator> out;
    for (int m = 1; m <= basis.n_sites(); ++m) {
        RealOperator p = RealOperator::Zero(d, d);
        const int s = basis.index_of_single(m);
        const int f = basis.index_of_double(m, m);
        p(s, f) = 1.0;
        p(f, s) = 1.0;
        out.push_back(std::move(p));
    }
    return out;
}

EigenSystem diagonalize(const RealOperator& h_ex, const SiteBasis& basis) {
    const int d = basis.dimension();
    if (h_ex.rows() != d || h_ex.cols() != d)
        throw ConfigError("Hamiltonian dimension does not match basis");

    EigenSystem out;
    out.energies.resize(d);
    out.coefficients = RealOperator::Zero(d, d);

    int column = 0;
    for (int m = 0; m <= 2; ++m) {
        std::vector<int> idx;
        for (int i = 0; i < d; ++i)
            if (basis.manifold(i) == m) idx.push_back(i);
        const int b = static_cast<int>(idx.size());
        if (b == 0) continue;

        RealOperator block(b, b);
        for (int r = 0; r < b; ++r)
            for (int c = 0; c < b; ++c) block(r, c) = h_ex(idx[r], idx[c]);
        Eigen::SelfAdjointEigenSolver<RealOperator> solver(block);
        Eigen::VectorXd e = solver.eigenvalues();
        RealOperator v = solver.eigenvectors();

        // degenerate clusters: project site unit vectors in index order
        for (int start = 0; start < b;) {
            int stop = start + 1;
            while (stop < b && e(stop) - e(stop - 1) < kDegeneracyGap) ++stop;
            const int k = stop - start;
            if (k > 1) {
                const RealOperator cluster = v.middleCols(start, k);
                const RealOperator proj = cluster * cluster.transpose();
                RealOperator basis_vecs(b, k);
                int found = 0;
                for (int s = 0; s < b && found < k; ++s) {
                    Eigen::VectorXd w = proj.col(s);
                    for (int q = 0; q < found; ++q)
                        w -= basis_vecs.col(q).dot(w) * basis_vecs.col(q);
                    const double nrm = w.norm();
                    if (nrm > 1e-8) basis_vecs.col(found++) = w / nrm;
                }
                v.middleCols(start, k) = basis_vecs;
                const double mean = e.segment(start, k).mean();
                e.segment(start, k).setConstant(mean);
            }
            start = stop;
        }

        for (int c = 0; c < b; ++c) {
            Eigen::Index arg = 0;
            v.col(c).cwiseAbs().maxCoeff(&arg);
            if (v(arg, c) < 0) v.col(c) *= -1.0;
            for (int r = 0; r < b; ++r) out.coefficients(idx[r], column) = v(r, c);
            out.energies(column) = e(c);
            out.manifold.push_back(m);
            out.rank.push_back(c + 1);
            ++column;
        }
    }
    return out;
}

ExcitonSystem build_system(const AggregateSpec& spec) {
    spec.validate();
    ExcitonSystem sys;
    sys.spec = spec;
    sys.basis = enumerate_basis(spec.n_sites);
    sys.h_ex = build_hamiltonian(spec, sys.basis);
    sys.mu = build_dipole(spec, sys.basis);
    sys.h_m = build_site_couplings(spec, sys.basis);
    sys.h_tot = Eigen::VectorXd::Zero(sys.basis.dimension());
    for (const auto& h : sys.h_m) sys.h_tot += h;
    sys.pi_ic = build_ic_couplings(sys.basis);
    sys.eigen = diagonalize(sys.h_ex, sys.basis);
    return sys;
}

double band_population(const Operator& rho_eigen, int manifold, const EigenSystem& eigen) {
    const double tr = rho_eigen.trace().real();
    if (std::abs(tr - 1.0) > 1e-6)
        throw NumericalError("band_population: density operator trace " + std::to_string(tr));
    double p = 0.0;
    for (int a = 0; a < eigen.dimension(); ++a)
        if (eigen.manifold[a] == manifold) p += rho_eigen(a, a).real();
    return p;
}

Operator eigen_projector(const EigenSystem& eigen, int alpha) {
    Operator p = Operator::Zero(eigen.dimension(), eigen.dimension());
    p(alpha, alpha) = 1.0;
    return p;
}

std::string eigen_report_csv(const ExcitonSystem& system) {
    std::ostringstream os;
    os.precision(10);
    os << "manifold,rank,energy_cm1";
    for (const auto& l : system.basis.labels()) os << ",c_" << l.str();
    os << '\n';
    const auto& eig = system.eigen;
    for (int a = 0; a < eig.dimension(); ++a) {
        os << eig.manifold[a] << ',' << eig.rank[a] << ',' << eig.energies(a);
        for (int i = 0; i < system.dimension(); ++i) os << ',' << eig.coefficients(i, a);
        os << '\n';
    }
    return os.str();
}

}  // namespace exdyn
