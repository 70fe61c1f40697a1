#include "exdyn/heom.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <string>
#include <thread>
#include <unordered_map>

#include "exdyn/errors.hpp"
#include "exdyn/units.hpp"

namespace exdyn {

namespace {

constexpr double kRate = units::rad_per_fs_per_wavenumber;

std::string key_of(const std::vector<std::uint8_t>& c) { return std::string(c.begin(), c.end()); }

// Compositions of `total` into `slots` parts, first slot largest first.
void compositions(int slots, int total, std::vector<std::uint8_t>& cur, int pos,
                  std::vector<HierarchyIndex>& out) {
    if (pos == slots - 1) {
        cur[pos] = static_cast<std::uint8_t>(total);
        int depth = 0;
        for (auto v : cur) depth += v;
        out.push_back({cur, depth});
        return;
    }
    for (int v = total; v >= 0; --v) {
        cur[pos] = static_cast<std::uint8_t>(v);
        compositions(slots, total - v, cur, pos + 1, out);
    }
    cur[pos] = 0;
}

}  // namespace

std::size_t hierarchy_count(int slots, int order) {
    // C(S + L, L) built up multiplicatively; each partial product is itself a binomial.
    if (slots <= 0 || order < 0) return order >= 0 ? 1 : 0;
    unsigned __int128 c = 1;
    for (int i = 1; i <= order; ++i) {
        c = c * static_cast<unsigned>(slots + i) / static_cast<unsigned>(i);
        if (c > std::numeric_limits<std::size_t>::max()) return std::numeric_limits<std::size_t>::max();
    }
    return static_cast<std::size_t>(c);
}

HierarchySpace enumerate_hierarchy(int n_sites, int n_h, int n_l, int order, std::size_t max_ados) {
    if (n_sites < 1) throw ConfigError("hierarchy needs at least one site");
    if (n_h < 0 || n_l < 0) throw ConfigError("Matsubara counts must be non-negative");
    if (order < 0) throw ConfigError("hierarchy order must be non-negative");
    if (order > 255) throw ConfigError("hierarchy order above 255 is not supported");

    HierarchySpace sp;
    sp.layout = {n_sites, n_h, n_l};
    sp.order = order;
    const int s = sp.layout.slot_count();
    const std::size_t count = hierarchy_count(s, order);
    if (count > max_ados)
        throw MemoryBudgetError("hierarchy has " + std::to_string(count) + " ADOs, budget is " +
                                std::to_string(max_ados));

    sp.indices.reserve(count);
    std::vector<std::uint8_t> cur(s, 0);
    for (int depth = 0; depth <= order; ++depth) compositions(s, depth, cur, 0, sp.indices);

    std::unordered_map<std::string, std::int32_t> lookup;
    lookup.reserve(count * 2);
    for (std::size_t i = 0; i < sp.indices.size(); ++i)
        lookup.emplace(key_of(sp.indices[i].counts), static_cast<std::int32_t>(i));

    sp.up.assign(count * s, -1);
    sp.down.assign(count * s, -1);
    for (std::size_t i = 0; i < count; ++i) {
        auto c = sp.indices[i].counts;
        for (int k = 0; k < s; ++k) {
            if (sp.indices[i].depth < order) {
                ++c[k];
                sp.up[i * s + k] = lookup.at(key_of(c));
                --c[k];
            }
            if (c[k] > 0) {
                --c[k];
                sp.down[i * s + k] = lookup.at(key_of(c));
                ++c[k];
            }
        }
    }
    return sp;
}

bool is_manifold_block_diagonal(const Operator& rho, const EigenSystem& eigen, double tol) {
    for (int a = 0; a < rho.rows(); ++a)
        for (int b = 0; b < rho.cols(); ++b)
            if (eigen.manifold[a] != eigen.manifold[b] && std::abs(rho(a, b)) > tol) return false;
    return true;
}

HeomModel::HeomModel(const ExcitonSystem& system, const BathExpansion& high, const BathExpansion& low,
                     HierarchySpace space, HeomOptions options)
    : system_(&system), space_(std::move(space)), options_(options), dim_(system.dimension()) {
    const SlotLayout& lay = space_.layout;
    const int n = system.n_sites();
    if (lay.n_sites != n) throw ConfigError("hierarchy site count does not match the aggregate");
    if (high.oscillatory_count != 2 || high.matsubara_count < lay.n_h)
        throw ConfigError("high-frequency expansion does not provide the hierarchy's slots");
    if (low.oscillatory_count != 1 || low.matsubara_count < lay.n_l)
        throw ConfigError("low-frequency expansion does not provide the hierarchy's slots");
    if (!(options_.scale_multiplier > 0.0)) throw ConfigError("scale multiplier must be positive");

    const auto& basis = system.basis;
    for (int i = 0; i < dim_; ++i)
        for (int j = 0; j < dim_; ++j)
            if (!options_.block_diagonal || basis.manifold(i) == basis.manifold(j)) active_.emplace_back(i, j);
    const int na = active_entries();
    std::vector<int> position(dim_ * dim_, -1);
    for (int p = 0; p < na; ++p) position[active_[p].first * dim_ + active_[p].second] = p;

    // slots
    const bool prefactor = options_.scaling == AdoScaling::real_rate_prefactor;
    auto scale_of = [&](double magnitude, cplx rate) {
        double s = std::sqrt(magnitude);
        if (prefactor) s /= rate.real();
        return s * options_.scale_multiplier;
    };
    slots_.resize(lay.slot_count());
    const cplx b1 = high.terms[0].amplitude, b2 = high.terms[1].amplitude;
    const double c0h = std::sqrt(std::abs(b1 * b2));
    for (int m = 0; m < n; ++m) {
        slots_[lay.a_slot(m, 0)] = {high.terms[0].rate, b1, std::conj(b2), scale_of(c0h, high.terms[0].rate), m};
        slots_[lay.a_slot(m, 1)] = {high.terms[1].rate, b2, std::conj(b1), scale_of(c0h, high.terms[1].rate), m};
        for (int j = 0; j < lay.n_h; ++j) {
            const ExpTerm& t = high.terms[2 + j];
            slots_[lay.b_slot(m, j)] = {t.rate, t.amplitude, std::conj(t.amplitude),
                                        scale_of(std::abs(t.amplitude), t.rate), m};
        }
    }
    for (int j = 0; j <= lay.n_l; ++j) {
        const ExpTerm& t = low.terms[j];
        slots_[lay.v_slot(j)] = {t.rate, t.amplitude, std::conj(t.amplitude),
                                 scale_of(std::abs(t.amplitude), t.rate), -1};
    }
    for (auto& s : slots_)
        if (!(s.scale > 0.0) || !std::isfinite(s.scale)) s.scale = 1.0;  // uncoupled slot

    // coupling vectors over active entries
    auto coupling = [&](int c) -> const Eigen::VectorXd& { return c < 0 ? system.h_tot : system.h_m[c]; };
    diff_.resize(n + 1);
    for (int c = -1; c < n; ++c) {
        const Eigen::VectorXd& v = coupling(c);
        Eigen::VectorXd d(na);
        for (int p = 0; p < na; ++p) d(p) = v(active_[p].first) - v(active_[p].second);
        diff_[c < 0 ? n : c] = d;
    }
    down_weight_.resize(slots_.size());
    for (std::size_t k = 0; k < slots_.size(); ++k) {
        const auto& s = slots_[k];
        const Eigen::VectorXd& v = coupling(s.coupling);
        Eigen::VectorXcd w(na);
        for (int p = 0; p < na; ++p)
            w(p) = -I * kRate / s.scale * (s.coeff * v(active_[p].first) - s.coeff_partner * v(active_[p].second));
        down_weight_[k] = w;
    }

    // local Liouvillian, built column by column from unit matrices (site basis)
    const EigenSystem& eig = system.eigen;
    const Operator h = system.h_ex.cast<cplx>();
    const Operator mu = system.mu.cast<cplx>();
    std::vector<std::pair<Operator, Operator>> ic;  // (V, Xi) in the site basis
    {
        const SpectrumFn s_ic = [&](double w) { return ic_spectrum(system.spec.ic, w); };
        for (int m = 0; m < n; ++m) {
            const Operator v = eig.to_eigen(system.pi_ic[m].cast<cplx>());
            const Operator xi = build_xi(v, s_ic, eig);
            if (xi.cwiseAbs().maxCoeff() > 0.0) ic.emplace_back(system.pi_ic[m].cast<cplx>(), eig.to_site(xi));
        }
    }
    const double delta_h = options_.include_residual ? high.residual : 0.0;
    const double delta_l = options_.include_residual ? low.residual : 0.0;
    const double drop = 1e-14;

    auto superop = [&](auto&& apply) {
        std::vector<Eigen::Triplet<cplx>> trip;
        double largest = 0.0;
        std::vector<std::pair<int, Operator>> cols;
        for (int p = 0; p < na; ++p) {
            Operator e = Operator::Zero(dim_, dim_);
            e(active_[p].first, active_[p].second) = 1.0;
            Operator out = apply(e);
            largest = std::max(largest, out.cwiseAbs().maxCoeff());
            cols.emplace_back(p, std::move(out));
        }
        for (auto& [p, out] : cols)
            for (int i = 0; i < dim_; ++i)
                for (int j = 0; j < dim_; ++j) {
                    const cplx x = out(i, j);
                    if (std::abs(x) <= drop * largest) continue;
                    const int r = position[i * dim_ + j];
                    if (r < 0)
                        throw NumericalError("block-diagonal hierarchy is not closed under the local generator");
                    trip.emplace_back(r, p, x);
                }
        Eigen::SparseMatrix<cplx, Eigen::RowMajor> mat(na, na);
        mat.setFromTriplets(trip.begin(), trip.end());
        mat.makeCompressed();
        return mat;
    };

    local_ = superop([&](const Operator& r) {
        Operator out = -I * commutator(h, r);
        for (const auto& [v, xi] : ic) {
            const Operator inner = xi * r - r * xi.adjoint();
            out -= v * inner - inner * v;
        }
        if (delta_h != 0.0)
            for (int m = 0; m < n; ++m) {
                const Operator hm = system.h_m[m].cast<cplx>().asDiagonal();
                out -= delta_h * commutator(hm, commutator(hm, r));
            }
        if (delta_l != 0.0) {
            const Operator ht = system.h_tot.cast<cplx>().asDiagonal();
            out -= delta_l * commutator(ht, commutator(ht, r));
        }
        return Operator(kRate * out);
    });
    if (!options_.block_diagonal)
        dipole_ = superop([&](const Operator& r) {
            return Operator(I * kRate * units::wavenumber_per_dipole_field * commutator(mu, r));
        });

    damping_.resize(space_.size());
    for (std::size_t i = 0; i < space_.size(); ++i) {
        cplx g = 0.0;
        for (std::size_t k = 0; k < slots_.size(); ++k) g += double(space_.indices[i].counts[k]) * slots_[k].rate;
        damping_[i] = -kRate * g;
    }
    sqrt_table_.resize(space_.order + 2);
    for (std::size_t v = 0; v < sqrt_table_.size(); ++v) sqrt_table_[v] = std::sqrt(double(v));
}

HierarchyState HeomModel::initial_state(const Operator& rho0_eigen) const {
    if (rho0_eigen.rows() != dim_ || rho0_eigen.cols() != dim_)
        throw ConfigError("initial density operator has wrong dimension");
    if (options_.block_diagonal && !is_manifold_block_diagonal(rho0_eigen, system_->eigen))
        throw ConfigError("block-diagonal hierarchy needs an initial state without inter-manifold coherences");
    const Operator site = system_->eigen.to_site(rho0_eigen);
    HierarchyState st;
    st.data.assign(space_.size() * active_.size(), cplx(0.0));
    for (std::size_t p = 0; p < active_.size(); ++p) st.data[p] = site(active_[p].first, active_[p].second);
    return st;
}

Operator HeomModel::reduced_density(const HierarchyState& state) const {
    Operator site = Operator::Zero(dim_, dim_);
    for (std::size_t p = 0; p < active_.size(); ++p) site(active_[p].first, active_[p].second) = state.data[p];
    return system_->eigen.to_eigen(site);
}

void HeomModel::rhs_range(const cplx* x, double field, cplx* y, std::size_t begin, std::size_t end) const {
    const int na = active_entries();
    const int ns = space_.slot_count();
    const int n = space_.layout.n_sites;
    using Vec = Eigen::Map<const Eigen::VectorXcd>;
    using OutVec = Eigen::Map<Eigen::VectorXcd>;
    const bool with_field = field != 0.0 && dipole_.nonZeros() > 0;
    for (std::size_t i = begin; i < end; ++i) {
        Vec xi(x + i * na, na);
        OutVec yi(y + i * na, na);
        yi.noalias() = local_ * xi;
        if (with_field) yi.noalias() += field * (dipole_ * xi);
        yi += damping_[i] * xi;
        const auto& counts = space_.indices[i].counts;
        for (int k = 0; k < ns; ++k) {
            const auto& s = slots_[k];
            const std::int32_t u = space_.up[i * ns + k];
            if (u >= 0) {
                const cplx f = -I * kRate * s.scale * sqrt_table_[counts[k] + 1];
                const auto& d = diff_[s.coupling < 0 ? n : s.coupling];
                const cplx* xu = x + std::size_t(u) * na;
                for (int p = 0; p < na; ++p) y[i * na + p] += f * d(p) * xu[p];
            }
            const std::int32_t dn = space_.down[i * ns + k];
            if (dn >= 0) {
                const double f = sqrt_table_[counts[k]];
                const auto& w = down_weight_[k];
                const cplx* xd = x + std::size_t(dn) * na;
                for (int p = 0; p < na; ++p) y[i * na + p] += f * w(p) * xd[p];
            }
        }
    }
}

void HeomModel::rhs(const HierarchyState& in, double field, std::vector<cplx>& out) const {
    out.resize(in.data.size());
    const std::size_t n_ado = space_.size();
    const int threads = std::max(1, std::min<int>(options_.threads, static_cast<int>(n_ado)));
    if (threads == 1) {
        rhs_range(in.data.data(), field, out.data(), 0, n_ado);
        return;
    }
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
        const std::size_t b = n_ado * t / threads, e = n_ado * (t + 1) / threads;
        pool.emplace_back([&, b, e] { rhs_range(in.data.data(), field, out.data(), b, e); });
    }
    for (auto& th : pool) th.join();
}

HierarchyState HeomModel::rhs(const HierarchyState& in, double field) const {
    HierarchyState out;
    out.time = in.time;
    rhs(in, field, out.data);
    return out;
}

std::vector<double> HeomModel::max_norm_by_depth(const HierarchyState& state) const {
    const std::size_t na = active_.size();
    std::vector<double> out(space_.order + 1, 0.0);
    for (std::size_t i = 0; i < space_.size(); ++i) {
        double s = 0.0;
        for (std::size_t p = 0; p < na; ++p) s += std::norm(state.data[i * na + p]);
        auto& slot = out[space_.indices[i].depth];
        slot = std::max(slot, std::sqrt(s));
    }
    return out;
}

double HeomTrajectory::band(std::size_t record, int manifold, const EigenSystem& eigen) const {
    double p = 0.0;
    for (int a = 0; a < eigen.dimension(); ++a)
        if (eigen.manifold[a] == manifold) p += populations.at(record)(a);
    return p;
}

HeomTrajectory propagate_heom(const Operator& rho0_eigen, const HeomModel& model, const ControlField& field,
                              const TimeGrid& grid, const HeomPropagateOptions& opt) {
    if (model.options().block_diagonal && field.max_abs() != 0.0)
        throw ConfigError("block-diagonal hierarchy cannot be driven by a field");
    const int every = std::max(1, opt.record_every);
    const EigenSystem& eigen = model.system().eigen;
    const double ratio = model.options().instability_ratio;

    HeomTrajectory traj;
    HierarchyState x = model.initial_state(rho0_eigen);
    const std::size_t n = x.data.size();
    std::vector<cplx> k1(n), k2(n), k3(n), k4(n);

    auto record = [&](int j) {
        const Operator rho = model.reduced_density(x);
        traj.times.push_back(grid.t(j));
        traj.populations.push_back(rho.diagonal().real());
        if (opt.store_states) traj.states.push_back(rho);
        update_invariants(traj.invariants, rho);
        auto norms = model.max_norm_by_depth(x);
        const double base = std::max(norms[0], 1e-300);
        for (double v : norms)
            if (!std::isfinite(v) || v > ratio * base)
                throw NumericalError("hierarchy unstable at t = " + std::to_string(grid.t(j)) + " fs (ADO norm " +
                                     std::to_string(v) + " vs physical " + std::to_string(norms[0]) + ")");
        traj.depth_norms.push_back(std::move(norms));
        if (opt.enforce) {
            const auto& r = traj.invariants;
            if (!(r.max_trace_drift <= opt.tolerances.trace))
                throw NumericalError("trace drift " + sci(r.max_trace_drift) + " at t = " +
                                     std::to_string(grid.t(j)));
            if (!(r.max_hermiticity_error <= opt.tolerances.hermiticity))
                throw NumericalError("Hermiticity drift " + sci(r.max_hermiticity_error) +
                                     " at t = " + std::to_string(grid.t(j)));
        }
    };
    auto below_stop = [&] {
        return opt.stop_below >= 0.0 && traj.band(traj.times.size() - 1, opt.stop_manifold, eigen) < opt.stop_below;
    };

    record(0);
    HierarchyState stage;
    for (int j = 0; j < grid.n_steps; ++j) {
        const double t = grid.t(j), dt = grid.dt;
        const double e0 = field.value_at(t), em = field.value_at(t + 0.5 * dt), e1 = field.value_at(t + dt);
        model.rhs(x, e0, k1);
        stage.data.resize(n);
        for (std::size_t i = 0; i < n; ++i) stage.data[i] = x.data[i] + 0.5 * dt * k1[i];
        model.rhs(stage, em, k2);
        for (std::size_t i = 0; i < n; ++i) stage.data[i] = x.data[i] + 0.5 * dt * k2[i];
        model.rhs(stage, em, k3);
        for (std::size_t i = 0; i < n; ++i) stage.data[i] = x.data[i] + dt * k3[i];
        model.rhs(stage, e1, k4);
        for (std::size_t i = 0; i < n; ++i) x.data[i] += (dt / 6.0) * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
        x.time = grid.t(j + 1);
        if ((j + 1) % every == 0 || j + 1 == grid.n_steps) {
            record(j + 1);
            if (below_stop()) break;
        }
    }
    return traj;
}

}  // namespace exdyn
