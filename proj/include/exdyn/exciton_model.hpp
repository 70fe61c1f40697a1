// exciton_model.hpp: Frenkel exciton basis, operators and eigenstructure of a
// linear aggregate restricted to the zero-, one- and two-exciton manifolds.

#pragma once

#include <map>
#include <string>
#include <vector>

#include "exdyn/linalg.hpp"
#include "exdyn/parameters.hpp"

namespace exdyn {

// One local excitation configuration. Sites are 1-based.
//   ground:  first = second = 0
//   single:  first = m, second = 0
//   double:  first = m <= second = n  (m == n is the local double excitation)
struct SiteLabel {
    int first{0};
    int second{0};

    int manifold() const { return first == 0 ? 0 : (second == 0 ? 1 : 2); }
    bool is_local_double() const { return second != 0 && first == second; }
    std::string str() const;

    auto operator<=>(const SiteLabel&) const = default;
};

// Ordered site basis: |0>, |1>..|N>, |11>..|NN>, then |mn> (m < n) lexicographic.
class SiteBasis {
public:
    SiteBasis() = default;
    explicit SiteBasis(int n_sites);

    int n_sites() const { return n_sites_; }
    int dimension() const { return static_cast<int>(labels_.size()); }
    const std::vector<SiteLabel>& labels() const { return labels_; }
    const SiteLabel& label(int i) const { return labels_.at(i); }
    int manifold(int i) const { return labels_.at(i).manifold(); }

    // Throws std::out_of_range for labels outside the basis.
    int index(const SiteLabel& label) const;
    int index_of_single(int m) const;
    int index_of_double(int m, int n) const;

    // Parses "0", "1", "12", "11" (N < 10) or "1-12" style labels.
    int index(const std::string& text) const;

private:
    int n_sites_{0};
    std::vector<SiteLabel> labels_;
    std::map<SiteLabel, int> lookup_;
};

SiteBasis enumerate_basis(int n_sites);

// Eigenstates ordered by manifold, ascending energy within each manifold.
struct EigenSystem {
    Eigen::VectorXd energies;        // cm^-1
    RealOperator coefficients;       // column alpha holds C_a(alpha)
    std::vector<int> manifold;       // 0, 1, 2 per eigenstate
    std::vector<int> rank;           // 1-based rank inside the manifold

    int dimension() const { return static_cast<int>(energies.size()); }
    std::string label(int alpha) const;  // "M_k"
    int index(int manifold, int rank) const;
    // Parses "M_k"; throws std::out_of_range.
    int index(const std::string& label) const;
    int manifold_size(int m) const;
    int manifold_offset(int m) const;

    Operator to_eigen(const Operator& site_op) const;
    Operator to_site(const Operator& eigen_op) const;
};

struct ExcitonSystem {
    AggregateSpec spec;
    SiteBasis basis;
    RealOperator h_ex;                 // cm^-1
    RealOperator mu;                   // e*a0
    std::vector<Eigen::VectorXd> h_m;  // diagonal coupling operators per site
    Eigen::VectorXd h_tot;             // sum of h_m
    std::vector<RealOperator> pi_ic;   // |m><mm| + h.c.
    EigenSystem eigen;

    int dimension() const { return basis.dimension(); }
    int n_sites() const { return basis.n_sites(); }
};

RealOperator build_hamiltonian(const AggregateSpec& spec, const SiteBasis& basis);
RealOperator build_dipole(const AggregateSpec& spec, const SiteBasis& basis);
std::vector<Eigen::VectorXd> build_site_couplings(const AggregateSpec& spec,
                                                  const SiteBasis& basis);
std::vector<RealOperator> build_ic_couplings(const SiteBasis& basis);

// Per-manifold Hermitian eigen-decomposition. Eigenvector phase: largest
// magnitude component positive. Degenerate clusters (gap < 1e-8 cm^-1) are
// re-orthonormalized by projecting site unit vectors in index order.
EigenSystem diagonalize(const RealOperator& h_ex, const SiteBasis& basis);

// Builds every operator above and diagonalizes; validates spec first.
ExcitonSystem build_system(const AggregateSpec& spec);

// Population of a manifold for rho given in the eigenbasis.
// Throws NumericalError when |Tr rho - 1| > 1e-6.
double band_population(const Operator& rho_eigen, int manifold, const EigenSystem& eigen);

// |alpha><alpha| in the eigenbasis.
Operator eigen_projector(const EigenSystem& eigen, int alpha);

// CSV report: manifold, rank, energy_cm1, then one coefficient column per site label.
std::string eigen_report_csv(const ExcitonSystem& system);

}  // namespace exdyn
