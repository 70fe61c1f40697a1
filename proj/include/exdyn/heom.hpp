// heom.hpp: hierarchy of auxiliary density operators for the aggregate model
// (local Brownian oscillators + shared Debye bath + IC Redfield term) and its
// fixed-step propagation.

#pragma once

#include <cstdint>
#include <vector>

#include <Eigen/Sparse>

#include "exdyn/bath.hpp"
#include "exdyn/exciton_model.hpp"
#include "exdyn/field.hpp"
#include "exdyn/markovian.hpp"

namespace exdyn {

// Slot layout of a multi-index (S = 2N + N*N_H + N_L + 1 slots):
//   A(m, j): slot m*2 + j                   (m < N, j < 2)   Brownian pair terms
//   B(m, j): slot 2N + m*N_H + j            (m < N, j < N_H) Brownian Matsubara terms
//   V(j):    slot 2N + N*N_H + j            (j <= N_L)       Debye terms, j = 0 the cutoff term
struct SlotLayout {
    int n_sites{0};
    int n_h{0};
    int n_l{0};

    int slot_count() const { return 2 * n_sites + n_sites * n_h + n_l + 1; }
    int a_slot(int m, int j) const { return 2 * m + j; }
    int b_slot(int m, int j) const { return 2 * n_sites + m * n_h + j; }
    int v_slot(int j) const { return 2 * n_sites + n_sites * n_h + j; }
};

struct HierarchyIndex {
    std::vector<std::uint8_t> counts;  // one entry per slot
    int depth{0};

    int a(const SlotLayout& l, int m, int j) const { return counts[l.a_slot(m, j)]; }
    int b(const SlotLayout& l, int m, int j) const { return counts[l.b_slot(m, j)]; }
    int v(const SlotLayout& l, int j) const { return counts[l.v_slot(j)]; }
};

class HierarchySpace {
public:
    SlotLayout layout;
    int order{0};
    std::vector<HierarchyIndex> indices;  // graded lexicographic, index 0 is the physical matrix
    std::vector<std::int32_t> up;         // [i * S + k] index of i + e_k, -1 outside truncation
    std::vector<std::int32_t> down;       // [i * S + k] index of i - e_k, -1 when count is 0

    std::size_t size() const { return indices.size(); }
    int slot_count() const { return layout.slot_count(); }
    std::int32_t up_of(std::size_t i, int k) const { return up[i * slot_count() + k]; }
    std::int32_t down_of(std::size_t i, int k) const { return down[i * slot_count() + k]; }
};

// C(S + L, L) without enumerating; saturates at SIZE_MAX.
std::size_t hierarchy_count(int slots, int order);

// Throws MemoryBudgetError (reporting count and budget) when the number of
// ADOs exceeds max_ados.
HierarchySpace enumerate_hierarchy(int n_sites, int n_h, int n_l, int order,
                                   std::size_t max_ados = 5'000'000);

enum class AdoScaling {
    // rho_n = rho_unscaled / prod_k (s_k^n_k sqrt(n_k!)), s_k = sqrt(|c_k|);
    // the Brownian pair shares s = sqrt(c0), c0 = sqrt(|b1 b2|).
    unit_numerator,
    // as above with s_k divided by Re(gamma_k).
    real_rate_prefactor,
};

struct HeomOptions {
    AdoScaling scaling{AdoScaling::unit_numerator};
    // Extra common factor applied to every s_k (exercises scaling invariance).
    double scale_multiplier{1.0};
    // Propagate only manifold-diagonal blocks (valid for field-free runs
    // started from a block-diagonal state).
    bool block_diagonal{false};
    bool include_residual{true};
    int threads{1};
    double instability_ratio{1e6};
};

// One exponential slot of the hierarchy, rates/coefficients in cm^-1, cm^-2.
struct HierarchySlot {
    cplx rate;
    cplx coeff;          // c_k, multiplies V rho
    cplx coeff_partner;  // c-bar_k, multiplies rho V
    double scale;        // s_k
    int coupling;        // site index m, or -1 for h_tot
};

struct HierarchyState {
    double time{0.0};
    std::vector<cplx> data;  // n_ado * n_active, ADO-major
};

class HeomModel {
public:
    HeomModel(const ExcitonSystem& system, const BathExpansion& high, const BathExpansion& low,
              HierarchySpace space, HeomOptions options = {});

    // The system must outlive the model.
    const ExcitonSystem& system() const { return *system_; }
    const HierarchySpace& space() const { return space_; }
    const std::vector<HierarchySlot>& slots() const { return slots_; }
    int dimension() const { return dim_; }
    int active_entries() const { return static_cast<int>(active_.size()); }
    const HeomOptions& options() const { return options_; }

    // rho0 in the eigenbasis; all auxiliary matrices start at zero.
    HierarchyState initial_state(const Operator& rho0_eigen) const;
    // Physical density operator, eigenbasis.
    Operator reduced_density(const HierarchyState& state) const;

    // d/dt of every ADO (per fs) at field value E (GV/m).
    void rhs(const HierarchyState& in, double field, std::vector<cplx>& out) const;
    HierarchyState rhs(const HierarchyState& in, double field) const;

    // Frobenius norm of the largest ADO per depth 0..L.
    std::vector<double> max_norm_by_depth(const HierarchyState& state) const;

private:
    void rhs_range(const cplx* x, double field, cplx* y, std::size_t begin, std::size_t end) const;

    const ExcitonSystem* system_;
    HierarchySpace space_;
    HeomOptions options_;
    int dim_;
    std::vector<std::pair<int, int>> active_;  // (row, col) of stored entries, site basis
    std::vector<HierarchySlot> slots_;
    Eigen::SparseMatrix<cplx, Eigen::RowMajor> local_;   // -i[H,.] + IC + residual
    Eigen::SparseMatrix<cplx, Eigen::RowMajor> dipole_;  // i*k*[mu, .]
    std::vector<Eigen::VectorXd> diff_;                  // v_i - v_j per coupling (sites..., tot)
    std::vector<Eigen::VectorXcd> down_weight_;          // c v_i - cbar v_j per slot
    std::vector<cplx> damping_;                          // -sum n_k gamma_k per ADO (per fs)
    std::vector<double> sqrt_table_;
};

struct HeomTrajectory {
    std::vector<double> times;
    std::vector<Eigen::VectorXd> populations;  // eigenstate populations
    std::vector<std::vector<double>> depth_norms;
    InvariantReport invariants;
    std::vector<Operator> states;  // when requested

    double band(std::size_t record, int manifold, const EigenSystem& eigen) const;
};

struct HeomPropagateOptions {
    int record_every{1};
    bool store_states{false};
    bool enforce{true};
    Tolerances tolerances{};
    // Stop early once the manifold population drops below the threshold (disabled when < 0).
    int stop_manifold{2};
    double stop_below{-1.0};
};

HeomTrajectory propagate_heom(const Operator& rho0_eigen, const HeomModel& model,
                              const ControlField& field, const TimeGrid& grid,
                              const HeomPropagateOptions& options = {});

// Block-diagonal over manifolds (no inter-manifold coherences)?
bool is_manifold_block_diagonal(const Operator& rho_eigen, const EigenSystem& eigen, double tol = 0.0);

}  // namespace exdyn
