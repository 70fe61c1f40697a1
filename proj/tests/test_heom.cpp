#include <gtest/gtest.h>

#include "exdyn/errors.hpp"
#include "exdyn/heom.hpp"
#include "exdyn/units.hpp"
#include "oracles.hpp"

using namespace exdyn;

namespace {

struct Bench {
    AggregateSpec spec;
    ExcitonSystem sys;
    BathExpansion high, low;
    explicit Bench(AggregateSpec s)
        : spec(s),
          sys(build_system(s)),
          high(expand_brownian(s.high, s.temperature, s.n_matsubara_high)),
          low(expand_debye(s.low, s.temperature, s.n_matsubara_low)) {}
    HeomModel model(int order, HeomOptions opt = {}) const {
        return HeomModel(sys, high, low,
                         enumerate_hierarchy(spec.n_sites, spec.n_matsubara_high, spec.n_matsubara_low, order), opt);
    }
};

Operator final_state(const HeomModel& m, const Operator& rho0, const ControlField& f, const TimeGrid& grid) {
    HeomPropagateOptions po;
    po.store_states = true;
    po.record_every = grid.n_steps;
    return propagate_heom(rho0, m, f, grid, po).states.back();
}

Operator mixed_state(int d) {
    Eigen::VectorXcd v(d);
    for (int i = 0; i < d; ++i) v(i) = cplx(1.0, 0.2 * i);
    v.normalize();
    return 0.9 * v * v.adjoint() + 0.1 / d * Operator::Identity(d, d);
}

}  // namespace

TEST(Hierarchy, CountMatchesBinomialAndRecursion) {
    for (int k : {1, 3, 6}) {
        for (int l : {0, 1, 4, 7}) {
            EXPECT_EQ(hierarchy_count(k, l), oracle::count_indices(k, l)) << k << ' ' << l;
        }
    }
    const HierarchySpace s = enumerate_hierarchy(2, 1, 1, 4);
    EXPECT_EQ(s.size(), oracle::count_indices(s.slot_count(), 4));
}

TEST(Hierarchy, NeighbourTablesAreConsistent) {
    const HierarchySpace s = enumerate_hierarchy(2, 1, 1, 3);
    const int k_count = s.slot_count();
    EXPECT_EQ(s.indices[0].depth, 0);
    for (std::size_t i = 0; i < s.size(); ++i) {
        const auto& n = s.indices[i];
        int depth = 0;
        for (auto c : n.counts) depth += c;
        EXPECT_EQ(depth, n.depth);
        if (i > 0) EXPECT_GE(n.depth, s.indices[i - 1].depth);
        for (int k = 0; k < k_count; ++k) {
            const auto up = s.up_of(i, k);
            if (n.depth == s.order) EXPECT_EQ(up, -1);
            if (up >= 0) {
                EXPECT_EQ(s.indices[up].counts[k], n.counts[k] + 1);
                EXPECT_EQ(s.down_of(up, k), static_cast<std::int32_t>(i));
            }
            const auto down = s.down_of(i, k);
            EXPECT_EQ(down == -1, n.counts[k] == 0);
            if (down >= 0) EXPECT_EQ(s.up_of(down, k), static_cast<std::int32_t>(i));
        }
    }
}

TEST(Hierarchy, MemoryBudgetIsEnforced) {
    EXPECT_THROW(enumerate_hierarchy(4, 1, 1, 7, 1000), MemoryBudgetError);
}

TEST(Heom, PureDephasingMatchesCumulantExpression) {
    // Monomer coherence <0|rho|1> under the Brownian bath alone decays as exp(-Re g(t)).
    AggregateSpec spec = preset("monomer");
    spec.ic.eta = 0.0;
    spec.low.eta = 0.0;
    const Bench s(spec);
    HeomOptions opt;
    opt.include_residual = false;
    const HeomModel m = s.model(7, opt);
    Operator rho0 = Operator::Zero(3, 3);
    rho0(0, 0) = rho0(1, 1) = rho0(0, 1) = rho0(1, 0) = 0.5;
    const TimeGrid grid = TimeGrid::covering(200.0, 0.02);
    HeomPropagateOptions po;
    po.store_states = true;
    po.record_every = 1000;
    const HeomTrajectory tr = propagate_heom(rho0, m, ControlField::zeros(grid), grid, po);
    ASSERT_EQ(tr.states.size(), 11u);
    for (std::size_t r = 0; r < tr.states.size(); ++r) {
        const double tau = tr.times[r] * oracle::kCf;
        cplx g = 0.0;
        for (const auto& term : s.high.terms) {
            const cplx c = term.amplitude, y = term.rate;
            g += c / (y * y) * (std::exp(-y * tau) + y * tau - 1.0);
        }
        EXPECT_NEAR(std::abs(tr.states[r](0, 1)), 0.5 * std::exp(-g.real()), 2e-4) << tr.times[r];
    }
}

TEST(Heom, VanishingCouplingReducesToUnitaryDynamics) {
    AggregateSpec spec = preset("dimerB");
    spec.high.eta = spec.low.eta = spec.ic.eta = 0.0;
    const Bench s(spec);
    const HeomModel m = s.model(2);
    const double e0 = 0.5, t_final = 20.0;
    const TimeGrid grid = TimeGrid::covering(t_final, 0.0025);
    ControlField f = ControlField::zeros(grid);
    for (double& v : f.samples) v = e0;
    const Operator rho_site = mixed_state(6);
    const Eigen::MatrixXcd c = s.sys.eigen.coefficients.cast<cplx>();
    const Operator got = final_state(m, c.adjoint() * rho_site * c, f, grid);
    const Operator ref = c.adjoint() * oracle::unitary_evolve(s.sys.h_ex, s.sys.mu, e0, rho_site, t_final) * c;
    EXPECT_LT((got - ref).cwiseAbs().maxCoeff(), 1e-6);
}

TEST(Heom, AdoScalingDoesNotChangeThePhysicalMatrix) {
    const Bench s(preset("dimerB"));
    // raw ADO norms depend on the scaling, so the norm-ratio alarm is switched off
    HeomOptions a, b, c;
    for (HeomOptions* o : {&a, &b, &c}) o->instability_ratio = 1e300;
    b.scale_multiplier = 2.5;
    c.scaling = AdoScaling::real_rate_prefactor;
    const TimeGrid grid = TimeGrid::covering(15.0, 0.05);
    const Operator rho0 = eigen_projector(s.sys.eigen, s.sys.eigen.index("2_3"));
    const Operator ra = final_state(s.model(3, a), rho0, ControlField::zeros(grid), grid);
    EXPECT_LT((ra - final_state(s.model(3, b), rho0, ControlField::zeros(grid), grid)).cwiseAbs().maxCoeff(), 1e-10);
    EXPECT_LT((ra - final_state(s.model(3, c), rho0, ControlField::zeros(grid), grid)).cwiseAbs().maxCoeff(), 1e-10);
}

TEST(Heom, ParallelMatchesSerial) {
    const Bench s(preset("dimerA"));
    HeomOptions serial, parallel;
    parallel.threads = 3;
    const TimeGrid grid = TimeGrid::covering(10.0, 0.05);
    const Operator rho0 = eigen_projector(s.sys.eigen, s.sys.eigen.index("2_3"));
    const Operator a = final_state(s.model(4, serial), rho0, ControlField::zeros(grid), grid);
    const Operator b = final_state(s.model(4, parallel), rho0, ControlField::zeros(grid), grid);
    EXPECT_LE((a - b).cwiseAbs().maxCoeff(), 1e-12 * a.cwiseAbs().maxCoeff());
}

TEST(Heom, BlockDiagonalModeMatchesFullPropagation) {
    const Bench s(preset("dimerB"));
    HeomOptions full, block;
    block.block_diagonal = true;
    const TimeGrid grid = TimeGrid::covering(20.0, 0.05);
    const Operator rho0 = eigen_projector(s.sys.eigen, s.sys.eigen.index("2_3"));
    ASSERT_TRUE(is_manifold_block_diagonal(rho0, s.sys.eigen));
    const Operator a = final_state(s.model(3, full), rho0, ControlField::zeros(grid), grid);
    const Operator b = final_state(s.model(3, block), rho0, ControlField::zeros(grid), grid);
    EXPECT_LT((a - b).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT(s.model(3, block).active_entries(), s.model(3, full).active_entries());
}

TEST(Heom, BlockModeRejectsFields) {
    const Bench s(preset("dimerB"));
    HeomOptions block;
    block.block_diagonal = true;
    const TimeGrid grid = TimeGrid::covering(1.0, 0.05);
    ControlField f = ControlField::zeros(grid);
    f.samples[3] = 1.0;
    EXPECT_THROW(propagate_heom(eigen_projector(s.sys.eigen, 0), s.model(1, block), f, grid), ConfigError);
}

TEST(Heom, InvariantsHoldOverShortRun) {
    const Bench s(preset("dimerB"));
    const TimeGrid grid = TimeGrid::covering(50.0, 0.05);
    const HeomTrajectory tr =
        propagate_heom(eigen_projector(s.sys.eigen, s.sys.eigen.index("2_1")), s.model(4), ControlField::zeros(grid), grid);
    EXPECT_LT(tr.invariants.max_trace_drift, 1e-8);
    EXPECT_LT(tr.invariants.max_hermiticity_error, 1e-10);
    EXPECT_GE(tr.invariants.min_eigenvalue, -1e-4);
    ASSERT_FALSE(tr.depth_norms.empty());
    EXPECT_EQ(tr.depth_norms[0].size(), 5u);
}

TEST(Heom, OrderZeroWithoutBathsIsMarkovian) {
    // With no bath terms the hierarchy collapses onto the local generator.
    AggregateSpec spec = preset("dimerA");
    spec.high.eta = spec.low.eta = 0.0;
    const Bench s(spec);
    const QmeModel qme = QmeModel::build(s.sys, build_dissipators(s.sys));
    const TimeGrid grid = TimeGrid::covering(40.0, 0.05);
    const Operator rho0 = eigen_projector(s.sys.eigen, s.sys.eigen.index("2_3"));
    const Operator a = final_state(s.model(0), rho0, ControlField::zeros(grid), grid);
    PropagateOptions po;
    po.store_states = true;
    po.record_every = grid.n_steps;
    const Operator b = propagate(rho0, qme, ControlField::zeros(grid), grid, po).states.back();
    EXPECT_LT((a.diagonal() - b.diagonal()).cwiseAbs().maxCoeff(), 1e-6);
}
