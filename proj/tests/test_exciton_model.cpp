#include <gtest/gtest.h>

#include "exdyn/errors.hpp"
#include "exdyn/exciton_model.hpp"
#include "oracles.hpp"

using namespace exdyn;

namespace {

oracle::DimerParams params_of(const AggregateSpec& s) {
    return {s.e_energy, s.anharmonicity, s.j_coupling, s.j_ef_factor * s.j_coupling};
}

// library basis index of each oracle row |0>, |1>, |2>, |11>, |22>, |12>
std::vector<int> dimer_order(const SiteBasis& b) {
    return {b.index("0"), b.index("1"), b.index("2"), b.index("11"), b.index("22"), b.index("12")};
}

}  // namespace

TEST(ExcitonBasis, DimensionCountsZeroOneTwoExcitonStates) {
    for (int n = 1; n <= 6; ++n) {
        const SiteBasis b(n);
        EXPECT_EQ(b.dimension(), 1 + n + n * (n + 1) / 2);
        EXPECT_EQ(b.manifold(0), 0);
    }
}

TEST(ExcitonBasis, UnknownLabelThrows) {
    const SiteBasis b(2);
    EXPECT_THROW(b.index("13"), std::out_of_range);
}

TEST(ExcitonModel, DimerHamiltonianMatchesHandBuiltMatrix) {
    for (const char* name : {"dimerA", "dimerB"}) {
        const AggregateSpec spec = preset(name);
        const SiteBasis b(2);
        const RealOperator h = build_hamiltonian(spec, b);
        const Eigen::MatrixXd ref = oracle::dimer_hamiltonian(params_of(spec));
        const auto idx = dimer_order(b);
        for (int r = 0; r < 6; ++r)
            for (int c = 0; c < 6; ++c) EXPECT_NEAR(h(idx[r], idx[c]), ref(r, c), 1e-9) << name << ' ' << r << c;
    }
}

TEST(ExcitonModel, EigenvaluesMatchJacobiForAllPresets) {
    for (const auto& name : preset_names()) {
        const ExcitonSystem sys = build_system(preset(name));
        const auto ev = oracle::jacobi_eigenvalues(sys.h_ex);
        std::vector<double> lib(sys.eigen.energies.data(), sys.eigen.energies.data() + sys.dimension());
        std::sort(lib.begin(), lib.end());
        ASSERT_EQ(ev.size(), lib.size());
        for (std::size_t i = 0; i < ev.size(); ++i) EXPECT_NEAR(lib[i], ev[i], 1e-7) << name;
    }
}

TEST(ExcitonModel, DimerLowestTwoExcitonStateMatchesClosedForm) {
    for (const char* name : {"dimerA", "dimerB"}) {
        const AggregateSpec spec = preset(name);
        const ExcitonSystem sys = build_system(spec);
        const auto ref = oracle::dimer_two_exciton(params_of(spec));
        const int a = sys.eigen.index("2_1");
        const auto& c = sys.eigen.coefficients;
        const double sign = c(sys.basis.index("12"), a) < 0 ? -1.0 : 1.0;
        EXPECT_NEAR(sign * c(sys.basis.index("11"), a), ref.c_local, 1e-9) << name;
        EXPECT_NEAR(sign * c(sys.basis.index("22"), a), ref.c_local, 1e-9) << name;
        EXPECT_NEAR(sign * c(sys.basis.index("12"), a), ref.c_mixed, 1e-9) << name;
        for (int k = 0; k < 3; ++k)
            EXPECT_NEAR(sys.eigen.energies(sys.eigen.index(2, k + 1)), ref.energies[k], 1e-7) << name;
    }
}

TEST(ExcitonModel, EigenvectorsOrthonormalAndManifoldPure) {
    for (const auto& name : preset_names()) {
        const ExcitonSystem sys = build_system(preset(name));
        const auto& c = sys.eigen.coefficients;
        EXPECT_LT((c.transpose() * c - RealOperator::Identity(sys.dimension(), sys.dimension())).cwiseAbs().maxCoeff(),
                  1e-12);
        for (int a = 0; a < sys.dimension(); ++a)
            for (int i = 0; i < sys.dimension(); ++i)
                if (sys.basis.manifold(i) != sys.eigen.manifold[a]) EXPECT_EQ(c(i, a), 0.0);
    }
}

TEST(ExcitonModel, EnergiesAscendWithinEachManifold) {
    const ExcitonSystem sys = build_system(preset("tetramerB"));
    for (int m = 0; m <= 2; ++m)
        for (int k = 2; k <= sys.eigen.manifold_size(m); ++k)
            EXPECT_LE(sys.eigen.energies(sys.eigen.index(m, k - 1)), sys.eigen.energies(sys.eigen.index(m, k)));
}

TEST(ExcitonModel, DipoleConnectsOnlyAdjacentManifolds) {
    const ExcitonSystem sys = build_system(preset("tetramerA"));
    EXPECT_LT((sys.mu - sys.mu.transpose()).cwiseAbs().maxCoeff(), 1e-15);
    for (int i = 0; i < sys.dimension(); ++i)
        for (int j = 0; j < sys.dimension(); ++j)
            if (std::abs(sys.basis.manifold(i) - sys.basis.manifold(j)) != 1) EXPECT_EQ(sys.mu(i, j), 0.0);
}

TEST(ExcitonModel, LocalDoubleDipoleCarriesSqrtTwo) {
    const AggregateSpec spec = preset("dimerA");
    const ExcitonSystem sys = build_system(spec);
    EXPECT_NEAR(sys.mu(sys.basis.index("11"), sys.basis.index("1")), std::sqrt(2.0) * spec.mu_e, 1e-12);
    EXPECT_NEAR(sys.mu(sys.basis.index("12"), sys.basis.index("1")), spec.mu_e, 1e-12);
}

TEST(ExcitonModel, BandPopulationsSumToTrace) {
    const ExcitonSystem sys = build_system(preset("dimerB"));
    Operator rho = Operator::Zero(6, 6);
    for (int i = 0; i < 6; ++i) rho(i, i) = (i + 1) / 21.0;
    double total = 0.0;
    for (int m = 0; m <= 2; ++m) total += band_population(rho, m, sys.eigen);
    EXPECT_NEAR(total, 1.0, 1e-14);
}

TEST(ExcitonModel, InvalidSpecsRejected) {
    AggregateSpec s = preset("dimerA");
    s.n_sites = 0;
    EXPECT_THROW(s.validate(), ConfigError);
    s = preset("dimerA");
    s.high.eta = -1.0;
    EXPECT_THROW(s.validate(), ConfigError);
    EXPECT_THROW(preset("pentamerA"), ConfigError);
}

TEST(ExcitonModel, EigenLabelsRoundTrip) {
    const ExcitonSystem sys = build_system(preset("tetramerA"));
    for (int a = 0; a < sys.dimension(); ++a) EXPECT_EQ(sys.eigen.index(sys.eigen.label(a)), a);
    EXPECT_THROW(sys.eigen.index("3_1"), std::out_of_range);
}
