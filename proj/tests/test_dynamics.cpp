#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "reflectq/dynamics.hpp"
#include "reflectq/random.hpp"

using namespace reflectq;

namespace {

DensityMatrix plus_state() {
    ComplexVector v(2);
    v << 1.0, 1.0;
    return DensityMatrix::pure(v);
}

ComplexMatrix diag2(double a, double b) {
    ComplexMatrix m = ComplexMatrix::Zero(2, 2);
    m(0, 0) = a;
    m(1, 1) = b;
    return m;
}

Channel bit_flip(double e) { return standard_channel(StandardChannel::bit_flip, e); }

IrrelevanceJudgment judge(KrausMap k) { return {std::move(k), true}; }

}  // namespace

TEST(DynamicsFromJudgment, Examples) {
    const auto trivial = dynamics_from_judgment(judge(KrausMap(2, {{identity(2)}})));
    EXPECT_LT(choi_distance(choi_matrix(trivial.map), choi_matrix(Channel::identity_channel(2))), 1e-15);

    const auto bf = dynamics_from_judgment(judge(KrausMap::fine_grained(2, bit_flip(0.25).kraus())));
    EXPECT_LT(max_abs_diff(oracle::choi_by_units(bf.map.kraus()), oracle::choi_by_units(bit_flip(0.25).kraus())),
              1e-15);

    const auto deph = dynamics_from_judgment(judge(KrausMap::computational(2)));
    EXPECT_LT(max_abs_diff(oracle::choi_by_units(deph.map.kraus()),
                           oracle::choi_by_units(standard_channel(StandardChannel::dephasing, 1.0).kraus())),
              1e-15);
    EXPECT_EQ(deph.provenance.measurement.outcome_count(), 2u);
}

TEST(DynamicsFromJudgment, StateDependentJudgmentRejected) {
    EXPECT_THROW(dynamics_from_judgment({KrausMap::computational(2), false}), StateDependentJudgment);
}

TEST(DynamicsFromJudgment, ActionEqualsReflectedState) {
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 200; ++trial) {
        const std::size_t d = 2 + static_cast<std::size_t>(trial % 2);
        const auto k = random::kraus_map(d, 1 + static_cast<std::size_t>(trial % 3), 2, rng);
        const auto rho = random::density_matrix(d, rng);
        const auto dyn = dynamics_from_judgment(judge(k));
        EXPECT_LT(max_abs_diff(dyn.map.apply(rho.matrix()), reflected_state({rho, k}).matrix()), 1e-10);
    }
}

TEST(DynamicsFromJudgment, RemixedJudgmentsGiveSameMap) {
    std::mt19937_64 rng(2);
    for (int trial = 0; trial < 50; ++trial) {
        const auto c = random::channel(2, 3, rng);
        const auto remixed = remix_kraus(c, random::isometry(5, 3, rng));
        const auto a = dynamics_from_judgment(judge(KrausMap::fine_grained(2, c.kraus())));
        const auto b = dynamics_from_judgment(judge(KrausMap::fine_grained(2, remixed.kraus())));
        const auto rho = random::density_matrix(2, rng);
        EXPECT_LT(max_abs_diff(a.map.apply(rho.matrix()), b.map.apply(rho.matrix())), 1e-10);
    }
}

TEST(CheckIrrelevance, WhichPathExamples) {
    const auto j = judge(KrausMap::computational(2));
    const auto plus = plus_state();
    EXPECT_TRUE(check_irrelevance({DensityMatrix::maximally_mixed(2), "0", "2"}, j, plus));
    EXPECT_FALSE(check_irrelevance({plus, "0", "2"}, j, plus));

    std::mt19937_64 rng(3);
    const auto rho = random::density_matrix(2, rng);
    const auto k = random::kraus_map(2, 2, 1, rng);
    EXPECT_TRUE(check_irrelevance({reflected_state({rho, k}), "0", "2"}, judge(k), rho));
    EXPECT_THROW(check_irrelevance({DensityMatrix::maximally_mixed(3), "0", "2"}, j, plus), DimensionMismatch);
}

TEST(ClosedSystemUnitary, Examples) {
    EXPECT_LT(choi_distance(choi_matrix(closed_system_unitary(identity(2))),
                            choi_matrix(Channel::identity_channel(2))),
              1e-15);

    std::mt19937_64 rng(4);
    const auto x = closed_system_unitary(pauli::x());
    for (int trial = 0; trial < 10; ++trial) {
        const auto rho = random::density_matrix(2, rng);
        EXPECT_NEAR(DensityMatrix(x.apply(rho.matrix())).purity(), rho.purity(), 1e-12);
    }
    EXPECT_THROW(closed_system_unitary(diag2(1.0, 0.9)), NotUnitary);
}

TEST(ClosedSystemUnitary, PreservesEntropy) {
    std::mt19937_64 rng(5);
    for (int trial = 0; trial < 50; ++trial) {
        const auto u = closed_system_unitary(random::unitary(3, rng));
        const auto rho = random::density_matrix(3, rng);
        EXPECT_NEAR(von_neumann_entropy(apply_channel(u, rho)), von_neumann_entropy(rho), 1e-9);
    }
}

TEST(IdentityDecomposition, Examples) {
    const auto single = kraus_decompositions_of_identity({identity(2)});
    EXPECT_TRUE(single.purity_preserving);

    const double h = std::sqrt(0.5);
    const auto mixing = kraus_decompositions_of_identity({h * identity(2), h * pauli::x()});
    EXPECT_FALSE(mixing.purity_preserving);
    EXPECT_LT(max_abs_diff(mixing.map.apply(diag2(1, 0)), 0.5 * identity(2)), 1e-15);

    // {sqrt(1-e) I, sqrt(e) Z} scales coherences by 1 - 2e, i.e. dephasing(2e).
    const double e = 0.2;
    const auto z = kraus_decompositions_of_identity({std::sqrt(1 - e) * identity(2), std::sqrt(e) * pauli::z()});
    EXPECT_LT(choi_distance(choi_matrix(z.map), choi_matrix(standard_channel(StandardChannel::dephasing, 2 * e))),
              1e-12);
    EXPECT_FALSE(z.purity_preserving);

    EXPECT_THROW(kraus_decompositions_of_identity({0.5 * identity(2)}), NotIdentityDecomposition);
    EXPECT_THROW(kraus_decompositions_of_identity({}), NotIdentityDecomposition);
}

TEST(Evolve, Examples) {
    std::mt19937_64 rng(6);
    const auto rho = random::density_matrix(2, rng);
    const auto bf = dynamics_from_judgment(judge(KrausMap::fine_grained(2, bit_flip(0.25).kraus())));
    EXPECT_LT(max_abs_diff(evolve(rho, bf, 0).matrix(), rho.matrix()), 1e-15);
    // 0.25 + 0.25 - 2 * 0.0625 = 0.375
    EXPECT_LT(max_abs_diff(evolve(DensityMatrix::basis(2, 0), bf, 2).matrix(), diag2(0.625, 0.375)), 1e-15);

    const auto ad = dynamics_from_judgment(
        judge(KrausMap::fine_grained(2, standard_channel(StandardChannel::amplitude_damping, 0.3).kraus())));
    const auto fp = fixed_point(ad);
    EXPECT_LT(max_abs_diff(evolve(fp, ad, 5).matrix(), fp.matrix()), 1e-9);
}

TEST(Evolve, StepsCompose) {
    std::mt19937_64 rng(7);
    for (int trial = 0; trial < 20; ++trial) {
        const auto dyn = dynamics_from_judgment(judge(random::kraus_map(3, 2, 2, rng)));
        const auto rho = random::density_matrix(3, rng);
        const std::size_t m = 1 + static_cast<std::size_t>(trial % 4);
        const std::size_t n = 2 + static_cast<std::size_t>(trial % 3);
        EXPECT_LT(max_abs_diff(evolve(rho, dyn, m + n).matrix(), evolve(evolve(rho, dyn, m), dyn, n).matrix()),
                  1e-10);
    }
}

TEST(FixedPoint, Examples) {
    EXPECT_LT(max_abs_diff(fixed_point(Channel::identity_channel(3)).matrix(), identity(3) / 3.0), 1e-15);
    EXPECT_LT(max_abs_diff(fixed_point(bit_flip(0.25)).matrix(), 0.5 * identity(2)), 1e-15);
    EXPECT_LT(max_abs_diff(fixed_point(standard_channel(StandardChannel::amplitude_damping, 0.3)).matrix(),
                           diag2(1, 0)),
              1e-9);
}

TEST(FixedPoint, ReportsNonConvergence) {
    // Three damped steps cannot settle amplitude damping to 1e-10.
    EXPECT_THROW(fixed_point(standard_channel(StandardChannel::amplitude_damping, 0.3), {1e-10, 3}),
                 NotConverged);
}
