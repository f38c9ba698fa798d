#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "oracles.hpp"
#include "reflectq/random.hpp"
#include "reflectq/trajectories.hpp"

using namespace reflectq;

namespace {

LindbladModel atom(double gamma, double omega) { return two_level_atom({gamma, omega}); }

// exp(-i K t) rho exp(i K^dag t) for non-Hermitian K, by diagonalizing K.
ComplexMatrix linear_flow(const ComplexMatrix& k, const ComplexMatrix& rho, double t) {
    Eigen::ComplexEigenSolver<ComplexMatrix> es(k);
    const ComplexMatrix& v = es.eigenvectors();
    ComplexMatrix phase = ComplexMatrix::Zero(k.rows(), k.cols());
    for (Eigen::Index i = 0; i < k.rows(); ++i) phase(i, i) = std::exp(complex(0.0, -t) * es.eigenvalues()(i));
    const ComplexMatrix u = v * phase * v.inverse();
    return u * rho * u.adjoint();
}

DensityMatrix plus_state() {
    ComplexVector v(2);
    v << 1.0, 1.0;
    return DensityMatrix::pure(v);
}

}  // namespace

TEST(TwoLevelAtom, Operators) {
    const auto m = atom(4.0, 2.0);
    EXPECT_NEAR(m.jump()(0, 1).real(), 2.0, 1e-15);
    EXPECT_NEAR(m.hamiltonian()(0, 1).real(), -1.0, 1e-15);
    EXPECT_NEAR(m.jump_rate_operator()(1, 1).real(), 4.0, 1e-15);
    EXPECT_THROW(atom(-1.0, 0.0), ParameterOutOfRange);
    EXPECT_THROW(LindbladModel(sigma_minus(), sigma_minus()), NotHermitian);
}

TEST(ClickProbability, Examples) {
    EXPECT_NEAR(click_probability(excited_state(), atom(1, 0).jump(), 1e-3), 1e-3, 1e-18);
    EXPECT_EQ(click_probability(ground_state(), atom(1, 0).jump(), 1e-3), 0.0);
    EXPECT_NEAR(click_probability(DensityMatrix::maximally_mixed(2), atom(2, 0).jump(), 1e-3), 1e-3, 1e-18);
}

TEST(ClickProbability, StepGuard) {
    try {
        click_probability(excited_state(), atom(1, 0).jump(), 0.2);
        FAIL() << "expected StepTooLarge";
    } catch (const StepTooLarge& e) {
        EXPECT_NEAR(e.click_probability(), 0.2, 1e-15);
    }
    EXPECT_THROW(click_probability(excited_state(), atom(1, 0).jump(), 0.0), InputError);
}

TEST(JumpUpdate, AtomAlwaysLandsInGround) {
    const auto l = atom(1, 0).jump();
    EXPECT_LT(max_abs_diff(jump_update(excited_state(), l).matrix(), ground_state().matrix()), 1e-15);
    EXPECT_LT(max_abs_diff(jump_update(DensityMatrix::maximally_mixed(2), l).matrix(), ground_state().matrix()),
              1e-15);
    std::mt19937_64 rng(1);
    for (int trial = 0; trial < 10; ++trial) {
        EXPECT_LT(max_abs_diff(jump_update(random::density_matrix(2, rng), l).matrix(), ground_state().matrix()),
                  1e-12);
    }
    EXPECT_THROW(jump_update(ground_state(), l), DarkStateJump);
}

TEST(NoClickStep, Examples) {
    std::mt19937_64 rng(2);
    const auto rho = random::density_matrix(2, rng);
    const LindbladModel free(ComplexMatrix::Zero(2, 2), ComplexMatrix::Zero(2, 2));
    const auto same = no_click_step(rho.matrix(), free, 1e-3, true);
    EXPECT_LT(max_abs_diff(same.state, rho.matrix()), 1e-15);
    EXPECT_NEAR(same.weight, 1.0, 1e-15);

    // M0 = diag(1, 1 - dt/2), so the excited trace is (1 - dt/2)^2.
    const double dt = 1e-3;
    const auto raw = no_click_step(excited_state().matrix(), atom(1, 0), dt, false);
    EXPECT_NEAR(raw.state.trace().real(), (1 - dt / 2) * (1 - dt / 2), 1e-15);
    EXPECT_NEAR(raw.state.trace().real(), 1 - dt, 1e-6);

    const auto dark = no_click_step(ground_state().matrix(), atom(1, 0), dt, true);
    EXPECT_LT(max_abs_diff(dark.state, ground_state().matrix()), 1e-15);
    EXPECT_NEAR(dark.weight, 1.0, 1e-15);
}

TEST(NoClickProbability, Examples) {
    EXPECT_NEAR(no_click_probability(atom(1, 0), ground_state(), {0, 3}), 1.0, 1e-15);
    EXPECT_NEAR(no_click_probability(atom(1, 0), excited_state(), {0, 1}), std::exp(-1.0), 1e-6);

    const auto driven = atom(1, 2);
    const double p = no_click_probability(driven, ground_state(), {0, 0.01});
    const double expected = linear_flow(driven.effective_hamiltonian(), ground_state().matrix(), 0.01).trace().real();
    EXPECT_NEAR(p, expected, 1e-12);
    EXPECT_LT(1.0 - p, 1e-5);
    EXPECT_GT(1.0 - p, 0.0);
}

TEST(NoClickProbability, MatchesLinearFlowOracle) {
    std::mt19937_64 rng(3);
    for (int trial = 0; trial < 10; ++trial) {
        const auto model = atom(1.0 + trial % 3, 0.5 * trial);
        const auto rho = random::density_matrix(2, rng);
        const double expected = linear_flow(model.effective_hamiltonian(), rho.matrix(), 1.5).trace().real();
        EXPECT_NEAR(no_click_probability(model, rho, {0, 1.5}), expected, 1e-9);
    }
}

TEST(NoClickProbability, MonotoneInDuration) {
    const auto model = atom(1, 2);
    double prev = 1.0;
    for (int k = 1; k <= 30; ++k) {
        const double p = no_click_probability(model, plus_state(), {0, 0.1 * k});
        EXPECT_LE(p, prev + 1e-15);
        prev = p;
    }
}

TEST(SolveMaster, SpontaneousDecay) {
    const auto out = solve_master(atom(1, 0), excited_state(), {0, 3}, 1e-3, {0.5, 1.0, 2.0, 3.0});
    for (const auto& s : out) EXPECT_NEAR(excited_population(s.rho.matrix()), std::exp(-s.t), 1e-6);
    EXPECT_NEAR(excited_population(out[1].rho.matrix()), 0.367879, 1e-6);
}

TEST(SolveMaster, TraceAndPositivity) {
    const auto model = atom(1, 2);
    const auto out = solve_master(model, plus_state(), {0, 5}, 1e-3, uniform_output_times({0, 5}, 50));
    for (const auto& s : out) {
        EXPECT_LE(std::abs(s.rho.matrix().trace().real() - 1.0), 1e-9 * std::max(1.0, s.t));
        EXPECT_GE(min_eigenvalue(s.rho.matrix()), -1e-8);
    }
}

TEST(SolveMaster, SteadyStateMatchesLiouvillianOracle) {
    const auto model = atom(1, 1);
    const ComplexMatrix oracle_ss = oracle::steady_state(model.hamiltonian(), model.jump());
    // Saturation formula Omega^2 / (Gamma^2 + 2 Omega^2), checked against the oracle.
    EXPECT_NEAR(oracle_ss(1, 1).real(), 1.0 / 3.0, 1e-12);
    const auto out = solve_master(model, ground_state(), {0, 60}, 1e-3, {60.0});
    EXPECT_LT(max_abs_diff(out.back().rho.matrix(), oracle_ss), 1e-8);

    const auto held = solve_master(model, DensityMatrix(oracle_ss, 1e-8), {0, 2}, 1e-3, {1.0, 2.0});
    for (const auto& s : held) EXPECT_LT(max_abs_diff(s.rho.matrix(), oracle_ss), 1e-10);
}

TEST(SolveMaster, OutputTimesValidated) {
    EXPECT_THROW(solve_master(atom(1, 0), excited_state(), {0, 1}, 1e-3, {0.5, 0.2}), InputError);
    EXPECT_THROW(solve_master(atom(1, 0), excited_state(), {0, 1}, 1e-3, {2.0}), InputError);
}

TEST(MasterChannel, MatchesSolver) {
    const auto model = atom(1, 2);
    const auto c = master_channel(model, 0.7);
    std::mt19937_64 rng(4);
    for (int trial = 0; trial < 5; ++trial) {
        const auto rho = random::density_matrix(2, rng);
        const auto out = solve_master(model, rho, {0, 0.7}, 1e-3, {0.7});
        EXPECT_LT(max_abs_diff(c.apply(rho.matrix()), out.back().rho.matrix()), 1e-8);
    }
}

TEST(AveragedStep, SecondOrderAgreementWithEulerStep) {
    const auto model = atom(1, 2);
    ComplexMatrix r(2, 2);
    r << 0.6, complex(0.2, 0.1), complex(0.2, -0.1), 0.4;
    const DensityMatrix rho(r);
    std::vector<double> dts{4e-3, 2e-3, 1e-3, 5e-4};
    std::vector<double> errs;
    for (double dt : dts) {
        const ComplexMatrix euler = rho.matrix() + dt * lindblad_rhs(model, rho.matrix());
        errs.push_back(max_abs(averaged_click_step(rho, model, dt) - euler));
    }
    EXPECT_NEAR(oracle::loglog_slope(dts, errs), 2.0, 0.2);
}

TEST(SimulateTrajectory, NoDecayMeansNoClicks) {
    const auto model = atom(0, 2);
    const auto ts = uniform_output_times({0, 1}, 4);
    const auto rec = simulate_trajectory(model, ground_state(), {0, 1}, 1e-3, 5, ts);
    EXPECT_TRUE(rec.click_times.empty());
    ASSERT_EQ(rec.samples.size(), 4u);
    for (const auto& s : rec.samples) {
        EXPECT_NEAR(s.rho.purity(), 1.0, 1e-12);
        // Rabi oscillation sin^2(Omega t / 2); the normalized first-order
        // step drifts by O(dt) per unit time.
        EXPECT_NEAR(excited_population(s.rho.matrix()), std::pow(std::sin(s.t), 2), 5e-3);
    }
}

TEST(SimulateTrajectory, SameSeedSameRecord) {
    const auto model = atom(1, 2);
    const auto ts = uniform_output_times({0, 5}, 10);
    const auto a = simulate_trajectory(model, ground_state(), {0, 5}, 1e-3, 42, ts);
    const auto b = simulate_trajectory(model, ground_state(), {0, 5}, 1e-3, 42, ts);
    EXPECT_EQ(a.click_times, b.click_times);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        EXPECT_EQ(max_abs_diff(a.samples[k].rho.matrix(), b.samples[k].rho.matrix()), 0.0);
    }
    EXPECT_FALSE(a.click_times.empty());
    for (std::size_t i = 0; i < a.click_times.size(); ++i) {
        EXPECT_GT(a.click_times[i], 0.0);
        EXPECT_LE(a.click_times[i], 5.0 + 1e-12);
        if (i > 0) EXPECT_GT(a.click_times[i], a.click_times[i - 1]);
    }
    const auto c = simulate_trajectory(model, ground_state(), {0, 5}, 1e-3, 43, ts);
    EXPECT_NE(a.click_times, c.click_times);
}

TEST(SimulateTrajectory, FirstClickIsExponential) {
    const auto model = atom(1, 0);
    std::vector<double> first;
    const std::size_t n = 2000;
    for (std::size_t i = 0; i < n; ++i) {
        const auto rec = simulate_trajectory(model, excited_state(), {0, 8}, 1e-3, 1000 + i, {});
        if (!rec.click_times.empty()) first.push_back(rec.click_times.front());
        EXPECT_LE(rec.click_times.size(), 1u);
    }
    // Fixed seeds; 1.36 / sqrt(2000) is the 95% KS critical value.
    EXPECT_LT(oracle::ks_distance_exp1(first, n), 0.0304);
}

TEST(SimulateTrajectory, OffGridTimesRejected) {
    EXPECT_THROW(simulate_trajectory(atom(1, 0), excited_state(), {0, 1}, 1e-3, 0, {0.00015}), InputError);
    EXPECT_THROW(simulate_trajectory(atom(1, 0), excited_state(), {0, 1.00025}, 1e-3, 0, {}), InputError);
    EXPECT_THROW(simulate_trajectory(atom(1, 0), excited_state(), {0, 1}, 0.2, 0, {}), StepTooLarge);
}

TEST(Ensemble, SingleTrajectoryIsItsOwnMean) {
    const auto model = atom(1, 2);
    const auto ts = uniform_output_times({0, 2}, 5);
    const auto ens = ensemble_average(model, ground_state(), {0, 2}, 1e-3, 1, 9, ts);
    const auto rec = simulate_trajectory(model, ground_state(), {0, 2}, 1e-3, 9, ts);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        EXPECT_LT(max_abs_diff(ens.mean_states[k].matrix(), rec.samples[k].rho.matrix()), 1e-15);
        EXPECT_EQ(ens.stderr_excited[k], 0.0);
    }
}

TEST(Ensemble, WorkerCountDoesNotChangeResult) {
    const auto model = atom(1, 2);
    const auto ts = uniform_output_times({0, 1}, 5);
    const auto a = ensemble_average(model, ground_state(), {0, 1}, 1e-3, 200, 3, ts, 1);
    const auto b = ensemble_average(model, ground_state(), {0, 1}, 1e-3, 200, 3, ts, 3);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        EXPECT_EQ(max_abs_diff(a.mean_states[k].matrix(), b.mean_states[k].matrix()), 0.0);
        EXPECT_EQ(a.stderr_excited[k], b.stderr_excited[k]);
    }
}

TEST(Ensemble, TracksMasterEquation) {
    const auto model = atom(1, 2);
    const TimeSpan span{0, 2};
    const auto ts = uniform_output_times(span, 10);
    const auto ens = ensemble_average(model, ground_state(), span, 1e-3, 2000, 11, ts);
    const auto master = solve_master(model, ground_state(), span, 1e-3, ts);
    for (std::size_t k = 0; k < ts.size(); ++k) {
        const double diff = excited_population(ens.mean_states[k].matrix()) - excited_population(master[k].rho.matrix());
        EXPECT_LE(std::abs(diff), 3.0 * ens.stderr_excited[k]) << "t = " << ts[k];
    }
}
