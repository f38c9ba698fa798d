// trajectories.hpp
// Continuous measurement with a single jump operator: click / no-click
// Kraus steps, Monte-Carlo jump trajectories, the conditional no-click
// evolution and its survival probability, and the Lindblad master equation
// whose solution the trajectory ensemble must reproduce.
//
// hbar = 1. Time is in the same units as 1/Gamma.

#pragma once

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <exception>
#include <limits>
#include <random>
#include <string>
#include <thread>
#include <utility>
#include <vector>

#include "channels.hpp"

namespace reflectq {

/// dp * dt guard: a single step may not carry more click probability.
inline constexpr double kMaxStepClickProbability = 0.1;
inline constexpr double kClickRateFloor = 1e-12;

class LindbladModel {
public:
    LindbladModel(ComplexMatrix h, ComplexMatrix l) : h_(std::move(h)), l_(std::move(l)) {
        if (h_.rows() < 1 || h_.rows() != h_.cols() || l_.rows() != h_.rows() ||
            l_.cols() != h_.cols()) {
            throw DimensionMismatch("H and L must be square matrices of the same size");
        }
        if (hermiticity_error(h_) > 1e-10) throw NotHermitian("Hamiltonian is not Hermitian");
        ldl_ = l_.adjoint() * l_;
        // H_eff = H - (i/2) L^dag L drives the no-click evolution.
        h_eff_ = h_ - complex(0.0, 0.5) * ldl_;
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(h_.rows()); }
    const ComplexMatrix& hamiltonian() const noexcept { return h_; }
    const ComplexMatrix& jump() const noexcept { return l_; }
    const ComplexMatrix& jump_rate_operator() const noexcept { return ldl_; }
    const ComplexMatrix& effective_hamiltonian() const noexcept { return h_eff_; }

private:
    ComplexMatrix h_;
    ComplexMatrix l_;
    ComplexMatrix ldl_;
    ComplexMatrix h_eff_;
};

/// Resonantly driven two-level atom with |g> = |0>, |e> = |1>.
struct TwoLevelAtomParams {
    double gamma = 1.0;
    double omega = 0.0;
};

inline ComplexMatrix sigma_minus() {
    ComplexMatrix s = ComplexMatrix::Zero(2, 2);
    s(0, 1) = 1.0;
    return s;
}

inline ComplexMatrix sigma_plus() { return sigma_minus().adjoint(); }

/// L = sqrt(Gamma) sigma_-, H = -(Omega/2)(sigma_+ + sigma_-).
inline LindbladModel two_level_atom(const TwoLevelAtomParams& p) {
    if (!(p.gamma >= 0.0)) throw ParameterOutOfRange("decay rate gamma must be >= 0");
    return LindbladModel(-0.5 * p.omega * (sigma_plus() + sigma_minus()),
                         std::sqrt(p.gamma) * sigma_minus());
}

inline constexpr std::size_t kGround = 0;
inline constexpr std::size_t kExcited = 1;

inline DensityMatrix ground_state() { return DensityMatrix::basis(2, kGround); }
inline DensityMatrix excited_state() { return DensityMatrix::basis(2, kExcited); }

/// Population of |e> = |1>.
inline double excited_population(const ComplexMatrix& rho) {
    return rho(static_cast<Eigen::Index>(kExcited), static_cast<Eigen::Index>(kExcited)).real();
}

// ---------------------------------------------------------------------------
// Single steps

namespace detail {

/// tr(A B) without forming the product.
inline complex trace_of_product(const ComplexMatrix& a, const ComplexMatrix& b) {
    return a.cwiseProduct(b.transpose()).sum();
}

inline double click_probability_raw(const ComplexMatrix& rho, const ComplexMatrix& ldl, double dt,
                                    double t) {
    if (!(dt > 0.0)) throw InputError("time step must be positive");
    const double dp = std::max(0.0, trace_of_product(ldl, rho).real() * dt);
    if (dp > kMaxStepClickProbability) {
        throw StepTooLarge("click probability " + std::to_string(dp) + " at t = " + std::to_string(t) +
                               " exceeds the step guard; reduce dt",
                           t, dp);
    }
    return std::min(dp, 1.0);
}

}  // namespace detail

/// dp = tr(L^dag L rho) dt.
inline double click_probability(const DensityMatrix& rho, const ComplexMatrix& l, double dt) {
    if (l.rows() != static_cast<Eigen::Index>(rho.dim()) || l.cols() != l.rows()) {
        throw DimensionMismatch("click_probability: jump operator has wrong shape");
    }
    return detail::click_probability_raw(rho.matrix(), l.adjoint() * l, dt,
                                         std::numeric_limits<double>::quiet_NaN());
}

/// Post-click state L rho L^dag / tr(L^dag L rho).
inline DensityMatrix jump_update(const DensityMatrix& rho, const ComplexMatrix& l) {
    if (l.rows() != static_cast<Eigen::Index>(rho.dim()) || l.cols() != l.rows()) {
        throw DimensionMismatch("jump_update: jump operator has wrong shape");
    }
    const ComplexMatrix out = l * rho.matrix() * l.adjoint();
    const double rate = out.trace().real();
    if (!(rate > kClickRateFloor)) {
        throw DarkStateJump("click conditioned on a state with zero click probability");
    }
    return DensityMatrix(out / rate);
}

inline ComplexMatrix no_click_kraus(const LindbladModel& m, double dt) {
    return identity(m.dim()) - complex(0.0, dt) * m.effective_hamiltonian();
}

struct NoClickResult {
    ComplexMatrix state;
    /// tr(M0 rho M0^dag) when normalized, 1 otherwise.
    double weight;
};

/// M0 rho M0^dag with M0 = I - (1/2) L^dag L dt - i H dt. The unnormalized
/// result is the linear conditional evolution whose trace is the survival
/// probability; the normalized one is the conditional state.
inline NoClickResult no_click_step(const ComplexMatrix& rho, const LindbladModel& model, double dt,
                                   bool normalized) {
    if (rho.rows() != static_cast<Eigen::Index>(model.dim()) || rho.cols() != rho.rows()) {
        throw DimensionMismatch("no_click_step: state has wrong shape");
    }
    detail::click_probability_raw(rho, model.jump_rate_operator(), dt,
                                  std::numeric_limits<double>::quiet_NaN());
    const ComplexMatrix m0 = no_click_kraus(model, dt);
    ComplexMatrix out = m0 * rho * m0.adjoint();
    if (!normalized) return {std::move(out), 1.0};
    const double w = out.trace().real();
    return {out / w, w};
}

/// dp * (post-click state) + (1 - dp) * (normalized no-click state): the
/// reflected state one infinitesimal step ahead.
inline ComplexMatrix averaged_click_step(const DensityMatrix& rho, const LindbladModel& model,
                                         double dt) {
    const double dp = click_probability(rho, model.jump(), dt);
    const auto nc = no_click_step(rho.matrix(), model, dt, true);
    ComplexMatrix out = (1.0 - dp) * nc.state;
    if (dp > kClickRateFloor * dt) out += dp * jump_update(rho, model.jump()).matrix();
    return out;
}

/// -i[H, rho] - (1/2){L^dag L, rho} + L rho L^dag
inline ComplexMatrix lindblad_rhs(const LindbladModel& m, const ComplexMatrix& rho) {
    const ComplexMatrix& k = m.effective_hamiltonian();
    const complex i(0.0, 1.0);
    return -i * (k * rho - rho * k.adjoint()) + m.jump() * rho * m.jump().adjoint();
}

/// -i[H, rho] - (1/2){L^dag L, rho}: the unnormalized no-click evolution.
inline ComplexMatrix no_click_rhs(const LindbladModel& m, const ComplexMatrix& rho) {
    const ComplexMatrix& k = m.effective_hamiltonian();
    const complex i(0.0, 1.0);
    return -i * (k * rho - rho * k.adjoint());
}

// ---------------------------------------------------------------------------
// Deterministic integration

namespace detail {

template <class Rhs>
void rk4_step(ComplexMatrix& rho, double h, const Rhs& rhs) {
    const ComplexMatrix k1 = rhs(rho);
    const ComplexMatrix k2 = rhs(rho + 0.5 * h * k1);
    const ComplexMatrix k3 = rhs(rho + 0.5 * h * k2);
    const ComplexMatrix k4 = rhs(rho + h * k3);
    rho += (h / 6.0) * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
}

inline std::size_t steps_for(double span, double dt) {
    if (!(dt > 0.0)) throw InputError("time step must be positive");
    if (!(span >= 0.0)) throw InputError("time span must be nondecreasing");
    return static_cast<std::size_t>(std::ceil(span / dt - 1e-9));
}

/// Integrates over `span` with the largest step <= dt that divides it.
template <class Rhs>
void integrate(ComplexMatrix& rho, double span, double dt, const Rhs& rhs, bool hermitian) {
    const std::size_t n = steps_for(span, dt);
    if (n == 0) return;
    const double h = span / static_cast<double>(n);
    for (std::size_t s = 0; s < n; ++s) {
        rk4_step(rho, h, rhs);
        if (hermitian) rho = (0.5 * (rho + rho.adjoint())).eval();
    }
}

}  // namespace detail

struct TimeSpan {
    double start = 0.0;
    double end = 1.0;
};

/// Probability of no click during the span: trace of the unnormalized
/// conditional state, which equals 1 - integral of tr(L^dag L rho) dt.
inline double no_click_probability(const LindbladModel& model, const DensityMatrix& rho0,
                                   TimeSpan span, double dt = 1e-3) {
    if (rho0.dim() != model.dim()) throw DimensionMismatch("no_click_probability: dimensions differ");
    ComplexMatrix rho = rho0.matrix();
    detail::integrate(rho, span.end - span.start, dt,
                      [&model](const ComplexMatrix& r) { return no_click_rhs(model, r); }, true);
    return std::clamp(rho.trace().real(), 0.0, 1.0);
}

struct TimeSample {
    double t;
    DensityMatrix rho;
};

/// n evenly spaced times start + k (end - start) / n for k = 1..n.
inline std::vector<double> uniform_output_times(TimeSpan span, std::size_t n) {
    std::vector<double> ts;
    ts.reserve(n);
    for (std::size_t k = 1; k <= n; ++k) {
        ts.push_back(span.start + (span.end - span.start) * static_cast<double>(k) / static_cast<double>(n));
    }
    return ts;
}

/// Fixed-step RK4 for d rho/dt = -i[H, rho] - (1/2){L^dag L, rho} + L rho L^dag,
/// re-symmetrized each step. Output times must be sorted and inside the span.
inline std::vector<TimeSample> solve_master(const LindbladModel& model, const DensityMatrix& rho0,
                                            TimeSpan span, double dt,
                                            const std::vector<double>& output_times) {
    if (rho0.dim() != model.dim()) throw DimensionMismatch("solve_master: dimensions differ");
    if (!(dt > 0.0)) throw InputError("time step must be positive");
    auto rhs = [&model](const ComplexMatrix& r) { return lindblad_rhs(model, r); };
    std::vector<TimeSample> out;
    out.reserve(output_times.size());
    ComplexMatrix rho = rho0.matrix();
    double t = span.start;
    for (double target : output_times) {
        if (target < t - 1e-12 || target > span.end + 1e-12) {
            throw InputError("output times must be sorted and lie inside the time span");
        }
        detail::integrate(rho, std::max(0.0, target - t), dt, rhs, true);
        t = std::max(t, target);
        out.push_back({target, DensityMatrix(rho, 1e-8)});
    }
    return out;
}

/// Channel of the master-equation flow over duration tau, assembled from the
/// RK4-propagated basis units.
inline Channel master_channel(const LindbladModel& model, double tau, double dt = 1e-3) {
    const LinearMap flow{model.dim(), [&](const ComplexMatrix& x) {
                             ComplexMatrix r = x;
                             detail::integrate(r, tau, dt,
                                               [&model](const ComplexMatrix& y) { return lindblad_rhs(model, y); },
                                               false);
                             return r;
                         }};
    return kraus_from_choi(choi_matrix(flow));
}

// ---------------------------------------------------------------------------
// Jump trajectories

/// Seeded per-trajectory stream: mt19937_64 keyed by splitmix64(seed), with
/// uniform doubles from the top 53 bits so draws are platform independent.
class TrajectoryRng {
public:
    explicit TrajectoryRng(std::uint64_t seed) : engine_(splitmix64(seed)) {}

    double uniform() { return static_cast<double>(engine_() >> 11) * 0x1.0p-53; }

    static std::uint64_t splitmix64(std::uint64_t x) {
        x += 0x9e3779b97f4a7c15ULL;
        x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
        x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
        return x ^ (x >> 31);
    }

private:
    std::mt19937_64 engine_;
};

struct TrajectoryRecord {
    std::vector<double> click_times;
    std::vector<TimeSample> samples;
    std::uint64_t seed = 0;
    double dt = 0.0;
};

namespace detail {

/// Step grid t_n = start + n dt. Output times must land on it.
struct StepGrid {
    double start;
    double dt;
    std::size_t steps;
    std::vector<std::size_t> output_steps;

    StepGrid(TimeSpan span, double step, const std::vector<double>& outputs) : start(span.start), dt(step) {
        if (!(dt > 0.0)) throw InputError("time step must be positive");
        const double n = (span.end - span.start) / dt;
        if (!(n >= 0.0) || std::abs(n - std::round(n)) > 1e-6) {
            throw InputError("time span must be a whole number of steps");
        }
        steps = static_cast<std::size_t>(std::llround(n));
        std::size_t prev = 0;
        for (double t : outputs) {
            const double k = (t - span.start) / dt;
            if (std::abs(k - std::round(k)) > 1e-6 || k < -1e-6 ||
                static_cast<std::size_t>(std::llround(k)) > steps) {
                throw InputError("output time " + std::to_string(t) + " is not on the step grid");
            }
            const auto idx = static_cast<std::size_t>(std::llround(k));
            if (idx < prev) throw InputError("output times must be sorted");
            prev = idx;
            output_steps.push_back(idx);
        }
    }
};

struct RawTrajectory {
    std::vector<double> click_times;
    std::vector<ComplexMatrix> samples;
};

/// Per step: click with probability dp (then jump), else the normalized
/// no-click update. Allocation-free inner loop.
inline RawTrajectory run_trajectory(const LindbladModel& model, const ComplexMatrix& rho0,
                                    const StepGrid& grid, std::uint64_t seed) {
    TrajectoryRng rng(seed);
    const ComplexMatrix m0 = no_click_kraus(model, grid.dt);
    const ComplexMatrix m0_dag = m0.adjoint();
    const ComplexMatrix& l = model.jump();
    const ComplexMatrix l_dag = l.adjoint();
    const ComplexMatrix& ldl = model.jump_rate_operator();

    RawTrajectory out;
    out.samples.reserve(grid.output_steps.size());
    ComplexMatrix rho = rho0;
    ComplexMatrix tmp(rho.rows(), rho.cols());
    std::size_t next_out = 0;
    auto record = [&](std::size_t step) {
        while (next_out < grid.output_steps.size() && grid.output_steps[next_out] == step) {
            out.samples.push_back(0.5 * (rho + rho.adjoint()));
            ++next_out;
        }
    };
    record(0);
    for (std::size_t n = 0; n < grid.steps; ++n) {
        const double t = grid.start + static_cast<double>(n) * grid.dt;
        const double dp = click_probability_raw(rho, ldl, grid.dt, t);
        const double u = rng.uniform();
        if (u < dp && dp > kClickRateFloor * grid.dt) {
            tmp.noalias() = l * rho;
            rho.noalias() = tmp * l_dag;
            out.click_times.push_back(t + grid.dt);
        } else {
            tmp.noalias() = m0 * rho;
            rho.noalias() = tmp * m0_dag;
        }
        rho /= rho.trace().real();
        record(n + 1);
    }
    return out;
}

}  // namespace detail

/// One jump trajectory. Deterministic for fixed (seed, dt).
inline TrajectoryRecord simulate_trajectory(const LindbladModel& model, const DensityMatrix& rho0,
                                            TimeSpan span, double dt, std::uint64_t seed,
                                            const std::vector<double>& output_times) {
    if (rho0.dim() != model.dim()) throw DimensionMismatch("simulate_trajectory: dimensions differ");
    const detail::StepGrid grid(span, dt, output_times);
    auto raw = detail::run_trajectory(model, rho0.matrix(), grid, seed);
    TrajectoryRecord rec;
    rec.click_times = std::move(raw.click_times);
    rec.seed = seed;
    rec.dt = dt;
    for (std::size_t k = 0; k < raw.samples.size(); ++k) {
        rec.samples.push_back({output_times[k], DensityMatrix(raw.samples[k], 1e-8)});
    }
    return rec;
}

struct EnsembleSummary {
    std::vector<double> times;
    std::vector<DensityMatrix> mean_states;
    /// Standard error of the mean excited population at each time.
    std::vector<double> stderr_excited;
    std::size_t n_traj = 0;
};

/// Mean over n_traj trajectories with seeds seed + index. Trajectories may
/// run on several workers; sums are always taken in index order, so the
/// result does not depend on the worker count.
inline EnsembleSummary ensemble_average(const LindbladModel& model, const DensityMatrix& rho0,
                                        TimeSpan span, double dt, std::size_t n_traj,
                                        std::uint64_t seed, const std::vector<double>& output_times,
                                        unsigned workers = 1) {
    if (n_traj < 1) throw InputError("ensemble needs at least one trajectory");
    if (rho0.dim() != model.dim()) throw DimensionMismatch("ensemble_average: dimensions differ");
    if (model.dim() < 2) throw DimensionMismatch("ensemble_average: needs at least two levels");
    const detail::StepGrid grid(span, dt, output_times);
    std::vector<std::vector<ComplexMatrix>> per_traj(n_traj);

    std::atomic<std::size_t> next{0};
    std::exception_ptr failure;
    std::atomic<bool> failed{false};
    auto work = [&]() {
        for (std::size_t i = next.fetch_add(1); i < n_traj && !failed; i = next.fetch_add(1)) {
            try {
                per_traj[i] = detail::run_trajectory(model, rho0.matrix(), grid, seed + i).samples;
            } catch (...) {
                if (!failed.exchange(true)) failure = std::current_exception();
            }
        }
    };
    workers = std::max(1u, workers);
    if (workers == 1) {
        work();
    } else {
        std::vector<std::thread> pool;
        for (unsigned w = 0; w < workers; ++w) pool.emplace_back(work);
        for (auto& th : pool) th.join();
    }
    if (failure) std::rethrow_exception(failure);

    EnsembleSummary s;
    s.times = output_times;
    s.n_traj = n_traj;
    const auto d = static_cast<Eigen::Index>(model.dim());
    const double n = static_cast<double>(n_traj);
    for (std::size_t k = 0; k < output_times.size(); ++k) {
        ComplexMatrix sum = ComplexMatrix::Zero(d, d);
        for (std::size_t i = 0; i < n_traj; ++i) sum += per_traj[i][k];
        const ComplexMatrix mean = sum / n;
        const double mean_ee = excited_population(mean);
        double ss = 0.0;
        for (std::size_t i = 0; i < n_traj; ++i) {
            const double dev = excited_population(per_traj[i][k]) - mean_ee;
            ss += dev * dev;
        }
        s.stderr_excited.push_back(n_traj > 1 ? std::sqrt(ss / (n - 1.0) / n) : 0.0);
        s.mean_states.push_back(DensityMatrix::normalized(mean, 1e-8));
    }
    return s;
}

}  // namespace reflectq
