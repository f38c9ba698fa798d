// dynamics.hpp
// Quantum dynamics from irrelevance judgments: if an agent deems a
// contemplated intermediate measurement irrelevant to her present gambles on
// later outcomes, for every prior state, her later state is fixed by the CPTP
// map sum_j A_j . A_j^dag.

#pragma once

#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "reflection.hpp"

namespace reflectq {

struct IrrelevanceJudgment {
    KrausMap measurement;
    /// The judgment is held for every rho_{1|0}.
    bool state_independent = true;
};

struct DynamicsAssignment {
    Channel map;
    IrrelevanceJudgment provenance;
};

/// rho_{beta|alpha}: state assigned at time alpha for time beta. Labels are
/// opaque and only their ordering carries meaning.
struct IndexedState {
    DensityMatrix rho;
    std::string assessed_at;
    std::string concerns;
};

inline DynamicsAssignment dynamics_from_judgment(const IrrelevanceJudgment& j) {
    if (!j.state_independent) {
        throw StateDependentJudgment(
            "a single dynamics map needs an irrelevance judgment that holds for every prior state");
    }
    return {j.measurement.merged(), j};
}

/// True iff rho_{2|0} coincides (max entry) with the state reflected from
/// rho_{1|0} through the judged measurement.
inline bool check_irrelevance(const IndexedState& rho_2_0, const IrrelevanceJudgment& j,
                              const DensityMatrix& rho_1_0, double tol = 1e-10) {
    if (rho_2_0.rho.dim() != j.measurement.dim() || rho_1_0.dim() != j.measurement.dim()) {
        throw DimensionMismatch("check_irrelevance: dimensions differ");
    }
    const DensityMatrix reflected = reflected_state(ReflectionScenario(rho_1_0, j.measurement));
    return max_abs_diff(reflected.matrix(), rho_2_0.rho.matrix()) <= tol;
}

/// The closed-system case with a one-element Kraus decomposition of {I}.
inline Channel closed_system_unitary(const ComplexMatrix& a) {
    if (a.rows() != a.cols() || a.rows() < 1) throw NotUnitary("operator must be square");
    if (max_abs(a.adjoint() * a - ComplexMatrix::Identity(a.rows(), a.cols())) > 1e-10) {
        throw NotUnitary("a single-element Kraus decomposition of I must be unitary");
    }
    return Channel(static_cast<std::size_t>(a.rows()), {a});
}

struct ClosedSystemChannel {
    Channel map;
    /// Pure inputs stay pure; equivalent to a rank-1 Choi matrix.
    bool purity_preserving = false;
};

/// Closed-system dynamics from any Kraus decomposition I = sum_k A_k^dag A_k.
inline ClosedSystemChannel kraus_decompositions_of_identity(const std::vector<ComplexMatrix>& ops) {
    if (ops.empty() || ops.front().rows() != ops.front().cols()) {
        throw NotIdentityDecomposition("need at least one square operator");
    }
    const auto d = static_cast<std::size_t>(ops.front().rows());
    try {
        Channel c(d, ops);
        const Spectrum s = eig_hermitian(choi_matrix(c).matrix);
        const double scale = std::max(1.0, s.eigenvalues(0));
        int rank = 0;
        for (double lambda : s.eigenvalues) rank += lambda > 1e-10 * scale ? 1 : 0;
        return {std::move(c), rank == 1};
    } catch (const NotTracePreserving&) {
        throw NotIdentityDecomposition("operators do not satisfy sum A^dag A = I");
    } catch (const DimensionMismatch&) {
        throw NotIdentityDecomposition("operators have mismatched shapes");
    }
}

inline DensityMatrix evolve(const DensityMatrix& rho0, const DynamicsAssignment& d, std::size_t steps) {
    if (rho0.dim() != d.map.dim()) throw DimensionMismatch("evolve: dimensions differ");
    ComplexMatrix rho = rho0.matrix();
    for (std::size_t n = 0; n < steps; ++n) rho = d.map.apply(rho);
    return DensityMatrix(rho);
}

struct FixedPointOptions {
    double tol = 1e-10;
    std::size_t max_iter = 100000;
};

/// Damped iteration rho <- (Phi(rho) + rho) / 2 from I/d until
/// max|Phi(rho) - rho| <= tol.
inline DensityMatrix fixed_point(const Channel& map, FixedPointOptions opts = {}) {
    ComplexMatrix rho = identity(map.dim()) / static_cast<double>(map.dim());
    for (std::size_t it = 0; it <= opts.max_iter; ++it) {
        const ComplexMatrix next = map.apply(rho);
        if (max_abs(next - rho) <= opts.tol) return DensityMatrix(rho, 1e-8);
        rho = 0.5 * (next + rho);
    }
    throw NotConverged("fixed_point: no convergence after " + std::to_string(opts.max_iter) +
                       " iterations");
}

inline DensityMatrix fixed_point(const DynamicsAssignment& d, FixedPointOptions opts = {}) {
    return fixed_point(d.map, opts);
}

}  // namespace reflectq
