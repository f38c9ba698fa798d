// random.hpp
// Random states, unitaries, isometries and POVMs for property tests and
// sampling. All generators take the engine by reference.

#pragma once

#include <cstddef>
#include <random>
#include <vector>

#include "channels.hpp"

namespace reflectq::random {

template <class Engine>
ComplexMatrix ginibre(Eigen::Index rows, Eigen::Index cols, Engine& rng) {
    std::normal_distribution<double> normal(0.0, 1.0);
    ComplexMatrix g(rows, cols);
    for (Eigen::Index j = 0; j < cols; ++j) {
        for (Eigen::Index i = 0; i < rows; ++i) {
            const double re = normal(rng);
            const double im = normal(rng);
            g(i, j) = complex(re, im);
        }
    }
    return g;
}

/// Haar-distributed isometry with the given shape (rows >= cols): QR of a
/// Ginibre matrix with the phases of R's diagonal absorbed into Q.
template <class Engine>
ComplexMatrix isometry(Eigen::Index rows, Eigen::Index cols, Engine& rng) {
    const ComplexMatrix g = ginibre(rows, cols, rng);
    Eigen::HouseholderQR<ComplexMatrix> qr(g);
    ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(rows, cols);
    const ComplexMatrix r = qr.matrixQR().topRows(cols).template triangularView<Eigen::Upper>();
    for (Eigen::Index k = 0; k < cols; ++k) {
        const double a = std::abs(r(k, k));
        if (a > 0.0) q.col(k) *= r(k, k) / a;
    }
    return q;
}

template <class Engine>
ComplexMatrix unitary(std::size_t d, Engine& rng) {
    const auto n = static_cast<Eigen::Index>(d);
    return isometry(n, n, rng);
}

/// Full-support random state rho = G G^dagger / tr(G G^dagger).
template <class Engine>
DensityMatrix density_matrix(std::size_t d, Engine& rng) {
    const auto n = static_cast<Eigen::Index>(d);
    const ComplexMatrix g = ginibre(n, n, rng);
    const ComplexMatrix w = g.adjoint() * g;
    return DensityMatrix(w / w.trace().real());
}

template <class Engine>
DensityMatrix pure_state(std::size_t d, Engine& rng) {
    return DensityMatrix::pure(ginibre(static_cast<Eigen::Index>(d), 1, rng).col(0));
}

template <class Engine>
ComplexMatrix hermitian(std::size_t d, Engine& rng) {
    const auto n = static_cast<Eigen::Index>(d);
    const ComplexMatrix g = ginibre(n, n, rng);
    return 0.5 * (g + g.adjoint());
}

/// POVM with n outcomes: a random isometry V: C^d -> C^(d*n) followed by the
/// projective measurement of the n-valued ancilla index, E_i = V^dag P_i V.
template <class Engine>
Povm povm(std::size_t d, std::size_t n_outcomes, Engine& rng) {
    const auto dd = static_cast<Eigen::Index>(d);
    const auto n = static_cast<Eigen::Index>(n_outcomes);
    const ComplexMatrix v = isometry(dd * n, dd, rng);
    std::vector<ComplexMatrix> effects;
    for (Eigen::Index i = 0; i < n; ++i) {
        const ComplexMatrix block = v.middleRows(i * dd, dd);
        effects.push_back(block.adjoint() * block);
    }
    return Povm::from_matrices(effects);
}

/// Blocks of a random isometry C^d -> C^(d*count), i.e. a random complete
/// set of Kraus operators sum A_j^dag A_j = I.
template <class Engine>
std::vector<ComplexMatrix> kraus_operators(std::size_t d, std::size_t count, Engine& rng) {
    const auto dd = static_cast<Eigen::Index>(d);
    const auto m = static_cast<Eigen::Index>(count);
    const ComplexMatrix v = isometry(dd * m, dd, rng);
    std::vector<ComplexMatrix> ops;
    ops.reserve(count);
    for (Eigen::Index j = 0; j < m; ++j) ops.push_back(v.middleRows(j * dd, dd));
    return ops;
}

/// Measurement model with the given outcome count, each outcome holding
/// ops_per_outcome Kraus operators taken from one random isometry.
template <class Engine>
KrausMap kraus_map(std::size_t d, std::size_t n_outcomes, std::size_t ops_per_outcome, Engine& rng) {
    auto ops = kraus_operators(d, n_outcomes * ops_per_outcome, rng);
    std::vector<std::vector<ComplexMatrix>> outcomes(n_outcomes);
    for (std::size_t i = 0; i < ops.size(); ++i) outcomes[i / ops_per_outcome].push_back(std::move(ops[i]));
    return KrausMap(d, std::move(outcomes));
}

template <class Engine>
Channel channel(std::size_t d, std::size_t n_ops, Engine& rng) {
    return Channel(d, kraus_operators(d, n_ops, rng));
}

}  // namespace reflectq::random
