// matrix_core.hpp
// Dense complex linear algebra over small matrices: Kronecker products,
// partial traces, Hermitian spectra, positivity and entropy.
//
// Basis convention: computational basis, row-major, and in a tensor product
// the first factor is the slow index.

#pragma once

#include <algorithm>
#include <cmath>
#include <complex>
#include <cstddef>
#include <numbers>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "errors.hpp"

namespace reflectq {

using complex = std::complex<double>;
using ComplexMatrix = Eigen::MatrixXcd;
using ComplexVector = Eigen::VectorXcd;
using RealVector = Eigen::VectorXd;

inline constexpr double kHermitianTol = 1e-10;
inline constexpr double kPsdTol = 1e-10;

/// Largest entry magnitude, 0 for an empty matrix.
inline double max_abs(const ComplexMatrix& m) {
    return m.size() == 0 ? 0.0 : m.cwiseAbs().maxCoeff();
}

/// Largest entrywise distance between two equally shaped matrices.
inline double max_abs_diff(const ComplexMatrix& a, const ComplexMatrix& b) {
    if (a.rows() != b.rows() || a.cols() != b.cols()) {
        throw DimensionMismatch("max_abs_diff: shapes differ");
    }
    return max_abs(a - b);
}

/// max|M - M^dagger|; requires a square matrix.
inline double hermiticity_error(const ComplexMatrix& m) {
    if (m.rows() != m.cols()) {
        throw DimensionMismatch("hermiticity_error: matrix is not square");
    }
    return max_abs(m - m.adjoint());
}

inline bool is_hermitian(const ComplexMatrix& m, double tol = kHermitianTol) {
    return m.rows() == m.cols() &&
           hermiticity_error(m) <= tol * std::max(1.0, max_abs(m));
}

inline ComplexMatrix identity(std::size_t d) {
    return ComplexMatrix::Identity(static_cast<Eigen::Index>(d),
                                   static_cast<Eigen::Index>(d));
}

/// |k><l| in dimension d.
inline ComplexMatrix basis_unit(std::size_t d, std::size_t k, std::size_t l) {
    ComplexMatrix m = ComplexMatrix::Zero(static_cast<Eigen::Index>(d),
                                          static_cast<Eigen::Index>(d));
    m(static_cast<Eigen::Index>(k), static_cast<Eigen::Index>(l)) = 1.0;
    return m;
}

inline ComplexMatrix tensor(const ComplexMatrix& a, const ComplexMatrix& b) {
    ComplexMatrix out(a.rows() * b.rows(), a.cols() * b.cols());
    for (Eigen::Index i = 0; i < a.rows(); ++i) {
        for (Eigen::Index j = 0; j < a.cols(); ++j) {
            out.block(i * b.rows(), j * b.cols(), b.rows(), b.cols()) = a(i, j) * b;
        }
    }
    return out;
}

/// Reduced operator of a bipartite d1*d2 operator. keep = 0 traces out the
/// second factor, keep = 1 traces out the first.
inline ComplexMatrix partial_trace(const ComplexMatrix& m,
                                   std::pair<std::size_t, std::size_t> dims,
                                   int keep) {
    const auto d1 = static_cast<Eigen::Index>(dims.first);
    const auto d2 = static_cast<Eigen::Index>(dims.second);
    if (d1 < 1 || d2 < 1 || m.rows() != d1 * d2 || m.cols() != d1 * d2) {
        throw DimensionMismatch("partial_trace: matrix is not (d1*d2)x(d1*d2)");
    }
    if (keep == 0) {
        ComplexMatrix out = ComplexMatrix::Zero(d1, d1);
        for (Eigen::Index i = 0; i < d1; ++i) {
            for (Eigen::Index j = 0; j < d1; ++j) {
                out(i, j) = m.block(i * d2, j * d2, d2, d2).trace();
            }
        }
        return out;
    }
    if (keep == 1) {
        ComplexMatrix out = ComplexMatrix::Zero(d2, d2);
        for (Eigen::Index k = 0; k < d1; ++k) {
            out += m.block(k * d2, k * d2, d2, d2);
        }
        return out;
    }
    throw InputError("partial_trace: keep must be 0 or 1");
}

/// Eigen-decomposition of a Hermitian matrix. Eigenvalues are sorted in
/// descending order and eigenvectors are the matching orthonormal columns.
struct Spectrum {
    RealVector eigenvalues;
    ComplexMatrix eigenvectors;

    ComplexMatrix reconstruct() const {
        return eigenvectors * eigenvalues.cast<complex>().asDiagonal() *
               eigenvectors.adjoint();
    }
};

inline Spectrum eig_hermitian(const ComplexMatrix& m) {
    if (!is_hermitian(m)) {
        throw NotHermitian("eig_hermitian: input is not Hermitian");
    }
    // Symmetrize so the solver sees an exactly Hermitian matrix.
    const ComplexMatrix h = 0.5 * (m + m.adjoint());
    Eigen::SelfAdjointEigenSolver<ComplexMatrix> solver(h);
    const auto n = h.rows();
    Spectrum s{RealVector(n), ComplexMatrix(n, n)};
    // Eigen returns ascending order.
    for (Eigen::Index i = 0; i < n; ++i) {
        s.eigenvalues(i) = solver.eigenvalues()(n - 1 - i);
        s.eigenvectors.col(i) = solver.eigenvectors().col(n - 1 - i);
    }
    return s;
}

inline double min_eigenvalue(const ComplexMatrix& m) {
    const auto s = eig_hermitian(m);
    return s.eigenvalues.size() == 0 ? 0.0 : s.eigenvalues.minCoeff();
}

/// True iff the smallest eigenvalue is >= -tol * max(1, spectral radius).
inline bool is_psd(const ComplexMatrix& m, double tol = kPsdTol) {
    const auto s = eig_hermitian(m);
    if (s.eigenvalues.size() == 0) return true;
    const double scale = std::max(1.0, s.eigenvalues.cwiseAbs().maxCoeff());
    return s.eigenvalues.minCoeff() >= -tol * scale;
}

/// -sum lambda ln lambda over the spectrum, with 0 ln 0 = 0 (nats).
/// Eigenvalues within round-off of zero are treated as zero.
inline double entropy_of_spectrum(const RealVector& eigenvalues) {
    double s = 0.0;
    for (double lambda : eigenvalues) {
        if (lambda > 1e-300) s -= lambda * std::log(lambda);
    }
    return s;
}

inline double nats_to_bits(double nats) { return nats / std::numbers::ln2; }

/// Matrix of orthonormal columns completing the given orthonormal columns to
/// a full basis of the ambient space.
inline ComplexMatrix orthonormal_complement(const ComplexMatrix& columns) {
    const auto n = columns.rows();
    const auto k = columns.cols();
    if (k >= n) return ComplexMatrix(n, 0);
    Eigen::HouseholderQR<ComplexMatrix> qr(columns);
    const ComplexMatrix q = qr.householderQ() * ComplexMatrix::Identity(n, n);
    return q.rightCols(n - k);
}

}  // namespace reflectq
