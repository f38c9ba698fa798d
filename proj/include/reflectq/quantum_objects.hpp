// quantum_objects.hpp
// States, effects, POVMs, probability vectors and the Born-rule
// consistency check. Constructors validate; operations assume valid inputs.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <string>
#include <utility>
#include <vector>

#include "matrix_core.hpp"

namespace reflectq {

inline constexpr double kStateTol = 1e-10;

/// Hermitian, positive semi-definite, unit-trace d x d matrix.
class DensityMatrix {
public:
    explicit DensityMatrix(ComplexMatrix m, double tol = kStateTol) : m_(std::move(m)) {
        if (m_.rows() < 1 || m_.rows() != m_.cols()) {
            throw InvalidState("density matrix must be square and non-empty");
        }
        if (hermiticity_error(m_) > tol) {
            throw InvalidState("density matrix is not Hermitian");
        }
        const double tr = m_.trace().real();
        if (std::abs(tr - 1.0) > tol) {
            throw InvalidState("density matrix trace " + std::to_string(tr) + " != 1");
        }
        m_ = 0.5 * (m_ + m_.adjoint()).eval();
        if (!is_psd(m_, tol)) {
            throw InvalidState("density matrix is not positive semi-definite");
        }
    }

    /// Divides a nonzero PSD operator by its trace.
    static DensityMatrix normalized(const ComplexMatrix& m, double tol = kStateTol) {
        const double tr = m.trace().real();
        if (!(tr > 0.0)) throw InvalidState("cannot normalize an operator with trace <= 0");
        return DensityMatrix(m / tr, tol);
    }

    static DensityMatrix pure(const ComplexVector& psi) {
        const double n = psi.squaredNorm();
        if (!(n > 0.0)) throw InvalidState("zero state vector");
        return DensityMatrix(psi * psi.adjoint() / n);
    }

    static DensityMatrix basis(std::size_t d, std::size_t k) {
        if (k >= d) throw InvalidState("basis index out of range");
        return DensityMatrix(basis_unit(d, k, k));
    }

    static DensityMatrix maximally_mixed(std::size_t d) {
        return DensityMatrix(identity(d) / static_cast<double>(d));
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    const ComplexMatrix& matrix() const noexcept { return m_; }

    double purity() const { return (m_ * m_).trace().real(); }

private:
    ComplexMatrix m_;
};

/// 0 <= E <= I.
class Effect {
public:
    explicit Effect(ComplexMatrix m, double tol = kStateTol) : m_(std::move(m)) {
        if (m_.rows() < 1 || m_.rows() != m_.cols()) {
            throw InvalidEffect("effect must be square and non-empty");
        }
        if (hermiticity_error(m_) > tol) throw InvalidEffect("effect is not Hermitian");
        m_ = 0.5 * (m_ + m_.adjoint()).eval();
        if (!is_psd(m_, tol)) throw InvalidEffect("effect is not positive semi-definite");
        if (!is_psd(identity(dim()) - m_, tol)) throw InvalidEffect("I - E is not positive semi-definite");
    }

    std::size_t dim() const noexcept { return static_cast<std::size_t>(m_.rows()); }
    const ComplexMatrix& matrix() const noexcept { return m_; }

private:
    ComplexMatrix m_;
};

/// Ordered list of effects summing to the identity.
class Povm {
public:
    explicit Povm(std::vector<Effect> effects, double tol = kStateTol)
        : effects_(std::move(effects)) {
        if (effects_.empty()) throw InvalidPovm("POVM needs at least one effect");
        const auto d = effects_.front().dim();
        ComplexMatrix sum = ComplexMatrix::Zero(static_cast<Eigen::Index>(d),
                                                static_cast<Eigen::Index>(d));
        for (const auto& e : effects_) {
            if (e.dim() != d) throw InvalidPovm("POVM effects have different dimensions");
            sum += e.matrix();
        }
        if (max_abs(sum - identity(d)) > tol) {
            throw InvalidPovm("POVM effects do not sum to the identity");
        }
    }

    static Povm from_matrices(const std::vector<ComplexMatrix>& ms, double tol = kStateTol) {
        std::vector<Effect> es;
        es.reserve(ms.size());
        for (const auto& m : ms) es.emplace_back(m, tol);
        return Povm(std::move(es), tol);
    }

    std::size_t dim() const noexcept { return effects_.front().dim(); }
    std::size_t size() const noexcept { return effects_.size(); }
    const std::vector<Effect>& effects() const noexcept { return effects_; }
    const Effect& operator[](std::size_t i) const { return effects_.at(i); }

private:
    std::vector<Effect> effects_;
};

class ProbVector {
public:
    explicit ProbVector(std::vector<double> p) : p_(std::move(p)) {
        if (p_.empty()) throw InvalidProbVector("empty probability vector");
        double sum = 0.0;
        for (double x : p_) {
            if (!(x >= -1e-12 && x <= 1.0 + 1e-12)) {
                throw InvalidProbVector("probability outside [0, 1]");
            }
            sum += x;
        }
        if (std::abs(sum - 1.0) > 1e-10) {
            throw InvalidProbVector("probabilities do not sum to 1");
        }
    }

    std::size_t size() const noexcept { return p_.size(); }
    const std::vector<double>& values() const noexcept { return p_; }
    double operator[](std::size_t i) const { return p_.at(i); }

private:
    std::vector<double> p_;
};

/// tr(rho E), clamped to [0, 1].
inline double born_probability(const DensityMatrix& rho, const Effect& e) {
    if (rho.dim() != e.dim()) throw DimensionMismatch("born_probability: dimensions differ");
    const complex p = (rho.matrix() * e.matrix()).trace();
    return std::clamp(p.real(), 0.0, 1.0);
}

inline ProbVector born_probabilities(const DensityMatrix& rho, const Povm& povm) {
    std::vector<double> p;
    p.reserve(povm.size());
    for (const auto& e : povm.effects()) p.push_back(born_probability(rho, e));
    return ProbVector(std::move(p));
}

struct ConsistencyVerdict {
    bool consistent = true;
    /// p_i - tr(rho E_i) per outcome.
    std::vector<double> residuals;
    double max_residual = 0.0;
};

/// Treats (rho, POVM, p) as three independent judgments and flags whether
/// they satisfy the Born rule. No attempt is made to repair an inconsistency.
inline ConsistencyVerdict check_born_consistency(const DensityMatrix& rho, const Povm& povm,
                                                 const ProbVector& p, double tol = 1e-10) {
    if (rho.dim() != povm.dim()) throw DimensionMismatch("check_born_consistency: dimensions differ");
    if (p.size() != povm.size()) {
        throw DimensionMismatch("check_born_consistency: probability count != effect count");
    }
    ConsistencyVerdict v;
    v.residuals.reserve(p.size());
    for (std::size_t i = 0; i < p.size(); ++i) {
        const double r = p[i] - born_probability(rho, povm[i]);
        v.residuals.push_back(r);
        v.max_residual = std::max(v.max_residual, std::abs(r));
    }
    v.consistent = v.max_residual <= tol;
    return v;
}

/// Unnormalized sum_k |k>|k> as a d^2 x 1 column.
inline ComplexMatrix maximally_entangled(std::size_t d) {
    if (d < 1) throw InputError("maximally_entangled: d must be >= 1");
    const auto n = static_cast<Eigen::Index>(d);
    ComplexMatrix g = ComplexMatrix::Zero(n * n, 1);
    for (Eigen::Index k = 0; k < n; ++k) g(k * n + k, 0) = 1.0;
    return g;
}

inline double von_neumann_entropy(const DensityMatrix& rho) {
    return entropy_of_spectrum(eig_hermitian(rho.matrix()).eigenvalues);
}

}  // namespace reflectq
