// channels.hpp
// Kraus maps, Choi matrices, complete-positivity tests, Kraus freedom,
// Stinespring dilations and the standard qubit channels.

#pragma once

#include <cmath>
#include <cstddef>
#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "quantum_objects.hpp"

namespace reflectq {

/// Conditioning on outcomes with probability below this floor is an error.
inline constexpr double kOutcomeFloor = 1e-12;

namespace detail {

inline ComplexMatrix effect_of(const std::vector<ComplexMatrix>& ops, Eigen::Index d) {
    ComplexMatrix e = ComplexMatrix::Zero(d, d);
    for (const auto& a : ops) e += a.adjoint() * a;
    return e;
}

inline ComplexMatrix conjugate_sum(const std::vector<ComplexMatrix>& ops, const ComplexMatrix& rho) {
    ComplexMatrix out = ComplexMatrix::Zero(rho.rows(), rho.cols());
    for (const auto& a : ops) out.noalias() += a * rho * a.adjoint();
    return out;
}

inline void require_square_ops(const std::vector<ComplexMatrix>& ops, Eigen::Index d,
                               const char* who) {
    for (const auto& a : ops) {
        if (a.rows() != d || a.cols() != d) {
            throw DimensionMismatch(std::string(who) + ": Kraus operator has wrong shape");
        }
    }
}

}  // namespace detail

/// Unconditional CPTP map in Kraus form, sum_j A_j^dag A_j = I.
class Channel {
public:
    Channel(std::size_t dim, std::vector<ComplexMatrix> ops, double tol = 1e-10)
        : dim_(dim), ops_(std::move(ops)) {
        const auto d = static_cast<Eigen::Index>(dim_);
        if (dim_ < 1) throw InvalidKrausMap("channel dimension must be >= 1");
        if (ops_.empty()) throw InvalidKrausMap("channel needs at least one Kraus operator");
        detail::require_square_ops(ops_, d, "Channel");
        if (max_abs(detail::effect_of(ops_, d) - identity(dim_)) > tol) {
            throw NotTracePreserving("Kraus operators do not satisfy sum A^dag A = I");
        }
    }

    static Channel identity_channel(std::size_t d) { return Channel(d, {identity(d)}); }

    std::size_t dim() const noexcept { return dim_; }
    const std::vector<ComplexMatrix>& kraus() const noexcept { return ops_; }

    /// sum_j A_j X A_j^dag for an arbitrary operator X.
    ComplexMatrix apply(const ComplexMatrix& x) const {
        if (x.rows() != static_cast<Eigen::Index>(dim_) || x.cols() != x.rows()) {
            throw DimensionMismatch("Channel::apply: operator has wrong shape");
        }
        return detail::conjugate_sum(ops_, x);
    }

private:
    std::size_t dim_;
    std::vector<ComplexMatrix> ops_;
};

/// Measurement model: outcome i carries Kraus operators A_ik, and the induced
/// effects E_i = sum_k A_ik^dag A_ik form a POVM.
class KrausMap {
public:
    KrausMap(std::size_t dim, std::vector<std::vector<ComplexMatrix>> outcomes, double tol = 1e-10)
        : dim_(dim), outcomes_(std::move(outcomes)) {
        const auto d = static_cast<Eigen::Index>(dim_);
        if (dim_ < 1) throw InvalidKrausMap("Kraus map dimension must be >= 1");
        if (outcomes_.empty()) throw InvalidKrausMap("Kraus map needs at least one outcome");
        ComplexMatrix total = ComplexMatrix::Zero(d, d);
        for (const auto& ops : outcomes_) {
            if (ops.empty()) throw InvalidKrausMap("every outcome needs at least one Kraus operator");
            detail::require_square_ops(ops, d, "KrausMap");
            const ComplexMatrix e = detail::effect_of(ops, d);
            try {
                static_cast<void>(Effect(e, tol));
            } catch (const InvalidEffect& err) {
                throw InvalidKrausMap(std::string("induced effect invalid: ") + err.what());
            }
            total += e;
        }
        if (max_abs(total - identity(dim_)) > tol) {
            throw InvalidKrausMap("induced effects do not sum to the identity");
        }
    }

    /// One outcome per operator, i.e. a fine-grained measurement.
    static KrausMap fine_grained(std::size_t dim, const std::vector<ComplexMatrix>& ops) {
        std::vector<std::vector<ComplexMatrix>> outcomes;
        outcomes.reserve(ops.size());
        for (const auto& a : ops) outcomes.push_back({a});
        return KrausMap(dim, std::move(outcomes));
    }

    /// Projective measurement in the computational basis.
    static KrausMap computational(std::size_t dim) {
        std::vector<ComplexMatrix> ops;
        for (std::size_t k = 0; k < dim; ++k) ops.push_back(basis_unit(dim, k, k));
        return fine_grained(dim, ops);
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t outcome_count() const noexcept { return outcomes_.size(); }
    const std::vector<std::vector<ComplexMatrix>>& outcomes() const noexcept { return outcomes_; }

    const std::vector<ComplexMatrix>& outcome(std::size_t i) const {
        if (i >= outcomes_.size()) throw InputError("outcome index out of range");
        return outcomes_[i];
    }

    /// Induced POVM, E_i = sum_k A_ik^dag A_ik.
    Povm effects() const {
        const auto d = static_cast<Eigen::Index>(dim_);
        std::vector<ComplexMatrix> es;
        es.reserve(outcomes_.size());
        for (const auto& ops : outcomes_) es.push_back(detail::effect_of(ops, d));
        return Povm::from_matrices(es);
    }

    /// Unnormalized outcome map Phi_i(X) = sum_k A_ik X A_ik^dag.
    ComplexMatrix apply_outcome(std::size_t i, const ComplexMatrix& x) const {
        if (x.rows() != static_cast<Eigen::Index>(dim_) || x.cols() != x.rows()) {
            throw DimensionMismatch("KrausMap::apply_outcome: operator has wrong shape");
        }
        return detail::conjugate_sum(outcome(i), x);
    }

    /// All outcomes merged into one unconditional channel.
    Channel merged() const {
        std::vector<ComplexMatrix> all;
        for (const auto& ops : outcomes_) all.insert(all.end(), ops.begin(), ops.end());
        return Channel(dim_, std::move(all));
    }

private:
    std::size_t dim_;
    std::vector<std::vector<ComplexMatrix>> outcomes_;
};

/// A linear map on d x d operators, given by its action. Used for maps that
/// need not be CP (e.g. the transpose).
struct LinearMap {
    std::size_t dim;
    std::function<ComplexMatrix(const ComplexMatrix&)> action;

    static LinearMap from_channel(const Channel& c) {
        return {c.dim(), [c](const ComplexMatrix& x) { return c.apply(x); }};
    }

    /// Map defined by explicit images of the basis units |k><l|, indexed k*d + l.
    static LinearMap from_images(std::size_t d, std::vector<ComplexMatrix> images) {
        const auto n = static_cast<Eigen::Index>(d);
        if (images.size() != d * d) throw DimensionMismatch("linear map needs d^2 basis images");
        for (const auto& m : images) {
            if (m.rows() != n || m.cols() != n) throw DimensionMismatch("basis image has wrong shape");
        }
        return {d, [d, imgs = std::move(images)](const ComplexMatrix& x) {
                    const auto n2 = static_cast<Eigen::Index>(d);
                    ComplexMatrix out = ComplexMatrix::Zero(n2, n2);
                    for (Eigen::Index k = 0; k < n2; ++k) {
                        for (Eigen::Index l = 0; l < n2; ++l) {
                            out += x(k, l) * imgs[static_cast<std::size_t>(k * n2 + l)];
                        }
                    }
                    return out;
                }};
    }
};

inline LinearMap transpose_map(std::size_t d) {
    return {d, [](const ComplexMatrix& x) { return ComplexMatrix(x.transpose()); }};
}

/// (I (x) Phi)(|Gamma><Gamma|) with the unnormalized |Gamma> = sum_k |k>|k>.
struct ChoiMatrix {
    std::size_t dim;
    ComplexMatrix matrix;
};

/// Choi matrix from the action on basis units: sum_kl |k><l| (x) Phi(|k><l|).
inline ChoiMatrix choi_matrix(const LinearMap& map) {
    const auto d = static_cast<Eigen::Index>(map.dim);
    ComplexMatrix c = ComplexMatrix::Zero(d * d, d * d);
    for (Eigen::Index k = 0; k < d; ++k) {
        for (Eigen::Index l = 0; l < d; ++l) {
            const ComplexMatrix img = map.action(basis_unit(map.dim, static_cast<std::size_t>(k),
                                                            static_cast<std::size_t>(l)));
            if (img.rows() != d || img.cols() != d) {
                throw DimensionMismatch("choi_matrix: map changes the dimension");
            }
            c.block(k * d, l * d, d, d) = img;
        }
    }
    return {map.dim, c};
}

/// Choi matrix of sum_j A_j . A_j^dag as sum_j |a_j><a_j| where
/// |a_j> = (I (x) A_j)|Gamma>.
inline ChoiMatrix choi_matrix(std::size_t dim, const std::vector<ComplexMatrix>& ops) {
    const auto d = static_cast<Eigen::Index>(dim);
    detail::require_square_ops(ops, d, "choi_matrix");
    ComplexMatrix c = ComplexMatrix::Zero(d * d, d * d);
    ComplexVector v(d * d);
    for (const auto& a : ops) {
        for (Eigen::Index k = 0; k < d; ++k) v.segment(k * d, d) = a.col(k);
        c.noalias() += v * v.adjoint();
    }
    return {dim, c};
}

inline ChoiMatrix choi_matrix(const Channel& c) { return choi_matrix(c.dim(), c.kraus()); }

inline ChoiMatrix choi_matrix(const KrausMap& k) { return choi_matrix(k.merged()); }

/// Choi matrix of the single-outcome map Phi_i.
inline ChoiMatrix choi_matrix(const KrausMap& k, std::size_t outcome) {
    return choi_matrix(k.dim(), k.outcome(outcome));
}

inline double choi_distance(const ChoiMatrix& a, const ChoiMatrix& b) {
    if (a.dim != b.dim) throw DimensionMismatch("choi_distance: dimensions differ");
    return max_abs_diff(a.matrix, b.matrix);
}

inline double choi_min_eigenvalue(const ChoiMatrix& c) { return min_eigenvalue(c.matrix); }

inline bool is_completely_positive(const LinearMap& map, double tol = kPsdTol) {
    return is_psd(choi_matrix(map).matrix, tol);
}

inline bool is_completely_positive(const Channel& c, double tol = kPsdTol) {
    return is_completely_positive(LinearMap::from_channel(c), tol);
}

/// Spectral Kraus form of a PSD, trace-preserving Choi matrix:
/// A_j[m, k] = sqrt(lambda_j) v_j[k*d + m].
inline Channel kraus_from_choi(const ChoiMatrix& choi, double tol = kPsdTol) {
    const auto d = static_cast<Eigen::Index>(choi.dim);
    if (choi.matrix.rows() != d * d || choi.matrix.cols() != d * d) {
        throw DimensionMismatch("kraus_from_choi: Choi matrix is not d^2 x d^2");
    }
    if (!is_hermitian(choi.matrix)) throw NotCP("kraus_from_choi: Choi matrix is not Hermitian");
    const Spectrum s = eig_hermitian(choi.matrix);
    const double scale = std::max(1.0, s.eigenvalues.cwiseAbs().maxCoeff());
    if (s.eigenvalues.minCoeff() < -tol * scale) {
        throw NotCP("kraus_from_choi: Choi matrix has eigenvalue " +
                    std::to_string(s.eigenvalues.minCoeff()));
    }
    const ComplexMatrix out_trace = partial_trace(choi.matrix, {choi.dim, choi.dim}, 0);
    if (max_abs(out_trace - identity(choi.dim)) > 1e-8) {
        throw NotTracePreserving("kraus_from_choi: Choi matrix is not trace-preserving");
    }
    std::vector<ComplexMatrix> ops;
    for (Eigen::Index j = 0; j < s.eigenvalues.size(); ++j) {
        const double lambda = s.eigenvalues(j);
        if (lambda <= 1e-14 * scale) continue;
        ComplexMatrix a(d, d);
        for (Eigen::Index k = 0; k < d; ++k) {
            a.col(k) = std::sqrt(lambda) * s.eigenvectors.col(j).segment(k * d, d);
        }
        ops.push_back(std::move(a));
    }
    return Channel(choi.dim, std::move(ops), 1e-8);
}

inline DensityMatrix apply_channel(const Channel& c, const DensityMatrix& rho) {
    if (c.dim() != rho.dim()) throw DimensionMismatch("apply_channel: dimensions differ");
    return DensityMatrix(c.apply(rho.matrix()));
}

/// Post-measurement state rho_i = Phi_i(rho) / p_i together with p_i.
inline std::pair<DensityMatrix, double> post_measurement_state(const DensityMatrix& rho,
                                                               const KrausMap& k,
                                                               std::size_t i) {
    if (rho.dim() != k.dim()) throw DimensionMismatch("post_measurement_state: dimensions differ");
    const ComplexMatrix unnorm = k.apply_outcome(i, rho.matrix());
    const double p = unnorm.trace().real();
    if (!(p > kOutcomeFloor)) {
        throw ZeroProbabilityOutcome("outcome " + std::to_string(i) + " has probability " +
                                     std::to_string(p));
    }
    return {DensityMatrix(unnorm / p), std::min(p, 1.0)};
}

/// p(j|i): probability of effect F after outcome i, computed by the direct
/// trace and by the Choi form tr[C_i (rho^T (x) F)]; both must agree.
inline double sequential_probability(const DensityMatrix& rho, const KrausMap& k, std::size_t i,
                                     const Effect& f) {
    if (rho.dim() != k.dim() || f.dim() != k.dim()) {
        throw DimensionMismatch("sequential_probability: dimensions differ");
    }
    const ComplexMatrix phi_rho = k.apply_outcome(i, rho.matrix());
    const double p_i = phi_rho.trace().real();
    if (!(p_i > kOutcomeFloor)) {
        throw ZeroProbabilityOutcome("outcome " + std::to_string(i) + " has probability " +
                                     std::to_string(p_i));
    }
    const double direct = (phi_rho * f.matrix()).trace().real() / p_i;
    const ChoiMatrix c = choi_matrix(k, i);
    const ComplexMatrix probe = tensor(rho.matrix().transpose(), f.matrix());
    const double via_choi = (c.matrix * probe).trace().real() / p_i;
    if (std::abs(direct - via_choi) > 1e-8) {
        throw InternalDisagreement("sequential_probability: direct " + std::to_string(direct) +
                                   " vs Choi " + std::to_string(via_choi));
    }
    return std::clamp(direct, 0.0, 1.0);
}

/// B_j = sum_i u_ji A_i for an isometry u (u^dag u = I).
inline Channel remix_kraus(const Channel& c, const ComplexMatrix& u) {
    const auto n = static_cast<Eigen::Index>(c.kraus().size());
    if (u.cols() != n || u.rows() < n) {
        throw NotIsometry("remix_kraus: isometry must be m x n with m >= n = Kraus count");
    }
    if (max_abs(u.adjoint() * u - ComplexMatrix::Identity(n, n)) > 1e-10) {
        throw NotIsometry("remix_kraus: u^dag u != I");
    }
    const auto d = static_cast<Eigen::Index>(c.dim());
    std::vector<ComplexMatrix> out;
    out.reserve(static_cast<std::size_t>(u.rows()));
    for (Eigen::Index j = 0; j < u.rows(); ++j) {
        ComplexMatrix b = ComplexMatrix::Zero(d, d);
        for (Eigen::Index i = 0; i < n; ++i) b += u(j, i) * c.kraus()[static_cast<std::size_t>(i)];
        out.push_back(std::move(b));
    }
    return Channel(c.dim(), std::move(out));
}

/// Sequential application: first `first`, then `second`. Kraus set {B_j A_i}.
inline Channel compose(const Channel& second, const Channel& first) {
    if (second.dim() != first.dim()) throw DimensionMismatch("compose: dimensions differ");
    std::vector<ComplexMatrix> ops;
    ops.reserve(second.kraus().size() * first.kraus().size());
    for (const auto& b : second.kraus()) {
        for (const auto& a : first.kraus()) ops.push_back(b * a);
    }
    return Channel(first.dim(), std::move(ops));
}

/// Unitary U on system (x) environment (system is the slow index) with a
/// fixed environment state; the channel is rho -> tr_env[U (rho (x) env) U^dag].
class StinespringDilation {
public:
    StinespringDilation(std::size_t dim, ComplexMatrix u, DensityMatrix env_state)
        : dim_(dim), u_(std::move(u)), env_(std::move(env_state)) {
        const auto n = static_cast<Eigen::Index>(dim_ * env_.dim());
        if (u_.rows() != n || u_.cols() != n) {
            throw DimensionMismatch("dilation unitary must be (d*env_dim) square");
        }
        if (max_abs(u_.adjoint() * u_ - ComplexMatrix::Identity(n, n)) > 1e-10) {
            throw NotUnitary("dilation operator is not unitary");
        }
    }

    std::size_t dim() const noexcept { return dim_; }
    std::size_t env_dim() const noexcept { return env_.dim(); }
    const ComplexMatrix& unitary() const noexcept { return u_; }
    const DensityMatrix& env_state() const noexcept { return env_; }

    ComplexMatrix apply(const ComplexMatrix& x) const {
        const ComplexMatrix joint = u_ * tensor(x, env_.matrix()) * u_.adjoint();
        return partial_trace(joint, {dim_, env_.dim()}, 0);
    }

private:
    std::size_t dim_;
    ComplexMatrix u_;
    DensityMatrix env_;
};

/// Dilation with env_dim = Kraus count and U(|psi> (x) |0>) = sum_j A_j|psi> (x) |j>;
/// the remaining columns are an arbitrary orthonormal completion.
inline StinespringDilation stinespring_dilate(const Channel& c) {
    const auto d = static_cast<Eigen::Index>(c.dim());
    const auto m = static_cast<Eigen::Index>(c.kraus().size());
    const Eigen::Index n = d * m;
    ComplexMatrix v = ComplexMatrix::Zero(n, d);
    for (Eigen::Index j = 0; j < m; ++j) {
        const auto& a = c.kraus()[static_cast<std::size_t>(j)];
        for (Eigen::Index i = 0; i < d; ++i) {
            for (Eigen::Index k = 0; k < d; ++k) v(i * m + j, k) = a(i, k);
        }
    }
    const ComplexMatrix rest = orthonormal_complement(v);
    ComplexMatrix u(n, n);
    Eigen::Index next = 0;
    for (Eigen::Index col = 0; col < n; ++col) {
        if (col % m == 0) {
            u.col(col) = v.col(col / m);
        } else {
            u.col(col) = rest.col(next++);
        }
    }
    return StinespringDilation(c.dim(), std::move(u),
                               DensityMatrix::basis(static_cast<std::size_t>(m), 0));
}

/// Channel rho -> tr_env[U (rho (x) env_state) U^dag], recovered through its
/// Choi matrix.
inline Channel channel_from_dilation(const ComplexMatrix& u, const DensityMatrix& env_state) {
    const auto e = static_cast<Eigen::Index>(env_state.dim());
    if (u.rows() != u.cols() || u.rows() % e != 0) {
        throw DimensionMismatch("channel_from_dilation: unitary size is not a multiple of env_dim");
    }
    const auto d = static_cast<std::size_t>(u.rows() / e);
    const StinespringDilation dil(d, u, env_state);
    const LinearMap map{d, [&dil](const ComplexMatrix& x) { return dil.apply(x); }};
    return kraus_from_choi(choi_matrix(map));
}

enum class StandardChannel { bit_flip, dephasing, depolarizing, amplitude_damping };

inline std::optional<StandardChannel> parse_standard_channel(std::string_view name) {
    if (name == "bit_flip") return StandardChannel::bit_flip;
    if (name == "dephasing") return StandardChannel::dephasing;
    if (name == "depolarizing") return StandardChannel::depolarizing;
    if (name == "amplitude_damping") return StandardChannel::amplitude_damping;
    return std::nullopt;
}

inline std::string_view to_string(StandardChannel kind) {
    switch (kind) {
        case StandardChannel::bit_flip: return "bit_flip";
        case StandardChannel::dephasing: return "dephasing";
        case StandardChannel::depolarizing: return "depolarizing";
        case StandardChannel::amplitude_damping: return "amplitude_damping";
    }
    return "unknown";
}

namespace pauli {

inline ComplexMatrix x() {
    ComplexMatrix m(2, 2);
    m << 0, 1, 1, 0;
    return m;
}

inline ComplexMatrix y() {
    ComplexMatrix m(2, 2);
    m << 0, complex(0, -1), complex(0, 1), 0;
    return m;
}

inline ComplexMatrix z() {
    ComplexMatrix m(2, 2);
    m << 1, 0, 0, -1;
    return m;
}

}  // namespace pauli

/// Qubit channels:
///   bit_flip(e)          {sqrt(1-e) I, sqrt(e) X}
///   dephasing(p)         {sqrt(1-p/2) I, sqrt(p/2) Z}; coherences scale by 1-p
///   depolarizing(p)      (1-p) rho + p I/2 via the four Pauli operators
///   amplitude_damping(g) {diag(1, sqrt(1-g)), sqrt(g)|0><1|}
inline Channel standard_channel(StandardChannel kind, double p) {
    if (!(p >= 0.0 && p <= 1.0)) {
        throw ParameterOutOfRange("channel parameter must lie in [0, 1]");
    }
    const ComplexMatrix i2 = identity(2);
    switch (kind) {
        case StandardChannel::bit_flip:
            return Channel(2, {std::sqrt(1.0 - p) * i2, std::sqrt(p) * pauli::x()});
        case StandardChannel::dephasing:
            return Channel(2, {std::sqrt(1.0 - p / 2.0) * i2, std::sqrt(p / 2.0) * pauli::z()});
        case StandardChannel::depolarizing: {
            const double w = std::sqrt(p / 4.0);
            return Channel(2, {std::sqrt(1.0 - 3.0 * p / 4.0) * i2, w * pauli::x(), w * pauli::y(),
                               w * pauli::z()});
        }
        case StandardChannel::amplitude_damping: {
            ComplexMatrix a0 = ComplexMatrix::Zero(2, 2);
            a0(0, 0) = 1.0;
            a0(1, 1) = std::sqrt(1.0 - p);
            ComplexMatrix a1 = ComplexMatrix::Zero(2, 2);
            a1(0, 1) = std::sqrt(p);
            return Channel(2, {a0, a1});
        }
    }
    throw InputError("unknown standard channel");
}

}  // namespace reflectq
