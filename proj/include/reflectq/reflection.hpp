// reflection.hpp
// Classical reflection audits with explicit Dutch-book witnesses, and the
// quantum reflected state built from a contemplated measurement.

#pragma once

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <limits>
#include <optional>
#include <sstream>
#include <string>
#include <vector>

#include "channels.hpp"

namespace reflectq {

// ---------------------------------------------------------------------------
// Classical reflection

struct Anticipation {
    double q;  ///< a price the agent may hold for E at t_tau
    double w;  ///< P_0(P_tau(E) = q)
};

/// Current price P_0(E) plus the agent's distribution over her future price.
class PriceBook {
public:
    PriceBook(double p0, std::vector<Anticipation> anticipations)
        : p0_(p0), ant_(std::move(anticipations)) {
        auto in_unit = [](double x) { return x >= 0.0 && x <= 1.0; };
        if (!in_unit(p0_)) throw InvalidBook("p0 must lie in [0, 1]");
        if (ant_.empty()) throw InvalidBook("a price book needs at least one anticipation");
        double total = 0.0;
        for (std::size_t i = 0; i < ant_.size(); ++i) {
            if (!in_unit(ant_[i].q)) throw InvalidBook("anticipated price q must lie in [0, 1]");
            if (!in_unit(ant_[i].w)) throw InvalidBook("anticipation weight must lie in [0, 1]");
            for (std::size_t j = 0; j < i; ++j) {
                if (ant_[j].q == ant_[i].q) throw InvalidBook("anticipated prices must be distinct");
            }
            total += ant_[i].w;
        }
        if (std::abs(total - 1.0) > 1e-10) throw InvalidBook("anticipation weights must sum to 1");
    }

    double p0() const noexcept { return p0_; }
    const std::vector<Anticipation>& anticipations() const noexcept { return ant_; }

    /// sum_q P_0(P_tau(E) = q) q
    double expected_future_price() const {
        double m = 0.0;
        for (const auto& a : ant_) m += a.w * a.q;
        return m;
    }

private:
    double p0_;
    std::vector<Anticipation> ant_;
};

enum class TradeTime { t0, t_tau };
enum class Side { buy, sell };

inline const char* to_string(TradeTime t) { return t == TradeTime::t0 ? "t0" : "t_tau"; }
inline const char* to_string(Side s) { return s == Side::buy ? "buy" : "sell"; }

/// Event labels: "E" is the target event; "Q<k>" is the proposition that the
/// agent's price for E at t_tau will be the k-th anticipated value.
inline std::string anticipation_label(std::size_t k) { return "Q" + std::to_string(k); }

/// A ticket trade seen from the agent's side. A ticket on `event` pays 1 if
/// the event occurs. Trades with `conditional_on` only happen in that branch.
struct Transaction {
    TradeTime time;
    Side side;
    std::string event;
    double price;
    double stake;
    std::optional<std::string> conditional_on;
};

struct DutchBook {
    std::vector<Transaction> transactions;
    double guaranteed_loss = 0.0;
    std::size_t anticipation_count = 0;
};

/// Agent's net payoff in the branch where Q_branch holds and E has the
/// given truth value.
inline double payoff(const DutchBook& book, std::size_t branch, bool e_true) {
    const std::string active = anticipation_label(branch);
    double total = 0.0;
    for (const auto& t : book.transactions) {
        if (t.conditional_on && *t.conditional_on != active) continue;
        const bool pays = t.event == "E" ? e_true : t.event == active;
        const double value = t.stake * ((pays ? 1.0 : 0.0) - t.price);
        total += t.side == Side::buy ? value : -value;
    }
    return total;
}

/// Largest payoff over every (anticipation, truth of E) branch.
inline double worst_case_payoff(const DutchBook& book) {
    double best = -std::numeric_limits<double>::infinity();
    for (std::size_t k = 0; k < book.anticipation_count; ++k) {
        for (bool e : {false, true}) best = std::max(best, payoff(book, k, e));
    }
    return best;
}

inline std::string render_table(const DutchBook& book) {
    std::ostringstream os;
    char line[160];
    std::snprintf(line, sizeof line, "%-6s %-5s %-6s %10s %10s  %s\n", "time", "side", "event",
                  "price", "stake", "condition");
    os << line;
    for (const auto& t : book.transactions) {
        std::snprintf(line, sizeof line, "%-6s %-5s %-6s %10.6f %10.6f  %s\n", to_string(t.time),
                      to_string(t.side), t.event.c_str(), t.price, t.stake,
                      t.conditional_on ? t.conditional_on->c_str() : "-");
        os << line;
    }
    std::snprintf(line, sizeof line, "guaranteed loss: %.6f\n", book.guaranteed_loss);
    os << line;
    return os.str();
}

struct ClassicalVerdict {
    bool coherent = true;
    /// p0 - sum_q w q
    double discrepancy = 0.0;
    std::optional<DutchBook> book;
};

/// Audits P_0(E) = sum_q P_0(P_tau(E)=q) q. On failure the returned book has
/// the agent trade E at p0 now, trade it back at q_k once Q_k holds, and
/// hedge with stake (q_k - m) tickets on each Q_k at price w_k, so that every
/// branch loses exactly |p0 - m|.
inline ClassicalVerdict check_classical_reflection(const PriceBook& book, double tol = 1e-10) {
    const double m = book.expected_future_price();
    ClassicalVerdict v;
    v.discrepancy = book.p0() - m;
    if (std::abs(v.discrepancy) <= tol) return v;

    v.coherent = false;
    // Agent buys E now when p0 is above the anticipated mean, sells otherwise.
    const bool buy_now = v.discrepancy > 0.0;
    const auto& ant = book.anticipations();
    DutchBook db;
    db.anticipation_count = ant.size();
    db.transactions.push_back({TradeTime::t0, buy_now ? Side::buy : Side::sell, "E", book.p0(), 1.0,
                               std::nullopt});
    for (std::size_t k = 0; k < ant.size(); ++k) {
        db.transactions.push_back({TradeTime::t_tau, buy_now ? Side::sell : Side::buy, "E", ant[k].q,
                                   1.0, anticipation_label(k)});
    }
    for (std::size_t k = 0; k < ant.size(); ++k) {
        const double stake = buy_now ? m - ant[k].q : ant[k].q - m;
        if (std::abs(stake) < 1e-15) continue;
        db.transactions.push_back({TradeTime::t0, stake > 0.0 ? Side::buy : Side::sell,
                                   anticipation_label(k), ant[k].w, std::abs(stake), std::nullopt});
    }
    const double worst = worst_case_payoff(db);
    if (!(worst < 0.0)) {
        throw InternalDisagreement("constructed Dutch book does not guarantee a loss");
    }
    db.guaranteed_loss = -worst;
    v.book = std::move(db);
    return v;
}

struct PriceVerdict {
    bool coherent = true;
    /// P(E|D) P(D) - P(E, D)
    double residual = 0.0;
};

/// Product-rule check P_0(E|D) P_0(D) = P_0(E, D).
inline PriceVerdict conditional_price_check(double p_ed, double p_d, double p_e_given_d,
                                            double tol = 1e-10) {
    if (!(p_d > tol)) throw ZeroConditioningEvent("P(D) is zero; conditional price undefined");
    PriceVerdict v;
    v.residual = p_e_given_d * p_d - p_ed;
    v.coherent = std::abs(v.residual) <= tol;
    return v;
}

// ---------------------------------------------------------------------------
// Quantum reflection

struct ReflectionScenario {
    DensityMatrix rho;
    KrausMap measurement;

    ReflectionScenario(DensityMatrix r, KrausMap k) : rho(std::move(r)), measurement(std::move(k)) {
        if (rho.dim() != measurement.dim()) {
            throw DimensionMismatch("reflection scenario: state and measurement dimensions differ");
        }
    }
};

/// rho~ = sum_i p_i rho_i. Computed from the conditional states and from
/// sum_ik A_ik rho A_ik^dag; the two must agree.
inline DensityMatrix reflected_state(const ReflectionScenario& s) {
    const auto& k = s.measurement;
    const auto d = static_cast<Eigen::Index>(k.dim());
    ComplexMatrix via_operators = ComplexMatrix::Zero(d, d);
    ComplexMatrix via_conditionals = ComplexMatrix::Zero(d, d);
    for (std::size_t i = 0; i < k.outcome_count(); ++i) {
        const ComplexMatrix phi = k.apply_outcome(i, s.rho.matrix());
        via_operators += phi;
        if (phi.trace().real() > kOutcomeFloor) {
            const auto [rho_i, p_i] = post_measurement_state(s.rho, k, i);
            via_conditionals += p_i * rho_i.matrix();
        } else {
            via_conditionals += phi;
        }
    }
    if (max_abs(via_operators - via_conditionals) > 1e-10) {
        throw InternalDisagreement("reflected_state: conditional and operator routes differ");
    }
    return DensityMatrix(via_operators);
}

struct QuantumVerdict {
    bool coherent = true;
    /// max-entry distance between the claimed and the reflected state
    double residual = 0.0;
    /// Spectral projector of (rho~ - rho_claimed) on which the two states
    /// disagree most; set only when incoherent.
    std::optional<Effect> witness;
    /// tr(F (rho_claimed - rho~)) for the witness F.
    double witness_gap = 0.0;
};

inline QuantumVerdict check_quantum_reflection(const ReflectionScenario& s,
                                               const DensityMatrix& claimed, double tol = 1e-10) {
    if (claimed.dim() != s.rho.dim()) throw DimensionMismatch("claimed state has wrong dimension");
    const DensityMatrix reflected = reflected_state(s);
    const ComplexMatrix diff = reflected.matrix() - claimed.matrix();
    QuantumVerdict v;
    v.residual = max_abs(diff);
    v.coherent = v.residual <= tol;
    if (v.coherent) return v;

    const Spectrum sp = eig_hermitian(diff);
    const auto d = diff.rows();
    ComplexMatrix neg = ComplexMatrix::Zero(d, d);
    ComplexMatrix pos = ComplexMatrix::Zero(d, d);
    double neg_weight = 0.0;
    double pos_weight = 0.0;
    for (Eigen::Index j = 0; j < d; ++j) {
        const double lambda = sp.eigenvalues(j);
        const ComplexMatrix proj = sp.eigenvectors.col(j) * sp.eigenvectors.col(j).adjoint();
        if (lambda < 0.0) {
            neg += proj;
            neg_weight -= lambda;
        } else if (lambda > 0.0) {
            pos += proj;
            pos_weight += lambda;
        }
    }
    // Ties go to the effect the claimed state overweights.
    if (neg_weight >= pos_weight - 1e-12) {
        v.witness.emplace(neg, 1e-8);
        v.witness_gap = neg_weight;
    } else {
        v.witness.emplace(pos, 1e-8);
        v.witness_gap = -pos_weight;
    }
    return v;
}

/// S(rho~) - sum_i p_i S(rho_i); nonnegative up to round-off.
inline double entropy_gap(const ReflectionScenario& s) {
    const DensityMatrix reflected = reflected_state(s);
    double conditional = 0.0;
    for (std::size_t i = 0; i < s.measurement.outcome_count(); ++i) {
        const double p = s.measurement.apply_outcome(i, s.rho.matrix()).trace().real();
        if (p <= kOutcomeFloor) continue;
        const auto [rho_i, p_i] = post_measurement_state(s.rho, s.measurement, i);
        conditional += p_i * von_neumann_entropy(rho_i);
    }
    return von_neumann_entropy(reflected) - conditional;
}

}  // namespace reflectq
