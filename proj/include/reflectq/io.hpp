// io.hpp
// JSON serialization of every library type, CSV time series, and file
// helpers. Every top-level object carries "schema": 1 and a "kind" tag.
//
// Matrix schema: {"rows": r, "cols": c, "re": [...], "im": [...]}, entries
// row-major in the computational basis.

#pragma once

#include <cmath>
#include <cstdio>
#include <fstream>
#include <ostream>
#include <sstream>
#include <string>
#include <vector>

#include <nlohmann/json.hpp>

#include "dynamics.hpp"
#include "trajectories.hpp"

namespace reflectq::io {

using nlohmann::json;

inline constexpr int kSchemaVersion = 1;

namespace detail {

inline const json& field(const json& j, const char* name) {
    if (!j.is_object() || !j.contains(name)) {
        throw InputError(std::string("missing field \"") + name + "\"");
    }
    return j.at(name);
}

inline double number(const json& j, const char* name) {
    const json& v = field(j, name);
    if (!v.is_number()) throw InputError(std::string("field \"") + name + "\" must be a number");
    return v.get<double>();
}

inline void check_header(const json& j, const char* kind) {
    if (!j.is_object()) throw InputError("expected a JSON object");
    if (j.contains("schema") && j.at("schema") != kSchemaVersion) {
        throw InputError("unsupported schema version " + j.at("schema").dump());
    }
    if (kind != nullptr && j.contains("kind") && j.at("kind") != kind) {
        throw InputError(std::string("expected kind \"") + kind + "\", got " + j.at("kind").dump());
    }
}

}  // namespace detail

// ---------------------------------------------------------------------------
// Matrices

inline json to_json(const ComplexMatrix& m) {
    std::vector<double> re;
    std::vector<double> im;
    re.reserve(static_cast<std::size_t>(m.size()));
    im.reserve(static_cast<std::size_t>(m.size()));
    for (Eigen::Index i = 0; i < m.rows(); ++i) {
        for (Eigen::Index j = 0; j < m.cols(); ++j) {
            re.push_back(m(i, j).real());
            im.push_back(m(i, j).imag());
        }
    }
    return json{{"rows", m.rows()}, {"cols", m.cols()}, {"re", re}, {"im", im}};
}

inline ComplexMatrix matrix_from_json(const json& j) {
    detail::check_header(j, nullptr);
    const json& rows = detail::field(j, "rows");
    const json& cols = detail::field(j, "cols");
    if (!rows.is_number_integer() || !cols.is_number_integer() || rows.get<long long>() < 1 ||
        cols.get<long long>() < 1) {
        throw InputError("matrix rows/cols must be positive integers");
    }
    const auto r = rows.get<Eigen::Index>();
    const auto c = cols.get<Eigen::Index>();
    const json& re = detail::field(j, "re");
    if (!re.is_array() || static_cast<Eigen::Index>(re.size()) != r * c) {
        throw InputError("matrix \"re\" must hold rows*cols numbers");
    }
    const bool has_im = j.contains("im");
    if (has_im && (!j.at("im").is_array() || static_cast<Eigen::Index>(j.at("im").size()) != r * c)) {
        throw InputError("matrix \"im\" must hold rows*cols numbers");
    }
    ComplexMatrix m(r, c);
    for (Eigen::Index k = 0; k < r * c; ++k) {
        const auto idx = static_cast<std::size_t>(k);
        if (!re[idx].is_number() || (has_im && !j.at("im")[idx].is_number())) {
            throw InputError("matrix entries must be numbers");
        }
        m(k / c, k % c) = complex(re[idx].get<double>(), has_im ? j.at("im")[idx].get<double>() : 0.0);
    }
    return m;
}

inline std::vector<ComplexMatrix> matrices_from_json(const json& j) {
    if (!j.is_array()) throw InputError("expected an array of matrices");
    std::vector<ComplexMatrix> out;
    for (const auto& m : j) out.push_back(matrix_from_json(m));
    return out;
}

inline json to_json(const std::vector<ComplexMatrix>& ms) {
    json arr = json::array();
    for (const auto& m : ms) arr.push_back(to_json(m));
    return arr;
}

// ---------------------------------------------------------------------------
// Quantum objects

inline json to_json(const DensityMatrix& rho) {
    return json{{"schema", kSchemaVersion}, {"kind", "density_matrix"}, {"matrix", to_json(rho.matrix())}};
}

/// Accepts the tagged form or a bare matrix object.
inline DensityMatrix density_matrix_from_json(const json& j) {
    detail::check_header(j, "density_matrix");
    return DensityMatrix(matrix_from_json(j.contains("matrix") ? j.at("matrix") : j));
}

inline json to_json(const Effect& e) {
    return json{{"schema", kSchemaVersion}, {"kind", "effect"}, {"matrix", to_json(e.matrix())}};
}

inline Effect effect_from_json(const json& j) {
    detail::check_header(j, "effect");
    return Effect(matrix_from_json(j.contains("matrix") ? j.at("matrix") : j));
}

inline json to_json(const Povm& p) {
    json effects = json::array();
    for (const auto& e : p.effects()) effects.push_back(to_json(e.matrix()));
    return json{{"schema", kSchemaVersion}, {"kind", "povm"}, {"effects", effects}};
}

inline Povm povm_from_json(const json& j) {
    detail::check_header(j, "povm");
    return Povm::from_matrices(matrices_from_json(detail::field(j, "effects")));
}

inline json to_json(const ProbVector& p) {
    return json{{"schema", kSchemaVersion}, {"kind", "prob_vector"}, {"p", p.values()}};
}

inline ProbVector prob_vector_from_json(const json& j) {
    detail::check_header(j, "prob_vector");
    const json& p = detail::field(j, "p");
    if (!p.is_array()) throw InputError("\"p\" must be an array");
    std::vector<double> v;
    for (const auto& x : p) {
        if (!x.is_number()) throw InputError("probabilities must be numbers");
        v.push_back(x.get<double>());
    }
    return ProbVector(std::move(v));
}

// ---------------------------------------------------------------------------
// Channels

inline json to_json(const KrausMap& k) {
    json outcomes = json::array();
    for (const auto& ops : k.outcomes()) outcomes.push_back(to_json(ops));
    return json{{"schema", kSchemaVersion}, {"kind", "kraus_map"}, {"dim", k.dim()}, {"outcomes", outcomes}};
}

inline KrausMap kraus_map_from_json(const json& j) {
    detail::check_header(j, "kraus_map");
    const json& outcomes = detail::field(j, "outcomes");
    if (!outcomes.is_array() || outcomes.empty()) throw InputError("\"outcomes\" must be a non-empty array");
    std::vector<std::vector<ComplexMatrix>> ops;
    for (const auto& o : outcomes) ops.push_back(matrices_from_json(o));
    const auto d = static_cast<std::size_t>(ops.front().empty() ? 0 : ops.front().front().rows());
    if (j.contains("dim") && j.at("dim") != d) throw DimensionMismatch("\"dim\" disagrees with operators");
    return KrausMap(d, std::move(ops));
}

inline json to_json(const Channel& c) {
    return json{{"schema", kSchemaVersion}, {"kind", "channel"}, {"dim", c.dim()}, {"kraus", to_json(c.kraus())}};
}

inline Channel channel_from_json(const json& j) {
    detail::check_header(j, "channel");
    auto ops = matrices_from_json(detail::field(j, "kraus"));
    if (ops.empty()) throw InputError("\"kraus\" must not be empty");
    const auto d = static_cast<std::size_t>(ops.front().rows());
    if (j.contains("dim") && j.at("dim") != d) throw DimensionMismatch("\"dim\" disagrees with operators");
    return Channel(d, std::move(ops));
}

inline json to_json(const ChoiMatrix& c) {
    return json{{"schema", kSchemaVersion}, {"kind", "choi"}, {"dim", c.dim}, {"matrix", to_json(c.matrix)}};
}

inline ChoiMatrix choi_from_json(const json& j) {
    detail::check_header(j, "choi");
    ComplexMatrix m = matrix_from_json(detail::field(j, "matrix"));
    const auto d = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(m.rows()))));
    if (static_cast<Eigen::Index>(d * d) != m.rows() || m.rows() != m.cols()) {
        throw DimensionMismatch("Choi matrix must be d^2 x d^2");
    }
    return {d, std::move(m)};
}

/// {"kind": "linear_map", "dim": d, "images": [Phi(|k><l|) for k*d + l]}
inline LinearMap linear_map_from_json(const json& j) {
    detail::check_header(j, "linear_map");
    const json& dim = detail::field(j, "dim");
    if (!dim.is_number_integer() || dim.get<long long>() < 1) throw InputError("\"dim\" must be a positive integer");
    return LinearMap::from_images(dim.get<std::size_t>(), matrices_from_json(detail::field(j, "images")));
}

inline json to_json(const StinespringDilation& s) {
    return json{{"schema", kSchemaVersion},
                {"kind", "dilation"},
                {"dim", s.dim()},
                {"env_dim", s.env_dim()},
                {"unitary", to_json(s.unitary())},
                {"env_state", to_json(s.env_state().matrix())}};
}

inline StinespringDilation dilation_from_json(const json& j) {
    detail::check_header(j, "dilation");
    const json& dim = detail::field(j, "dim");
    if (!dim.is_number_integer() || dim.get<long long>() < 1) throw InputError("\"dim\" must be a positive integer");
    return StinespringDilation(dim.get<std::size_t>(), matrix_from_json(detail::field(j, "unitary")),
                               DensityMatrix(matrix_from_json(detail::field(j, "env_state"))));
}

// ---------------------------------------------------------------------------
// Reflection

inline json to_json(const PriceBook& b) {
    json ant = json::array();
    for (const auto& a : b.anticipations()) ant.push_back({{"q", a.q}, {"w", a.w}});
    return json{{"schema", kSchemaVersion}, {"kind", "price_book"}, {"p0", b.p0()}, {"anticipations", ant}};
}

inline PriceBook price_book_from_json(const json& j) {
    detail::check_header(j, "price_book");
    const json& ant = detail::field(j, "anticipations");
    if (!ant.is_array()) throw InvalidBook("\"anticipations\" must be an array");
    std::vector<Anticipation> as;
    for (const auto& a : ant) as.push_back({detail::number(a, "q"), detail::number(a, "w")});
    return PriceBook(detail::number(j, "p0"), std::move(as));
}

inline json to_json(const DutchBook& b) {
    json tx = json::array();
    for (const auto& t : b.transactions) {
        tx.push_back({{"time", to_string(t.time)},
                      {"side", to_string(t.side)},
                      {"event", t.event},
                      {"price", t.price},
                      {"stake", t.stake},
                      {"conditional_on", t.conditional_on ? json(*t.conditional_on) : json(nullptr)}});
    }
    return json{{"schema", kSchemaVersion},
                {"kind", "dutch_book"},
                {"anticipation_count", b.anticipation_count},
                {"transactions", tx},
                {"guaranteed_loss", b.guaranteed_loss}};
}

inline DutchBook dutch_book_from_json(const json& j) {
    detail::check_header(j, "dutch_book");
    DutchBook b;
    b.anticipation_count = detail::field(j, "anticipation_count").get<std::size_t>();
    b.guaranteed_loss = detail::number(j, "guaranteed_loss");
    for (const auto& t : detail::field(j, "transactions")) {
        const auto time = detail::field(t, "time").get<std::string>();
        const auto side = detail::field(t, "side").get<std::string>();
        if ((time != "t0" && time != "t_tau") || (side != "buy" && side != "sell")) {
            throw InputError("bad transaction time or side");
        }
        Transaction tr{time == "t0" ? TradeTime::t0 : TradeTime::t_tau,
                       side == "buy" ? Side::buy : Side::sell,
                       detail::field(t, "event").get<std::string>(),
                       detail::number(t, "price"),
                       detail::number(t, "stake"),
                       std::nullopt};
        if (t.contains("conditional_on") && !t.at("conditional_on").is_null()) {
            tr.conditional_on = t.at("conditional_on").get<std::string>();
        }
        b.transactions.push_back(std::move(tr));
    }
    return b;
}

inline json to_json(const ReflectionScenario& s) {
    return json{{"schema", kSchemaVersion},
                {"kind", "reflection_scenario"},
                {"rho", to_json(s.rho.matrix())},
                {"measurement", to_json(s.measurement)}};
}

inline ReflectionScenario scenario_from_json(const json& j) {
    detail::check_header(j, "reflection_scenario");
    return ReflectionScenario(density_matrix_from_json(detail::field(j, "rho")),
                              kraus_map_from_json(detail::field(j, "measurement")));
}

// ---------------------------------------------------------------------------
// Dynamics

inline json to_json(const IrrelevanceJudgment& j) {
    return json{{"schema", kSchemaVersion},
                {"kind", "irrelevance_judgment"},
                {"measurement", to_json(j.measurement)},
                {"state_independent", j.state_independent}};
}

inline IrrelevanceJudgment judgment_from_json(const json& j) {
    detail::check_header(j, "irrelevance_judgment");
    bool independent = true;
    if (j.contains("state_independent")) {
        if (!j.at("state_independent").is_boolean()) throw InputError("\"state_independent\" must be a boolean");
        independent = j.at("state_independent").get<bool>();
    }
    return {kraus_map_from_json(detail::field(j, "measurement")), independent};
}

inline json to_json(const DynamicsAssignment& d) {
    return json{{"schema", kSchemaVersion},
                {"kind", "dynamics_assignment"},
                {"channel", to_json(d.map)},
                {"provenance", to_json(d.provenance)}};
}

inline DynamicsAssignment dynamics_from_json(const json& j) {
    detail::check_header(j, "dynamics_assignment");
    return {channel_from_json(detail::field(j, "channel")), judgment_from_json(detail::field(j, "provenance"))};
}

// ---------------------------------------------------------------------------
// Trajectories

/// {"gamma", "omega"} for the two-level atom or generic {"H", "L"}.
inline LindbladModel model_from_json(const json& j) {
    detail::check_header(j, "lindblad_model");
    if (j.contains("H") || j.contains("L")) {
        return LindbladModel(matrix_from_json(detail::field(j, "H")), matrix_from_json(detail::field(j, "L")));
    }
    return two_level_atom({detail::number(j, "gamma"), detail::number(j, "omega")});
}

inline json to_json(const LindbladModel& m) {
    return json{{"schema", kSchemaVersion},
                {"kind", "lindblad_model"},
                {"H", to_json(m.hamiltonian())},
                {"L", to_json(m.jump())}};
}

/// 17 significant digits, enough to round-trip any double.
inline std::string format_number(double x) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", x);
    return buf;
}

/// Columns t, rho_ee, re_rho_eg, im_rho_eg, trace with |g> = |0>, |e> = |1>.
inline void write_time_series_csv(std::ostream& os, const std::vector<double>& times,
                                  const std::vector<ComplexMatrix>& states) {
    os << "t,rho_ee,re_rho_eg,im_rho_eg,trace\n";
    for (std::size_t k = 0; k < times.size(); ++k) {
        const ComplexMatrix& r = states[k];
        if (r.rows() < 2) throw DimensionMismatch("time series needs at least two levels");
        const complex eg = r(1, 0);
        os << format_number(times[k]) << ',' << format_number(r(1, 1).real()) << ','
           << format_number(eg.real()) << ',' << format_number(eg.imag()) << ','
           << format_number(r.trace().real()) << '\n';
    }
}

inline void write_time_series_csv(std::ostream& os, const std::vector<TimeSample>& samples) {
    std::vector<double> ts;
    std::vector<ComplexMatrix> ms;
    for (const auto& s : samples) {
        ts.push_back(s.t);
        ms.push_back(s.rho.matrix());
    }
    write_time_series_csv(os, ts, ms);
}

inline void write_time_series_csv(std::ostream& os, const EnsembleSummary& e) {
    std::vector<ComplexMatrix> ms;
    for (const auto& s : e.mean_states) ms.push_back(s.matrix());
    write_time_series_csv(os, e.times, ms);
}

inline void write_click_times_csv(std::ostream& os, const TrajectoryRecord& r) {
    os << "click_time\n";
    for (double t : r.click_times) os << format_number(t) << '\n';
}

// ---------------------------------------------------------------------------
// Files

inline json read_json_file(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw InputError("cannot open " + path);
    try {
        return json::parse(in);
    } catch (const json::exception& e) {
        throw InputError("malformed JSON in " + path + ": " + e.what());
    }
}

}  // namespace reflectq::io
