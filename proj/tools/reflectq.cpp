// reflectq command-line tool.
//
//   reflectq [-o FILE] [--report FILE] <group> <action> [args]
//
// Data (JSON or CSV) goes to stdout or -o; the run report goes to stderr or
// --report. Exit codes: 0 success/coherent, 1 negative verdict, 2 input
// error, 3 internal disagreement between redundant computations.

#include <chrono>
#include <cmath>
#include <cstdint>
#include <cstdlib>
#include <fstream>
#include <iostream>
#include <limits>
#include <optional>
#include <sstream>
#include <string>

#include <CLI11.hpp>

#include "reflectq/io.hpp"

namespace {

using nlohmann::json;
using namespace reflectq;

constexpr int kExitOk = 0;
constexpr int kExitNegative = 1;
constexpr int kExitInput = 2;
constexpr int kExitInternal = 3;

struct Output {
    std::string data_path;
    std::string report_path;

    void emit(const std::string& text) const {
        if (data_path.empty()) {
            std::cout << text;
            std::cout.flush();
            return;
        }
        std::ofstream out(data_path, std::ios::binary);
        if (!out) throw InputError("cannot write " + data_path);
        out << text;
    }

    void emit(const json& j) const { emit(j.dump(2) + "\n"); }

    void report(const json& r) const {
        const std::string text = r.dump(2) + "\n";
        if (report_path.empty()) {
            std::cerr << text;
            return;
        }
        std::ofstream out(report_path, std::ios::binary);
        if (out) out << text;
    }
};

// Everything an action may read. Each subcommand binds only the fields it
// uses; the rest keep their defaults and are left out of the echo.
struct Config {
    std::string group;
    std::string action;
    std::vector<std::string> inputs;
    double tol = 1e-10;

    // channel standard
    std::string standard_kind;
    double standard_p = 0.0;
    std::string apply_state;

    // reflect
    std::string claimed;

    // dynamics
    std::size_t steps = 1;
    std::size_t max_iter = 100000;
    std::string rho_1_0;
    std::string rho_2_0;

    // trajectory
    double gamma = 1.0;
    double omega = 0.0;
    std::string model;
    double t0 = 0.0;
    double t = 5.0;
    double dt = 1e-3;
    std::size_t n_traj = 1000;
    std::uint64_t seed = 0;
    std::string init = "g";
    std::size_t outputs = 50;
    unsigned workers = 1;
    std::string clicks;
    double z_max = 3.0;
};

json echo(const Config& c) {
    json j{{"group", c.group}, {"action", c.action}, {"inputs", c.inputs}, {"tol", c.tol}};
    if (c.group == "channel" && c.action == "standard") {
        j["kind"] = c.standard_kind;
        j["p"] = c.standard_p;
        if (!c.apply_state.empty()) j["apply"] = c.apply_state;
    }
    if (!c.claimed.empty()) j["claimed"] = c.claimed;
    if (c.group == "dynamics") {
        j["steps"] = c.steps;
        j["max_iter"] = c.max_iter;
        if (!c.rho_1_0.empty()) j["rho_1_0"] = c.rho_1_0;
        if (!c.rho_2_0.empty()) j["rho_2_0"] = c.rho_2_0;
    }
    if (c.group == "trajectory") {
        j.update(json{{"gamma", c.gamma}, {"omega", c.omega}, {"model", c.model}, {"t0", c.t0}, {"t", c.t},
                      {"dt", c.dt}, {"n", c.n_traj}, {"seed", c.seed}, {"init", c.init},
                      {"outputs", c.outputs}, {"workers", c.workers}, {"z_max", c.z_max}});
        if (!c.clicks.empty()) j["clicks"] = c.clicks;
    }
    return j;
}

std::uint64_t default_seed() {
    const char* env = std::getenv("REFLECTQ_SEED");
    if (env == nullptr || *env == '\0') return 0;
    try {
        std::size_t used = 0;
        const unsigned long long v = std::stoull(env, &used);
        if (used != std::string(env).size()) throw std::invalid_argument(env);
        return v;
    } catch (const std::exception&) {
        throw InputError(std::string("REFLECTQ_SEED is not an unsigned integer: ") + env);
    }
}

const std::string& input(const Config& c, std::size_t i) {
    if (i >= c.inputs.size()) throw InputError("missing input file argument");
    return c.inputs[i];
}

// ---------------------------------------------------------------------------
// Loaders that accept several file kinds.

std::string kind_of(const json& j) {
    if (j.is_object() && j.contains("kind") && j.at("kind").is_string()) return j.at("kind").get<std::string>();
    if (!j.is_object()) return "";
    if (j.contains("images")) return "linear_map";
    if (j.contains("kraus")) return "channel";
    if (j.contains("outcomes")) return "kraus_map";
    if (j.contains("channel") && j.contains("provenance")) return "dynamics_assignment";
    if (j.contains("measurement") && j.contains("rho")) return "reflection_scenario";
    if (j.contains("measurement")) return "irrelevance_judgment";
    return "";
}

LinearMap load_linear_map(const json& j) {
    const std::string kind = kind_of(j);
    if (kind == "linear_map") return io::linear_map_from_json(j);
    if (kind == "channel") return LinearMap::from_channel(io::channel_from_json(j));
    if (kind == "kraus_map") return LinearMap::from_channel(io::kraus_map_from_json(j).merged());
    if (kind == "choi") {
        const ChoiMatrix c = io::choi_from_json(j);
        // Phi(|k><l|) is the (k, l) block of the Choi matrix.
        std::vector<ComplexMatrix> images;
        const auto d = static_cast<Eigen::Index>(c.dim);
        for (Eigen::Index k = 0; k < d; ++k)
            for (Eigen::Index l = 0; l < d; ++l) images.push_back(c.matrix.block(k * d, l * d, d, d));
        return LinearMap::from_images(c.dim, images);
    }
    throw InputError("expected a channel, kraus_map, linear_map or choi file");
}

Channel load_channel(const json& j) {
    const std::string kind = kind_of(j);
    if (kind == "channel") return io::channel_from_json(j);
    if (kind == "kraus_map") return io::kraus_map_from_json(j).merged();
    if (kind == "dynamics_assignment") return io::dynamics_from_json(j).map;
    return kraus_from_choi(choi_matrix(load_linear_map(j)));
}

DynamicsAssignment load_dynamics(const json& j) {
    const std::string kind = kind_of(j);
    if (kind == "dynamics_assignment") return io::dynamics_from_json(j);
    if (kind == "irrelevance_judgment") return dynamics_from_judgment(io::judgment_from_json(j));
    if (kind == "kraus_map") return dynamics_from_judgment({io::kraus_map_from_json(j), true});
    const Channel c = load_channel(j);
    return {c, {KrausMap::fine_grained(c.dim(), c.kraus()), true}};
}

IrrelevanceJudgment load_judgment(const json& j) {
    const std::string kind = kind_of(j);
    if (kind == "kraus_map") return {io::kraus_map_from_json(j), true};
    if (kind == "channel") {
        const Channel c = io::channel_from_json(j);
        return {KrausMap::fine_grained(c.dim(), c.kraus()), true};
    }
    return io::judgment_from_json(j);
}

DensityMatrix load_state(const std::string& path) { return io::density_matrix_from_json(io::read_json_file(path)); }

// ---------------------------------------------------------------------------
// channel

int cmd_channel(const Config& c, const Output& out, json& summary) {
    if (c.action == "choi") {
        const ChoiMatrix choi = choi_matrix(load_linear_map(io::read_json_file(input(c, 0))));
        summary["choi_trace"] = choi.matrix.trace().real();
        out.emit(io::to_json(choi));
        return kExitOk;
    }
    if (c.action == "check-cp") {
        const ChoiMatrix choi = choi_matrix(load_linear_map(io::read_json_file(input(c, 0))));
        const double lambda = choi_min_eigenvalue(choi);
        const bool cp = is_psd(choi.matrix, c.tol);
        const json verdict{{"completely_positive", cp}, {"choi_min_eigenvalue", lambda}};
        summary.update(verdict);
        summary["message"] = (cp ? "completely positive; " : "NOT completely positive; ") +
                             std::string("Choi min eigenvalue ") + io::format_number(lambda);
        out.emit(verdict);
        return cp ? kExitOk : kExitNegative;
    }
    if (c.action == "dilate") {
        const StinespringDilation dil = stinespring_dilate(load_channel(io::read_json_file(input(c, 0))));
        summary["env_dim"] = dil.env_dim();
        out.emit(io::to_json(dil));
        return kExitOk;
    }
    if (c.action == "apply") {
        const Channel ch = load_channel(io::read_json_file(input(c, 0)));
        const DensityMatrix rho = apply_channel(ch, load_state(input(c, 1)));
        summary["purity"] = rho.purity();
        out.emit(io::to_json(rho));
        return kExitOk;
    }
    if (c.action == "compose") {
        const Channel second = load_channel(io::read_json_file(input(c, 0)));
        const Channel first = load_channel(io::read_json_file(input(c, 1)));
        const Channel composed = compose(second, first);
        summary["kraus_count"] = composed.kraus().size();
        out.emit(io::to_json(composed));
        return kExitOk;
    }
    if (c.action == "standard") {
        const auto kind = parse_standard_channel(c.standard_kind);
        if (!kind) throw InputError("unknown standard channel \"" + c.standard_kind + "\"");
        const Channel ch = standard_channel(*kind, c.standard_p);
        if (c.apply_state.empty()) {
            out.emit(io::to_json(ch));
        } else {
            const DensityMatrix rho = apply_channel(ch, load_state(c.apply_state));
            summary["purity"] = rho.purity();
            out.emit(io::to_json(rho));
        }
        return kExitOk;
    }
    throw InputError("unknown channel action " + c.action);
}

// ---------------------------------------------------------------------------
// reflect

int cmd_reflect(const Config& c, const Output& out, json& summary) {
    if (c.action == "classical") {
        const PriceBook book = io::price_book_from_json(io::read_json_file(input(c, 0)));
        const ClassicalVerdict v = check_classical_reflection(book, c.tol);
        json result{{"coherent", v.coherent},
                    {"discrepancy", v.discrepancy},
                    {"expected_future_price", book.expected_future_price()}};
        if (v.book) {
            result["dutch_book"] = io::to_json(*v.book);
            result["table"] = render_table(*v.book);
            summary["guaranteed_loss"] = v.book->guaranteed_loss;
        }
        summary["coherent"] = v.coherent;
        summary["discrepancy"] = v.discrepancy;
        out.emit(result);
        return v.coherent ? kExitOk : kExitNegative;
    }
    if (c.action == "quantum") {
        const ReflectionScenario s = io::scenario_from_json(io::read_json_file(input(c, 0)));
        if (c.claimed.empty()) {
            out.emit(io::to_json(reflected_state(s)));
            return kExitOk;
        }
        const QuantumVerdict v = check_quantum_reflection(s, load_state(c.claimed), c.tol);
        json result{{"coherent", v.coherent}, {"residual", v.residual}, {"reflected_state", io::to_json(reflected_state(s))}};
        if (v.witness) {
            result["witness"] = io::to_json(*v.witness);
            result["witness_gap"] = v.witness_gap;
        }
        summary["coherent"] = v.coherent;
        summary["residual"] = v.residual;
        out.emit(result);
        return v.coherent ? kExitOk : kExitNegative;
    }
    if (c.action == "entropy-gap") {
        const ReflectionScenario s = io::scenario_from_json(io::read_json_file(input(c, 0)));
        const double gap = entropy_gap(s);
        const json result{{"entropy_gap", gap}, {"entropy_gap_bits", nats_to_bits(gap)}};
        summary.update(result);
        out.emit(result);
        return kExitOk;
    }
    throw InputError("unknown reflect action " + c.action);
}

// ---------------------------------------------------------------------------
// dynamics

int cmd_dynamics(const Config& c, const Output& out, json& summary) {
    if (c.action == "derive") {
        const DynamicsAssignment d = dynamics_from_judgment(load_judgment(io::read_json_file(input(c, 0))));
        summary["kraus_count"] = d.map.kraus().size();
        out.emit(io::to_json(d));
        return kExitOk;
    }
    if (c.action == "evolve") {
        const DynamicsAssignment d = load_dynamics(io::read_json_file(input(c, 0)));
        const DensityMatrix rho = evolve(load_state(input(c, 1)), d, c.steps);
        summary["purity"] = rho.purity();
        out.emit(io::to_json(rho));
        return kExitOk;
    }
    if (c.action == "fixed-point") {
        const DynamicsAssignment d = load_dynamics(io::read_json_file(input(c, 0)));
        const DensityMatrix rho = fixed_point(d, {c.tol, c.max_iter});
        summary["residual"] = max_abs_diff(d.map.apply(rho.matrix()), rho.matrix());
        out.emit(io::to_json(rho));
        return kExitOk;
    }
    if (c.action == "check-irrelevance") {
        if (c.rho_1_0.empty() || c.rho_2_0.empty()) {
            throw InputError("check-irrelevance needs --rho-1-0 and --rho-2-0");
        }
        const IrrelevanceJudgment j = load_judgment(io::read_json_file(input(c, 0)));
        const DensityMatrix r10 = load_state(c.rho_1_0);
        const IndexedState r20{load_state(c.rho_2_0), "0", "2"};
        const bool ok = check_irrelevance(r20, j, r10, c.tol);
        const double residual =
            max_abs_diff(reflected_state(ReflectionScenario(r10, j.measurement)).matrix(), r20.rho.matrix());
        const json result{{"irrelevant", ok}, {"residual", residual}};
        summary.update(result);
        out.emit(result);
        return ok ? kExitOk : kExitNegative;
    }
    throw InputError("unknown dynamics action " + c.action);
}

// ---------------------------------------------------------------------------
// trajectory

LindbladModel trajectory_model(const Config& c) {
    if (!c.model.empty()) return io::model_from_json(io::read_json_file(c.model));
    return two_level_atom({c.gamma, c.omega});
}

DensityMatrix initial_state(const Config& c, std::size_t dim) {
    if (c.init == "g") return DensityMatrix::basis(dim, kGround);
    if (c.init == "e") {
        if (dim < 2) throw DimensionMismatch("--init e needs at least two levels");
        return DensityMatrix::basis(dim, kExcited);
    }
    if (c.init == "plus") {
        if (dim != 2) throw DimensionMismatch("--init plus needs a two-level model");
        ComplexVector v(2);
        v << 1.0, 1.0;
        return DensityMatrix::pure(v);
    }
    return load_state(c.init);
}

int cmd_trajectory(const Config& c, const Output& out, json& summary) {
    if (!(c.t >= c.t0)) throw InputError("--t must not precede --t0");
    const LindbladModel model = trajectory_model(c);
    const DensityMatrix rho0 = initial_state(c, model.dim());
    const TimeSpan span{c.t0, c.t};
    const std::vector<double> times = uniform_output_times(span, c.outputs);

    if (c.action == "survival") {
        const double p = no_click_probability(model, rho0, span, c.dt);
        summary["no_click_probability"] = p;
        out.emit(json{{"no_click_probability", p}, {"t0", c.t0}, {"t", c.t}});
        return kExitOk;
    }
    if (c.action == "master") {
        std::ostringstream csv;
        io::write_time_series_csv(csv, solve_master(model, rho0, span, c.dt, times));
        out.emit(csv.str());
        return kExitOk;
    }
    if (c.action == "run") {
        const TrajectoryRecord rec = simulate_trajectory(model, rho0, span, c.dt, c.seed, times);
        summary["clicks"] = rec.click_times.size();
        if (!c.clicks.empty()) {
            std::ofstream f(c.clicks, std::ios::binary);
            if (!f) throw InputError("cannot write " + c.clicks);
            io::write_click_times_csv(f, rec);
        }
        std::ostringstream csv;
        io::write_time_series_csv(csv, rec.samples);
        out.emit(csv.str());
        return kExitOk;
    }
    if (c.action == "ensemble" || c.action == "compare") {
        const EnsembleSummary ens = ensemble_average(model, rho0, span, c.dt, c.n_traj, c.seed, times, c.workers);
        if (c.action == "ensemble") {
            std::ostringstream csv;
            io::write_time_series_csv(csv, ens);
            out.emit(csv.str());
            double max_se = 0.0;
            for (double s : ens.stderr_excited) max_se = std::max(max_se, s);
            summary["max_stderr_excited"] = max_se;
            return kExitOk;
        }
        const auto master = solve_master(model, rho0, span, c.dt, times);
        json rows = json::array();
        double max_diff = 0.0;
        double max_z = 0.0;
        for (std::size_t k = 0; k < times.size(); ++k) {
            const double diff = excited_population(ens.mean_states[k].matrix()) - excited_population(master[k].rho.matrix());
            const double se = ens.stderr_excited[k];
            double z = 0.0;
            if (se > 0.0) z = std::abs(diff) / se;
            else if (std::abs(diff) > 1e-12) z = std::numeric_limits<double>::infinity();
            max_diff = std::max(max_diff, std::abs(diff));
            max_z = std::max(max_z, z);
            rows.push_back({{"t", times[k]},
                            {"ensemble_rho_ee", excited_population(ens.mean_states[k].matrix())},
                            {"master_rho_ee", excited_population(master[k].rho.matrix())},
                            {"stderr", se},
                            {"z", std::isfinite(z) ? json(z) : json("inf")}});
        }
        const bool agree = max_z <= c.z_max;
        summary["max_abs_diff_rho_ee"] = max_diff;
        summary["max_z"] = std::isfinite(max_z) ? json(max_z) : json("inf");
        summary["agree"] = agree;
        out.emit(json{{"agree", agree}, {"max_abs_diff_rho_ee", max_diff}, {"max_z", summary["max_z"]}, {"times", rows}});
        return agree ? kExitOk : kExitNegative;
    }
    throw InputError("unknown trajectory action " + c.action);
}

// ---------------------------------------------------------------------------

void add_tol(CLI::App* sub, Config& c, const char* what) {
    sub->add_option("--tol", c.tol, what)->capture_default_str();
}

void trajectory_options(CLI::App* sub, Config& c) {
    sub->add_option("--gamma", c.gamma, "Decay rate Gamma of the two-level atom")->capture_default_str();
    sub->add_option("--omega", c.omega, "Drive strength Omega of the two-level atom")->capture_default_str();
    sub->add_option("--model", c.model, "Model JSON: {gamma, omega} or {H, L}; overrides --gamma/--omega");
    sub->add_option("--t0", c.t0, "Start time")->capture_default_str();
    sub->add_option("--t", c.t, "End time")->capture_default_str();
    sub->add_option("--dt", c.dt, "Time step")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--n", c.n_traj, "Number of trajectories")->capture_default_str()->check(CLI::PositiveNumber);
    sub->add_option("--seed", c.seed, "Base seed (default from REFLECTQ_SEED, else 0)")->capture_default_str();
    sub->add_option("--init", c.init, "Initial state: g, e, plus, or a density-matrix JSON file")
        ->capture_default_str();
    sub->add_option("--outputs", c.outputs, "Number of evenly spaced output times")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--workers", c.workers, "Worker threads for ensembles; results do not depend on it")
        ->capture_default_str()
        ->check(CLI::PositiveNumber);
    sub->add_option("--clicks", c.clicks, "run: also write click times CSV here");
    sub->add_option("--z-max", c.z_max, "compare: largest accepted |z| score")->capture_default_str();
}

}  // namespace

int main(int argc, char** argv) {
    Config cfg;
    Output out;
    try {
        cfg.seed = default_seed();
    } catch (const InputError& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kExitInput;
    }

    CLI::App app{"reflectq: quantum channels, reflection audits, dynamics from irrelevance judgments, "
                 "and continuous-measurement trajectories"};
    app.require_subcommand(1);
    app.add_option("-o,--output", out.data_path, "Write data here instead of stdout");
    app.add_option("--report", out.report_path, "Write the JSON run report here instead of stderr");

    auto* channel = app.add_subcommand("channel", "Choi matrices, CP checks, dilations, channel algebra");
    channel->require_subcommand(1);
    for (const auto& [name, help, nargs] :
         {std::tuple{"choi", "Choi matrix of a channel, Kraus map or linear map", 1},
          std::tuple{"check-cp", "Complete-positivity verdict from the Choi spectrum (exit 1 if not CP)", 1},
          std::tuple{"dilate", "Unitary dilation of a channel with the environment in |0>", 1},
          std::tuple{"apply", "Apply CHANNEL to STATE", 2},
          std::tuple{"compose", "Channel SECOND after FIRST", 2}}) {
        auto* sub = channel->add_subcommand(name, help);
        sub->add_option("inputs", cfg.inputs, "Input JSON files")->required()->expected(nargs);
        if (std::string(name) == "check-cp") add_tol(sub, cfg, "Eigenvalue tolerance, scaled by the spectrum");
    }
    {
        auto* sub = channel->add_subcommand("standard", "Bit flip, dephasing, depolarizing or amplitude damping");
        sub->add_option("kind", cfg.standard_kind, "bit_flip | dephasing | depolarizing | amplitude_damping")
            ->required();
        sub->add_option("p", cfg.standard_p, "Channel parameter in [0, 1]")->required();
        sub->add_option("--apply", cfg.apply_state, "Apply to this density-matrix file and emit the state");
    }

    auto* reflect = app.add_subcommand("reflect", "Classical and quantum reflection audits");
    reflect->require_subcommand(1);
    {
        auto* sub = reflect->add_subcommand("classical", "Audit a price book; emits a Dutch book when incoherent");
        sub->add_option("inputs", cfg.inputs, "Price book JSON")->required()->expected(1);
        add_tol(sub, cfg, "Coherence tolerance on |p0 - sum w q|");
        sub = reflect->add_subcommand("quantum", "Reflected state, or a verdict on --claimed");
        sub->add_option("inputs", cfg.inputs, "Reflection scenario JSON")->required()->expected(1);
        sub->add_option("--claimed", cfg.claimed, "Claimed density matrix to audit");
        add_tol(sub, cfg, "Max-entry tolerance");
        sub = reflect->add_subcommand("entropy-gap", "S(reflected) minus mean conditional entropy, in nats");
        sub->add_option("inputs", cfg.inputs, "Reflection scenario JSON")->required()->expected(1);
    }

    auto* dynamics = app.add_subcommand("dynamics", "Dynamics from irrelevance judgments");
    dynamics->require_subcommand(1);
    {
        auto* sub = dynamics->add_subcommand("derive", "Channel implied by an irrelevance judgment");
        sub->add_option("inputs", cfg.inputs, "Judgment JSON")->required()->expected(1);
        sub = dynamics->add_subcommand("evolve", "Apply the dynamics --steps times to STATE");
        sub->add_option("inputs", cfg.inputs, "Dynamics (or judgment, channel) JSON, then state JSON")
            ->required()
            ->expected(2);
        sub->add_option("--steps", cfg.steps, "Number of applications")->capture_default_str();
        sub = dynamics->add_subcommand("fixed-point", "Damped iteration from I/d to a fixed state");
        sub->add_option("inputs", cfg.inputs, "Dynamics (or judgment, channel) JSON")->required()->expected(1);
        add_tol(sub, cfg, "Convergence tolerance on max|Phi(rho) - rho|");
        sub->add_option("--max-iter", cfg.max_iter, "Iteration budget")->capture_default_str();
        sub = dynamics->add_subcommand("check-irrelevance", "Is rho_2|0 the reflected state of rho_1|0?");
        sub->add_option("inputs", cfg.inputs, "Judgment JSON")->required()->expected(1);
        sub->add_option("--rho-1-0", cfg.rho_1_0, "State for the measurement time")->required();
        sub->add_option("--rho-2-0", cfg.rho_2_0, "State for the later time")->required();
        add_tol(sub, cfg, "Max-entry tolerance");
    }

    auto* trajectory = app.add_subcommand("trajectory", "Continuous measurement of a single jump operator");
    trajectory->require_subcommand(1);
    for (const auto& [name, help] :
         {std::pair{"run", "One jump trajectory; CSV of states at the output times"},
          std::pair{"ensemble", "Mean over --n trajectories with seeds seed + index; CSV"},
          std::pair{"master", "Master-equation solution (RK4); CSV"},
          std::pair{"compare", "Ensemble vs master equation with per-time z scores (exit 1 if any exceeds --z-max)"},
          std::pair{"survival", "Probability of no click over [t0, t]"}}) {
        trajectory_options(trajectory->add_subcommand(name, help), cfg);
    }

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::CallForAllHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kExitInput;
    }

    for (auto* group : app.get_subcommands()) {
        cfg.group = group->get_name();
        for (auto* action : group->get_subcommands()) cfg.action = action->get_name();
    }

    const auto start = std::chrono::steady_clock::now();
    json summary = json::object();
    json report{{"config", echo(cfg)}};
    int code = kExitOk;
    try {
        if (cfg.group == "channel") code = cmd_channel(cfg, out, summary);
        else if (cfg.group == "reflect") code = cmd_reflect(cfg, out, summary);
        else if (cfg.group == "dynamics") code = cmd_dynamics(cfg, out, summary);
        else code = cmd_trajectory(cfg, out, summary);
    } catch (const StepTooLarge& e) {
        report["error"] = {{"type", "StepTooLarge"}, {"message", e.what()}, {"t", e.time()}, {"dp", e.click_probability()}};
        code = kExitInput;
    } catch (const InputError& e) {
        report["error"] = {{"type", "input"}, {"message", e.what()}};
        code = kExitInput;
    } catch (const nlohmann::json::exception& e) {
        report["error"] = {{"type", "input"}, {"message", e.what()}};
        code = kExitInput;
    } catch (const NotConverged& e) {
        report["error"] = {{"type", "NotConverged"}, {"message", e.what()}};
        code = kExitNegative;
    } catch (const InternalDisagreement& e) {
        report["error"] = {{"type", "InternalDisagreement"}, {"message", e.what()}};
        code = kExitInternal;
    } catch (const Error& e) {
        report["error"] = {{"type", "error"}, {"message", e.what()}};
        code = kExitInput;
    }
    report["summary"] = summary;
    report["exit_code"] = code;
    report["wall_time_s"] = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
    out.report(report);
    if (report.contains("error") && !out.report_path.empty()) std::cerr << "error: " << report["error"]["message"].get<std::string>() << "\n";
    return code;
}
