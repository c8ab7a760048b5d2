#pragma once

// Command implementations behind tools/qsc. Each command takes a resolved
// configuration, writes its outputs, and returns a process exit code.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <iostream>
#include <optional>
#include <random>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include <json.hpp>

#include "qsc/analysis.hpp"
#include "qsc/anneal.hpp"
#include "qsc/config.hpp"
#include "qsc/control.hpp"
#include "qsc/dynamics.hpp"
#include "qsc/error.hpp"
#include "qsc/molham.hpp"
#include "qsc/objective.hpp"
#include "qsc/optimize.hpp"
#include "qsc/pauli.hpp"
#include "qsc/sparse.hpp"
#include "qsc/spectrum.hpp"

namespace qsc::cli {

enum ExitCode : int { ok = 0, no_convergence = 1, data_error = 2, integrity_error = 3 };

inline constexpr int kRunlogSchemaVersion = 1;

/// Everything a command needs, after defaults, config file and flags are merged.
struct RunConfig {
    std::string command;
    std::filesystem::path fixture;
    std::filesystem::path out = "qsc_out";
    std::vector<double> total_times{0.01};
    std::vector<std::size_t> n_ctrls{4};
    std::optional<std::size_t> n_steps;
    std::optional<double> time_step;
    std::vector<std::uint64_t> seeds{0};
    bool stop_on_success = false;

    std::string control = "five_ingredient"; // or "attraction"
    std::string backend = "spectral";        // or "krylov"

    std::string optimizer = "lbfgs"; // or "diffevo"
    std::size_t max_iter = 500;
    double tol_mha = 1.0;
    double max_step = 10.0;
    std::size_t population = 0;
    double bound = 10.0;

    // anneal
    std::vector<double> anneal_times{2.5, 5.0, 10.0, 25.0};
    double anneal_time_step = 0.05;

    // cost
    double epsilon = 1e-3;
};

namespace detail {

inline std::string lower(std::string s) {
    std::transform(s.begin(), s.end(), s.begin(), [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
    return s;
}

template <class T>
std::vector<T> to_sizes(const std::vector<std::int64_t> &v, const std::string &key) {
    std::vector<T> out;
    for (auto x : v) {
        if (x < 0) {
            throw FormatError("config key '" + key + "' must be non-negative");
        }
        out.push_back(static_cast<T>(x));
    }
    return out;
}

} // namespace detail

/// Apply a parsed config file on top of `cfg`. Unknown keys are rejected.
inline void apply_config(RunConfig &cfg, const ConfigTable &table, const std::filesystem::path &base_dir = {}) {
    for (const auto &[key, v] : table) {
        if (key == "command") {
            cfg.command = config_string(v, key);
        } else if (key == "fixture") {
            std::filesystem::path p = config_string(v, key);
            cfg.fixture = p.is_relative() && !base_dir.empty() ? base_dir / p : p;
        } else if (key == "out") {
            cfg.out = config_string(v, key);
        } else if (key == "total_time") {
            cfg.total_times = config_number_list(v, key);
        } else if (key == "n_ctrl") {
            cfg.n_ctrls = detail::to_sizes<std::size_t>(config_integer_list(v, key), key);
        } else if (key == "n_steps") {
            cfg.n_steps = static_cast<std::size_t>(config_integer(v, key));
        } else if (key == "time_step") {
            cfg.time_step = config_number(v, key);
        } else if (key == "seeds" || key == "seed") {
            cfg.seeds = detail::to_sizes<std::uint64_t>(config_integer_list(v, key), key);
        } else if (key == "stop_on_success") {
            cfg.stop_on_success = config_bool(v, key);
        } else if (key == "control.model") {
            cfg.control = config_string(v, key);
        } else if (key == "control.backend") {
            cfg.backend = config_string(v, key);
        } else if (key == "optimizer.kind") {
            cfg.optimizer = config_string(v, key);
        } else if (key == "optimizer.max_iter") {
            cfg.max_iter = static_cast<std::size_t>(config_integer(v, key));
        } else if (key == "optimizer.tol_mha") {
            cfg.tol_mha = config_number(v, key);
        } else if (key == "optimizer.max_step") {
            cfg.max_step = config_number(v, key);
        } else if (key == "optimizer.population") {
            cfg.population = static_cast<std::size_t>(config_integer(v, key));
        } else if (key == "optimizer.bound") {
            cfg.bound = config_number(v, key);
        } else if (key == "anneal.total_time") {
            cfg.anneal_times = config_number_list(v, key);
        } else if (key == "anneal.time_step") {
            cfg.anneal_time_step = config_number(v, key);
        } else if (key == "cost.epsilon") {
            cfg.epsilon = config_number(v, key);
        } else {
            throw FormatError("unknown config key '" + key + "'");
        }
    }
}

/// Checks that do not need the fixture.
inline void validate_config(const RunConfig &cfg) {
    static const std::set<std::string> controls{"five_ingredient", "attraction"};
    static const std::set<std::string> backends{"spectral", "krylov"};
    static const std::set<std::string> optimizers{"lbfgs", "diffevo"};
    if (!controls.contains(cfg.control)) {
        throw FormatError("control.model must be 'five_ingredient' or 'attraction'");
    }
    if (!backends.contains(cfg.backend)) {
        throw FormatError("control.backend must be 'spectral' or 'krylov'");
    }
    if (!optimizers.contains(cfg.optimizer)) {
        throw FormatError("optimizer.kind must be 'lbfgs' or 'diffevo'");
    }
    if (cfg.total_times.empty() || cfg.n_ctrls.empty() || cfg.seeds.empty()) {
        throw DataError("total_time, n_ctrl and seeds must be non-empty");
    }
    for (double t : cfg.total_times) {
        if (!(t > 0.0)) {
            throw DataError("total_time must be positive");
        }
    }
    for (auto n : cfg.n_ctrls) {
        if (n == 0) {
            throw DataError("n_ctrl must be positive");
        }
    }
    if (!(cfg.tol_mha > 0.0) || cfg.max_iter == 0) {
        throw DataError("optimizer.tol_mha and optimizer.max_iter must be positive");
    }
    if (cfg.time_step && !(*cfg.time_step > 0.0)) {
        throw DataError("time_step must be positive");
    }
    if (!(cfg.bound > 0.0)) {
        throw DataError("optimizer.bound must be positive");
    }
}

/// Integration steps for (T, n_ctrl): explicit n_steps, else from the time
/// step (default T/8 clamped to [0.00125, 0.0125]), rounded up to a multiple
/// of n_ctrl.
inline std::size_t resolve_steps(const RunConfig &cfg, double total_time, std::size_t n_ctrl) {
    if (cfg.n_steps) {
        ControlSchedule::validate_shape(n_ctrl, *cfg.n_steps, total_time);
        return *cfg.n_steps;
    }
    const double dt = cfg.time_step ? *cfg.time_step : std::clamp(total_time / 8.0, kMinTimeStep, 0.0125);
    auto steps = static_cast<std::size_t>(std::ceil(total_time / dt - 1e-9));
    steps = std::max<std::size_t>(steps, 1);
    return (steps + n_ctrl - 1) / n_ctrl * n_ctrl;
}

inline nlohmann::json to_json(const RunConfig &cfg) {
    nlohmann::json j;
    j["command"] = cfg.command;
    j["fixture"] = cfg.fixture.string();
    j["out"] = cfg.out.string();
    j["total_time"] = cfg.total_times;
    j["n_ctrl"] = cfg.n_ctrls;
    j["n_steps"] = cfg.n_steps ? nlohmann::json(*cfg.n_steps) : nlohmann::json(nullptr);
    j["time_step"] = cfg.time_step ? nlohmann::json(*cfg.time_step) : nlohmann::json(nullptr);
    j["seeds"] = cfg.seeds;
    j["stop_on_success"] = cfg.stop_on_success;
    j["control"] = {{"model", cfg.control}, {"backend", cfg.backend}};
    j["optimizer"] = {{"kind", cfg.optimizer},        {"max_iter", cfg.max_iter}, {"tol_mha", cfg.tol_mha},
                      {"max_step", cfg.max_step},      {"population", cfg.population}, {"bound", cfg.bound}};
    j["anneal"] = {{"total_time", cfg.anneal_times}, {"time_step", cfg.anneal_time_step}};
    j["cost"] = {{"epsilon", cfg.epsilon}};
    return j;
}

inline nlohmann::json to_json(const OptimizationReport &rep, const std::vector<std::string> &names) {
    return {{"optimizer", rep.optimizer},
            {"termination_reason", to_string(rep.termination_reason)},
            {"n_iterations", rep.n_iterations},
            {"n_evaluations", rep.n_evaluations},
            {"best_value", rep.best_value},
            {"final_error", std::isfinite(rep.final_error()) ? nlohmann::json(rep.final_error()) : nlohmann::json()},
            {"seed", rep.seed},
            {"wall_time", rep.wall_time},
            {"parameter_names", names},
            {"best_parameters", rep.best_parameters}};
}

inline void write_iterates_csv(const OptimizationReport &rep, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot write '" + path.string() + "'");
    }
    out << "iteration,value,error,gradient_norm,evaluations\n" << std::setprecision(17);
    for (const auto &r : rep.iterates) {
        out << r.iteration << ',' << r.value << ',' << r.error << ',' << r.gradient_norm << ',' << r.evaluations
            << '\n';
    }
}

/// Molecular problem shared by the commands.
struct Problem {
    IntegralSet ints;
    SparseOperator h_mol;
    SparseMatrix<double> h_mol_real;
    QuantumState hf_state;
    double e_hf = 0.0;
    double e_fci = 0.0;

    explicit Problem(const std::filesystem::path &fixture)
        : ints(parse_integral_file(fixture)), h_mol(fermion_to_sparse(build_core_hamiltonian(ints))),
          h_mol_real(to_real(h_mol)), hf_state(QuantumState::hartree_fock(ints.n_qubits(), ints.n_electrons)) {
        e_hf = expectation(h_mol, hf_state);
        e_fci = exact_ground_state(h_mol, Sector{ints.n_electrons, 0}).energy;
    }
};

inline nlohmann::json fixture_block(const RunConfig &cfg, const Problem &p) {
    return {{"path", cfg.fixture.string()},       {"n_qubits", p.ints.n_qubits()},
            {"n_electrons", p.ints.n_electrons},  {"n_nuclei", p.ints.n_nuclei()},
            {"hf_energy", p.e_hf},                {"fci_energy", p.e_fci}};
}

inline std::string run_tag(double total_time, std::size_t n_ctrl, std::uint64_t seed) {
    std::ostringstream os;
    os << "T" << total_time << "_n" << n_ctrl << "_s" << seed;
    return os.str();
}

inline void write_json(const nlohmann::json &j, const std::filesystem::path &path) {
    std::ofstream out(path);
    if (!out) {
        throw FormatError("cannot write '" + path.string() + "'");
    }
    out << j.dump(1) << '\n';
}

/// fci: E_FCI, E_HF and their gap.
inline int cmd_fci(const RunConfig &cfg, std::ostream &out) {
    const Problem p(cfg.fixture);
    out << std::setprecision(12);
    out << "E_FCI " << p.e_fci << " Ha\n";
    out << "E_HF  " << p.e_hf << " Ha\n";
    out << "gap   " << p.e_hf - p.e_fci << " Ha\n";
    return ok;
}

/// Outcome of one optimal-control run, as logged.
struct OcRun {
    nlohmann::json log;
    bool converged = false;
};

inline OcRun run_oc_single(const RunConfig &cfg, const Problem &p, const HamiltonianFamily &family,
                           const ControlModel &model, double total_time, std::size_t n_ctrl, std::uint64_t seed,
                           std::ostream &out) {
    const std::size_t n_steps = resolve_steps(cfg, total_time, n_ctrl);
    ObjectiveOptions oopts;
    oopts.backend = cfg.backend == "spectral" ? PropagationBackend::spectral : PropagationBackend::krylov;
    const EnergyObjective obj(family, p.h_mol_real, model, n_ctrl, n_steps, total_time, p.hf_state, oopts);
    const double threshold = cfg.tol_mha * 1e-3;

    std::vector<double> x0;
    if (cfg.control == "five_ingredient") {
        const auto s0 = init_parameters({n_ctrl, n_steps, total_time, p.ints.n_nuclei()}, seed);
        x0.assign(s0.parameters().begin(), s0.parameters().end());
    } else {
        std::mt19937_64 rng(seed);
        for (std::size_t k = 0; k < obj.n_params(); ++k) {
            x0.push_back(uniform01(rng));
        }
    }

    OptimizationReport rep;
    if (cfg.optimizer == "lbfgs") {
        LbfgsOptions lo;
        lo.max_iterations = cfg.max_iter;
        lo.reference_value = p.e_fci;
        lo.threshold = threshold;
        lo.max_step = cfg.max_step;
        lo.seed = seed;
        rep = run_lbfgs(
            [&](std::span<const double> x, std::span<double> g) {
                auto ev = obj.evaluate_adjoint(x);
                std::copy(ev.gradient.begin(), ev.gradient.end(), g.begin());
                return ev.value;
            },
            x0, lo);
    } else {
        DiffEvoOptions de;
        de.max_generations = cfg.max_iter;
        de.population = cfg.population;
        de.seed = seed;
        de.reference_value = p.e_fci;
        de.threshold = threshold;
        Bounds b{std::vector<double>(obj.n_params(), -cfg.bound), std::vector<double>(obj.n_params(), cfg.bound)};
        rep = run_diffevo([&](std::span<const double> x) { return obj.value(x); }, b, de);
    }

    const std::string tag = run_tag(total_time, n_ctrl, seed);
    PropagationOptions popts;
    popts.store_states = true; // for the H_mol spread below
    const Trajectory traj = obj.trajectory(rep.best_parameters, popts);
    const double error = std::abs(traj.final_molecular_energy - p.e_fci);
    const bool converged = error < threshold;

    nlohmann::json log;
    log["total_time"] = total_time;
    log["n_ctrl"] = n_ctrl;
    log["n_steps"] = n_steps;
    log["seed"] = seed;
    log["n_params"] = obj.n_params();
    log["report"] = to_json(rep, model.parameter_names());
    log["final_molecular_energy"] = traj.final_molecular_energy;
    log["error"] = error;
    log["converged"] = converged;
    log["mean_driving_norm"] = mean_driving_norm(traj);
    log["warnings"] = traj.warnings;
    try {
        const auto q = qsl_estimate(traj);
        log["qsl"] = {{"t_qsl", q.t_qsl},           {"t_evolution", q.t_evolution}, {"integral", q.integral},
                      {"quadrature", q.quadrature}, {"hamiltonian", "instantaneous"}};
    } catch (const DataError &e) {
        log["qsl"] = nullptr;
        log["warnings"].push_back(e.what());
    }
    // Same estimate with the spread of the static molecular Hamiltonian.
    try {
        const auto q = qsl_estimate(traj, p.h_mol_real);
        log["qsl_molecular"] = {{"t_qsl", q.t_qsl}, {"integral", q.integral}, {"hamiltonian", "molecular"}};
    } catch (const DataError &) {
        log["qsl_molecular"] = nullptr;
    }
    const auto cost = cost_model(std::max<std::uint64_t>(1, rep.n_iterations), obj.n_params(), p.ints.n_electrons,
                                 cfg.epsilon);
    log["cost"] = {{"eta", cost.eta},           {"epsilon", cost.epsilon},   {"m", cost.measurements},
                   {"iterations", cost.iterations}, {"n_params", cost.n_params}, {"circuits", cost.circuits},
                   {"runtime_class", cost.runtime_class}};
    const auto iter_file = "iterates_" + tag + ".csv";
    const auto traj_file = "trajectory_" + tag + ".csv";
    write_iterates_csv(rep, cfg.out / iter_file);
    write_trajectory_csv(traj, cfg.out / traj_file);
    log["iterates_csv"] = iter_file;
    log["trajectory_csv"] = traj_file;

    out << std::setprecision(6) << "T=" << total_time << " n_ctrl=" << n_ctrl << " seed=" << seed << "  "
        << to_string(rep.termination_reason) << " after " << rep.n_iterations << " it, |E-E_FCI|=" << error
        << " Ha, <|H|/|H_mol|>=" << log["mean_driving_norm"].get<double>() << "\n";
    return {std::move(log), converged};
}

/// oc: optimal control over every (T, n_ctrl, seed) combination.
inline int cmd_oc(const RunConfig &cfg, std::ostream &out) {
    validate_config(cfg);
    const Problem p(cfg.fixture);
    std::filesystem::create_directories(cfg.out);

    HamiltonianFamily family;
    std::unique_ptr<ControlModel> model;
    if (cfg.control == "five_ingredient") {
        family = build_five_ingredient_family(p.ints, p.h_mol);
        model = std::make_unique<FiveIngredientModel>(p.ints.n_nuclei());
    } else {
        family = build_attraction_family(p.ints, p.h_mol);
        model = std::make_unique<LinearModel>(1, std::vector<std::string>{"f"});
    }

    nlohmann::json log;
    log["schema_version"] = kRunlogSchemaVersion;
    log["command"] = "oc";
    log["config"] = to_json(cfg);
    log["fixture"] = fixture_block(cfg, p);
    log["chemical_accuracy"] = {{"mha_1", kChemicalAccuracy}, {"kcal_mol_1", kChemicalAccuracyKcal}};
    log["runs"] = nlohmann::json::array();

    bool any_converged = false;
    std::vector<SummaryRow> rows;
    for (double t : cfg.total_times) {
        for (auto n_ctrl : cfg.n_ctrls) {
            bool converged_here = false;
            for (auto seed : cfg.seeds) {
                auto run = run_oc_single(cfg, p, family, *model, t, n_ctrl, seed, out);
                converged_here = converged_here || run.converged;
                const auto &q = run.log["qsl"];
                rows.push_back({run_tag(t, n_ctrl, seed), q.is_null() ? 0.0 : q["t_qsl"].get<double>(), t,
                                run.log["n_params"].get<std::size_t>(), run.log["error"].get<double>()});
                log["runs"].push_back(std::move(run.log));
                write_json(log, cfg.out / "runlog.json");
                if (converged_here && cfg.stop_on_success) {
                    break;
                }
            }
            any_converged = any_converged || converged_here;
        }
    }
    out << format_summary(rows);
    return any_converged ? ok : no_convergence;
}

/// anneal: linear HF -> molecular annealing for every configured duration.
inline int cmd_anneal(const RunConfig &cfg, std::ostream &out) {
    const Problem p(cfg.fixture);
    std::filesystem::create_directories(cfg.out);
    const auto family = build_anneal_family(p.ints, p.h_mol);
    nlohmann::json log;
    log["schema_version"] = kRunlogSchemaVersion;
    log["command"] = "anneal";
    log["config"] = to_json(cfg);
    log["fixture"] = fixture_block(cfg, p);
    log["chemical_accuracy"] = {{"mha_1", kChemicalAccuracy}, {"kcal_mol_1", kChemicalAccuracyKcal}};
    log["runs"] = nlohmann::json::array();
    out << std::setprecision(10);
    for (double t : cfg.anneal_times) {
        AnnealConfig ac{t, std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(t / cfg.anneal_time_step - 1e-9)))};
        PropagationOptions popts;
        popts.store_states = false;
        const auto traj = anneal_run(family, p.h_mol_real, p.ints, ac, popts);
        std::ostringstream tag;
        tag << "anneal_T" << t << ".csv";
        write_trajectory_csv(traj, cfg.out / tag.str());
        const double err = std::abs(traj.final_molecular_energy - p.e_fci);
        log["runs"].push_back({{"total_time", t},
                               {"n_steps", ac.n_steps},
                               {"final_molecular_energy", traj.final_molecular_energy},
                               {"error", err},
                               {"mean_driving_norm", mean_driving_norm(traj)},
                               {"warnings", traj.warnings},
                               {"trajectory_csv", tag.str()}});
        out << "T=" << t << " E=" << traj.final_molecular_energy << " |E-E_FCI|=" << err << "\n";
    }
    write_json(log, cfg.out / "runlog.json");
    return ok;
}

inline nlohmann::json read_json(const std::filesystem::path &path) {
    std::ifstream in(path);
    if (!in) {
        throw FormatError("cannot open '" + path.string() + "'");
    }
    try {
        return nlohmann::json::parse(in);
    } catch (const nlohmann::json::exception &e) {
        throw FormatError("'" + path.string() + "' is not valid JSON: " + e.what());
    }
}

/// Structural check of a run log; throws FormatError naming the first problem.
inline void validate_runlog(const nlohmann::json &log) {
    auto need = [](const nlohmann::json &j, const std::string &key, auto pred, const std::string &what,
                   const std::string &where) {
        if (!j.contains(key) || !pred(j.at(key))) {
            throw FormatError("runlog: " + where + "'" + key + "' missing or not " + what);
        }
    };
    auto is_num = [](const nlohmann::json &v) { return v.is_number(); };
    auto is_int = [](const nlohmann::json &v) { return v.is_number_integer(); };
    auto is_str = [](const nlohmann::json &v) { return v.is_string(); };
    auto is_obj = [](const nlohmann::json &v) { return v.is_object(); };
    auto is_arr = [](const nlohmann::json &v) { return v.is_array(); };
    if (!log.is_object()) {
        throw FormatError("runlog: top level must be an object");
    }
    need(log, "schema_version", is_int, "an integer", "");
    if (log["schema_version"].get<int>() != kRunlogSchemaVersion) {
        throw FormatError("runlog: unsupported schema_version " + log["schema_version"].dump());
    }
    need(log, "command", is_str, "a string", "");
    need(log, "config", is_obj, "an object", "");
    need(log, "fixture", is_obj, "an object", "");
    for (const char *k : {"n_qubits", "n_electrons"}) {
        need(log["fixture"], k, is_int, "an integer", "fixture.");
    }
    for (const char *k : {"hf_energy", "fci_energy"}) {
        need(log["fixture"], k, is_num, "a number", "fixture.");
    }
    need(log, "runs", is_arr, "an array", "");
    const bool oc = log["command"] == "oc";
    for (const auto &run : log["runs"]) {
        need(run, "total_time", is_num, "a number", "runs[].");
        need(run, "final_molecular_energy", is_num, "a number", "runs[].");
        need(run, "error", is_num, "a number", "runs[].");
        need(run, "mean_driving_norm", is_num, "a number", "runs[].");
        need(run, "trajectory_csv", is_str, "a string", "runs[].");
        if (oc) {
            for (const char *k : {"n_ctrl", "n_steps", "seed", "n_params"}) {
                need(run, k, is_int, "an integer", "runs[].");
            }
            need(run, "report", is_obj, "an object", "runs[].");
            const auto &rep = run["report"];
            need(rep, "termination_reason", is_str, "a string", "runs[].report.");
            for (const char *k : {"n_iterations", "n_evaluations", "seed"}) {
                need(rep, k, is_int, "an integer", "runs[].report.");
            }
            need(rep, "best_parameters", is_arr, "an array", "runs[].report.");
            if (rep["best_parameters"].size() != run["n_params"].get<std::size_t>()) {
                throw FormatError("runlog: best_parameters length differs from n_params");
            }
            need(run, "iterates_csv", is_str, "a string", "runs[].");
        }
    }
}

/// qsl: speed-limit estimates for every trajectory in a run log, or for one CSV.
inline int cmd_qsl(const std::optional<std::filesystem::path> &runlog,
                   const std::optional<std::filesystem::path> &trajectory, std::ostream &out) {
    std::vector<std::pair<std::string, std::filesystem::path>> items;
    if (runlog) {
        const auto log = read_json(*runlog);
        validate_runlog(log);
        for (const auto &run : log["runs"]) {
            items.emplace_back(run["trajectory_csv"].get<std::string>(),
                               runlog->parent_path() / run["trajectory_csv"].get<std::string>());
        }
    }
    if (trajectory) {
        items.emplace_back(trajectory->filename().string(), *trajectory);
    }
    if (items.empty()) {
        throw DataError("qsl: give --runlog or --trajectory");
    }
    out << std::setprecision(6);
    for (const auto &[name, path] : items) {
        const auto q = qsl_estimate(read_trajectory_csv(path));
        out << name << "  T=" << q.t_evolution << "  T_QSL=" << q.t_qsl << "  ratio=" << q.t_qsl / q.t_evolution
            << "\n";
    }
    return ok;
}

/// cost: the measurement/circuit model for explicit numbers or for run logs.
/// With several run logs the circuit count is fitted against the qubit count.
inline int cmd_cost(const std::vector<std::filesystem::path> &runlogs, std::optional<std::uint64_t> iterations,
                    std::optional<std::uint64_t> params, std::optional<std::uint64_t> eta, double epsilon,
                    const std::optional<std::filesystem::path> &out_file, std::ostream &out) {
    nlohmann::json result;
    result["schema_version"] = kRunlogSchemaVersion;
    result["command"] = "cost";
    result["entries"] = nlohmann::json::array();
    auto emit = [&](const std::string &label, std::size_t n_qubits, const CostReport &c) {
        out << label << "  N=" << n_qubits << "  m=" << c.measurements << "  circuits=" << c.circuits << "  ("
            << c.runtime_class << ")\n";
        result["entries"].push_back({{"label", label},
                                     {"n_qubits", n_qubits},
                                     {"eta", c.eta},
                                     {"epsilon", c.epsilon},
                                     {"m", c.measurements},
                                     {"iterations", c.iterations},
                                     {"n_params", c.n_params},
                                     {"circuits", c.circuits},
                                     {"runtime_class", c.runtime_class}});
    };
    if (iterations || params || eta) {
        if (!iterations || !params || !eta) {
            throw DataError("cost: --iterations, --params and --eta go together");
        }
        emit("manual", 0, cost_model(*iterations, *params, *eta, epsilon));
    }
    std::vector<double> ns, circuits;
    for (const auto &path : runlogs) {
        const auto log = read_json(path);
        validate_runlog(log);
        if (log["command"] != "oc") {
            throw DataError("cost: run log '" + path.string() + "' is not an oc log");
        }
        // The cheapest converged run, else the best one.
        const nlohmann::json *pick = nullptr;
        for (const auto &run : log["runs"]) {
            const bool conv = run.value("converged", false);
            if (!pick) {
                pick = &run;
                continue;
            }
            const bool pick_conv = pick->value("converged", false);
            if ((conv && !pick_conv) ||
                (conv == pick_conv && conv && run["report"]["n_iterations"] < (*pick)["report"]["n_iterations"]) ||
                (!conv && !pick_conv && run["error"] < (*pick)["error"])) {
                pick = &run;
            }
        }
        if (!pick) {
            throw DataError("cost: run log '" + path.string() + "' has no runs");
        }
        const auto n_qubits = log["fixture"]["n_qubits"].get<std::size_t>();
        const auto k = std::max<std::uint64_t>(1, (*pick)["report"]["n_iterations"].get<std::uint64_t>());
        const auto c = cost_model(k, (*pick)["n_params"].get<std::uint64_t>(),
                                  log["fixture"]["n_electrons"].get<std::uint64_t>(), epsilon);
        emit(path.string(), n_qubits, c);
        ns.push_back(static_cast<double>(n_qubits));
        circuits.push_back(static_cast<double>(c.circuits));
    }
    if (ns.size() >= 2) {
        const auto fit = fit_power_law(ns, circuits);
        out << "fit: circuits ~ " << fit.prefactor << " N^" << fit.exponent << "  (R^2 " << fit.r_squared << ")\n";
        result["fit"] = {{"exponent", fit.exponent}, {"prefactor", fit.prefactor}, {"r_squared", fit.r_squared}};
    }
    if (result["entries"].empty()) {
        throw DataError("cost: nothing to evaluate");
    }
    if (out_file) {
        write_json(result, *out_file);
    }
    return ok;
}

/// validate: check a fixture, or the schema of a run log.
inline int cmd_validate(const std::optional<std::filesystem::path> &fixture,
                        const std::optional<std::filesystem::path> &runlog, std::ostream &out) {
    if (!fixture && !runlog) {
        throw DataError("validate: give --fixture or --runlog");
    }
    if (fixture) {
        const auto ints = parse_integral_file(*fixture);
        out << fixture->string() << ": ok (" << ints.n_spatial << " spatial orbitals, " << ints.n_electrons
            << " electrons, " << ints.n_nuclei() << " nuclei)\n";
    }
    if (runlog) {
        validate_runlog(read_json(*runlog));
        out << runlog->string() << ": ok\n";
    }
    return ok;
}

/// Map an exception to the documented exit code, printing the message.
inline int exit_code_for(const std::exception &e, std::ostream &err) {
    err << "error: " << e.what() << "\n";
    if (dynamic_cast<const IntegrityError *>(&e) || dynamic_cast<const ConvergenceError *>(&e)) {
        return integrity_error;
    }
    return data_error;
}

} // namespace qsc::cli
