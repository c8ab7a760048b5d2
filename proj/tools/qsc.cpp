// qsc: command-line front end. Settings resolve as built-in defaults, then
// the --config file, then explicit flags.

#include <iostream>

#include <CLI11.hpp>

#include "qsc/cli.hpp"

namespace {

struct Flags {
    std::string fixture;
    std::string config;
    std::string out;
    std::vector<std::uint64_t> seeds;
    std::vector<double> sweep_t;
    std::vector<std::size_t> sweep_nctrl;
    std::optional<std::size_t> max_iter;
    std::optional<double> tol_mha;
    std::optional<std::size_t> n_steps;
    std::string optimizer;
    std::string backend;
};

void add_run_flags(CLI::App *cmd, Flags &f) {
    cmd->add_option("--fixture", f.fixture, "MHX integral fixture");
    cmd->add_option("--config", f.config, "TOML run configuration")->check(CLI::ExistingFile);
    cmd->add_option("--out", f.out, "output directory");
    cmd->add_option("--seed", f.seeds, "seed(s); overrides the config list");
    cmd->add_option("--sweep-T", f.sweep_t, "total evolution time(s)");
    cmd->add_option("--sweep-nctrl", f.sweep_nctrl, "knot count(s)");
    cmd->add_option("--max-iter", f.max_iter, "optimizer iteration cap");
    cmd->add_option("--tol-mha", f.tol_mha, "convergence threshold in mHa");
    cmd->add_option("--n-steps", f.n_steps, "integration steps");
    cmd->add_option("--optimizer", f.optimizer, "lbfgs or diffevo");
    cmd->add_option("--backend", f.backend, "spectral or krylov");
}

qsc::cli::RunConfig resolve(const std::string &command, const Flags &f) {
    qsc::cli::RunConfig cfg;
    cfg.command = command;
    if (!f.config.empty()) {
        const std::filesystem::path path(f.config);
        qsc::cli::apply_config(cfg, qsc::parse_config_file(path), path.parent_path());
        if (cfg.command != command) {
            throw qsc::FormatError("config is for command '" + cfg.command + "', not '" + command + "'");
        }
    }
    if (!f.fixture.empty()) cfg.fixture = f.fixture;
    if (!f.out.empty()) cfg.out = f.out;
    if (!f.seeds.empty()) cfg.seeds = f.seeds;
    if (!f.sweep_t.empty()) {
        cfg.total_times = f.sweep_t;
        cfg.anneal_times = f.sweep_t;
    }
    if (!f.sweep_nctrl.empty()) cfg.n_ctrls = f.sweep_nctrl;
    if (f.max_iter) cfg.max_iter = *f.max_iter;
    if (f.tol_mha) cfg.tol_mha = *f.tol_mha;
    if (f.n_steps) cfg.n_steps = *f.n_steps;
    if (!f.optimizer.empty()) cfg.optimizer = f.optimizer;
    if (!f.backend.empty()) cfg.backend = f.backend;
    if (cfg.fixture.empty()) {
        throw qsc::DataError("no fixture given (--fixture or 'fixture' in the config)");
    }
    qsc::cli::validate_config(cfg);
    return cfg;
}

} // namespace

int main(int argc, char **argv) {
    CLI::App app{"quantum simulated cooling: optimal-control ground-state preparation"};
    app.require_subcommand(1);

    Flags fci_f, oc_f, anneal_f;
    auto *fci = app.add_subcommand("fci", "exact ground-state and HF energies of a fixture");
    fci->add_option("--fixture", fci_f.fixture, "MHX integral fixture")->required();
    auto *oc = app.add_subcommand("oc", "optimal-control cooling runs");
    add_run_flags(oc, oc_f);
    auto *anneal = app.add_subcommand("anneal", "linear HF-to-molecule annealing");
    add_run_flags(anneal, anneal_f);

    std::optional<std::string> qsl_log, qsl_traj;
    auto *qsl = app.add_subcommand("qsl", "quantum speed limit of logged trajectories");
    qsl->add_option("--runlog", qsl_log, "runlog.json");
    qsl->add_option("--trajectory", qsl_traj, "trajectory CSV");

    std::vector<std::string> cost_logs;
    std::optional<std::uint64_t> iterations, params, eta;
    double epsilon = 1e-3;
    std::optional<std::string> cost_out;
    auto *cost = app.add_subcommand("cost", "measurement and circuit counts");
    cost->add_option("--runlog", cost_logs, "oc run log(s); several give a scaling fit");
    cost->add_option("--iterations", iterations, "optimizer iterations K");
    cost->add_option("--params", params, "parameter count");
    cost->add_option("--eta", eta, "electron count");
    cost->add_option("--epsilon", epsilon, "energy precision (Ha)");
    cost->add_option("--out", cost_out, "write the result as JSON");

    std::optional<std::string> val_fixture, val_log;
    auto *validate = app.add_subcommand("validate", "check a fixture or a run log");
    validate->add_option("--fixture", val_fixture, "MHX integral fixture");
    validate->add_option("--runlog", val_log, "runlog.json");

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError &e) {
        const int rc = app.exit(e);
        return rc == 0 ? 0 : qsc::cli::data_error;
    }

    auto to_path = [](const std::optional<std::string> &s) {
        return s ? std::optional<std::filesystem::path>(*s) : std::nullopt;
    };
    try {
        if (*fci) {
            qsc::cli::RunConfig cfg;
            cfg.fixture = fci_f.fixture;
            return qsc::cli::cmd_fci(cfg, std::cout);
        }
        if (*oc) {
            return qsc::cli::cmd_oc(resolve("oc", oc_f), std::cout);
        }
        if (*anneal) {
            return qsc::cli::cmd_anneal(resolve("anneal", anneal_f), std::cout);
        }
        if (*qsl) {
            return qsc::cli::cmd_qsl(to_path(qsl_log), to_path(qsl_traj), std::cout);
        }
        if (*cost) {
            std::vector<std::filesystem::path> logs(cost_logs.begin(), cost_logs.end());
            return qsc::cli::cmd_cost(logs, iterations, params, eta, epsilon, to_path(cost_out), std::cout);
        }
        return qsc::cli::cmd_validate(to_path(val_fixture), to_path(val_log), std::cout);
    } catch (const std::exception &e) {
        return qsc::cli::exit_code_for(e, std::cerr);
    }
}
