// Command-line experiment runner: simulate | stability | linear | abstract | norms.

#include <chrono>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <optional>
#include <string>
#include <utility>

#include <CLI11.hpp>
#include <json.hpp>

#include "bdb/error.hpp"
#include "bdb/parallel.hpp"
#include "commands.hpp"
#include "experiment.hpp"

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point t) { return std::chrono::duration<double>(Clock::now() - t).count(); }

std::optional<int> env_threads() {
    const char* v = std::getenv("BDB_THREADS");
    if (!v || !*v) return std::nullopt;
    try {
        std::size_t used = 0;
        const int n = std::stoi(v, &used);
        if (used != std::string(v).size() || n < 1) throw std::invalid_argument("bad");
        return n;
    } catch (const std::exception&) {
        throw bdb::Error(bdb::ErrorCode::kConfig, std::string("BDB_THREADS: expected a positive integer, got '") + v + "'");
    }
}

}  // namespace

int main(int argc, char** argv) {
    using namespace bdb;
    using namespace bdb::cli;
    const auto start = Clock::now();

    CLI::App app{"Kinetic relaxation experiments: nonlinear runs, stability sweeps and verification suites"};
    std::string config_path;
    std::string out_dir;
    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    app.add_option("--config", config_path, "Experiment config (flat section.key = value)");
    app.add_option("--out", out_dir, "Output directory (overrides experiment.output)");
    app.add_option("--seed", seed, "Random seed (overrides experiment.seed)");
    app.add_option("--threads", threads, "Worker threads (falls back to BDB_THREADS)")->check(CLI::PositiveNumber);
    app.require_subcommand(1);
    const std::pair<const char*, const char*> commands[] = {
        {"simulate", "Run the nonlinear solver, write the trajectory and fit the decay"},
        {"stability", "Sweep criticality and Penrose margins over (lambda0, lambda1, U)"},
        {"linear", "Verify the linearized group: anti-symmetry, isometry, group law, resolvent"},
        {"abstract", "Run the finite-dimensional verification battery over seeds"},
        {"norms", "Analytic norm profile of the initial data; trajectory NDJSON to columns"},
    };
    for (const auto& [name, help] : commands) app.add_subcommand(name, help)->fallthrough();

    try {
        app.parse(argc, argv);
    } catch (const CLI::CallForHelp& e) {
        return app.exit(e);
    } catch (const CLI::ParseError& e) {
        app.exit(e);
        return kConfigError;
    }
    const std::string command = app.get_subcommands().front()->get_name();

    ExperimentConfig cfg;
    std::string dir;
    int threads_used = 1;
    try {
        const ConfigEntries entries = config_path.empty() ? ConfigEntries{} : parse_config_file(config_path);
        cfg = load_experiment(entries);
        if (!cfg.kind.empty() && cfg.kind != command)
            throw Error(ErrorCode::kConfig,
                        "experiment.kind: config is for '" + cfg.kind + "' but the command is '" + command + "'");
        if (seed) cfg.seed = *seed;
        if (threads)
            threads_used = *threads;
        else if (auto env = env_threads())
            threads_used = *env;
        else if (cfg.threads)
            threads_used = *cfg.threads;
        set_thread_count(threads_used);
        dir = out_dir.empty() ? cfg.output : out_dir;
        std::filesystem::create_directories(dir);
    } catch (const Error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    } catch (const std::filesystem::filesystem_error& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return kConfigError;
    }
    const double load_s = seconds_since(start);

    const auto run_start = Clock::now();
    CommandResult result;
    try {
        if (command == "simulate")
            result = cmd_simulate(cfg, dir);
        else if (command == "stability")
            result = cmd_stability(cfg, dir);
        else if (command == "linear")
            result = cmd_linear(cfg, dir);
        else if (command == "abstract")
            result = cmd_abstract(cfg, dir);
        else
            result = cmd_norms(cfg, dir);
    } catch (const Error& e) {
        result.exit_code = exit_code_for(e);
        result.message = e.code() == ErrorCode::kHypothesisViolated ? std::string("invariant violation: ") + e.what()
                                                                     : std::string(e.what());
    }
    const double run_s = seconds_since(run_start);

    nlohmann::json manifest = {{"command", command},
                               {"config", config_path},
                               {"config_hash", hex(cfg.hash)},
                               {"version", BDB_VERSION},
                               {"seed", cfg.seed},
                               {"threads", threads_used},
                               {"exit_code", result.exit_code},
                               {"outputs", result.outputs},
                               {"timings", {{"load_s", load_s}, {"run_s", run_s}, {"total_s", seconds_since(start)}}}};
    if (!result.message.empty()) manifest["message"] = result.message;
    std::ofstream(std::filesystem::path(dir) / "manifest.json") << manifest.dump(2) << '\n';

    if (!result.message.empty()) std::cerr << (result.exit_code == kOk ? "" : "error: ") << result.message << '\n';
    return result.exit_code;
}
