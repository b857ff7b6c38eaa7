#pragma once

#include <string>
#include <vector>

#include "bdb/error.hpp"
#include "experiment.hpp"

namespace bdb::cli {

enum ExitCode : int { kOk = 0, kCheckFailure = 1, kConfigError = 2, kRuntimeFailure = 3 };

struct CommandResult {
    int exit_code = kOk;
    std::vector<std::string> outputs;  // file names written into the output directory
    std::string message;               // printed to stderr when non-empty
};

/// Each command writes its files into `dir` (which must exist) and returns the exit code it wants.
/// Library errors propagate; main maps them onto exit codes.
CommandResult cmd_simulate(const ExperimentConfig& cfg, const std::string& dir);
CommandResult cmd_stability(const ExperimentConfig& cfg, const std::string& dir);
CommandResult cmd_linear(const ExperimentConfig& cfg, const std::string& dir);
CommandResult cmd_abstract(const ExperimentConfig& cfg, const std::string& dir);
CommandResult cmd_norms(const ExperimentConfig& cfg, const std::string& dir);

/// Error category to exit code: configuration and hypothesis violations give 2, blow-up, non-finite
/// data, failed contraction and non-realizable moments during a run give 3.
int exit_code_for(const Error& e);

}  // namespace bdb::cli
