#pragma once

#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <utility>
#include <vector>

#include "bdb/abstract.hpp"
#include "bdb/gevrey.hpp"
#include "bdb/grid.hpp"
#include "bdb/model.hpp"
#include "bdb/solver.hpp"

namespace bdb::cli {

/// Raw `section.key = value` entries with the line each came from.
struct ConfigEntries {
    std::map<std::string, std::pair<std::string, int>> values;
};

/// Grammar: one `section.key = value` per line; `#` starts a comment; blank lines are ignored;
/// keys are [a-z0-9_.] with exactly one dot; a repeated key is an error. Throws Error(kConfig).
ConfigEntries parse_config_text(const std::string& text);
ConfigEntries parse_config_file(const std::string& path);

/// FNV-1a (64 bit) of the canonical form: sorted `key=value` lines.
std::uint64_t config_hash(const ConfigEntries& entries);
std::string hex(std::uint64_t v);

struct ModePerturbation {
    int mode = 1;
    double amplitude = 0.0;
};

struct StabilitySweep {
    std::vector<double> lambda0{0.0};
    std::vector<double> lambda1{0.0, 0.5, 1.0};
    std::vector<double> U{0.5, 1.0};
    int np = 256;
    /// Coarse Penrose sample grid (gamma x tau x |eta| counts); the library default when 0.
    int penrose_gamma = 8;
    int penrose_tau = 21;
    int penrose_eta = 10;
};

struct LinearSuite {
    int samples = 20;
    /// Relative tolerance for every check; 0 forces the failure path.
    double tolerance = 1e-9;
};

struct AbstractSuite {
    int seeds = 1;
    int trials = 20;
    int max_order = 4;
    /// Replace one generator by a matrix that does not commute with the others (validation path).
    bool inject_noncommuting = false;
};

struct NormsSuite {
    int points = 21;
    std::string trajectory;  // optional NDJSON trajectory to convert into columns
};

struct ExperimentConfig {
    std::string kind;  // simulate | stability | linear | abstract | norms
    std::string output = "out";
    std::uint64_t seed = 1;
    std::optional<int> threads;

    ModelParams model;
    PhaseGrid grid{1, 64, 64, 1.0};
    SolverConfig solver;
    bool transformed = false;
    /// tau0 for the decay bound: "auto" (measured), "none", or a number.
    std::string tau0 = "auto";
    int tau0_depth = 6;

    std::vector<ModePerturbation> modes;
    double random_amplitude = 0.0;
    std::string snapshot;

    StabilitySweep stability;
    LinearSuite linear;
    AbstractSuite abstract_suite;
    NormsSuite norms;

    std::uint64_t hash = 0;
};

/// Applies entries over the defaults, rejecting unknown keys (the message names the key and line)
/// and re-validating model, grid, solver and schedule invariants.
ExperimentConfig load_experiment(const ConfigEntries& entries);

/// All keys the loader accepts, for documentation and tests.
const std::vector<std::string>& known_keys();

/// F + sum of configured mode perturbations (cos(2 pi k x_1 / Lx)(1 + cos(2 pi p_1)/2)) plus optional
/// seeded random smooth noise, or the snapshot field when one is configured.
PhaseGridFunction initial_data(const ExperimentConfig& cfg, double* start_time = nullptr);

}  // namespace bdb::cli
