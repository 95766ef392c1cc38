#pragma once

#include "mspgm/multiscale.hpp"
#include "mspgm/planner.hpp"
#include "mspgm/problem.hpp"

#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

namespace mspgm::harness {

enum class Mode { Brute, Multiscale };

std::string to_string(Mode mode);

struct EvalSpec {
    std::vector<double> points;
    int repetitions = 10;
    std::size_t paths = 1000;
};

/// Optional resource plan checked against the stage layout.
struct PlanSpec {
    bool present = false;
    Rational R = 2;
    std::vector<Rational> g;  // free values g_1..g_{K-1}
    /// Brute-force sample size J the budgets are measured against.
    std::size_t brute_paths = 100;
};

struct ExperimentConfig {
    std::string name = "experiment";
    Mode mode = Mode::Multiscale;
    int folds = 2;         // K
    int refinement = 10;   // N
    int steps = 100;       // final grid size; N^K in multiscale mode
    int threads = 1;
    std::filesystem::path output = "runs/experiment";

    std::string preset;    // empty = coefficients given explicitly
    LqParams problem;
    std::vector<double> init_lo{-10.0};
    std::vector<double> init_hi{10.0};

    std::uint64_t train_seed = 1;
    std::uint64_t eval_seed = 2;

    /// One entry per stage (brute mode: exactly one).
    std::vector<StageSpec> stages;
    EvalSpec eval;
    PlanSpec plan;

    /// Training problem: the LQ dynamics with X_0 ~ Unif(init_lo, init_hi).
    ControlProblem make_problem() const;
    /// The layout handed to run_kfold: (K, N) in multiscale mode, (1, steps) in brute mode.
    int run_folds() const { return mode == Mode::Brute ? 1 : folds; }
    int run_refinement() const { return mode == Mode::Brute ? steps : refinement; }
};

/// Parses sectioned key = value text. Syntax errors raise ConfigError with the line number;
/// unknown sections or keys and malformed values raise ConfigError naming "section.key".
ExperimentConfig parse_config(const std::string& text);

/// Cross-field checks: dimensions, N^K = steps, interval indices, plan feasibility.
/// Errors name the offending field path.
void validate(const ExperimentConfig& config);

/// Reads, parses and validates a config file.
ExperimentConfig validate_config(const std::filesystem::path& path);

/// Replaces the training seed and every stage seed derived from it.
void reseed(ExperimentConfig& config, std::uint64_t train_seed);
/// Caps worker threads everywhere (1 = serial reference mode).
void set_threads(ExperimentConfig& config, int threads);

/// Canonical text form; parse_config(to_text(c)) reproduces c.
std::string to_text(const ExperimentConfig& config);

}  // namespace mspgm::harness
