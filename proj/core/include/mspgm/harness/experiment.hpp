#pragma once

#include "mspgm/harness/config.hpp"
#include "mspgm/lq_oracle.hpp"
#include "mspgm/multiscale.hpp"
#include "mspgm/planner.hpp"

#include <cstdint>
#include <filesystem>
#include <functional>
#include <string>
#include <vector>

namespace mspgm::harness {

struct MetricRow {
    double x0 = 0.0;
    int rep = 0;
    double cost = 0.0;
    double std_error = 0.0;
    double oracle_value = 0.0;
    double rel_err = 0.0;
    std::uint64_t seed = 0;
};

/// Mean relative error (denominator floored at 1) of a fitted value net against the
/// closed-form value on x in [-1, 1].
struct ValueErrorRow {
    int stage = 1;
    int node = 0;
    double t = 0.0;
    double mean_rel_err = 0.0;
};

struct RunArtifact {
    std::filesystem::path dir;
    std::vector<MetricRow> metrics;
    RunCost cost;
    std::vector<bool> diverged;
    MultiScaleResult result;
    std::string plan_report;
    std::vector<ValueErrorRow> value_errors;
};

struct RunOptions {
    /// Write the artifact files under config.output.
    bool write_files = true;
    /// Progress messages; null for silence.
    std::function<void(const std::string&)> log;
};

/// Trains the configured pipeline, evaluates the final policy at every eval point for every
/// repetition (rep r at point i uses seed derive_seed(eval_seed, i, r) so two runs share
/// noise), and writes:
///   config.ini, metrics.csv, ops.csv, summary.txt, plan_report.txt,
///   stage<k>_policy.{bin,txt}, stage<k>_loss.csv, and for stages feeding a successor
///   stage<k>_value.{bin,txt}, stage<k>_value_loss.csv, value_error.csv.
RunArtifact run_experiment(const ExperimentConfig& config, const RunOptions& options = {});

std::vector<ValueErrorRow> value_errors(const MultiScaleResult& result, const LqSolution& oracle);

std::string metrics_csv(const std::vector<MetricRow>& rows);
std::vector<MetricRow> read_metrics(const std::filesystem::path& path);
RunCost read_ops(const std::filesystem::path& path);

/// Plan, its invariant report, and the budgets realized by the configured stage layout
/// (equal per-step cost for every stage).
std::string plan_report(const ExperimentConfig& config);

}  // namespace mspgm::harness
