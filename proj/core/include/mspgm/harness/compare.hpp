#pragma once

#include "mspgm/harness/svg_plot.hpp"
#include "mspgm/planner.hpp"
#include "mspgm/problem.hpp"

#include <filesystem>
#include <optional>
#include <string>
#include <vector>

namespace mspgm::harness {

struct ComparisonRow {
    double x0 = 0.0;
    double mean_a = 0.0;
    double stderr_a = 0.0;
    double mean_b = 0.0;
    double stderr_b = 0.0;
    double oracle_value = 0.0;
    double rel_err_a = 0.0;
    double rel_err_b = 0.0;
    double diff = 0.0;  // mean_a - mean_b
};

struct Comparison {
    std::string label_a = "A";
    std::string label_b = "B";
    std::vector<ComparisonRow> rows;
    /// A relative to B; present when both runs have ops.csv.
    std::optional<CostRatio> ratio;
};

/// Per-point mean over repetitions with the standard error of that mean
/// (sqrt(sum se_r^2) / reps). Throws Error when the eval grids differ.
Comparison compare_runs(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b);

/// comparison.csv, ratios.txt and comparison.svg under `out`.
void write_comparison(const Comparison& comparison, const std::filesystem::path& out);

PlotSpec comparison_plot(const Comparison& comparison);

/// Closed-form V(0, x) only: oracle.csv and oracle.svg under `out`.
void write_oracle_only(const LqParams& params, const std::vector<double>& points, const std::filesystem::path& out);

}  // namespace mspgm::harness
