#pragma once

#include <boost/multiprecision/cpp_int.hpp>

#include <cstdint>
#include <span>
#include <string>
#include <vector>

namespace mspgm {

using Rational = boost::multiprecision::cpp_rational;

/// Parses "p/q", an integer, or a finite decimal such as "0.25" into an exact rational.
Rational parse_rational(const std::string& text);
std::string to_string(const Rational& r);

/// Resource schedule for a K-fold run that is R times cheaper than brute force.
/// g = (g_1, ..., g_K) with g_K = 1/R; a_k = g_k - g_{k-1} / N (g_0 = 0) is the budget
/// c_k J_k I_k / (c J) of stage k, where I_k is the fraction of intervals trained.
struct AllocationPlan {
    int K = 1;
    int N = 1;
    Rational R = 1;
    std::vector<Rational> g;
    std::vector<Rational> a;

    /// Total cost relative to brute force: sum_k a_k N^{-(K - k)}.
    Rational cost_ratio() const;
};

/// Builds the plan from the free parameters g_1..g_{K-1}. Throws PlanError naming the first
/// (1-based) index at which 0 < g_1/N^{K-1} < ... < g_{K-1}/N < 1/R fails.
AllocationPlan make_plan(int K, int N, const Rational& R, std::vector<Rational> g_free);

struct PlanCheck {
    std::string name;
    bool passed = false;
    std::string detail;
};

struct PlanReport {
    std::vector<PlanCheck> checks;
    bool ok() const;
    std::string to_text() const;
};

/// Re-derives every invariant of a plan in exact arithmetic: chain ordering, a_k
/// increments, positivity, the telescoping identity, and agreement of the power-series
/// coefficients of f(x) / (1 - x/N) (f(x) = sum a_k x^k) with g_k for k <= K and with the
/// continuation g_{k} = g_{k-1} / N beyond K.
PlanReport verify_plan(const AllocationPlan& plan);

struct StageBudget {
    int stage = 1;
    Rational budget;            // a_k
    double cost_ratio = 1.0;    // c_k / c
    double interval_fraction = 1.0;  // I_k
    double exact_paths = 0.0;   // a_k c J / (c_k I_k)
    long paths = 0;             // rounded J_k
};

struct HyperparamSuggestion {
    std::vector<StageBudget> stages;
    double realized_ratio = 0.0;  // with rounded J_k
    double drift = 0.0;           // realized_ratio - 1/R
};

/// Solves c_k J_k I_k / (c J) = a_k for J_k given measured c_k / c and chosen I_k
/// (I_1 is forced to 1). Throws PlanError when J_k I_k < 1 for some stage.
HyperparamSuggestion budgets_to_hyperparams(const AllocationPlan& plan, std::span<const double> cost_ratios,
                                            std::size_t brute_paths, std::span<const double> interval_fractions);

/// Logged cost of one run: per-stage primitive-op counts and wall-clock seconds.
struct RunCost {
    std::vector<std::uint64_t> stage_ops;
    std::vector<double> stage_seconds;

    std::uint64_t total_ops() const;
    double total_seconds() const;
};

struct CostRatio {
    double ops = 0.0;
    double seconds = 0.0;
};

/// (sum of multi-scale stage ops) / (brute ops) and the same for wall-clock time.
CostRatio measure_cost_ratio(const RunCost& brute, const RunCost& multiscale);

struct OpSample {
    int steps = 1;
    std::size_t paths = 1;
    std::uint64_t ops = 0;
};

struct OpLawFit {
    double c = 0.0;             // ops ~ c n J (least squares through the origin)
    double max_residual = 0.0;  // max |ops - c n J| / ops
};

OpLawFit fit_op_law(std::span<const OpSample> samples);

}  // namespace mspgm
