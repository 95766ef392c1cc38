// mspgm: run, compare and inspect multi-scale policy-gradient experiments.

#include "mspgm/error.hpp"
#include "mspgm/harness/compare.hpp"
#include "mspgm/harness/config.hpp"
#include "mspgm/harness/experiment.hpp"
#include "mspgm/harness/io.hpp"
#include "mspgm/lq_oracle.hpp"
#include "mspgm/planner.hpp"

#include <CLI11.hpp>

#include <filesystem>
#include <iostream>
#include <optional>

namespace fs = std::filesystem;
using namespace mspgm;

namespace {

// A preset name or a config file whose [problem] section defines the coefficients.
LqParams load_params(const std::string& source) {
    for (const auto& name : lq_preset_names()) {
        if (name == source) return lq_preset(source);
    }
    if (!fs::exists(source)) throw Error("'" + source + "' is neither a preset nor a config file");
    return harness::parse_config(harness::read_text(source)).problem;
}

int cmd_run(const std::string& path, std::optional<std::uint64_t> seed, std::optional<int> threads,
            const std::string& out) {
    harness::ExperimentConfig config = harness::validate_config(path);
    if (seed) harness::reseed(config, *seed);
    if (threads) harness::set_threads(config, *threads);
    if (!out.empty()) config.output = out;
    harness::RunOptions options;
    options.log = [](const std::string& m) { std::cerr << m << '\n'; };
    const harness::RunArtifact art = harness::run_experiment(config, options);
    std::cout << "wrote " << art.dir.string() << " (" << art.metrics.size() << " metric rows, "
              << art.cost.total_ops() << " ops)\n";
    for (bool d : art.diverged) {
        if (d) {
            std::cerr << "training diverged in at least one stage; see summary.txt\n";
            return 3;
        }
    }
    return 0;
}

int cmd_compare(const std::vector<std::string>& dirs, const std::string& params, const std::string& out) {
    const fs::path target = out.empty() ? fs::path("comparison") : fs::path(out);
    if (dirs.empty()) {
        if (params.empty()) throw Error("compare: give two run directories, or --params for oracle-only mode");
        std::vector<double> points;
        for (int i = -10; i <= 10; ++i) points.push_back(i / 10.0);
        harness::write_oracle_only(load_params(params), points, target);
        std::cout << "wrote " << (target / "oracle.svg").string() << '\n';
        return 0;
    }
    if (dirs.size() != 2) throw Error("compare: expected exactly two run directories");
    const harness::Comparison c = harness::compare_runs(dirs[0], dirs[1]);
    harness::write_comparison(c, target);
    std::cout << "x0,mean_a,mean_b,oracle,rel_err_a,rel_err_b\n";
    for (const auto& r : c.rows) {
        std::cout << harness::format_double(r.x0) << ',' << r.mean_a << ',' << r.mean_b << ',' << r.oracle_value << ','
                  << r.rel_err_a << ',' << r.rel_err_b << '\n';
    }
    if (c.ratio) std::cout << "op ratio " << c.ratio->ops << ", time ratio " << c.ratio->seconds << '\n';
    return 0;
}

int cmd_plan(int K, int N, const std::string& R, const std::vector<std::string>& g) {
    std::vector<Rational> free;
    for (const auto& v : g) free.push_back(parse_rational(v));
    try {
        const AllocationPlan plan = make_plan(K, N, parse_rational(R), free);
        std::cout << "k,g_k,a_k\n";
        for (int k = 0; k < K; ++k) {
            std::cout << k + 1 << ',' << to_string(plan.g[static_cast<std::size_t>(k)]) << ','
                      << to_string(plan.a[static_cast<std::size_t>(k)]) << '\n';
        }
        const PlanReport report = verify_plan(plan);
        std::cout << report.to_text();
        return report.ok() ? 0 : 1;
    } catch (const PlanError& e) {
        std::cerr << "infeasible plan (index " << e.index() << "): " << e.what() << '\n';
        return 1;
    }
}

int cmd_oracle(const std::string& source, int mesh, const std::string& out) {
    const LqParams params = load_params(source);
    const LqSolution sol = solve_riccati(params, mesh);
    harness::CsvTable table;
    table.header = {"t", "f", "h", "k"};
    const int rows = 20;
    for (int i = 0; i <= rows; ++i) {
        const double t = params.horizon * i / rows;
        const RiccatiPoint c = sol.at(t);
        table.rows.push_back({harness::format_double(t), harness::format_double(c.f), harness::format_double(c.h),
                              harness::format_double(c.k)});
    }
    if (out.empty()) {
        for (const auto& h : table.header) std::cout << h << (h == "k" ? "\n" : ",");
        for (const auto& r : table.rows) std::cout << r[0] << ',' << r[1] << ',' << r[2] << ',' << r[3] << '\n';
    } else {
        fs::create_directories(out);
        harness::write_csv(fs::path(out) / "riccati.csv", table);
        std::cout << "wrote " << (fs::path(out) / "riccati.csv").string() << '\n';
    }
    const RiccatiPoint r = riccati_residual(sol);
    std::cerr << "max residual f " << r.f << " h " << r.h << " k " << r.k << '\n';
    return 0;
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"Multi-scale policy gradient experiments for continuous-time stochastic control"};
    app.require_subcommand(1);
    app.fallthrough();

    std::optional<std::uint64_t> seed;
    std::optional<int> threads;
    std::string out;
    app.add_option("--seed", seed, "Override the training seed");
    app.add_option("--threads", threads, "Worker threads (1 = serial reference mode)")->check(CLI::PositiveNumber);
    app.add_option("--out", out, "Output directory");

    std::string config_path;
    auto* run = app.add_subcommand("run", "Train and evaluate the pipeline described by a config file");
    run->add_option("config", config_path, "Config file")->required()->check(CLI::ExistingFile);

    std::vector<std::string> dirs;
    std::string params;
    auto* compare = app.add_subcommand("compare", "Compare two run directories against the closed form");
    compare->add_option("dirs", dirs, "Run directories A and B");
    compare->add_option("--params", params, "Preset or config for oracle-only mode");

    int K = 2;
    int N = 10;
    std::string R;
    std::vector<std::string> g;
    auto* plan = app.add_subcommand("plan", "Build and verify a resource-allocation plan");
    plan->add_option("K", K, "Number of folds")->required();
    plan->add_option("N", N, "Refinement per fold")->required();
    plan->add_option("R", R, "Target speed-up (rational, e.g. 2 or 3/2)")->required();
    plan->add_option("g", g, "Free values g_1 .. g_{K-1}");

    std::string source;
    int mesh = 1000;
    auto* oracle = app.add_subcommand("oracle", "Tabulate the closed-form LQ solution");
    oracle->add_option("params", source, "Preset name or config file")->required();
    oracle->add_option("--mesh", mesh, "Integration steps")->check(CLI::Range(100, 10'000'000));

    CLI11_PARSE(app, argc, argv);

    try {
        if (*run) return cmd_run(config_path, seed, threads, out);
        if (*compare) return cmd_compare(dirs, params, out);
        if (*plan) return cmd_plan(K, N, R, g);
        if (*oracle) return cmd_oracle(source, mesh, out);
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << '\n';
        return 2;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << '\n';
        return 1;
    }
    return 0;
}
