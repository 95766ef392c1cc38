#include "mspgm/harness/experiment.hpp"

#include "mspgm/error.hpp"
#include "mspgm/harness/io.hpp"
#include "mspgm/lq_oracle.hpp"
#include "mspgm/random.hpp"
#include "mspgm/train.hpp"

#include <charconv>
#include <cmath>
#include <sstream>

namespace mspgm::harness {

using mspgm::to_string;

namespace {

void say(const RunOptions& options, const std::string& message) {
    if (options.log) options.log(message);
}

double to_double(const std::string& text) {
    double v = 0.0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw Error("csv: bad number '" + text + "'");
    return v;
}

std::uint64_t to_u64(const std::string& text) {
    std::uint64_t v = 0;
    const auto [ptr, ec] = std::from_chars(text.data(), text.data() + text.size(), v);
    if (ec != std::errc() || ptr != text.data() + text.size()) throw Error("csv: bad integer '" + text + "'");
    return v;
}

std::string loss_csv(const std::vector<double>& history) {
    std::ostringstream os;
    os << "epoch,loss\n";
    for (std::size_t e = 0; e < history.size(); ++e) os << e << ',' << format_double(history[e]) << '\n';
    return os.str();
}

}  // namespace

std::string metrics_csv(const std::vector<MetricRow>& rows) {
    std::ostringstream os;
    os << "x0,rep,cost,stderr,oracle_value,rel_err,seed\n";
    for (const auto& r : rows) {
        os << format_double(r.x0) << ',' << r.rep << ',' << format_double(r.cost) << ',' << format_double(r.std_error)
           << ',' << format_double(r.oracle_value) << ',' << format_double(r.rel_err) << ',' << r.seed << '\n';
    }
    return os.str();
}

std::vector<MetricRow> read_metrics(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t cx = t.column("x0"), cr = t.column("rep"), cc = t.column("cost"), cs = t.column("stderr"),
                      co = t.column("oracle_value"), ce = t.column("rel_err"), cd = t.column("seed");
    std::vector<MetricRow> out;
    for (const auto& row : t.rows) {
        MetricRow m;
        m.x0 = to_double(row[cx]);
        m.rep = static_cast<int>(to_u64(row[cr]));
        m.cost = to_double(row[cc]);
        m.std_error = to_double(row[cs]);
        m.oracle_value = to_double(row[co]);
        m.rel_err = to_double(row[ce]);
        m.seed = to_u64(row[cd]);
        out.push_back(m);
    }
    return out;
}

RunCost read_ops(const std::filesystem::path& path) {
    const CsvTable t = read_csv(path);
    const std::size_t co = t.column("ops"), cs = t.column("seconds");
    RunCost cost;
    for (const auto& row : t.rows) {
        cost.stage_ops.push_back(to_u64(row[co]));
        cost.stage_seconds.push_back(to_double(row[cs]));
    }
    return cost;
}

std::string plan_report(const ExperimentConfig& config) {
    std::ostringstream os;
    const int K = config.run_folds();
    const int N = config.run_refinement();
    os << "layout: K=" << K << " N=" << N << " final steps=" << config.steps << "\n";

    // Budgets realized by the configured layout, assuming equal per-step cost in every stage.
    const std::size_t J = config.plan.present ? config.plan.brute_paths : config.stages.front().paths;
    Rational realized = 0;
    int coarse = 1;
    for (int k = 1; k <= K; ++k) {
        const StageSpec& s = config.stages[static_cast<std::size_t>(k - 1)];
        const Rational I = k == 1 || s.intervals.empty() ? Rational(1)
                                                          : Rational(static_cast<long long>(s.intervals.size()), coarse);
        const Rational a = Rational(static_cast<long long>(s.paths)) * I / static_cast<long long>(J);
        Rational scale = 1;
        for (int j = k; j < K; ++j) scale /= N;
        realized += a * scale;
        os << "stage " << k << ": J_k=" << s.paths << " I_k=" << to_string(I) << " J_k I_k / J=" << to_string(a)
           << "\n";
        coarse *= N;
    }
    os << "configured ratio (J=" << J << ", equal c_k) = " << to_string(realized) << " ~ "
       << format_double(realized.convert_to<double>()) << "\n";

    if (!config.plan.present) {
        os << "no plan section\n";
        return os.str();
    }
    const AllocationPlan plan = make_plan(K, N, config.plan.R, config.plan.g);
    os << "plan R=" << to_string(plan.R) << "\n";
    for (int k = 1; k <= K; ++k) {
        os << "  g_" << k << "=" << to_string(plan.g[static_cast<std::size_t>(k - 1)]) << "  a_" << k << "="
           << to_string(plan.a[static_cast<std::size_t>(k - 1)]) << "\n";
    }
    os << verify_plan(plan).to_text();
    os << "target ratio 1/R = " << to_string(Rational(1) / plan.R) << "; configured layout "
       << (realized <= Rational(1) / plan.R ? "meets" : "exceeds") << " it\n";
    return os.str();
}

std::vector<ValueErrorRow> value_errors(const MultiScaleResult& result, const LqSolution& oracle) {
    constexpr int probes = 21;
    Matrix xs(1, probes);
    for (int j = 0; j < probes; ++j) xs(0, j) = -1.0 + 2.0 * j / (probes - 1);
    std::vector<ValueErrorRow> rows;
    for (const auto& s : result.stages) {
        if (!s.has_value) continue;
        for (int i = 0; i <= s.grid.n; ++i) {
            const double t = s.grid.nodes[static_cast<std::size_t>(i)];
            Tape tape;
            const Var x = tape.constant(xs);
            const Matrix fit = s.value_net.forward(t, std::span<const Var>(&x, 1), false)[0].value();
            double acc = 0.0;
            for (int j = 0; j < probes; ++j) {
                const double v = lq_value(oracle, t, xs(0, j));
                acc += std::abs(fit(0, j) - v) / std::max(std::abs(v), 1.0);
            }
            rows.push_back({s.stage, i, t, acc / probes});
        }
    }
    return rows;
}

RunArtifact run_experiment(const ExperimentConfig& config, const RunOptions& options) {
    validate(config);
    RunArtifact art;
    art.dir = config.output;
    const ControlProblem problem = config.make_problem();

    say(options, "training " + to_string(config.mode) + " pipeline");
    art.result = run_kfold(problem, config.run_folds(), config.run_refinement(), config.stages);
    art.cost = art.result.cost();
    for (const auto& s : art.result.stages) {
        art.diverged.push_back(s.policy.diverged || s.value_report.diverged);
        say(options, "stage " + std::to_string(s.stage) + ": " + std::to_string(s.ops) + " ops, " +
                         format_double(s.seconds) + " s");
    }

    const LqSolution sol = solve_riccati(config.problem, 1000);
    const TimeGrid grid = make_grid(config.problem.horizon, config.steps);
    const NetPolicy policy(art.result.policy(), false);
    say(options, "evaluating");
    for (std::size_t i = 0; i < config.eval.points.size(); ++i) {
        const double x0 = config.eval.points[i];
        const double v = lq_value(sol, 0.0, x0);
        for (int r = 0; r < config.eval.repetitions; ++r) {
            const std::uint64_t seed = derive_seed(config.eval_seed, i, static_cast<std::uint64_t>(r));
            const Evaluation e =
                evaluate_policy(problem, grid, policy, std::span<const double>(&x0, 1), config.eval.paths, seed,
                                config.threads);
            MetricRow row;
            row.x0 = x0;
            row.rep = r;
            row.cost = e.mean;
            row.std_error = e.std_error;
            row.oracle_value = v;
            row.rel_err = (e.mean - v) / std::max(std::abs(v), 1e-12);
            row.seed = seed;
            art.metrics.push_back(row);
        }
    }
    art.plan_report = plan_report(config);
    art.value_errors = value_errors(art.result, sol);

    if (!options.write_files) return art;

    const auto& dir = config.output;
    std::filesystem::create_directories(dir);
    write_text(dir / "config.ini", to_text(config));
    write_text(dir / "metrics.csv", metrics_csv(art.metrics));
    {
        std::ostringstream os;
        os << "stage,ops,seconds\n";
        for (std::size_t k = 0; k < art.cost.stage_ops.size(); ++k) {
            os << k + 1 << ',' << art.cost.stage_ops[k] << ',' << format_double(art.cost.stage_seconds[k]) << '\n';
        }
        write_text(dir / "ops.csv", os.str());
    }
    for (const auto& s : art.result.stages) {
        const std::string stem = "stage" + std::to_string(s.stage);
        write_network(dir / (stem + "_policy"), s.policy.net);
        write_text(dir / (stem + "_loss.csv"), loss_csv(s.policy.loss_history));
        if (s.has_value) {
            write_network(dir / (stem + "_value"), s.value_net);
            write_text(dir / (stem + "_value_loss.csv"), loss_csv(s.value_report.loss_history));
        }
    }
    {
        std::ostringstream os;
        os << "stage,node,t,mean_rel_err\n";
        for (const auto& e : art.value_errors) {
            os << e.stage << ',' << e.node << ',' << format_double(e.t) << ',' << format_double(e.mean_rel_err) << '\n';
        }
        write_text(dir / "value_error.csv", os.str());
    }
    write_text(dir / "plan_report.txt", art.plan_report);
    {
        std::ostringstream os;
        os << "name = " << config.name << "\nmode = " << to_string(config.mode) << "\n";
        for (std::size_t k = 0; k < art.result.stages.size(); ++k) {
            const auto& s = art.result.stages[k];
            os << "stage" << s.stage << ": steps=" << s.grid.n << " intervals=" << s.intervals.size()
               << " best_epoch=" << s.policy.best_epoch << " diverged=" << (art.diverged[k] ? "yes" : "no")
               << " ops=" << s.ops << "\n";
        }
        os << "total_ops = " << art.cost.total_ops() << "\ntotal_seconds = " << format_double(art.cost.total_seconds())
           << "\n";
        write_text(dir / "summary.txt", os.str());
    }
    return art;
}

}  // namespace mspgm::harness
