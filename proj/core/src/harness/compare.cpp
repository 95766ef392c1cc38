#include "mspgm/harness/compare.hpp"

#include "mspgm/error.hpp"
#include "mspgm/harness/experiment.hpp"
#include "mspgm/harness/io.hpp"
#include "mspgm/lq_oracle.hpp"

#include <cmath>
#include <map>
#include <sstream>

namespace mspgm::harness {

namespace {

struct Aggregate {
    double mean = 0.0;
    double std_error = 0.0;
    double oracle = 0.0;
};

std::map<double, Aggregate> aggregate(const std::vector<MetricRow>& rows, std::map<double, std::vector<int>>& reps) {
    std::map<double, std::vector<const MetricRow*>> by_x;
    for (const auto& r : rows) by_x[r.x0].push_back(&r);
    std::map<double, Aggregate> out;
    for (const auto& [x, group] : by_x) {
        Aggregate a;
        double var = 0.0;
        for (const MetricRow* r : group) {
            a.mean += r->cost;
            var += r->std_error * r->std_error;
            a.oracle = r->oracle_value;
            reps[x].push_back(r->rep);
        }
        const auto n = static_cast<double>(group.size());
        a.mean /= n;
        a.std_error = std::sqrt(var) / n;
        out[x] = a;
    }
    return out;
}

}  // namespace

Comparison compare_runs(const std::filesystem::path& dir_a, const std::filesystem::path& dir_b) {
    Comparison c;
    c.label_a = dir_a.filename().string();
    c.label_b = dir_b.filename().string();
    if (c.label_a.empty()) c.label_a = dir_a.parent_path().filename().string();
    if (c.label_b.empty()) c.label_b = dir_b.parent_path().filename().string();
    std::map<double, std::vector<int>> reps_a;
    std::map<double, std::vector<int>> reps_b;
    const auto a = aggregate(read_metrics(dir_a / "metrics.csv"), reps_a);
    const auto b = aggregate(read_metrics(dir_b / "metrics.csv"), reps_b);
    if (reps_a != reps_b) throw Error("compare: runs were evaluated on different grids");
    for (const auto& [x, ga] : a) {
        const Aggregate& gb = b.at(x);
        ComparisonRow row;
        row.x0 = x;
        row.mean_a = ga.mean;
        row.stderr_a = ga.std_error;
        row.mean_b = gb.mean;
        row.stderr_b = gb.std_error;
        row.oracle_value = ga.oracle;
        const double scale = std::max(std::abs(ga.oracle), 1e-12);
        row.rel_err_a = (ga.mean - ga.oracle) / scale;
        row.rel_err_b = (gb.mean - ga.oracle) / scale;
        row.diff = ga.mean - gb.mean;
        c.rows.push_back(row);
    }
    if (std::filesystem::exists(dir_a / "ops.csv") && std::filesystem::exists(dir_b / "ops.csv")) {
        c.ratio = measure_cost_ratio(read_ops(dir_b / "ops.csv"), read_ops(dir_a / "ops.csv"));
    }
    return c;
}

PlotSpec comparison_plot(const Comparison& comparison) {
    PlotSpec spec;
    spec.title = "Evaluated cost vs initial state";
    spec.x_label = "x0";
    spec.y_label = "cost";
    PlotSeries oracle{"closed form V(0, x)", {}, {}, {}, "#000000", false};
    PlotSeries a{comparison.label_a, {}, {}, {}, "#d62728", true};
    PlotSeries b{comparison.label_b, {}, {}, {}, "#1f77b4", true};
    for (const auto& r : comparison.rows) {
        oracle.x.push_back(r.x0);
        oracle.y.push_back(r.oracle_value);
        a.x.push_back(r.x0);
        a.y.push_back(r.mean_a);
        a.err.push_back(r.stderr_a);
        b.x.push_back(r.x0);
        b.y.push_back(r.mean_b);
        b.err.push_back(r.stderr_b);
    }
    spec.series = {oracle, a, b};
    return spec;
}

void write_comparison(const Comparison& comparison, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    CsvTable table;
    table.header = {"x0",      "mean_" + comparison.label_a, "stderr_" + comparison.label_a,
                    "mean_" + comparison.label_b, "stderr_" + comparison.label_b, "oracle_value",
                    "rel_err_" + comparison.label_a, "rel_err_" + comparison.label_b, "diff"};
    for (const auto& r : comparison.rows) {
        table.rows.push_back({format_double(r.x0), format_double(r.mean_a), format_double(r.stderr_a),
                              format_double(r.mean_b), format_double(r.stderr_b), format_double(r.oracle_value),
                              format_double(r.rel_err_a), format_double(r.rel_err_b), format_double(r.diff)});
    }
    write_csv(out / "comparison.csv", table);

    std::ostringstream os;
    if (comparison.ratio) {
        os << "op_ratio (" << comparison.label_a << " / " << comparison.label_b
           << ") = " << format_double(comparison.ratio->ops) << "\n"
           << "time_ratio (" << comparison.label_a << " / " << comparison.label_b
           << ") = " << format_double(comparison.ratio->seconds) << "\n";
    } else {
        os << "op logs unavailable\n";
    }
    write_text(out / "ratios.txt", os.str());
    write_text(out / "comparison.svg", render_svg(comparison_plot(comparison)));
}

void write_oracle_only(const LqParams& params, const std::vector<double>& points, const std::filesystem::path& out) {
    std::filesystem::create_directories(out);
    const LqSolution sol = solve_riccati(params, 1000);
    CsvTable table;
    table.header = {"x0", "oracle_value"};
    PlotSeries series{"closed form V(0, x)", {}, {}, {}, "#000000", false};
    for (double x : points) {
        const double v = lq_value(sol, 0.0, x);
        table.rows.push_back({format_double(x), format_double(v)});
        series.x.push_back(x);
        series.y.push_back(v);
    }
    write_csv(out / "oracle.csv", table);
    PlotSpec spec;
    spec.title = "Closed-form value at t = 0";
    spec.x_label = "x0";
    spec.y_label = "V(0, x)";
    spec.series = {series};
    write_text(out / "oracle.svg", render_svg(spec));
}

}  // namespace mspgm::harness
