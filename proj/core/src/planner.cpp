#include "mspgm/planner.hpp"

#include "mspgm/error.hpp"

#include <cmath>
#include <sstream>

namespace mspgm {

namespace {

Rational power_of(int base, int exponent) {
    Rational out = 1;
    for (int i = 0; i < exponent; ++i) out *= base;
    return out;
}

}  // namespace

Rational parse_rational(const std::string& raw) {
    const auto first = raw.find_first_not_of(" \t");
    if (first == std::string::npos) throw InvalidArgument("rational: empty text");
    const std::string text = raw.substr(first, raw.find_last_not_of(" \t") - first + 1);
    try {
        const auto slash = text.find('/');
        if (slash != std::string::npos) {
            const boost::multiprecision::cpp_int num(text.substr(0, slash));
            const boost::multiprecision::cpp_int den(text.substr(slash + 1));
            if (den == 0) throw InvalidArgument("rational: zero denominator in '" + text + "'");
            return Rational(num, den);
        }
        const auto dot = text.find('.');
        if (dot == std::string::npos) return Rational(boost::multiprecision::cpp_int(text));
        const std::string frac = text.substr(dot + 1);
        std::string whole = text.substr(0, dot);
        const bool negative = !whole.empty() && whole.front() == '-';
        if (negative || (!whole.empty() && whole.front() == '+')) whole.erase(0, 1);
        if (whole.empty()) whole = "0";
        if (frac.find_first_not_of("0123456789") != std::string::npos) throw std::runtime_error("bad digits");
        Rational value{boost::multiprecision::cpp_int(whole)};
        if (!frac.empty()) {
            value += Rational(boost::multiprecision::cpp_int(frac)) / power_of(10, static_cast<int>(frac.size()));
        }
        return negative ? Rational(-value) : value;
    } catch (const InvalidArgument&) {
        throw;
    } catch (const std::exception&) {
        throw InvalidArgument("rational: cannot parse '" + text + "'");
    }
}

std::string to_string(const Rational& r) {
    std::ostringstream os;
    os << numerator(r);
    if (denominator(r) != 1) os << '/' << denominator(r);
    return os.str();
}

Rational AllocationPlan::cost_ratio() const {
    Rational total = 0;
    for (int k = 1; k <= K; ++k) total += a[static_cast<std::size_t>(k - 1)] / power_of(N, K - k);
    return total;
}

AllocationPlan make_plan(int K, int N, const Rational& R, std::vector<Rational> g_free) {
    if (K < 1) throw InvalidArgument("plan: K must be >= 1");
    if (N < 1) throw InvalidArgument("plan: N must be >= 1");
    if (R <= 0) throw InvalidArgument("plan: R must be positive");
    if (static_cast<int>(g_free.size()) != K - 1) {
        throw InvalidArgument("plan: expected " + std::to_string(K - 1) + " free g values");
    }
    AllocationPlan plan;
    plan.K = K;
    plan.N = N;
    plan.R = R;
    plan.g = std::move(g_free);
    plan.g.push_back(Rational(1) / R);

    Rational previous = 0;
    for (int k = 1; k <= K; ++k) {
        const Rational scaled = plan.g[static_cast<std::size_t>(k - 1)] / power_of(N, K - k);
        if (!(scaled > previous)) {
            std::string what = k == 1 ? "g_1 must be positive"
                                      : "chain requires g_" + std::to_string(k - 1) + "/N^" + std::to_string(K - k + 1) +
                                            " < g_" + std::to_string(k) + "/N^" + std::to_string(K - k);
            if (k == K) what += " (g_K = 1/R)";
            throw PlanError(static_cast<std::size_t>(k == K ? K - 1 : k), what);
        }
        previous = scaled;
    }
    Rational g_prev = 0;
    for (int k = 1; k <= K; ++k) {
        const Rational& gk = plan.g[static_cast<std::size_t>(k - 1)];
        plan.a.push_back(gk - g_prev / N);
        g_prev = gk;
    }
    return plan;
}

bool PlanReport::ok() const {
    for (const auto& c : checks) {
        if (!c.passed) return false;
    }
    return true;
}

std::string PlanReport::to_text() const {
    std::ostringstream os;
    for (const auto& c : checks) os << (c.passed ? "PASS " : "FAIL ") << c.name << ": " << c.detail << '\n';
    return os.str();
}

PlanReport verify_plan(const AllocationPlan& plan) {
    PlanReport report;
    const int K = plan.K;
    const int N = plan.N;
    const bool shaped = K >= 1 && N >= 1 && static_cast<int>(plan.g.size()) == K &&
                        static_cast<int>(plan.a.size()) == K;
    report.checks.push_back({"shape", shaped, "K=" + std::to_string(K) + " N=" + std::to_string(N)});
    if (!shaped) return report;
    auto g = [&](int k) { return k == 0 ? Rational(0) : plan.g[static_cast<std::size_t>(k - 1)]; };
    auto a = [&](int k) { return plan.a[static_cast<std::size_t>(k - 1)]; };

    {
        bool ok = g(K) == Rational(1) / plan.R;
        std::string detail = "g_K = " + to_string(g(K));
        Rational previous = 0;
        for (int k = 1; k <= K && ok; ++k) {
            const Rational scaled = g(k) / power_of(N, K - k);
            if (!(scaled > previous)) {
                ok = false;
                detail += "; violated at k=" + std::to_string(k);
            }
            previous = scaled;
        }
        report.checks.push_back({"chain", ok, detail});
    }
    {
        bool ok = true;
        std::string detail;
        for (int k = 1; k <= K; ++k) {
            if (a(k) != g(k) - g(k - 1) / N) ok = false;
            detail += (k > 1 ? " " : "") + std::string("a_") + std::to_string(k) + "=" + to_string(a(k));
        }
        report.checks.push_back({"increments", ok, detail});
    }
    {
        bool ok = true;
        for (int k = 1; k <= K; ++k) ok = ok && a(k) > 0;
        report.checks.push_back({"positive", ok, ok ? "all a_k > 0" : "some a_k <= 0"});
    }
    {
        const Rational total = plan.cost_ratio();
        const Rational target = Rational(1) / plan.R;
        report.checks.push_back(
            {"telescoping", total == target, "sum a_k N^-(K-k) = " + to_string(total) + ", 1/R = " + to_string(target)});
    }
    {
        // Coefficients of f(x) / (1 - x/N): c_j = sum_{i<=j} a_i N^{-(j-i)}.
        bool ok = true;
        std::string detail;
        const int extra = 3;
        for (int j = 1; j <= K + extra; ++j) {
            Rational c = 0;
            for (int i = 1; i <= std::min(j, K); ++i) c += a(i) / power_of(N, j - i);
            const Rational expected = j <= K ? g(j) : g(K) / power_of(N, j - K);
            if (c != expected) {
                ok = false;
                detail += "coefficient " + std::to_string(j) + " = " + to_string(c) + "; ";
            }
        }
        report.checks.push_back({"continuation", ok, ok ? "g_k = g_{k-1}/N for k > K" : detail});
    }
    return report;
}

HyperparamSuggestion budgets_to_hyperparams(const AllocationPlan& plan, std::span<const double> cost_ratios,
                                            std::size_t brute_paths, std::span<const double> interval_fractions) {
    const auto K = static_cast<std::size_t>(plan.K);
    if (cost_ratios.size() != K || interval_fractions.size() != K) {
        throw InvalidArgument("budgets: need one cost ratio and one interval fraction per stage");
    }
    if (brute_paths < 1) throw InvalidArgument("budgets: brute_paths must be >= 1");
    HyperparamSuggestion out;
    const double J = static_cast<double>(brute_paths);
    for (std::size_t k = 0; k < K; ++k) {
        const double ck = cost_ratios[k];
        const double Ik = k == 0 ? 1.0 : interval_fractions[k];
        if (!(ck > 0.0)) throw InvalidArgument("budgets: cost ratios must be positive");
        if (!(Ik > 0.0 && Ik <= 1.0)) throw InvalidArgument("budgets: interval fractions must lie in (0, 1]");
        StageBudget s;
        s.stage = static_cast<int>(k + 1);
        s.budget = plan.a[k];
        s.cost_ratio = ck;
        s.interval_fraction = Ik;
        const double JI = plan.a[k].convert_to<double>() * J / ck;
        if (JI < 1.0) {
            throw PlanError(k + 1, "stage " + std::to_string(k + 1) + " budget allows fewer than one path (J_k I_k = " +
                                       std::to_string(JI) + ")");
        }
        s.exact_paths = JI / Ik;
        s.paths = std::max(1L, std::lround(s.exact_paths));
        out.realized_ratio += ck * static_cast<double>(s.paths) * Ik / J /
                              std::pow(static_cast<double>(plan.N), static_cast<double>(plan.K) - static_cast<double>(k + 1));
        out.stages.push_back(s);
    }
    out.drift = out.realized_ratio - (Rational(1) / plan.R).convert_to<double>();
    return out;
}

std::uint64_t RunCost::total_ops() const {
    std::uint64_t total = 0;
    for (auto v : stage_ops) total += v;
    return total;
}

double RunCost::total_seconds() const {
    double total = 0.0;
    for (auto v : stage_seconds) total += v;
    return total;
}

CostRatio measure_cost_ratio(const RunCost& brute, const RunCost& multiscale) {
    if (brute.stage_ops.empty() || multiscale.stage_ops.empty()) throw InvalidArgument("cost ratio: missing op logs");
    if (brute.total_ops() == 0) throw InvalidArgument("cost ratio: brute-force run logged no operations");
    CostRatio out;
    out.ops = static_cast<double>(multiscale.total_ops()) / static_cast<double>(brute.total_ops());
    const double bs = brute.total_seconds();
    out.seconds = bs > 0.0 ? multiscale.total_seconds() / bs : 0.0;
    return out;
}

OpLawFit fit_op_law(std::span<const OpSample> samples) {
    if (samples.empty()) throw InvalidArgument("op law: no samples");
    double zz = 0.0;
    double zy = 0.0;
    for (const auto& s : samples) {
        const double z = static_cast<double>(s.steps) * static_cast<double>(s.paths);
        zz += z * z;
        zy += z * static_cast<double>(s.ops);
    }
    OpLawFit fit;
    fit.c = zy / zz;
    for (const auto& s : samples) {
        const double z = static_cast<double>(s.steps) * static_cast<double>(s.paths);
        const double y = static_cast<double>(s.ops);
        fit.max_residual = std::max(fit.max_residual, std::abs(y - fit.c * z) / y);
    }
    return fit;
}

}  // namespace mspgm
