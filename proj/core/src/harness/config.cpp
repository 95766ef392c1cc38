#include "mspgm/harness/config.hpp"

#include "mspgm/error.hpp"
#include "mspgm/random.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <charconv>
#include <cmath>
#include <fstream>
#include <map>
#include <optional>
#include <set>
#include <sstream>

namespace mspgm::harness {

namespace pt = boost::property_tree;

std::string to_string(Mode mode) { return mode == Mode::Brute ? "brute" : "multiscale"; }

namespace {

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split_list(const std::string& text) {
    std::vector<std::string> out;
    std::string current;
    for (char c : text) {
        if (c == ',' || c == ' ' || c == '\t') {
            if (!current.empty()) out.push_back(current);
            current.clear();
        } else {
            current.push_back(c);
        }
    }
    if (!current.empty()) out.push_back(current);
    return out;
}

double parse_double(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    double value = 0.0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size() || !std::isfinite(value)) {
        throw ConfigError(field, 0, "expected a finite number, got '" + text + "'");
    }
    return value;
}

long long parse_int(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    long long value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw ConfigError(field, 0, "expected an integer, got '" + text + "'");
    }
    return value;
}

std::uint64_t parse_seed(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    std::uint64_t value = 0;
    const auto [ptr, ec] = std::from_chars(t.data(), t.data() + t.size(), value);
    if (ec != std::errc() || ptr != t.data() + t.size()) {
        throw ConfigError(field, 0, "expected a non-negative integer, got '" + text + "'");
    }
    return value;
}

bool parse_bool(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "1" || t == "yes") return true;
    if (t == "false" || t == "0" || t == "no") return false;
    throw ConfigError(field, 0, "expected true or false, got '" + text + "'");
}

std::vector<double> parse_doubles(const std::string& field, const std::string& text) {
    std::vector<double> out;
    for (const auto& item : split_list(text)) out.push_back(parse_double(field, item));
    if (out.empty()) throw ConfigError(field, 0, "expected at least one number");
    return out;
}

std::vector<int> parse_ints(const std::string& field, const std::string& text) {
    std::vector<int> out;
    for (const auto& item : split_list(text)) out.push_back(static_cast<int>(parse_int(field, item)));
    return out;
}

// "lo:hi:step" or an explicit list.
std::vector<double> parse_points(const std::string& field, const std::string& text) {
    const std::string t = trim(text);
    if (t.find(':') == std::string::npos) return parse_doubles(field, t);
    std::vector<std::string> parts;
    std::stringstream ss(t);
    for (std::string item; std::getline(ss, item, ':');) parts.push_back(item);
    if (parts.size() != 3) throw ConfigError(field, 0, "range must be lo:hi:step");
    const double lo = parse_double(field, parts[0]);
    const double hi = parse_double(field, parts[1]);
    const double step = parse_double(field, parts[2]);
    if (!(step > 0.0) || hi < lo) throw ConfigError(field, 0, "range needs lo <= hi and step > 0");
    const auto count = static_cast<long long>(std::floor((hi - lo) / step + 1e-9)) + 1;
    if (count > 100000) throw ConfigError(field, 0, "range has too many points");
    std::vector<double> out;
    for (long long i = 0; i < count; ++i) out.push_back(lo + static_cast<double>(i) * step);
    return out;
}

Activation parse_activation(const std::string& field, const std::string& text) {
    try {
        return activation_from_string(trim(text));
    } catch (const Error&) {
        throw ConfigError(field, 0, "unknown activation '" + text + "'");
    }
}

// Stage fields that may appear in [network]/[training] as defaults and in [stageK] as overrides.
struct StageDefaults {
    std::vector<int> hidden{50, 50};
    Activation activation = Activation::Tanh;
    std::vector<int> value_hidden{50, 50};
    Activation value_activation = Activation::Tanh;
    int epochs = 300;
    int value_epochs = 300;
    OptimizerConfig optimizer{OptimizerConfig::Kind::Adam, 5e-3, 0.9, 0.999, 1e-8};
    double value_learning_rate = 5e-3;
    std::size_t batch_size = 0;
    std::size_t value_batch_size = 0;
    bool fixed_samples = false;
    std::size_t chunk_paths = 256;
};

void apply_stage_key(StageDefaults& d, const std::string& key, const std::string& value, const std::string& field) {
    if (key == "hidden") {
        d.hidden = parse_ints(field, value);
    } else if (key == "activation") {
        d.activation = parse_activation(field, value);
    } else if (key == "value_hidden") {
        d.value_hidden = parse_ints(field, value);
    } else if (key == "value_activation") {
        d.value_activation = parse_activation(field, value);
    } else if (key == "epochs") {
        d.epochs = static_cast<int>(parse_int(field, value));
    } else if (key == "value_epochs") {
        d.value_epochs = static_cast<int>(parse_int(field, value));
    } else if (key == "optimizer") {
        const std::string v = trim(value);
        if (v == "adam") {
            d.optimizer.kind = OptimizerConfig::Kind::Adam;
        } else if (v == "sgd") {
            d.optimizer.kind = OptimizerConfig::Kind::Sgd;
        } else {
            throw ConfigError(field, 0, "optimizer must be adam or sgd");
        }
    } else if (key == "learning_rate") {
        d.optimizer.learning_rate = parse_double(field, value);
    } else if (key == "beta1") {
        d.optimizer.beta1 = parse_double(field, value);
    } else if (key == "beta2") {
        d.optimizer.beta2 = parse_double(field, value);
    } else if (key == "epsilon") {
        d.optimizer.epsilon = parse_double(field, value);
    } else if (key == "value_learning_rate") {
        d.value_learning_rate = parse_double(field, value);
    } else if (key == "batch_size") {
        d.batch_size = static_cast<std::size_t>(parse_seed(field, value));
    } else if (key == "value_batch_size") {
        d.value_batch_size = static_cast<std::size_t>(parse_seed(field, value));
    } else if (key == "fixed_samples") {
        d.fixed_samples = parse_bool(field, value);
    } else if (key == "chunk_paths") {
        d.chunk_paths = static_cast<std::size_t>(parse_seed(field, value));
    } else {
        throw ConfigError(field, 0, "unknown key");
    }
}

bool is_stage_key(const std::string& key) {
    static const std::set<std::string> keys{"hidden",        "activation",    "value_hidden", "value_activation",
                                            "epochs",        "value_epochs",  "optimizer",    "learning_rate",
                                            "beta1",         "beta2",         "epsilon",      "value_learning_rate",
                                            "batch_size",    "value_batch_size", "fixed_samples", "chunk_paths"};
    return keys.count(key) > 0;
}

StageSpec make_stage(const StageDefaults& d, int stage, std::uint64_t train_seed, int threads) {
    StageSpec s;
    s.arch = NetArch::make(1, d.hidden, 1, d.activation);
    s.value_arch = NetArch::make(1, d.value_hidden, 1, d.value_activation);
    s.train.epochs = d.epochs;
    s.train.optimizer = d.optimizer;
    s.train.batch_size = d.batch_size;
    s.train.fixed_samples = d.fixed_samples;
    s.train.chunk_paths = d.chunk_paths;
    s.train.threads = threads;
    s.train.seed = derive_seed(train_seed, static_cast<std::uint64_t>(stage), 0);
    s.value = s.train;
    s.value.epochs = d.value_epochs;
    s.value.optimizer.learning_rate = d.value_learning_rate;
    s.value.batch_size = d.value_batch_size;
    s.value.seed = derive_seed(s.train.seed, 1);
    return s;
}

std::string join(const std::vector<int>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + std::to_string(v[i]);
    return out;
}

std::string fmt(double v) {
    char buf[32];
    std::snprintf(buf, sizeof buf, "%.17g", v);
    return buf;
}

std::string join(const std::vector<double>& v) {
    std::string out;
    for (std::size_t i = 0; i < v.size(); ++i) out += (i ? ", " : "") + fmt(v[i]);
    return out;
}

std::vector<int> hidden_of(const NetArch& arch) {
    return std::vector<int>(arch.layer_sizes.begin() + 1, arch.layer_sizes.end() - 1);
}

}  // namespace

ControlProblem ExperimentConfig::make_problem() const {
    return make_lq_problem(problem, Distribution::uniform(init_lo, init_hi));
}

ExperimentConfig parse_config(const std::string& text) {
    pt::ptree tree;
    {
        std::istringstream in(text);
        try {
            pt::read_ini(in, tree);
        } catch (const pt::ini_parser_error& e) {
            throw ConfigError("", e.line(), e.message());
        }
    }

    ExperimentConfig c;
    StageDefaults defaults;
    std::map<int, const pt::ptree*> stage_sections;

    static const std::set<std::string> sections{"experiment", "problem", "seeds", "network", "training", "eval", "plan"};
    for (const auto& [name, section] : tree) {
        if (section.empty() && !section.data().empty()) {
            throw ConfigError(name, 0, "key outside of any section");
        }
        if (name.rfind("stage", 0) == 0) {
            const std::string suffix = name.substr(5);
            const long long k = parse_int(name, suffix);
            if (k < 1 || k > 16) throw ConfigError(name, 0, "stage index must be in 1..16");
            stage_sections[static_cast<int>(k)] = &section;
        } else if (sections.count(name) == 0) {
            throw ConfigError(name, 0, "unknown section");
        }
    }

    bool explicit_coefficients = false;
    if (auto s = tree.get_child_optional("problem")) {
        if (auto preset = s->get_optional<std::string>("preset")) {
            c.preset = trim(*preset);
            try {
                c.problem = lq_preset(c.preset);
            } catch (const Error&) {
                throw ConfigError("problem.preset", 0, "unknown preset '" + c.preset + "'");
            }
        }
    }

    for (const auto& [name, section] : tree) {
        if (name.rfind("stage", 0) == 0) continue;
        for (const auto& [key, node] : section) {
            const std::string field = name + "." + key;
            const std::string value = node.data();
            if (name == "experiment") {
                if (key == "name") {
                    c.name = trim(value);
                } else if (key == "mode") {
                    const std::string v = trim(value);
                    if (v == "brute") {
                        c.mode = Mode::Brute;
                    } else if (v == "multiscale") {
                        c.mode = Mode::Multiscale;
                    } else {
                        throw ConfigError(field, 0, "mode must be brute or multiscale");
                    }
                } else if (key == "folds") {
                    c.folds = static_cast<int>(parse_int(field, value));
                } else if (key == "refinement") {
                    c.refinement = static_cast<int>(parse_int(field, value));
                } else if (key == "steps") {
                    c.steps = static_cast<int>(parse_int(field, value));
                } else if (key == "threads") {
                    c.threads = static_cast<int>(parse_int(field, value));
                } else if (key == "output") {
                    c.output = trim(value);
                } else {
                    throw ConfigError(field, 0, "unknown key");
                }
            } else if (name == "problem") {
                LqParams& P = c.problem;
                const std::map<std::string, double*> coefficients{
                    {"a", &P.a},         {"b", &P.b},         {"A", &P.A},         {"B", &P.B},
                    {"alpha", &P.alpha}, {"beta", &P.beta},   {"p", &P.p},         {"q", &P.q},
                    {"sigma", &P.sigma}, {"horizon", &P.horizon}};
                if (key == "preset") {
                    continue;
                } else if (auto it = coefficients.find(key); it != coefficients.end()) {
                    *it->second = parse_double(field, value);
                    explicit_coefficients = true;
                } else if (key == "init_lo") {
                    c.init_lo = parse_doubles(field, value);
                } else if (key == "init_hi") {
                    c.init_hi = parse_doubles(field, value);
                } else {
                    throw ConfigError(field, 0, "unknown key");
                }
            } else if (name == "seeds") {
                if (key == "train") {
                    c.train_seed = parse_seed(field, value);
                } else if (key == "eval") {
                    c.eval_seed = parse_seed(field, value);
                } else {
                    throw ConfigError(field, 0, "unknown key");
                }
            } else if (name == "network" || name == "training") {
                if (!is_stage_key(key)) throw ConfigError(field, 0, "unknown key");
                apply_stage_key(defaults, key, value, field);
            } else if (name == "eval") {
                if (key == "points") {
                    c.eval.points = parse_points(field, value);
                } else if (key == "repetitions") {
                    c.eval.repetitions = static_cast<int>(parse_int(field, value));
                } else if (key == "paths") {
                    c.eval.paths = static_cast<std::size_t>(parse_seed(field, value));
                } else {
                    throw ConfigError(field, 0, "unknown key");
                }
            } else if (name == "plan") {
                c.plan.present = true;
                try {
                    if (key == "R") {
                        c.plan.R = parse_rational(trim(value));
                    } else if (key == "brute_paths") {
                        c.plan.brute_paths = static_cast<std::size_t>(parse_seed(field, value));
                    } else if (key == "g") {
                        c.plan.g.clear();
                        for (const auto& item : split_list(value)) c.plan.g.push_back(parse_rational(item));
                    } else {
                        throw ConfigError(field, 0, "unknown key");
                    }
                } catch (const InvalidArgument& e) {
                    throw ConfigError(field, 0, e.what());
                }
            }
        }
    }
    if (explicit_coefficients && !c.preset.empty()) c.preset += "+overrides";
    if (c.eval.points.empty()) c.eval.points = parse_points("eval.points", "-1:1:0.1");

    for (const auto& [k, section] : stage_sections) {
        StageDefaults d = defaults;
        StageSpec extra;
        extra.paths = 0;
        std::optional<std::uint64_t> seed;
        for (const auto& [key, node] : *section) {
            const std::string field = "stage" + std::to_string(k) + "." + key;
            if (key == "paths") {
                extra.paths = static_cast<std::size_t>(parse_seed(field, node.data()));
            } else if (key == "intervals") {
                extra.intervals = parse_ints(field, node.data());
            } else if (key == "sim_paths") {
                extra.sim_paths = static_cast<std::size_t>(parse_seed(field, node.data()));
            } else if (key == "seed") {
                seed = parse_seed(field, node.data());
            } else if (is_stage_key(key)) {
                apply_stage_key(d, key, node.data(), field);
            } else {
                throw ConfigError(field, 0, "unknown key");
            }
        }
        if (static_cast<int>(c.stages.size()) + 1 != k) {
            throw ConfigError("stage" + std::to_string(c.stages.size() + 1), 0, "missing stage section");
        }
        StageSpec s = make_stage(d, k, c.train_seed, c.threads);
        if (seed) {
            // An explicit stage seed replaces the one derived from [seeds] train.
            s.train.seed = *seed;
            s.value.seed = derive_seed(*seed, 1);
        }
        s.paths = extra.paths;
        s.intervals = extra.intervals;
        s.sim_paths = extra.sim_paths;
        c.stages.push_back(std::move(s));
    }
    return c;
}

void validate(const ExperimentConfig& c) {
    try {
        c.problem.validate();
    } catch (const Error& e) {
        throw ConfigError("problem", 0, e.what());
    }
    if (c.init_lo.size() != 1 || c.init_hi.size() != 1) {
        throw ConfigError("problem.init_lo", 0, "the LQ problem is scalar: give one bound each");
    }
    if (!(c.init_lo[0] < c.init_hi[0])) throw ConfigError("problem.init_hi", 0, "init_lo must be below init_hi");
    if (c.threads < 1) throw ConfigError("experiment.threads", 0, "must be >= 1");
    if (c.steps < 1) throw ConfigError("experiment.steps", 0, "must be >= 1");
    if (c.eval.repetitions < 1) throw ConfigError("eval.repetitions", 0, "must be >= 1");
    if (c.eval.paths < 2) throw ConfigError("eval.paths", 0, "must be >= 2");
    if (c.stages.empty()) throw ConfigError("stage1", 0, "missing stage section");

    if (c.mode == Mode::Multiscale) {
        if (c.folds < 2) throw ConfigError("experiment.folds", 0, "multiscale mode needs at least 2 folds");
        if (c.refinement < 1) throw ConfigError("experiment.refinement", 0, "must be >= 1");
        long long nk = 1;
        for (int k = 0; k < c.folds; ++k) {
            nk *= c.refinement;
            if (nk > 1'000'000) throw ConfigError("experiment.refinement", 0, "refinement^folds is too large");
        }
        if (nk != c.steps) {
            throw ConfigError("experiment.steps", 0,
                              "refinement^folds = " + std::to_string(nk) + " but steps = " + std::to_string(c.steps));
        }
        if (static_cast<int>(c.stages.size()) != c.folds) {
            throw ConfigError("stage" + std::to_string(c.stages.size() + 1), 0,
                              "expected " + std::to_string(c.folds) + " stage sections");
        }
    } else if (c.stages.size() != 1) {
        throw ConfigError("stage2", 0, "brute mode takes exactly one stage section");
    }

    int coarse = 1;
    for (std::size_t k = 0; k < c.stages.size(); ++k) {
        const std::string prefix = "stage" + std::to_string(k + 1) + ".";
        const StageSpec& s = c.stages[k];
        if (s.paths < 1) throw ConfigError(prefix + "paths", 0, "must be >= 1");
        if (s.train.epochs < 0) throw ConfigError(prefix + "epochs", 0, "must be >= 0");
        if (s.value.epochs < 0) throw ConfigError(prefix + "value_epochs", 0, "must be >= 0");
        if (!(s.train.optimizer.learning_rate > 0.0)) throw ConfigError(prefix + "learning_rate", 0, "must be positive");
        if (!(s.value.optimizer.learning_rate > 0.0)) {
            throw ConfigError(prefix + "value_learning_rate", 0, "must be positive");
        }
        if (s.train.chunk_paths < 1) throw ConfigError(prefix + "chunk_paths", 0, "must be >= 1");
        if (s.train.batch_size > s.paths) throw ConfigError(prefix + "batch_size", 0, "exceeds paths");
        for (int h : hidden_of(s.arch)) {
            if (h < 1) throw ConfigError(prefix + "hidden", 0, "layer widths must be >= 1");
        }
        for (int h : hidden_of(s.value_arch)) {
            if (h < 1) throw ConfigError(prefix + "value_hidden", 0, "layer widths must be >= 1");
        }
        if (k == 0 && !s.intervals.empty()) throw ConfigError(prefix + "intervals", 0, "stage 1 trains on all of [0, T]");
        const std::set<int> unique(s.intervals.begin(), s.intervals.end());
        if (unique.size() != s.intervals.size()) throw ConfigError(prefix + "intervals", 0, "duplicate interval");
        for (int i : s.intervals) {
            if (i < 0 || i >= coarse) {
                throw ConfigError(prefix + "intervals", 0,
                                  "interval " + std::to_string(i) + " outside [0, " + std::to_string(coarse) + ")");
            }
        }
        coarse *= c.run_refinement();
    }

    if (c.plan.present) {
        if (c.plan.brute_paths < 1) throw ConfigError("plan.brute_paths", 0, "must be >= 1");
        try {
            const AllocationPlan plan = make_plan(c.run_folds(), c.run_refinement(), c.plan.R, c.plan.g);
            (void)plan;
        } catch (const PlanError& e) {
            throw ConfigError("plan.g", 0, std::string(e.what()));
        } catch (const InvalidArgument& e) {
            throw ConfigError("plan", 0, e.what());
        }
    }
}

void reseed(ExperimentConfig& config, std::uint64_t train_seed) {
    config.train_seed = train_seed;
    for (std::size_t k = 0; k < config.stages.size(); ++k) {
        StageSpec& s = config.stages[k];
        s.train.seed = derive_seed(train_seed, k + 1, 0);
        s.value.seed = derive_seed(s.train.seed, 1);
    }
}

void set_threads(ExperimentConfig& config, int threads) {
    config.threads = threads;
    for (auto& s : config.stages) {
        s.train.threads = threads;
        s.value.threads = threads;
    }
}

ExperimentConfig validate_config(const std::filesystem::path& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", 0, "cannot open " + path.string());
    std::stringstream buffer;
    buffer << in.rdbuf();
    ExperimentConfig c = parse_config(buffer.str());
    validate(c);
    return c;
}

std::string to_text(const ExperimentConfig& c) {
    std::ostringstream os;
    os << "[experiment]\n"
       << "name = " << c.name << "\n"
       << "mode = " << to_string(c.mode) << "\n"
       << "folds = " << c.folds << "\n"
       << "refinement = " << c.refinement << "\n"
       << "steps = " << c.steps << "\n"
       << "threads = " << c.threads << "\n"
       << "output = " << c.output.string() << "\n\n";
    const LqParams& P = c.problem;
    os << "[problem]\n";
    if (!c.preset.empty()) os << "; derived from preset " << c.preset << "\n";
    os
       << "a = " << fmt(P.a) << "\nb = " << fmt(P.b) << "\nA = " << fmt(P.A) << "\nB = " << fmt(P.B)
       << "\nalpha = " << fmt(P.alpha) << "\nbeta = " << fmt(P.beta) << "\np = " << fmt(P.p) << "\nq = " << fmt(P.q)
       << "\nsigma = " << fmt(P.sigma) << "\nhorizon = " << fmt(P.horizon) << "\n"
       << "init_lo = " << join(c.init_lo) << "\ninit_hi = " << join(c.init_hi) << "\n\n";
    os << "[seeds]\ntrain = " << c.train_seed << "\neval = " << c.eval_seed << "\n\n";
    os << "[eval]\npoints = " << join(c.eval.points) << "\nrepetitions = " << c.eval.repetitions
       << "\npaths = " << c.eval.paths << "\n\n";
    if (c.plan.present) {
        os << "[plan]\nR = " << mspgm::to_string(c.plan.R) << "\ng = ";
        for (std::size_t i = 0; i < c.plan.g.size(); ++i) os << (i ? ", " : "") << mspgm::to_string(c.plan.g[i]);
        os << "\nbrute_paths = " << c.plan.brute_paths << "\n\n";
    }
    for (std::size_t k = 0; k < c.stages.size(); ++k) {
        const StageSpec& s = c.stages[k];
        os << "[stage" << k + 1 << "]\n"
           << "paths = " << s.paths << "\n";
        if (!s.intervals.empty()) os << "intervals = " << join(s.intervals) << "\n";
        if (s.sim_paths > 0) os << "sim_paths = " << s.sim_paths << "\n";
        os << "seed = " << s.train.seed << "\n"
           << "hidden = " << join(hidden_of(s.arch)) << "\n"
           << "activation = " << to_string(s.arch.activation) << "\n"
           << "value_hidden = " << join(hidden_of(s.value_arch)) << "\n"
           << "value_activation = " << to_string(s.value_arch.activation) << "\n"
           << "epochs = " << s.train.epochs << "\n"
           << "value_epochs = " << s.value.epochs << "\n"
           << "optimizer = " << (s.train.optimizer.kind == OptimizerConfig::Kind::Adam ? "adam" : "sgd") << "\n"
           << "learning_rate = " << fmt(s.train.optimizer.learning_rate) << "\n"
           << "beta1 = " << fmt(s.train.optimizer.beta1) << "\n"
           << "beta2 = " << fmt(s.train.optimizer.beta2) << "\n"
           << "epsilon = " << fmt(s.train.optimizer.epsilon) << "\n"
           << "value_learning_rate = " << fmt(s.value.optimizer.learning_rate) << "\n"
           << "batch_size = " << s.train.batch_size << "\n"
           << "value_batch_size = " << s.value.batch_size << "\n"
           << "fixed_samples = " << (s.train.fixed_samples ? "true" : "false") << "\n"
           << "chunk_paths = " << s.train.chunk_paths << "\n\n";
    }
    return os.str();
}

}  // namespace mspgm::harness
