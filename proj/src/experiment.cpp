#include "sindyrl/experiment.hpp"

#include <boost/property_tree/ini_parser.hpp>
#include <boost/property_tree/ptree.hpp>

#include <algorithm>
#include <charconv>
#include <cmath>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <functional>
#include <map>
#include <mutex>
#include <numeric>
#include <set>
#include <sstream>
#include <thread>

namespace fs = std::filesystem;

namespace sindyrl {

namespace {

// ---------------------------------------------------------------------------
// Scalar text conversions

std::string fmt(double v) {
    if (std::isnan(v)) return "nan";
    if (std::isinf(v)) return v > 0 ? "inf" : "-inf";
    char buf[64];
    const auto r = std::to_chars(buf, buf + sizeof buf, v);
    return std::string(buf, r.ptr);
}

std::string trim(const std::string& s) {
    const auto b = s.find_first_not_of(" \t\r\n");
    if (b == std::string::npos) return "";
    const auto e = s.find_last_not_of(" \t\r\n");
    return s.substr(b, e - b + 1);
}

std::vector<std::string> split(const std::string& text, char sep) {
    std::vector<std::string> out;
    std::string item;
    std::istringstream in(text);
    while (std::getline(in, item, sep)) {
        item = trim(item);
        if (!item.empty()) out.push_back(item);
    }
    return out;
}

double to_double(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    double v = 0.0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError(key, "expected a number, got '" + text + "'");
    }
    return v;
}

long long to_integer(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    long long v = 0;
    const auto r = std::from_chars(t.data(), t.data() + t.size(), v);
    if (r.ec != std::errc() || r.ptr != t.data() + t.size() || t.empty()) {
        throw ConfigError(key, "expected an integer, got '" + text + "'");
    }
    return v;
}

int to_int(const std::string& key, const std::string& text) {
    const long long v = to_integer(key, text);
    if (v < std::numeric_limits<int>::min() || v > std::numeric_limits<int>::max()) {
        throw ConfigError(key, "integer out of range");
    }
    return static_cast<int>(v);
}

bool to_bool(const std::string& key, const std::string& text) {
    const std::string t = trim(text);
    if (t == "true" || t == "yes" || t == "1") return true;
    if (t == "false" || t == "no" || t == "0") return false;
    throw ConfigError(key, "expected true or false, got '" + text + "'");
}

std::string fmt_bool(bool b) { return b ? "true" : "false"; }

template <class T>
std::string join(const std::vector<T>& items, const std::string& sep) {
    std::ostringstream out;
    for (std::size_t i = 0; i < items.size(); ++i) {
        if (i) out << sep;
        out << items[i];
    }
    return out.str();
}

template <class F>
auto wrap(const std::string& key, F&& f) {
    try {
        return f();
    } catch (const ConfigError&) {
        throw;
    } catch (const std::exception& e) {
        throw ConfigError(key, e.what());
    }
}

std::string diff_method_name(DiffMethod m) {
    switch (m) {
        case DiffMethod::savitzky_golay: return "savitzky_golay";
        case DiffMethod::central: return "central";
        case DiffMethod::forward: return "forward";
    }
    return "?";
}

DiffMethod parse_diff_method(const std::string& key, const std::string& text) {
    if (text == "savitzky_golay") return DiffMethod::savitzky_golay;
    if (text == "central") return DiffMethod::central;
    if (text == "forward") return DiffMethod::forward;
    throw ConfigError(key, "unknown differentiation method '" + text + "'");
}

// ---------------------------------------------------------------------------
// Key table shared by parsing, serialization and overrides

struct Field {
    std::string section;
    std::string key;
    std::function<std::string(const ExperimentConfig&)> get;
    std::function<void(ExperimentConfig&, const std::string&, const std::string&)> set;
};

template <class Get>
Field dbl(std::string section, std::string key, Get get) {
    return {section, key, [get](const ExperimentConfig& c) { return fmt(get(const_cast<ExperimentConfig&>(c))); },
            [get](ExperimentConfig& c, const std::string& path, const std::string& v) { get(c) = to_double(path, v); }};
}

template <class Get>
Field integer(std::string section, std::string key, Get get) {
    return {section, key, [get](const ExperimentConfig& c) { return std::to_string(get(const_cast<ExperimentConfig&>(c))); },
            [get](ExperimentConfig& c, const std::string& path, const std::string& v) { get(c) = to_int(path, v); }};
}

template <class Get>
Field boolean(std::string section, std::string key, Get get) {
    return {section, key, [get](const ExperimentConfig& c) { return fmt_bool(get(const_cast<ExperimentConfig&>(c))); },
            [get](ExperimentConfig& c, const std::string& path, const std::string& v) { get(c) = to_bool(path, v); }};
}

void add_exploration_fields(std::vector<Field>& f, const std::string& section,
                            ExplorationSpec& (*spec)(ExperimentConfig&)) {
    f.push_back({section, "kind", [spec](const ExperimentConfig& c) { return to_string(spec(const_cast<ExperimentConfig&>(c)).kind); },
                 [spec](ExperimentConfig& c, const std::string& path, const std::string& v) {
                     spec(c).kind = wrap(path, [&] { return parse_exploration_kind(v); });
                 }});
    f.push_back(dbl(section, "random_probability", [spec](ExperimentConfig& c) -> double& { return spec(c).random_probability; }));
    f.push_back(dbl(section, "amplitude", [spec](ExperimentConfig& c) -> double& { return spec(c).amplitude; }));
    f.push_back(dbl(section, "period_min", [spec](ExperimentConfig& c) -> double& { return spec(c).period_min; }));
    f.push_back(dbl(section, "period_max", [spec](ExperimentConfig& c) -> double& { return spec(c).period_max; }));
}

const std::vector<Field>& fields() {
    static const std::vector<Field> table = [] {
        std::vector<Field> f;
        f.push_back({"environment", "name", [](const ExperimentConfig& c) { return c.environment; },
                     [](ExperimentConfig& c, const std::string&, const std::string& v) { c.environment = v; }});

        f.push_back({"library", "kind", [](const ExperimentConfig& c) { return c.library.kind; },
                     [](ExperimentConfig& c, const std::string&, const std::string& v) { c.library.kind = v; }});
        f.push_back(integer("library", "degree", [](ExperimentConfig& c) -> int& { return c.library.degree; }));
        f.push_back(boolean("library", "include_bias", [](ExperimentConfig& c) -> bool& { return c.library.include_bias; }));
        f.push_back(integer("library", "k_max", [](ExperimentConfig& c) -> int& { return c.library.k_max; }));
        f.push_back({"library", "slots", [](const ExperimentConfig& c) { return join(c.library.slots, ","); },
                     [](ExperimentConfig& c, const std::string& path, const std::string& v) {
                         c.library.slots.clear();
                         for (const auto& s : split(v, ',')) {
                             const long long i = to_integer(path, s);
                             if (i < 0) throw ConfigError(path, "slot indices must be >= 0");
                             c.library.slots.push_back(static_cast<std::size_t>(i));
                         }
                     }});
        f.push_back({"library", "features", [](const ExperimentConfig& c) { return join(c.library.features, "; "); },
                     [](ExperimentConfig& c, const std::string&, const std::string& v) { c.library.features = split(v, ';'); }});

        f.push_back({"sindy", "mode", [](const ExperimentConfig& c) { return to_string(c.sindy.mode); },
                     [](ExperimentConfig& c, const std::string& path, const std::string& v) {
                         c.sindy.mode = wrap(path, [&] { return parse_model_mode(v); });
                     }});
        f.push_back(dbl("sindy", "threshold", [](ExperimentConfig& c) -> double& { return c.sindy.stlsq.threshold; }));
        f.push_back(dbl("sindy", "ridge_alpha", [](ExperimentConfig& c) -> double& { return c.sindy.stlsq.ridge_alpha; }));
        f.push_back(integer("sindy", "max_iterations", [](ExperimentConfig& c) -> int& { return c.sindy.stlsq.max_iterations; }));
        f.push_back(boolean("sindy", "normalize_columns", [](ExperimentConfig& c) -> bool& { return c.sindy.stlsq.normalize_columns; }));
        f.push_back({"sindy", "diff_method", [](const ExperimentConfig& c) { return diff_method_name(c.sindy.diff.method); },
                     [](ExperimentConfig& c, const std::string& path, const std::string& v) {
                         c.sindy.diff.method = parse_diff_method(path, v);
                     }});
        f.push_back(integer("sindy", "diff_window", [](ExperimentConfig& c) -> int& { return c.sindy.diff.window; }));
        f.push_back(integer("sindy", "diff_order", [](ExperimentConfig& c) -> int& { return c.sindy.diff.poly_order; }));
        f.push_back(boolean("sindy", "drop_boundary", [](ExperimentConfig& c) -> bool& { return c.sindy.diff.drop_boundary; }));
        f.push_back({"sindy", "integrator", [](const ExperimentConfig& c) { return to_string(c.sindy.integrator); },
                     [](ExperimentConfig& c, const std::string& path, const std::string& v) {
                         c.sindy.integrator = wrap(path, [&] { return parse_integrator(v); });
                     }});

        f.push_back(integer("dyna", "n_e", [](ExperimentConfig& c) -> int& { return c.dyna.n_e; }));
        f.push_back(integer("dyna", "rollout_length", [](ExperimentConfig& c) -> int& { return c.dyna.rollout_length; }));
        f.push_back({"dyna", "model_epochs",
                     [](const ExperimentConfig& c) {
                         return c.dyna.unbounded ? std::string("unbounded") : std::to_string(c.dyna.model_epochs);
                     },
                     [](ExperimentConfig& c, const std::string& path, const std::string& v) {
                         if (trim(v) == "unbounded") {
                             c.dyna.unbounded = true;
                             c.dyna.model_epochs = 0;
                         } else {
                             c.dyna.unbounded = false;
                             c.dyna.model_epochs = to_int(path, v);
                         }
                     }});
        f.push_back(integer("dyna", "model_epoch_budget", [](ExperimentConfig& c) -> int& { return c.dyna.model_epoch_budget; }));
        f.push_back(integer("dyna", "model_eval_every", [](ExperimentConfig& c) -> int& { return c.dyna.model_eval_every; }));
        f.push_back(integer("dyna", "model_rollout_length", [](ExperimentConfig& c) -> int& { return c.dyna.model_rollout_length; }));
        f.push_back(integer("dyna", "model_updates_per_step", [](ExperimentConfig& c) -> int& { return c.dyna.model_updates_per_step; }));
        f.push_back(integer("dyna", "real_updates_per_step", [](ExperimentConfig& c) -> int& { return c.dyna.real_updates_per_step; }));
        f.push_back(integer("dyna", "warmup_steps", [](ExperimentConfig& c) -> int& { return c.dyna.warmup_steps; }));
        f.push_back(integer("dyna", "max_real_episodes", [](ExperimentConfig& c) -> int& { return c.dyna.max_real_episodes; }));
        f.push_back(boolean("dyna", "refit", [](ExperimentConfig& c) -> bool& { return c.dyna.refit; }));
        f.push_back(dbl("dyna", "target", [](ExperimentConfig& c) -> double& { return c.dyna.convergence.target; }));
        f.push_back(integer("dyna", "consecutive", [](ExperimentConfig& c) -> int& { return c.dyna.convergence.consecutive; }));
        f.push_back(integer("dyna", "eval_episodes", [](ExperimentConfig& c) -> int& { return c.dyna.convergence.episodes; }));
        f.push_back({"dyna", "model_target",
                     [](const ExperimentConfig& c) { return c.dyna.model_target ? fmt(*c.dyna.model_target) : "same"; },
                     [](ExperimentConfig& c, const std::string& path, const std::string& v) {
                         if (trim(v) == "same") c.dyna.model_target.reset();
                         else c.dyna.model_target = to_double(path, v);
                     }});

        add_exploration_fields(f, "exploration", [](ExperimentConfig& c) -> ExplorationSpec& { return c.dyna.exploration; });
        add_exploration_fields(f, "warmup_exploration",
                               [](ExperimentConfig& c) -> ExplorationSpec& { return c.dyna.warmup_exploration; });

        f.push_back({"sac", "hidden", [](const ExperimentConfig& c) { return join(c.sac.hidden, ","); },
                     [](ExperimentConfig& c, const std::string& path, const std::string& v) {
                         c.sac.hidden.clear();
                         for (const auto& s : split(v, ',')) c.sac.hidden.push_back(to_int(path, s));
                     }});
        f.push_back(dbl("sac", "actor_lr", [](ExperimentConfig& c) -> double& { return c.sac.actor_lr; }));
        f.push_back(dbl("sac", "critic_lr", [](ExperimentConfig& c) -> double& { return c.sac.critic_lr; }));
        f.push_back(dbl("sac", "alpha_lr", [](ExperimentConfig& c) -> double& { return c.sac.alpha_lr; }));
        f.push_back(dbl("sac", "gamma", [](ExperimentConfig& c) -> double& { return c.sac.gamma; }));
        f.push_back(dbl("sac", "tau", [](ExperimentConfig& c) -> double& { return c.sac.tau; }));
        f.push_back(integer("sac", "batch_size", [](ExperimentConfig& c) -> int& { return c.sac.batch_size; }));
        f.push_back(dbl("sac", "initial_alpha", [](ExperimentConfig& c) -> double& { return c.sac.initial_alpha; }));
        f.push_back(boolean("sac", "learn_alpha", [](ExperimentConfig& c) -> bool& { return c.sac.learn_alpha; }));
        f.push_back({"sac", "target_entropy",
                     [](const ExperimentConfig& c) {
                         return std::isnan(c.sac.target_entropy) ? std::string("auto") : fmt(c.sac.target_entropy);
                     },
                     [](ExperimentConfig& c, const std::string& path, const std::string& v) {
                         c.sac.target_entropy =
                             trim(v) == "auto" ? std::numeric_limits<double>::quiet_NaN() : to_double(path, v);
                     }});
        f.push_back(dbl("sac", "log_std_min", [](ExperimentConfig& c) -> double& { return c.sac.log_std_min; }));
        f.push_back(dbl("sac", "log_std_max", [](ExperimentConfig& c) -> double& { return c.sac.log_std_max; }));

        f.push_back({"run", "seeds", [](const ExperimentConfig& c) { return join(c.seeds, ","); },
                     [](ExperimentConfig& c, const std::string& path, const std::string& v) {
                         c.seeds.clear();
                         for (const auto& s : split(v, ',')) {
                             const long long i = to_integer(path, s);
                             if (i < 0) throw ConfigError(path, "seeds must be >= 0");
                             c.seeds.push_back(static_cast<std::uint64_t>(i));
                         }
                     }});
        f.push_back(integer("run", "eval_episodes", [](ExperimentConfig& c) -> int& { return c.eval_episodes; }));
        f.push_back({"run", "output_dir", [](const ExperimentConfig& c) { return c.output_dir; },
                     [](ExperimentConfig& c, const std::string&, const std::string& v) { c.output_dir = v; }});
        return f;
    }();
    return table;
}

const Field* find_field(const std::string& section, const std::string& key) {
    for (const Field& f : fields()) {
        if (f.section == section && f.key == key) return &f;
    }
    return nullptr;
}

void set_value(ExperimentConfig& config, const std::string& section, const std::string& key, const std::string& value) {
    const std::string path = section + "." + key;
    if (section == "constants") {
        config.constants[key] = to_double(path, value);
        return;
    }
    const Field* f = find_field(section, key);
    if (!f) throw ConfigError(path, "unknown key");
    f->set(config, path, trim(value));
}

}  // namespace

// ---------------------------------------------------------------------------

FeatureLibrary build_library(const LibrarySpec& spec, std::size_t state_dim, std::size_t action_dim) {
    auto all_slots = [&] {
        if (!spec.slots.empty()) return spec.slots;
        std::vector<std::size_t> s(state_dim + action_dim);
        std::iota(s.begin(), s.end(), std::size_t{0});
        return s;
    };
    if (spec.kind == "polynomial") return polynomial_library(state_dim, action_dim, spec.degree, spec.include_bias);
    if (spec.kind == "fourier") return fourier_library(state_dim, action_dim, all_slots(), spec.k_max);
    if (spec.kind == "polynomial+fourier") {
        return polynomial_library(state_dim, action_dim, spec.degree, spec.include_bias) +
               fourier_library(state_dim, action_dim, all_slots(), spec.k_max);
    }
    if (spec.kind == "per_variable_fourier") return per_variable_fourier_library(state_dim, action_dim, spec.k_max);
    if (spec.kind == "cartpole") {
        if (state_dim != 4) throw std::invalid_argument("cartpole library needs 4 state dimensions");
        return cartpole_library(action_dim);
    }
    if (spec.kind == "custom") return parse_custom_features(spec.features, state_dim, action_dim);
    throw std::invalid_argument("unknown library kind '" + spec.kind + "'");
}

void ExperimentConfig::validate() const {
    std::unique_ptr<Environment> env;
    wrap("environment.name", [&] {
        const auto names = environment_names();
        if (std::find(names.begin(), names.end(), environment) == names.end()) {
            throw std::invalid_argument("unknown environment '" + environment + "'");
        }
        return 0;
    });
    env = wrap("constants", [&] { return make_environment(environment, constants); });
    wrap("library", [&] { return build_library(library, env->state_dim(), env->physical_action_dim()); });
    wrap("sindy", [&] {
        sindy.stlsq.validate();
        if (sindy.mode == ModelMode::continuous) sindy.diff.validate();
        return 0;
    });
    dyna.validate();
    if (dyna.unbounded && dyna.model_epochs != 0) throw ConfigError("dyna.model_epochs", "unbounded excludes a count");
    wrap("sac", [&] {
        sac.validate();
        return 0;
    });
    if (seeds.empty()) throw ConfigError("run.seeds", "at least one seed is required");
    if (std::set<std::uint64_t>(seeds.begin(), seeds.end()).size() != seeds.size()) {
        throw ConfigError("run.seeds", "duplicate seed");
    }
    if (eval_episodes < 1) throw ConfigError("run.eval_episodes", "must be >= 1");
    if (output_dir.empty()) throw ConfigError("run.output_dir", "must not be empty");
}

ExperimentConfig parse_config(std::istream& in) {
    namespace pt = boost::property_tree;
    pt::ptree tree;
    try {
        pt::read_ini(in, tree);
    } catch (const pt::ini_parser_error& e) {
        throw ConfigError("", std::string("config syntax: ") + e.what());
    }
    ExperimentConfig config;
    for (const auto& [section, body] : tree) {
        if (body.empty()) throw ConfigError(section, "key outside a section");
        if (section != "constants" && std::none_of(fields().begin(), fields().end(),
                                                   [&](const Field& f) { return f.section == section; })) {
            throw ConfigError(section, "unknown section");
        }
        for (const auto& [key, value] : body) set_value(config, section, key, value.data());
    }
    config.validate();
    return config;
}

ExperimentConfig load_config(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw ConfigError("", "cannot open config file '" + path + "'");
    return parse_config(in);
}

std::string serialize_config(const ExperimentConfig& config) {
    std::ostringstream out;
    std::string section;
    for (const Field& f : fields()) {
        if (f.section != section) {
            if (!section.empty()) out << "\n";
            section = f.section;
            out << "[" << section << "]\n";
        }
        out << f.key << " = " << f.get(config) << "\n";
        if (f.section == "environment" && !config.constants.empty()) {
            out << "\n[constants]\n";
            for (const auto& [k, v] : config.constants) out << k << " = " << fmt(v) << "\n";
        }
    }
    return out.str();
}

void apply_override(ExperimentConfig& config, const std::string& assignment) {
    const auto eq = assignment.find('=');
    if (eq == std::string::npos) throw ConfigError(assignment, "override must look like section.key=value");
    const std::string path = trim(assignment.substr(0, eq));
    const auto dot = path.find('.');
    if (dot == std::string::npos) throw ConfigError(path, "override key must be section.key");
    set_value(config, path.substr(0, dot), path.substr(dot + 1), assignment.substr(eq + 1));
    config.validate();
}

// ---------------------------------------------------------------------------

bool ResultTable::all_ok() const {
    return std::all_of(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.ok; });
}

bool ResultTable::all_converged() const {
    return std::all_of(seeds.begin(), seeds.end(), [](const SeedResult& s) { return s.ok && s.record.converged; });
}

namespace {

AggregateRow summarize(const std::string& metric, const std::vector<double>& xs) {
    AggregateRow row;
    row.metric = metric;
    row.count = static_cast<int>(xs.size());
    if (xs.empty()) return row;
    const double n = static_cast<double>(xs.size());
    row.mean = std::accumulate(xs.begin(), xs.end(), 0.0) / n;
    double ss = 0.0;
    for (double x : xs) ss += (x - row.mean) * (x - row.mean);
    row.stddev = std::sqrt(ss / n);
    return row;
}

}  // namespace

std::vector<AggregateRow> aggregate(const ResultTable& table) {
    std::vector<double> eval, real, model, ft, nnz, conv, steps;
    for (const SeedResult& s : table.seeds) {
        if (!s.ok) continue;
        eval.push_back(s.final_eval.mean);
        real.push_back(static_cast<double>(s.record.real_steps));
        model.push_back(static_cast<double>(s.record.model_steps));
        ft.push_back(s.record.fine_tuning_episodes);
        nnz.push_back(static_cast<double>(s.nonzeros));
        conv.push_back(s.record.converged ? 1.0 : 0.0);
        if (s.record.steps_to_threshold) steps.push_back(static_cast<double>(*s.record.steps_to_threshold));
    }
    return {summarize("final_eval_mean", eval), summarize("real_steps", real),
            summarize("model_steps", model),    summarize("fine_tuning_episodes", ft),
            summarize("nonzeros", nnz),         summarize("converged", conv),
            summarize("steps_to_threshold", steps)};
}

namespace {

SeedResult run_seed(const ExperimentConfig& config, std::uint64_t seed, const std::atomic<bool>* cancel) {
    SeedResult out;
    out.seed = seed;
    try {
        const auto env = make_environment(config.environment, config.constants);
        const FeatureLibrary library = build_library(config.library, env->state_dim(), env->physical_action_dim());
        DynaHooks hooks;
        hooks.cancel = cancel;
        DynaResult result = run_dyna(config.dyna, *env, library, config.sindy, config.sac, seed, hooks);
        out.record = std::move(result.record);
        auto eval_env = env->clone();
        out.final_eval = evaluate_policy(*result.agent, *eval_env, config.eval_episodes, derive_seed(seed, 7));
        out.parameters = result.model->parameter_count();
        out.nonzeros = result.model->nonzero_count();
        out.equations = equations_to_string(*result.model);
        std::ostringstream model_text;
        save_model(*result.model, model_text);
        out.model_text = model_text.str();
        out.ok = true;
    } catch (const std::exception& e) {
        out.ok = false;
        out.error = e.what();
    }
    return out;
}

void write_atomic(const fs::path& path, const std::string& content) {
    const fs::path tmp = path.string() + ".tmp";
    {
        std::ofstream out(tmp, std::ios::binary);
        if (!out) throw std::runtime_error("cannot write '" + tmp.string() + "'");
        out << content;
        if (!out) throw std::runtime_error("failed writing '" + tmp.string() + "'");
    }
    fs::rename(tmp, path);
}

std::string csv_quote(const std::string& s) {
    if (s.find_first_of(",\"\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c == '\n' ? ' ' : c;
    }
    return out + "\"";
}

std::vector<std::string> csv_split(const std::string& line) {
    std::vector<std::string> cells;
    std::string cell;
    bool quoted = false;
    for (std::size_t i = 0; i < line.size(); ++i) {
        const char c = line[i];
        if (quoted) {
            if (c == '"' && i + 1 < line.size() && line[i + 1] == '"') {
                cell += '"';
                ++i;
            } else if (c == '"') {
                quoted = false;
            } else {
                cell += c;
            }
        } else if (c == '"') {
            quoted = true;
        } else if (c == ',') {
            cells.push_back(cell);
            cell.clear();
        } else {
            cell += c;
        }
    }
    cells.push_back(cell);
    return cells;
}

}  // namespace

ResultTable run_experiment(const ExperimentConfig& config, int workers, const std::atomic<bool>* cancel) {
    config.validate();
    ResultTable table;
    table.seeds.resize(config.seeds.size());
    std::atomic<std::size_t> next{0};
    auto work = [&] {
        for (std::size_t i; (i = next++) < config.seeds.size();) table.seeds[i] = run_seed(config, config.seeds[i], cancel);
    };
    const int n = std::clamp(workers, 1, static_cast<int>(config.seeds.size()));
    if (n == 1) {
        work();
    } else {
        std::vector<std::jthread> pool;
        for (int i = 0; i < n; ++i) pool.emplace_back(work);
    }
    return table;
}

void write_results(const ResultTable& table, const ExperimentConfig& config, const std::string& dir) {
    const fs::path root(dir);
    fs::create_directories(root / "models");
    fs::create_directories(root / "equations");

    for (const SeedResult& s : table.seeds) {
        if (!s.ok) continue;
        const std::string stem = "seed_" + std::to_string(s.seed);
        write_atomic(root / "models" / (stem + ".model"), s.model_text);
        write_atomic(root / "equations" / (stem + ".txt"), s.equations);
    }

    std::ostringstream raw, summary, agg, curve, timing;
    raw << "seed,phase,iteration,epoch,real_steps,model_steps,eval_mean,eval_stddev,model_nonzeros\n";
    curve << "seed,real_steps,fine_tuning_steps,eval_mean,eval_stddev\n";
    timing << "seed,phase,iteration,epoch,wall_seconds\n";
    summary << "seed,status,converged,cancelled,fine_tuning_episodes,seed_steps,real_steps,model_steps,"
               "steps_to_threshold,final_eval_mean,final_eval_stddev,parameters,nonzeros,error\n";
    for (const SeedResult& s : table.seeds) {
        for (const RunRow& r : s.record.rows) {
            raw << s.seed << "," << to_string(r.phase) << "," << r.iteration << "," << r.epoch << "," << r.real_steps << ","
                << r.model_steps << "," << fmt(r.eval_mean) << "," << fmt(r.eval_stddev) << "," << r.model_nonzeros << "\n";
            timing << s.seed << "," << to_string(r.phase) << "," << r.iteration << "," << r.epoch << ","
                   << fmt(r.wall_seconds) << "\n";
            if (r.phase == Phase::real) {
                curve << s.seed << "," << r.real_steps << "," << r.real_steps - s.record.seed_steps << ","
                      << fmt(r.eval_mean) << "," << fmt(r.eval_stddev) << "\n";
            }
        }
        summary << s.seed << "," << (s.ok ? "ok" : "failed") << "," << fmt_bool(s.record.converged) << ","
                << fmt_bool(s.record.cancelled) << "," << s.record.fine_tuning_episodes << "," << s.record.seed_steps << ","
                << s.record.real_steps << "," << s.record.model_steps << ","
                << (s.record.steps_to_threshold ? std::to_string(*s.record.steps_to_threshold) : "not reached") << ","
                << fmt(s.final_eval.mean) << "," << fmt(s.final_eval.stddev) << "," << s.parameters << "," << s.nonzeros
                << "," << csv_quote(s.error) << "\n";
    }
    agg << "metric,mean,stddev,count\n";
    for (const AggregateRow& a : aggregate(table)) {
        agg << a.metric << "," << fmt(a.mean) << "," << fmt(a.stddev) << "," << a.count << "\n";
    }
    write_atomic(root / "raw.csv", raw.str());
    write_atomic(root / "summary.csv", summary.str());
    write_atomic(root / "aggregate.csv", agg.str());
    write_atomic(root / "curve.csv", curve.str());
    write_atomic(root / "timing.csv", timing.str());
    write_atomic(root / "config.ini", serialize_config(config));
}

// ---------------------------------------------------------------------------

FitReport fit_only(const ExperimentConfig& config, std::uint64_t seed) {
    config.validate();
    const auto env = make_environment(config.environment, config.constants);
    const FeatureLibrary library = build_library(config.library, env->state_dim(), env->physical_action_dim());
    FitReport report;
    // Same seed stream as run_dyna, so the fitted model matches a full run.
    report.data = collect_seed_data(*env, config.dyna.exploration, config.dyna.n_e, config.dyna.rollout_length,
                                    derive_seed(seed, 5));
    report.model = std::make_shared<const SindyModel>(fit(report.data, library, config.sindy));
    report.equations = equations_to_string(*report.model);

    const auto reference = env->reference_equations();
    if (!reference || env->native_mode() != config.sindy.mode) return report;
    std::vector<CoefficientComparison> rows;
    const Matrix& xi = report.model->coefficients().values;
    for (std::size_t j = 0; j < reference->size(); ++j) {
        const auto& truth = (*reference)[j];
        for (const auto& [name, value] : truth) {
            if (library.index_of(name) < 0) {
                rows.push_back({j, name, 0.0, value});
                ++report.missing_terms;
                report.max_deviation = std::max(report.max_deviation, std::abs(value));
            }
        }
        for (std::size_t f = 0; f < library.size(); ++f) {
            const std::string& name = library.functions()[f].name;
            const auto it = truth.find(name);
            const double t = it == truth.end() ? 0.0 : it->second;
            const double c = xi(static_cast<Eigen::Index>(f), static_cast<Eigen::Index>(j));
            if (c == 0.0 && t == 0.0) continue;
            if (t == 0.0) ++report.spurious_terms;
            if (c == 0.0) ++report.missing_terms;
            report.max_deviation = std::max(report.max_deviation, std::abs(c - t));
            rows.push_back({j, name, c, t});
        }
    }
    report.comparison = std::move(rows);
    return report;
}

std::string format_fit_report(const FitReport& report) {
    std::ostringstream out;
    out << report.equations;
    out << "P = " << report.model->parameter_count() << " (n = " << report.model->state_dim()
        << ", F = " << report.model->library().size() << "), P' = " << report.model->nonzero_count() << "\n";
    out << "samples = ";
    long samples = 0;
    for (const Trajectory& t : report.data) samples += t.transitions();
    out << samples << " transitions in " << report.data.size() << " rollout(s)\n";
    if (report.comparison) {
        out << "\nstate,feature,fitted,true,abs_error\n";
        for (const auto& r : *report.comparison) {
            out << "x" << r.state << "," << r.feature << "," << fmt(r.fitted) << "," << fmt(r.truth) << ","
                << fmt(std::abs(r.fitted - r.truth)) << "\n";
        }
        out << "max deviation " << fmt(report.max_deviation) << ", spurious " << report.spurious_terms << ", missing "
            << report.missing_terms << "\n";
    }
    return out.str();
}

// ---------------------------------------------------------------------------

Comparison compare_runs(const std::vector<std::string>& dirs) {
    if (dirs.size() < 2) throw std::invalid_argument("compare needs at least two result directories");
    Comparison cmp;
    for (const std::string& dir : dirs) {
        RunSummary run;
        run.dir = dir;
        std::ifstream cfg(fs::path(dir) / "config.ini");
        if (!cfg) throw std::invalid_argument("no config.ini in '" + dir + "'");
        run.environment = parse_config(cfg).environment;

        std::ifstream summary(fs::path(dir) / "summary.csv");
        if (!summary) throw std::invalid_argument("no summary.csv in '" + dir + "'");
        std::string line;
        std::getline(summary, line);
        const auto header = csv_split(line);
        const auto col = [&](const std::string& name) {
            const auto it = std::find(header.begin(), header.end(), name);
            if (it == header.end()) throw std::invalid_argument("summary.csv in '" + dir + "' lacks column " + name);
            return static_cast<std::size_t>(it - header.begin());
        };
        const std::size_t status = col("status"), steps = col("steps_to_threshold");
        double total = 0.0;
        while (std::getline(summary, line)) {
            if (trim(line).empty()) continue;
            const auto cells = csv_split(line);
            ++run.seeds;
            if (cells.at(status) != "ok" || cells.at(steps) == "not reached") continue;
            ++run.reached;
            total += to_double("steps_to_threshold", cells.at(steps));
        }
        if (run.reached > 0) run.mean_steps_to_threshold = total / run.reached;
        if (!cmp.runs.empty() && run.environment != cmp.runs.front().environment) {
            throw std::invalid_argument("environment mismatch: '" + cmp.runs.front().environment + "' vs '" +
                                        run.environment + "'");
        }
        cmp.runs.push_back(run);
    }
    const auto& base = cmp.runs.front().mean_steps_to_threshold;
    for (const RunSummary& r : cmp.runs) {
        if (base && r.mean_steps_to_threshold) cmp.speedups.push_back(*base / *r.mean_steps_to_threshold);
        else cmp.speedups.push_back(std::nullopt);
    }
    return cmp;
}

void write_comparison(const Comparison& comparison, const std::string& dir) {
    const fs::path root(dir);
    fs::create_directories(root);
    std::ostringstream table, curves;
    table << "run,environment,seeds,reached,mean_steps_to_threshold,speedup_vs_first\n";
    curves << "run,seed,real_steps,fine_tuning_steps,eval_mean,eval_stddev\n";
    for (std::size_t i = 0; i < comparison.runs.size(); ++i) {
        const RunSummary& r = comparison.runs[i];
        table << csv_quote(r.dir) << "," << r.environment << "," << r.seeds << "," << r.reached << ","
              << (r.mean_steps_to_threshold ? fmt(*r.mean_steps_to_threshold) : "not reached") << ","
              << (comparison.speedups[i] ? fmt(*comparison.speedups[i]) : "not reached") << "\n";
        std::ifstream curve(fs::path(r.dir) / "curve.csv");
        std::string line;
        std::getline(curve, line);
        while (std::getline(curve, line)) {
            if (!trim(line).empty()) curves << csv_quote(r.dir) << "," << line << "\n";
        }
    }
    write_atomic(root / "comparison.csv", table.str());
    write_atomic(root / "comparison_curves.csv", curves.str());
}

int worker_count_from_env() {
    const char* v = std::getenv("SINDYRL_WORKERS");
    if (!v || !*v) return 1;
    try {
        return std::max(1, to_int("SINDYRL_WORKERS", v));
    } catch (const ConfigError&) {
        return 1;
    }
}

}  // namespace sindyrl
