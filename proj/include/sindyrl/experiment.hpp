#pragma once

#include "sindyrl/dyna_orchestrator.hpp"
#include "sindyrl/environments.hpp"
#include "sindyrl/feature_library.hpp"
#include "sindyrl/policy_learner.hpp"
#include "sindyrl/sindy_model.hpp"

#include <atomic>
#include <cstdint>
#include <iosfwd>
#include <optional>
#include <string>
#include <vector>

namespace sindyrl {

// Built-in library name plus its parameters, or a custom expression list.
struct LibrarySpec {
    // polynomial | fourier | polynomial+fourier | per_variable_fourier | cartpole | custom
    std::string kind = "polynomial";
    int degree = 2;
    bool include_bias = true;
    int k_max = 1;
    std::vector<std::size_t> slots;   // fourier slots; empty = all inputs
    std::vector<std::string> features;  // custom

    bool operator==(const LibrarySpec&) const = default;
};

FeatureLibrary build_library(const LibrarySpec& spec, std::size_t state_dim, std::size_t action_dim);

struct ExperimentConfig {
    std::string environment = "pendulum";
    Constants constants;
    LibrarySpec library;
    SindyFitConfig sindy;
    DynaConfig dyna;
    SacConfig sac;
    std::vector<std::uint64_t> seeds = {0};
    int eval_episodes = 10;
    std::string output_dir = "results";

    // Throws ConfigError with the offending key path.
    void validate() const;
    bool operator==(const ExperimentConfig&) const = default;
};

// INI-style "key = value" file with [sections]; unknown sections or keys
// throw ConfigError.
ExperimentConfig parse_config(std::istream& in);
ExperimentConfig load_config(const std::string& path);
std::string serialize_config(const ExperimentConfig& config);
// "section.key=value".
void apply_override(ExperimentConfig& config, const std::string& assignment);

struct SeedResult {
    std::uint64_t seed = 0;
    bool ok = false;
    std::string error;
    RunRecord record;
    EvaluationResult final_eval;
    std::size_t parameters = 0;   // P = n * F
    std::size_t nonzeros = 0;     // P'
    std::string equations;
    std::string model_text;
};

struct AggregateRow {
    std::string metric;
    double mean = 0.0;
    double stddev = 0.0;
    int count = 0;
};

struct ResultTable {
    std::vector<SeedResult> seeds;

    bool all_ok() const;
    bool all_converged() const;
};

// Means and population standard deviations over successful seeds.
std::vector<AggregateRow> aggregate(const ResultTable& table);

// Seeds run on `workers` threads, each with isolated state; one failing seed
// is recorded and the rest continue.
ResultTable run_experiment(const ExperimentConfig& config, int workers = 1, const std::atomic<bool>* cancel = nullptr);

// raw.csv, summary.csv, aggregate.csv, curve.csv, timing.csv, config.ini and
// per-seed model / equation files under `dir`.
void write_results(const ResultTable& table, const ExperimentConfig& config, const std::string& dir);

struct CoefficientComparison {
    std::size_t state = 0;
    std::string feature;
    double fitted = 0.0;
    double truth = 0.0;
};

struct FitReport {
    std::shared_ptr<const SindyModel> model;
    std::vector<Trajectory> data;
    std::string equations;
    // Present when the environment exposes exact reference coefficients for
    // the fitted mode.
    std::optional<std::vector<CoefficientComparison>> comparison;
    double max_deviation = 0.0;
    std::size_t spurious_terms = 0;  // nonzero where the reference is zero
    std::size_t missing_terms = 0;   // zero where the reference is nonzero
};

FitReport fit_only(const ExperimentConfig& config, std::uint64_t seed);
std::string format_fit_report(const FitReport& report);

struct RunSummary {
    std::string dir;
    std::string environment;
    int seeds = 0;
    int reached = 0;
    std::optional<double> mean_steps_to_threshold;  // over seeds that reached it
};

struct Comparison {
    std::vector<RunSummary> runs;
    // Ratio of the first run's mean steps-to-threshold to each run's; unset
    // when either side never reached the threshold.
    std::vector<std::optional<double>> speedups;
};

// Reads summary.csv and config.ini from each result directory; throws
// std::invalid_argument on mismatched environments.
Comparison compare_runs(const std::vector<std::string>& dirs);
void write_comparison(const Comparison& comparison, const std::string& dir);

// Number of worker slots from SINDYRL_WORKERS (default 1).
int worker_count_from_env();

}  // namespace sindyrl
