#include "sindyrl/experiment.hpp"

#include <CLI11.hpp>

#include <atomic>
#include <csignal>
#include <filesystem>
#include <fstream>
#include <iostream>

using namespace sindyrl;

namespace {

constexpr int kOk = 0, kConfigError = 1, kRuntimeError = 2, kNotConverged = 3;

std::atomic<bool> g_cancel{false};

extern "C" void on_signal(int) { g_cancel = true; }

ExperimentConfig load_with_overrides(const std::string& path, const std::vector<std::string>& overrides,
                                     const std::string& seed_list, const std::string& out_dir) {
    ExperimentConfig config = load_config(path);
    for (const auto& o : overrides) apply_override(config, o);
    if (!seed_list.empty()) apply_override(config, "run.seeds=" + seed_list);
    if (!out_dir.empty()) apply_override(config, "run.output_dir=" + out_dir);
    return config;
}

void print_aggregate(const ResultTable& table) {
    for (const SeedResult& s : table.seeds) {
        std::cout << "seed " << s.seed << ": ";
        if (!s.ok) {
            std::cout << "FAILED " << s.error << "\n";
            continue;
        }
        std::cout << (s.record.converged ? "converged" : "not converged") << ", real steps " << s.record.real_steps
                  << ", fine-tuning episodes " << s.record.fine_tuning_episodes << ", final eval "
                  << s.final_eval.mean << " +- " << s.final_eval.stddev << ", P " << s.parameters << ", P' "
                  << s.nonzeros << "\n";
    }
    for (const AggregateRow& a : aggregate(table)) {
        std::cout << a.metric << ": " << a.mean << " +- " << a.stddev << " (n = " << a.count << ")\n";
    }
}

}  // namespace

int main(int argc, char** argv) {
    CLI::App app{"SINDy model-based reinforcement learning experiments"};
    app.require_subcommand(1);

    std::string config_path, seed_list, out_dir;
    std::vector<std::string> overrides;
    auto add_common = [&](CLI::App* sub) {
        sub->add_option("--config", config_path, "experiment config file")->required()->check(CLI::ExistingFile);
        sub->add_option("--seed-list", seed_list, "comma-separated seeds (replaces run.seeds)");
        sub->add_option("--out", out_dir, "output directory (replaces run.output_dir)");
        sub->add_option("--override", overrides, "section.key=value")->take_all();
    };

    auto* run = app.add_subcommand("run", "collect, fit, train and evaluate every seed");
    add_common(run);
    auto* fit_cmd = app.add_subcommand("fit", "seed collection and SINDy fit only");
    add_common(fit_cmd);

    std::vector<std::string> dirs;
    std::string compare_out;
    auto* compare = app.add_subcommand("compare", "steps-to-threshold speedups between result directories");
    compare->add_option("dirs", dirs, "result directories; the first is the baseline")->required()->expected(2, -1);
    compare->add_option("--out", compare_out, "directory for comparison.csv");

    std::string model_path;
    auto* print_model = app.add_subcommand("print-model", "print the equations of a saved model");
    print_model->add_option("model", model_path, "model file")->required()->check(CLI::ExistingFile);

    try {
        app.parse(argc, argv);
    } catch (const CLI::ParseError& e) {
        return app.exit(e) == 0 ? kOk : kConfigError;
    }

    std::signal(SIGINT, on_signal);
    std::signal(SIGTERM, on_signal);

    try {
        if (*run) {
            const ExperimentConfig config = load_with_overrides(config_path, overrides, seed_list, out_dir);
            const ResultTable table = run_experiment(config, worker_count_from_env(), &g_cancel);
            write_results(table, config, config.output_dir);
            print_aggregate(table);
            std::cout << "results written to " << config.output_dir << "\n";
            if (std::none_of(table.seeds.begin(), table.seeds.end(), [](const SeedResult& s) { return s.ok; })) {
                return kRuntimeError;
            }
            if (!table.all_ok()) return kRuntimeError;
            return table.all_converged() ? kOk : kNotConverged;
        }
        if (*fit_cmd) {
            const ExperimentConfig config = load_with_overrides(config_path, overrides, seed_list, out_dir);
            const FitReport report = fit_only(config, config.seeds.front());
            const std::string text = format_fit_report(report);
            std::cout << text;
            if (!out_dir.empty()) {
                std::filesystem::create_directories(out_dir);
                save_model(*report.model, (std::filesystem::path(out_dir) / "model.txt").string());
                std::ofstream(std::filesystem::path(out_dir) / "fit_report.txt") << text;
            }
            return kOk;
        }
        if (*compare) {
            const Comparison cmp = compare_runs(dirs);
            for (std::size_t i = 0; i < cmp.runs.size(); ++i) {
                const RunSummary& r = cmp.runs[i];
                std::cout << r.dir << ": reached " << r.reached << "/" << r.seeds << ", mean steps-to-threshold ";
                if (r.mean_steps_to_threshold) std::cout << *r.mean_steps_to_threshold;
                else std::cout << "not reached";
                std::cout << ", speedup vs first ";
                if (cmp.speedups[i]) std::cout << *cmp.speedups[i];
                else std::cout << "not reached";
                std::cout << "\n";
            }
            if (!compare_out.empty()) write_comparison(cmp, compare_out);
            return kOk;
        }
        if (*print_model) {
            std::cout << equations_to_string(load_model(model_path));
            return kOk;
        }
    } catch (const ConfigError& e) {
        std::cerr << "config error: " << e.what() << "\n";
        return kConfigError;
    } catch (const std::exception& e) {
        std::cerr << "error: " << e.what() << "\n";
        return kRuntimeError;
    }
    return kOk;
}
