#include "doctest.h"
#include "test_util.hpp"

#include "sindyrl/experiment.hpp"

#include <cmath>
#include <filesystem>
#include <sstream>

using namespace sindyrl;

namespace {

const char* kConfigs[] = {"cartpole.config", "mountain_car.config", "pendulum.config", "inverted_pendulum.config",
                          "mountain_car_r50.config"};

// Pendulum run small enough for a unit test.
ExperimentConfig tiny_pendulum() {
    ExperimentConfig c = load_config(testutil::config_path("pendulum.config"));
    c.sac.hidden = {16};
    c.sac.batch_size = 16;
    c.dyna.unbounded = false;
    c.dyna.model_epochs = 1;
    c.dyna.model_rollout_length = 25;
    c.dyna.warmup_steps = 0;
    c.dyna.max_real_episodes = 1;
    c.dyna.convergence = {-150.0, 1, 2};
    c.eval_episodes = 2;
    c.seeds = {0, 1, 2};
    c.validate();
    return c;
}

SeedResult fake_seed(std::uint64_t seed, double eval, long real, std::optional<long> steps, bool ok = true) {
    SeedResult s;
    s.seed = seed;
    s.ok = ok;
    s.error = ok ? "" : "boom, \"quoted\"";
    s.final_eval.mean = eval;
    s.record.real_steps = real;
    s.record.model_steps = 10 * real;
    s.record.fine_tuning_episodes = static_cast<int>(seed);
    s.record.converged = steps.has_value();
    s.record.steps_to_threshold = steps;
    s.nonzeros = 7 + seed;
    s.parameters = 18;
    return s;
}

std::string read_value(const std::string& csv, const std::string& metric, int column) {
    std::stringstream ss(csv);
    std::string line;
    while (std::getline(ss, line)) {
        const auto cells = testutil::split(line);
        if (!cells.empty() && cells[0] == metric) return cells.at(static_cast<std::size_t>(column));
    }
    return "";
}

}  // namespace

TEST_SUITE("experiment") {

TEST_CASE("bundled configs load, validate and round-trip") {
    for (const char* name : kConfigs) {
        CAPTURE(name);
        const ExperimentConfig c = load_config(testutil::config_path(name));
        std::stringstream ss(serialize_config(c));
        CHECK(parse_config(ss) == c);
    }
}

TEST_CASE("bundled configs carry the published library sizes and rollout settings") {
    auto size_of = [](const char* name) {
        const ExperimentConfig c = load_config(testutil::config_path(name));
        const auto env = make_environment(c.environment, c.constants);
        return std::pair{c, env->state_dim() * build_library(c.library, env->state_dim(), env->physical_action_dim()).size()};
    };
    const auto [cp, cp_p] = size_of("cartpole.config");
    CHECK(cp_p == 164);
    CHECK(cp.dyna.n_e == 1);
    CHECK(cp.dyna.rollout_length == 30);
    CHECK(cp.dyna.exploration.kind == ExplorationKind::alternating);
    const auto [mc, mc_p] = size_of("mountain_car.config");
    CHECK(mc_p == 50);
    CHECK(mc.dyna.rollout_length == 100);
    CHECK(size_of("mountain_car_r50.config").first.dyna.rollout_length == 50);
    CHECK(size_of("inverted_pendulum.config").second == 164);
    const auto [pd, pd_p] = size_of("pendulum.config");
    CHECK(pd.dyna.rollout_length == 20);
    CHECK(pd_p == 18);
    for (const char* name : kConfigs) CHECK(load_config(testutil::config_path(name)).dyna.unbounded);
}

TEST_CASE("unknown keys, sections and bad values are rejected with their key path") {
    auto key_of = [](const std::string& text) {
        std::stringstream ss(text);
        try {
            parse_config(ss);
        } catch (const ConfigError& e) {
            return e.key();
        }
        return std::string("<accepted>");
    };
    CHECK(key_of("[dyna]\nbogus = 1\n") == "dyna.bogus");
    CHECK(key_of("[nonsense]\nx = 1\n") == "nonsense");
    CHECK(key_of("[dyna]\nn_e = zero\n") == "dyna.n_e");
    CHECK(key_of("[dyna]\nn_e = 0\n") == "dyna.n_e");
    CHECK(key_of("[sindy]\nmode = sideways\n") == "sindy.mode");
    CHECK(key_of("[environment]\nname = acrobot\n") == "environment.name");
    CHECK(key_of("[environment]\nname = pendulum\n[constants]\nfriction = 1\n") != "<accepted>");
    CHECK(key_of("[environment]\nname = pendulum\n[constants]\nmax_torque = 3\n") == "<accepted>");
}

TEST_CASE("overrides") {
    ExperimentConfig c = load_config(testutil::config_path("pendulum.config"));
    apply_override(c, "sac.gamma=0.95");
    apply_override(c, "dyna.model_epochs=unbounded");
    apply_override(c, "run.seeds=3,4");
    CHECK(c.sac.gamma == 0.95);
    CHECK(c.dyna.unbounded);
    CHECK(c.seeds == std::vector<std::uint64_t>{3, 4});
    CHECK_THROWS_AS(apply_override(c, "sac.gamma"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "sac.gamma=2"), ConfigError);
    CHECK_THROWS_AS(apply_override(c, "sac.nothing=1"), ConfigError);
}

TEST_CASE("fit-only recovers the pendulum and reports parameter counts") {
    const ExperimentConfig c = load_config(testutil::config_path("pendulum.config"));
    const FitReport r = fit_only(c, 0);
    REQUIRE(r.comparison.has_value());
    CHECK(r.max_deviation <= 1e-10);
    CHECK(r.spurious_terms == 0);
    CHECK(r.missing_terms == 0);
    const std::string text = format_fit_report(r);
    CHECK(text.find("P = 18 (n = 2, F = 9), P' = 7") != std::string::npos);
    CHECK(text.find("20 transitions in 1 rollout(s)") != std::string::npos);
}

TEST_CASE("aggregates match a direct computation") {
    ResultTable t;
    t.seeds = {fake_seed(0, -150.0, 20, 20), fake_seed(1, -170.0, 220, std::nullopt), fake_seed(2, -190.0, 420, 420),
               fake_seed(3, 0.0, 0, std::nullopt, false)};
    const auto rows = aggregate(t);
    auto find = [&](const std::string& m) {
        for (const auto& r : rows) {
            if (r.metric == m) return r;
        }
        FAIL("missing metric " << m);
        return AggregateRow{};
    };
    const auto eval = find("final_eval_mean");
    CHECK(eval.count == 3);
    CHECK(std::abs(eval.mean - (-170.0)) <= 1e-12);
    CHECK(std::abs(eval.stddev - std::sqrt(800.0 / 3.0)) <= 1e-12);
    const auto steps = find("steps_to_threshold");
    CHECK(steps.count == 2);
    CHECK(std::abs(steps.mean - 220.0) <= 1e-12);
    CHECK(std::abs(steps.stddev - 200.0) <= 1e-12);
    CHECK(std::abs(find("converged").mean - 2.0 / 3.0) <= 1e-12);
    CHECK_FALSE(t.all_ok());
    CHECK_FALSE(t.all_converged());

    ResultTable single;
    single.seeds = {fake_seed(5, -160.0, 20, 20)};
    for (const auto& r : aggregate(single)) {
        if (r.count) CHECK(r.stddev == 0.0);
    }
}

TEST_CASE("result files and comparisons") {
    testutil::TempDir tmp("results");
    const ExperimentConfig cfg = load_config(testutil::config_path("pendulum.config"));
    ResultTable fast, slow, never;
    fast.seeds = {fake_seed(0, -150.0, 20, 20), fake_seed(1, -160.0, 40, 40), fake_seed(2, 0.0, 0, std::nullopt, false)};
    slow.seeds = {fake_seed(0, -150.0, 3000, 3000), fake_seed(1, -160.0, 3000, std::nullopt)};
    never.seeds = {fake_seed(0, -900.0, 5000, std::nullopt)};
    const std::string a = tmp.str() + "/fast", b = tmp.str() + "/slow", c = tmp.str() + "/never";
    write_results(fast, cfg, a);
    write_results(slow, cfg, b);
    write_results(never, cfg, c);

    const std::string summary = testutil::slurp(a + "/summary.csv");
    CHECK(summary.find("\"boom, \"\"quoted\"\"\"") != std::string::npos);
    CHECK(testutil::slurp(c + "/summary.csv").find("not reached") != std::string::npos);
    CHECK(read_value(testutil::slurp(a + "/aggregate.csv"), "steps_to_threshold", 1) == "30");
    CHECK(std::filesystem::exists(a + "/config.ini"));
    CHECK(std::filesystem::exists(a + "/curve.csv"));
    CHECK_FALSE(std::filesystem::exists(a + "/raw.csv.tmp"));

    const Comparison self = compare_runs({a, a});
    REQUIRE(self.speedups[1].has_value());
    CHECK(*self.speedups[1] == 1.0);
    CHECK(self.runs[0].reached == 2);
    CHECK(self.runs[0].seeds == 3);

    const Comparison cmp = compare_runs({b, a, c});
    CHECK(*cmp.speedups[1] == doctest::Approx(100.0));
    CHECK_FALSE(cmp.speedups[2].has_value());
    write_comparison(cmp, tmp.str() + "/cmp");
    const std::string table = testutil::slurp(tmp.str() + "/cmp/comparison.csv");
    CHECK(table.find("not reached") != std::string::npos);

    ExperimentConfig other = cfg;
    other.environment = "mountain_car";
    other.library = {"per_variable_fourier", 2, true, 3, {}, {}};
    write_results(never, other, tmp.str() + "/mc");
    CHECK_THROWS_AS(compare_runs({a, tmp.str() + "/mc"}), std::invalid_argument);
    CHECK_THROWS(compare_runs({a}));
}

}  // TEST_SUITE

TEST_SUITE("properties") {

TEST_CASE("the full pipeline is deterministic and independent of the worker count") {
    const ExperimentConfig cfg = tiny_pendulum();
    testutil::TempDir tmp("determinism");
    const ResultTable one = run_experiment(cfg, 1);
    const ResultTable two = run_experiment(cfg, 2);
    REQUIRE(one.all_ok());
    write_results(one, cfg, tmp.str() + "/a");
    write_results(two, cfg, tmp.str() + "/b");
    for (const char* file : {"raw.csv", "summary.csv", "aggregate.csv", "curve.csv"}) {
        CAPTURE(file);
        const std::string x = testutil::slurp(tmp.str() + "/a/" + file);
        CHECK(!x.empty());
        CHECK(x == testutil::slurp(tmp.str() + "/b/" + file));
    }
    CHECK(testutil::slurp(tmp.str() + "/a/models/seed_1.model") == testutil::slurp(tmp.str() + "/b/models/seed_1.model"));
}

TEST_CASE("a single-seed run aggregates to that seed's values") {
    ExperimentConfig cfg = tiny_pendulum();
    cfg.seeds = {4};
    const ResultTable t = run_experiment(cfg);
    REQUIRE(t.all_ok());
    for (const auto& row : aggregate(t)) {
        if (row.metric == "real_steps") CHECK(row.mean == static_cast<double>(t.seeds[0].record.real_steps));
        if (row.metric == "final_eval_mean") CHECK(row.mean == t.seeds[0].final_eval.mean);
        if (row.count) CHECK(row.stddev == 0.0);
    }
}

}  // TEST_SUITE
