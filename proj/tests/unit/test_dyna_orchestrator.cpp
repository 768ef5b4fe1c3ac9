#include "doctest.h"
#include "test_util.hpp"

#include "sindyrl/dyna_orchestrator.hpp"

#include <cmath>
#include <set>

using namespace sindyrl;

namespace {

FeatureLibrary pendulum_features() {
    return parse_custom_features({"1", "x0", "x1", "x1^2", "a0", "sin(x0)", "cos(x0)", "sin(2*x0)", "cos(2*x0)"}, 2, 1);
}

SindyFitConfig pendulum_fit() {
    SindyFitConfig c;
    c.mode = ModelMode::discrete;
    c.stlsq.ridge_alpha = 0.0;
    return c;
}

SacConfig tiny_sac() {
    SacConfig c;
    c.hidden = {16};
    c.batch_size = 16;
    return c;
}

// Small bounded run on the pendulum whose target can never be met.
DynaConfig bounded_pendulum(int model_epochs) {
    DynaConfig c;
    c.rollout_length = 20;
    c.model_epochs = model_epochs;
    c.model_rollout_length = 30;
    c.max_real_episodes = 2;
    c.convergence = {1e9, 1, 1};
    return c;
}

}  // namespace

TEST_SUITE("dyna_orchestrator") {

TEST_CASE("derived seeds are deterministic and distinct across streams") {
    CHECK(derive_seed(5, 1) == derive_seed(5, 1));
    std::set<std::uint64_t> seen;
    for (std::uint64_t base = 0; base < 20; ++base) {
        for (std::uint64_t stream = 0; stream < 20; ++stream) seen.insert(derive_seed(base, stream));
    }
    CHECK(seen.size() == 400);
}

TEST_CASE("alternating exploration without random draws strictly alternates") {
    ExplorationSpec spec;
    spec.kind = ExplorationKind::alternating;
    spec.random_probability = 0.0;
    ExplorationPolicy discrete(spec, ActionSpace::make_discrete(2), 1);
    double last = discrete.next()(0);
    for (int t = 1; t < 50; ++t) {
        const double a = discrete.next()(0);
        CHECK(a == 1.0 - last);
        last = a;
    }
    ExplorationPolicy box(spec, ActionSpace::make_box(Vector::Constant(1, -3.0), Vector::Constant(1, 3.0)), 1);
    last = box.next()(0);
    CHECK(std::abs(last) == 3.0);
    for (int t = 1; t < 50; ++t) {
        const double a = box.next()(0);
        CHECK(a == -last);
        last = a;
    }
}

TEST_CASE("alternating exploration with certain random draws is uniform") {
    ExplorationSpec spec;
    spec.kind = ExplorationKind::alternating;
    spec.random_probability = 1.0;
    ExplorationPolicy p(spec, ActionSpace::make_discrete(2), 2);
    int ones = 0;
    const int n = 20000;
    for (int i = 0; i < n; ++i) ones += static_cast<int>(p.next()(0));
    CHECK(std::abs(ones - n / 2) <= 4.0 * std::sqrt(n * 0.25));
}

TEST_CASE("sinusoid exploration stays within its amplitude and is seeded") {
    ExplorationSpec spec;
    spec.kind = ExplorationKind::sinusoid;
    spec.amplitude = 0.5;
    const ActionSpace space = ActionSpace::make_box(Vector::Constant(1, -2.0), Vector::Constant(1, 2.0));
    ExplorationPolicy a(spec, space, 3), b(spec, space, 3), c(spec, space, 4);
    bool differs = false;
    for (int t = 0; t < 100; ++t) {
        const double x = a.next()(0);
        CHECK(std::abs(x) <= 1.0 + 1e-12);
        CHECK(x == b.next()(0));
        differs = differs || x != c.next()(0);
    }
    CHECK(differs);
    spec.period_min = 60.0;
    CHECK_THROWS(ExplorationPolicy(spec, space, 0));
}

TEST_CASE("seed collection respects N_e and R") {
    CartPole env;
    ExplorationSpec spec;
    spec.kind = ExplorationKind::alternating;
    long sunk = 0, terminal = 0;
    const auto one = collect_seed_data(env, spec, 1, 30, 7, [&](const Transition& t) {
        ++sunk;
        terminal += t.terminal;
    });
    REQUIRE(one.size() == 1);
    CHECK(one[0].transitions() <= 30);
    CHECK(sunk == one[0].transitions());
    CHECK(terminal == (one[0].transitions() < 30 ? 1 : 0));
    CHECK(one[0].states.rows() == one[0].transitions() + 1);

    const auto three = collect_seed_data(env, spec, 3, 30, 7);
    CHECK(three.size() == 3);
    CHECK((three[0].states.array() == one[0].states.array()).all());
    for (const auto& t : three) CHECK(t.transitions() <= 30);

    Pendulum pendulum;
    const auto p = collect_seed_data(pendulum, ExplorationSpec{}, 1, 20, 0);
    CHECK(p[0].transitions() == 20);
    CHECK(p[0].actions.cwiseAbs().maxCoeff() <= 2.0);
    CHECK_THROWS(collect_seed_data(env, spec, 0, 30, 0));
}

TEST_CASE("convergence check") {
    const ConvergenceCriterion once{100.0, 1, 10};
    CHECK(convergence_check({50.0, 100.0}, once));
    CHECK_FALSE(convergence_check({100.0, 99.9}, once));
    CHECK_FALSE(convergence_check({}, once));
    const ConvergenceCriterion twice{100.0, 2, 10};
    CHECK(convergence_check({0.0, 120.0, 100.0}, twice));
    CHECK_FALSE(convergence_check({100.0, 0.0, 100.0}, twice));
    CHECK_FALSE(convergence_check({100.0}, twice));
    CHECK_FALSE(convergence_check({NAN}, once));
    CHECK_THROWS(convergence_check({1.0}, {0.0, 0, 1}));
}

TEST_CASE("configuration validation names the key") {
    DynaConfig c;
    c.n_e = 0;
    try {
        c.validate();
        FAIL("expected ConfigError");
    } catch (const ConfigError& e) {
        CHECK(e.key() == "dyna.n_e");
    }
    c = DynaConfig{};
    c.exploration.random_probability = 2.0;
    CHECK_THROWS_AS(c.validate(), ConfigError);
}

TEST_CASE("step accounting and data growth in a bounded run") {
    Pendulum env;
    const DynaConfig cfg = bounded_pendulum(1);
    std::vector<RunRow> rows;
    DynaHooks hooks;
    hooks.on_row = [&](const RunRow& r) { rows.push_back(r); };
    const DynaResult res = run_dyna(cfg, env, pendulum_features(), pendulum_fit(), tiny_sac(), 3, hooks);
    const RunRecord& rec = res.record;
    CHECK_FALSE(rec.converged);
    CHECK_FALSE(rec.steps_to_threshold.has_value());
    CHECK(rec.seed_steps == 20);
    CHECK(rec.fine_tuning_episodes == 2);
    // Pendulum episodes always run to the 200-step limit.
    CHECK(rec.real_steps == 20 + 2 * 200);
    CHECK(rec.d_sindy_transitions == rec.real_steps);
    CHECK(rec.d_env_transitions == rec.real_steps);
    CHECK(res.sindy_data.size() == 3);
    // Three outer iterations, one 30-step model epoch each.
    CHECK(rec.model_steps == 3 * 30);
    CHECK(rows.size() == rec.rows.size());
    long last = 0;
    for (const RunRow& r : rec.rows) {
        CHECK(r.phase == Phase::real);
        CHECK(r.real_steps >= last);
        last = r.real_steps;
    }
    CHECK(rec.rows.size() == 3);
    CHECK(res.model->nonzero_count() == 7);
}

TEST_CASE("zero model epochs degenerate to model-free learning") {
    Pendulum env;
    const DynaResult res = run_dyna(bounded_pendulum(0), env, pendulum_features(), pendulum_fit(), tiny_sac(), 4);
    CHECK(res.record.model_steps == 0);
    CHECK(res.record.fine_tuning_episodes == 2);
    for (const RunRow& r : res.record.rows) CHECK(r.phase == Phase::real);
}

TEST_CASE("an already-satisfied criterion stops before any real episode") {
    Pendulum env;
    DynaConfig cfg = bounded_pendulum(1);
    cfg.convergence.target = -1e9;
    const DynaResult res = run_dyna(cfg, env, pendulum_features(), pendulum_fit(), tiny_sac(), 5);
    CHECK(res.record.converged);
    CHECK(res.record.fine_tuning_episodes == 0);
    REQUIRE(res.record.steps_to_threshold.has_value());
    CHECK(*res.record.steps_to_threshold == 20);
}

TEST_CASE("cancellation is honoured") {
    Pendulum env;
    std::atomic<bool> cancel{true};
    DynaHooks hooks;
    hooks.cancel = &cancel;
    const DynaResult res = run_dyna(bounded_pendulum(1), env, pendulum_features(), pendulum_fit(), tiny_sac(), 6, hooks);
    CHECK(res.record.cancelled);
    CHECK(res.record.fine_tuning_episodes == 0);
    CHECK(res.record.model_steps == 0);
}

TEST_CASE("unbounded runs check the model side on schedule") {
    Pendulum env;
    DynaConfig cfg = bounded_pendulum(0);
    cfg.unbounded = true;
    cfg.model_epoch_budget = 7;
    cfg.model_eval_every = 3;
    cfg.max_real_episodes = 0;
    const DynaResult res = run_dyna(cfg, env, pendulum_features(), pendulum_fit(), tiny_sac(), 7);
    std::vector<int> epochs;
    for (const RunRow& r : res.record.rows) {
        if (r.phase == Phase::model) epochs.push_back(r.epoch);
    }
    CHECK(epochs == std::vector<int>{3, 6});
    CHECK(res.record.model_steps == 7 * 30);
}

}  // TEST_SUITE

TEST_SUITE("properties") {

TEST_CASE("runs are reproducible for a fixed seed") {
    Pendulum env;
    const DynaConfig cfg = bounded_pendulum(1);
    const DynaResult a = run_dyna(cfg, env, pendulum_features(), pendulum_fit(), tiny_sac(), 8);
    const DynaResult b = run_dyna(cfg, env, pendulum_features(), pendulum_fit(), tiny_sac(), 8);
    REQUIRE(a.record.rows.size() == b.record.rows.size());
    for (std::size_t i = 0; i < a.record.rows.size(); ++i) {
        CHECK(a.record.rows[i].eval_mean == b.record.rows[i].eval_mean);
        CHECK(a.record.rows[i].model_steps == b.record.rows[i].model_steps);
    }
    CHECK((a.agent->actor().params().array() == b.agent->actor().params().array()).all());
}

}  // TEST_SUITE
