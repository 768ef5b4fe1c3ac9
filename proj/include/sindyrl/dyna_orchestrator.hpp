#pragma once

#include "sindyrl/environments.hpp"
#include "sindyrl/feature_library.hpp"
#include "sindyrl/policy_learner.hpp"
#include "sindyrl/sindy_model.hpp"
#include "sindyrl/trajectory.hpp"

#include <atomic>
#include <cstdint>
#include <functional>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <vector>

namespace sindyrl {

// splitmix64 of (base, stream); used to derive independent generator seeds.
std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream);

enum class ExplorationKind { uniform, alternating, sinusoid };

std::string to_string(ExplorationKind kind);
ExplorationKind parse_exploration_kind(const std::string& text);

struct ExplorationSpec {
    ExplorationKind kind = ExplorationKind::uniform;
    // alternating: chance of replacing the alternating action by a uniform one.
    double random_probability = 0.2;
    // sinusoid: normalized amplitude, period drawn per episode from
    // [period_min, period_max] steps, phase uniform in [0, 2 pi).
    double amplitude = 1.0;
    double period_min = 30.0;
    double period_max = 50.0;

    void validate() const;
    bool operator==(const ExplorationSpec&) const = default;
};

// Pseudo-random seed policy producing policy-space actions. Box actions are
// generated in [-1, 1] and mapped onto the action bounds; for discrete spaces
// "negative" maps to index 0 and "positive" to the last index.
class ExplorationPolicy {
public:
    ExplorationPolicy(ExplorationSpec spec, ActionSpace space, std::uint64_t seed);

    void begin_episode();
    Vector next();

private:
    ExplorationSpec spec_;
    ActionSpace space_;
    std::mt19937_64 rng_;
    int step_ = 0;
    double sign_ = -1.0;
    double period_ = 1.0, phase_ = 0.0;

    Vector from_level(double level) const;
    Vector uniform();
};

// Called once per real transition with policy-space quantities.
struct Transition {
    Vector obs;
    Vector action;  // policy space
    double reward = 0.0;
    Vector next_obs;
    bool terminal = false;
};
using TransitionSink = std::function<void(const Transition&)>;

// N_e real rollouts of at most R steps each; rollout i starts from
// env.reset(derive_seed(seed, i)). Trajectory actions are physical inputs.
std::vector<Trajectory> collect_seed_data(Environment& env, const ExplorationSpec& exploration, int n_e, int rollout_length,
                                          std::uint64_t seed, const TransitionSink& sink = {});

struct ConvergenceCriterion {
    double target = 0.0;
    int consecutive = 1;
    int episodes = 10;  // evaluation episodes per check

    bool operator==(const ConvergenceCriterion&) const = default;
};

// True when the last `consecutive` evaluation means are all >= target.
bool convergence_check(const std::vector<double>& recent_means, const ConvergenceCriterion& criterion);

struct DynaConfig {
    int n_e = 1;
    int rollout_length = 100;
    // Model epochs per real epoch; ignored when unbounded.
    int model_epochs = 0;
    bool unbounded = false;
    // Unbounded realization: model-side checks every `model_eval_every`
    // epochs, at most `model_epoch_budget` epochs per outer iteration.
    int model_epoch_budget = 200;
    int model_eval_every = 5;
    // Model episode length; 0 uses the task's episode limit.
    int model_rollout_length = 0;
    // Learner updates per model / real time step.
    int model_updates_per_step = 1;
    int real_updates_per_step = 1;
    // Steps driven by the exploration policy before the learner acts; spent on
    // the model when model epochs run, on the real system otherwise.
    int warmup_steps = 0;
    // Seed-rollout policy and warmup policy.
    ExplorationSpec exploration;
    ExplorationSpec warmup_exploration;
    ConvergenceCriterion convergence;
    // Model-side target for the unbounded realization; unset reuses
    // convergence.target. Consecutive count and episodes follow `convergence`.
    std::optional<double> model_target;
    int max_real_episodes = 100;
    // Refit SINDy on D_SINDy after every real rollout (off: single fit).
    bool refit = false;

    void validate() const;
    bool operator==(const DynaConfig&) const = default;
};

enum class Phase { model, real };

struct RunRow {
    Phase phase = Phase::real;
    int iteration = 0;          // outer loop index
    int epoch = 0;              // model epoch within the iteration, or real episodes so far
    long real_steps = 0;        // cumulative, seed rollouts included
    long model_steps = 0;       // cumulative
    double eval_mean = 0.0;
    double eval_stddev = 0.0;
    std::size_t model_nonzeros = 0;
    double wall_seconds = 0.0;
};

struct RunRecord {
    std::vector<RunRow> rows;
    long seed_steps = 0;
    long real_steps = 0;
    long model_steps = 0;
    long d_sindy_transitions = 0;
    long d_env_transitions = 0;
    int fine_tuning_episodes = 0;
    bool converged = false;
    bool cancelled = false;
    // Cumulative real steps when the real-side criterion first fired.
    std::optional<long> steps_to_threshold;
};

struct DynaResult {
    RunRecord record;
    std::unique_ptr<SacAgent> agent;
    std::shared_ptr<const SindyModel> model;
    std::vector<Trajectory> sindy_data;
};

struct DynaHooks {
    const std::atomic<bool>* cancel = nullptr;
    std::function<void(const RunRow&)> on_row;
};

// Seed collection, one SINDy fit, then
//   while not converged: model epochs; real rollout r_real with learner
//   updates; D_SINDy += r_real
// with the real-side convergence check run before each real rollout. With
// model_epochs = 0 and !unbounded this is model-free SAC on the real system.
DynaResult run_dyna(const DynaConfig& config, const Environment& env, const FeatureLibrary& library,
                    const SindyFitConfig& fit_config, const SacConfig& sac_config, std::uint64_t seed,
                    const DynaHooks& hooks = {});

std::string to_string(Phase phase);

}  // namespace sindyrl
