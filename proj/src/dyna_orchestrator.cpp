#include "sindyrl/dyna_orchestrator.hpp"

#include <chrono>
#include <cmath>
#include <numbers>
#include <stdexcept>

namespace sindyrl {

std::uint64_t derive_seed(std::uint64_t base, std::uint64_t stream) {
    std::uint64_t z = base + 0x9e3779b97f4a7c15ULL * (stream + 1);
    z = (z ^ (z >> 30)) * 0xbf58476d1ce4e5b9ULL;
    z = (z ^ (z >> 27)) * 0x94d049bb133111ebULL;
    return z ^ (z >> 31);
}

std::string to_string(ExplorationKind kind) {
    switch (kind) {
        case ExplorationKind::uniform: return "uniform";
        case ExplorationKind::alternating: return "alternating";
        case ExplorationKind::sinusoid: return "sinusoid";
    }
    return "?";
}

ExplorationKind parse_exploration_kind(const std::string& text) {
    if (text == "uniform") return ExplorationKind::uniform;
    if (text == "alternating") return ExplorationKind::alternating;
    if (text == "sinusoid") return ExplorationKind::sinusoid;
    throw std::invalid_argument("unknown exploration policy '" + text + "'");
}

std::string to_string(Phase phase) { return phase == Phase::model ? "model" : "real"; }

void ExplorationSpec::validate() const {
    if (!(random_probability >= 0.0 && random_probability <= 1.0)) {
        throw std::invalid_argument("exploration random_probability must lie in [0, 1]");
    }
    if (!(amplitude > 0.0 && amplitude <= 1.0)) throw std::invalid_argument("exploration amplitude must lie in (0, 1]");
    if (!(period_min > 0.0 && period_min <= period_max)) {
        throw std::invalid_argument("exploration periods need 0 < period_min <= period_max");
    }
}

ExplorationPolicy::ExplorationPolicy(ExplorationSpec spec, ActionSpace space, std::uint64_t seed)
    : spec_(spec), space_(std::move(space)), rng_(seed) {
    spec_.validate();
    begin_episode();
}

void ExplorationPolicy::begin_episode() {
    step_ = 0;
    sign_ = -1.0;
    if (spec_.kind == ExplorationKind::sinusoid) {
        period_ = std::uniform_real_distribution<double>(spec_.period_min, spec_.period_max)(rng_);
        phase_ = std::uniform_real_distribution<double>(0.0, 2.0 * std::numbers::pi)(rng_);
    }
}

Vector ExplorationPolicy::from_level(double level) const {
    if (space_.discrete) return Vector::Constant(1, level < 0.0 ? 0.0 : static_cast<double>(space_.count - 1));
    return space_.from_normalized(Vector::Constant(space_.dim(), level));
}

Vector ExplorationPolicy::uniform() {
    if (space_.discrete) {
        return Vector::Constant(1, std::uniform_int_distribution<int>(0, space_.count - 1)(rng_));
    }
    std::uniform_real_distribution<double> u(-1.0, 1.0);
    Vector a(space_.dim());
    for (Eigen::Index i = 0; i < a.size(); ++i) a(i) = u(rng_);
    return space_.from_normalized(a);
}

Vector ExplorationPolicy::next() {
    const int t = step_++;
    switch (spec_.kind) {
        case ExplorationKind::uniform: return uniform();
        case ExplorationKind::alternating: {
            // Opposite direction to the previously applied action; a random
            // action resets the phase.
            sign_ = -sign_;
            const double draw = std::uniform_real_distribution<double>(0.0, 1.0)(rng_);
            if (draw >= spec_.random_probability) return from_level(sign_);
            const Vector a = uniform();
            if (space_.discrete) sign_ = a(0) < 0.5 * (space_.count - 1) ? -1.0 : 1.0;
            else sign_ = space_.to_normalized(a).sum() < 0.0 ? -1.0 : 1.0;
            return a;
        }
        case ExplorationKind::sinusoid:
            return from_level(spec_.amplitude * std::sin(2.0 * std::numbers::pi * t / period_ + phase_));
    }
    throw std::logic_error("unreachable exploration kind");
}

std::vector<Trajectory> collect_seed_data(Environment& env, const ExplorationSpec& exploration, int n_e, int rollout_length,
                                          std::uint64_t seed, const TransitionSink& sink) {
    if (n_e < 1) throw std::invalid_argument("collect_seed_data: N_e must be >= 1");
    if (rollout_length < 1) throw std::invalid_argument("collect_seed_data: R must be >= 1");
    ExplorationPolicy policy(exploration, env.action_space(), derive_seed(seed, 0x5eed));
    std::vector<Trajectory> out;
    for (int i = 0; i < n_e; ++i) {
        Vector s = env.reset(derive_seed(seed, static_cast<std::uint64_t>(i)));
        policy.begin_episode();
        TrajectoryBuilder builder(s, static_cast<Eigen::Index>(env.physical_action_dim()), env.dt());
        for (int t = 0; t < rollout_length; ++t) {
            const Vector action = policy.next();
            const StepResult r = env.step(action);
            builder.push(env.physical_action(action), r.reward, r.done, r.next_state);
            if (sink) {
                sink({env.observe(s), action, r.reward, env.observe(r.next_state),
                      r.done_reason == DoneReason::termination});
            }
            s = r.next_state;
            if (r.done) break;
        }
        out.push_back(builder.build());
    }
    return out;
}

bool convergence_check(const std::vector<double>& recent_means, const ConvergenceCriterion& criterion) {
    if (criterion.consecutive < 1) throw std::invalid_argument("convergence_check: consecutive must be >= 1");
    const auto need = static_cast<std::size_t>(criterion.consecutive);
    if (recent_means.size() < need) return false;
    for (std::size_t i = recent_means.size() - need; i < recent_means.size(); ++i) {
        if (!(recent_means[i] >= criterion.target)) return false;
    }
    return true;
}

void DynaConfig::validate() const {
    if (n_e < 1) throw ConfigError("dyna.n_e", "must be >= 1");
    if (rollout_length < 2) throw ConfigError("dyna.rollout_length", "must be >= 2");
    if (model_epochs < 0) throw ConfigError("dyna.model_epochs", "must be >= 0");
    if (model_epoch_budget < 1) throw ConfigError("dyna.model_epoch_budget", "must be >= 1");
    if (model_eval_every < 1) throw ConfigError("dyna.model_eval_every", "must be >= 1");
    if (model_rollout_length < 0) throw ConfigError("dyna.model_rollout_length", "must be >= 0");
    if (model_updates_per_step < 0) throw ConfigError("dyna.model_updates_per_step", "must be >= 0");
    if (real_updates_per_step < 0) throw ConfigError("dyna.real_updates_per_step", "must be >= 0");
    if (warmup_steps < 0) throw ConfigError("dyna.warmup_steps", "must be >= 0");
    if (max_real_episodes < 0) throw ConfigError("dyna.max_real_episodes", "must be >= 0");
    if (convergence.consecutive < 1) throw ConfigError("dyna.consecutive", "must be >= 1");
    if (convergence.episodes < 1) throw ConfigError("dyna.eval_episodes", "must be >= 1");
    try {
        exploration.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("dyna.exploration", e.what());
    }
    try {
        warmup_exploration.validate();
    } catch (const std::invalid_argument& e) {
        throw ConfigError("dyna.warmup_exploration", e.what());
    }
}

namespace {

class Runner {
public:
    Runner(const DynaConfig& config, const Environment& env, const FeatureLibrary& library, const SindyFitConfig& fit_config,
           const SacConfig& sac_config, std::uint64_t seed, const DynaHooks& hooks)
        : config_(config),
          library_(library),
          fit_config_(fit_config),
          hooks_(hooks),
          seed_(seed),
          real_(env.clone()),
          eval_real_(env.clone()),
          agent_(std::make_unique<SacAgent>(env.observation_dim(), env.action_space(), sac_config, derive_seed(seed, 1))),
          buffer_(1'000'000, static_cast<Eigen::Index>(env.observation_dim()), agent_->stored_action_dim()),
          learn_rng_(derive_seed(seed, 2)),
          act_rng_(derive_seed(seed, 3)),
          explore_(config.warmup_exploration, env.action_space(), derive_seed(seed, 4)),
          start_(std::chrono::steady_clock::now()) {}

    DynaResult run() {
        config_.validate();
        RunRecord& rec = result_.record;

        result_.sindy_data = collect_seed_data(*real_, config_.exploration, config_.n_e, config_.rollout_length,
                                               derive_seed(seed_, 5), [&](const Transition& t) { store(t, Source::real); });
        for (const Trajectory& t : result_.sindy_data) rec.seed_steps += t.transitions();
        rec.real_steps = rec.seed_steps;
        rec.d_env_transitions = rec.seed_steps;
        rec.d_sindy_transitions = rec.seed_steps;
        refit();

        const bool model_phase = config_.unbounded || config_.model_epochs > 0;
        warmup_left_ = config_.warmup_steps;
        std::vector<double> real_means;
        for (int iteration = 0;; ++iteration) {
            if (cancelled()) break;
            if (model_phase && !train_on_model(iteration)) break;

            const EvaluationResult ev = evaluate_policy(*agent_, *eval_real_, config_.convergence.episodes, eval_seed());
            real_means.push_back(ev.mean);
            emit({Phase::real, iteration, rec.fine_tuning_episodes, rec.real_steps, rec.model_steps, ev.mean, ev.stddev,
                  result_.model->nonzero_count(), 0.0});
            if (convergence_check(real_means, config_.convergence)) {
                rec.converged = true;
                rec.steps_to_threshold = rec.real_steps;
                break;
            }
            if (rec.fine_tuning_episodes >= config_.max_real_episodes || cancelled()) break;

            const Trajectory r_real = real_episode(model_phase);
            ++rec.fine_tuning_episodes;
            rec.real_steps += r_real.transitions();
            rec.d_env_transitions += r_real.transitions();
            rec.d_sindy_transitions += r_real.transitions();
            result_.sindy_data.push_back(r_real);
            if (config_.refit) refit();
        }
        rec.cancelled = cancelled();
        result_.agent = std::move(agent_);
        return std::move(result_);
    }

private:
    const DynaConfig& config_;
    const FeatureLibrary& library_;
    const SindyFitConfig& fit_config_;
    const DynaHooks& hooks_;
    std::uint64_t seed_;
    std::unique_ptr<Environment> real_, eval_real_;
    std::unique_ptr<ModelEnvironment> model_env_, eval_model_;
    std::unique_ptr<SacAgent> agent_;
    ReplayBuffer buffer_;
    std::mt19937_64 learn_rng_, act_rng_;
    ExplorationPolicy explore_;
    std::chrono::steady_clock::time_point start_;
    DynaResult result_;
    int warmup_left_ = 0;
    std::uint64_t episode_counter_ = 0;

    bool cancelled() const { return hooks_.cancel && hooks_.cancel->load(); }

    std::uint64_t eval_seed() const { return derive_seed(seed_, 6); }

    void emit(RunRow row) {
        row.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - start_).count();
        result_.record.rows.push_back(row);
        if (hooks_.on_row) hooks_.on_row(row);
    }

    void refit() {
        result_.model = std::make_shared<const SindyModel>(fit(result_.sindy_data, library_, fit_config_));
        model_env_ = std::make_unique<ModelEnvironment>(result_.model, *real_);
        eval_model_ = std::make_unique<ModelEnvironment>(result_.model, *real_);
    }

    void store(const Transition& t, Source source) {
        buffer_.add(t.obs, agent_->to_stored(t.action), t.reward, t.next_obs, t.terminal, source);
    }

    void learn(int updates) {
        if (buffer_.size() < static_cast<std::size_t>(agent_->config().batch_size)) return;
        for (int i = 0; i < updates; ++i) {
            agent_->update(buffer_.sample(static_cast<std::size_t>(agent_->config().batch_size), learn_rng_), learn_rng_);
        }
    }

    // One episode on `env`; exploration actions while warmup lasts.
    Trajectory episode(Environment& env, Source source, int horizon, int updates_per_step) {
        Vector s = env.reset(derive_seed(seed_, 1000 + episode_counter_++));
        explore_.begin_episode();
        TrajectoryBuilder builder(s, static_cast<Eigen::Index>(env.physical_action_dim()), env.dt());
        for (int t = 0; t < horizon; ++t) {
            const Vector obs = env.observe(s);
            Vector action;
            if (warmup_left_ > 0) {
                action = explore_.next();
                --warmup_left_;
            } else {
                action = agent_->act(obs, false, act_rng_);
            }
            const StepResult r = env.step(action);
            store({obs, action, r.reward, env.observe(r.next_state), r.done_reason == DoneReason::termination}, source);
            builder.push(env.physical_action(action), r.reward, r.done, r.next_state);
            learn(updates_per_step);
            s = r.next_state;
            if (r.done) break;
        }
        return builder.build();
    }

    Trajectory real_episode(bool model_phase) {
        if (model_phase) warmup_left_ = 0;
        return episode(*real_, Source::real, real_->spec().max_episode_steps, config_.real_updates_per_step);
    }

    // Model epochs of one outer iteration; false when cancelled.
    bool train_on_model(int iteration) {
        RunRecord& rec = result_.record;
        const int horizon = config_.model_rollout_length > 0 ? config_.model_rollout_length
                                                             : model_env_->spec().max_episode_steps;
        const int epochs = config_.unbounded ? config_.model_epoch_budget : config_.model_epochs;
        ConvergenceCriterion model_criterion = config_.convergence;
        if (config_.model_target) model_criterion.target = *config_.model_target;
        std::vector<double> model_means;

        auto check = [&](int epoch) {
            const EvaluationResult ev = evaluate_policy(*agent_, *eval_model_, model_criterion.episodes, eval_seed());
            model_means.push_back(ev.mean);
            emit({Phase::model, iteration, epoch, rec.real_steps, rec.model_steps, ev.mean, ev.stddev,
                  result_.model->nonzero_count(), 0.0});
            return convergence_check(model_means, model_criterion);
        };

        // A policy carried over from an earlier iteration may already pass.
        if (config_.unbounded && iteration > 0 && check(0)) return true;
        for (int epoch = 1; epoch <= epochs; ++epoch) {
            if (cancelled()) return false;
            const Trajectory tr = episode(*model_env_, Source::model, horizon, config_.model_updates_per_step);
            rec.model_steps += tr.transitions();
            if (config_.unbounded && warmup_left_ == 0 && epoch % config_.model_eval_every == 0 && check(epoch)) break;
        }
        return true;
    }
};

}  // namespace

DynaResult run_dyna(const DynaConfig& config, const Environment& env, const FeatureLibrary& library,
                    const SindyFitConfig& fit_config, const SacConfig& sac_config, std::uint64_t seed,
                    const DynaHooks& hooks) {
    return Runner(config, env, library, fit_config, sac_config, seed, hooks).run();
}

}  // namespace sindyrl
