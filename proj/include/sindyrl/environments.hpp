#pragma once

#include "sindyrl/core.hpp"
#include "sindyrl/trajectory.hpp"

#include <cstdint>
#include <map>
#include <memory>
#include <optional>
#include <random>
#include <string>
#include <utility>
#include <vector>

namespace sindyrl {

enum class DoneReason { running, termination, truncation };

struct StepResult {
    Vector next_state;
    double reward = 0.0;
    bool done = false;
    DoneReason done_reason = DoneReason::running;
};

// Policy-facing action space. Discrete actions travel as a length-1 vector
// holding the action index.
struct ActionSpace {
    bool discrete = false;
    int count = 0;   // discrete only
    Vector low;      // continuous only
    Vector high;

    static ActionSpace make_discrete(int count);
    static ActionSpace make_box(const Vector& low, const Vector& high);

    Eigen::Index dim() const { return discrete ? 1 : low.size(); }
    // Affine map between [-1, 1]^d and [low, high].
    Vector from_normalized(const Vector& a) const;
    Vector to_normalized(const Vector& a) const;
    Vector clamp(const Vector& a) const;
};

using Constants = std::map<std::string, double>;

struct EnvironmentSpec {
    std::string name;
    std::size_t state_dim = 0;
    ActionSpace action_space;
    double dt = 0.0;
    int max_episode_steps = 0;
    Constants constants;
};

// Expected nonzero coefficients per state dimension, keyed by feature name.
using ReferenceEquations = std::vector<std::map<std::string, double>>;

// Ground-truth simulator plus the task structure a model rollout needs: the
// reward function, termination predicate, initial-state distribution and the
// mapping from policy actions to physical inputs.
class Environment {
public:
    explicit Environment(EnvironmentSpec spec);
    virtual ~Environment() = default;

    const EnvironmentSpec& spec() const { return spec_; }
    const std::string& name() const { return spec_.name; }
    std::size_t state_dim() const { return spec_.state_dim; }
    const ActionSpace& action_space() const { return spec_.action_space; }
    double dt() const { return spec_.dt; }
    double constant(const std::string& key) const;

    // Episode control; reset(seed) reseeds the internal generator.
    Vector reset(std::uint64_t seed);
    Vector reset();
    StepResult step(const Vector& action);
    const Vector& state() const { return state_; }
    void set_state(const Vector& state);
    int elapsed_steps() const { return elapsed_; }

    virtual Vector sample_initial_state(std::mt19937_64& rng) const = 0;
    // Policy action (index or env-space value) -> physical model input.
    virtual Vector physical_action(const Vector& action) const = 0;
    virtual std::size_t physical_action_dim() const { return 1; }
    // One real-system step on physical inputs, clamps and collisions included.
    virtual Vector transition(const Vector& state, const Vector& physical) const = 0;
    virtual double reward(const Vector& state, const Vector& physical, const Vector& next_state) const = 0;
    virtual bool is_terminal(const Vector& state) const = 0;
    // Policy observation of a state.
    virtual Vector observe(const Vector& state) const { return state; }
    virtual std::size_t observation_dim() const { return spec_.state_dim; }
    // Declared state bounds applied to model rollouts.
    virtual Vector project_state(const Vector& state) const { return state; }

    virtual ModelMode native_mode() const = 0;
    // Analytic smooth dynamics: next state for discrete mode, time derivative
    // for continuous mode. Throws std::logic_error for an unsupported mode.
    virtual Vector true_dynamics(ModelMode mode, const Vector& state, const Vector& physical) const = 0;
    // Exact coefficients of true_dynamics(native_mode()) when representable.
    virtual std::optional<ReferenceEquations> reference_equations() const { return std::nullopt; }

    virtual std::unique_ptr<Environment> clone() const = 0;

protected:
    EnvironmentSpec spec_;

private:
    std::mt19937_64 rng_;
    Vector state_;
    int elapsed_ = 0;
};

// Pole on a cart pushed left/right with a fixed-magnitude force. State
// (x, x_dot, theta, theta_dot), physical input = signed force in newtons.
class CartPole : public Environment {
public:
    explicit CartPole(const Constants& overrides = {});

    struct Accelerations {
        double x_acc;
        double theta_acc;
    };
    // Full nonlinear cart-pole equations of motion.
    Accelerations accelerations(const Vector& state, double force) const;
    // sin(theta) ~ theta, cos(theta) ~ 1.
    Accelerations small_angle_accelerations(const Vector& state, double force) const;

    Vector sample_initial_state(std::mt19937_64& rng) const override;
    Vector physical_action(const Vector& action) const override;
    Vector transition(const Vector& state, const Vector& physical) const override;
    double reward(const Vector& state, const Vector& physical, const Vector& next_state) const override;
    bool is_terminal(const Vector& state) const override;
    ModelMode native_mode() const override { return ModelMode::continuous; }
    Vector true_dynamics(ModelMode mode, const Vector& state, const Vector& physical) const override;
    std::unique_ptr<Environment> clone() const override { return std::make_unique<CartPole>(*this); }

protected:
    CartPole(EnvironmentSpec spec, const Constants& overrides);
    // Derivative of (x, x_dot, theta, theta_dot) including viscous damping.
    Vector derivative(const Vector& state, double force) const;
};

// Cart pole with continuous force and viscous damping on cart and pole.
class InvertedPendulum : public CartPole {
public:
    explicit InvertedPendulum(const Constants& overrides = {});

    Vector sample_initial_state(std::mt19937_64& rng) const override;
    Vector physical_action(const Vector& action) const override;
    bool is_terminal(const Vector& state) const override;
    std::unique_ptr<Environment> clone() const override { return std::make_unique<InvertedPendulum>(*this); }
};

// Continuous mountain car. State (position, velocity / max_speed) so both
// coordinates are O(1); physical input = force in [-1, 1].
class MountainCar : public Environment {
public:
    explicit MountainCar(const Constants& overrides = {});

    Vector sample_initial_state(std::mt19937_64& rng) const override;
    Vector physical_action(const Vector& action) const override;
    Vector transition(const Vector& state, const Vector& physical) const override;
    double reward(const Vector& state, const Vector& physical, const Vector& next_state) const override;
    bool is_terminal(const Vector& state) const override;
    Vector project_state(const Vector& state) const override;
    ModelMode native_mode() const override { return ModelMode::discrete; }
    Vector true_dynamics(ModelMode mode, const Vector& state, const Vector& physical) const override;
    std::optional<ReferenceEquations> reference_equations() const override;
    std::unique_ptr<Environment> clone() const override { return std::make_unique<MountainCar>(*this); }
};

// Torque-driven pendulum swing-up. Internal state (theta, theta_dot) with
// theta = 0 upright and not wrapped; the policy observes
// (cos theta, sin theta, theta_dot).
class Pendulum : public Environment {
public:
    explicit Pendulum(const Constants& overrides = {});

    Vector sample_initial_state(std::mt19937_64& rng) const override;
    Vector physical_action(const Vector& action) const override;
    Vector transition(const Vector& state, const Vector& physical) const override;
    double reward(const Vector& state, const Vector& physical, const Vector& next_state) const override;
    bool is_terminal(const Vector&) const override { return false; }
    Vector observe(const Vector& state) const override;
    std::size_t observation_dim() const override { return 3; }
    // Clips theta_dot to +-max_speed.
    Vector project_state(const Vector& state) const override;
    ModelMode native_mode() const override { return ModelMode::discrete; }
    Vector true_dynamics(ModelMode mode, const Vector& state, const Vector& physical) const override;
    std::optional<ReferenceEquations> reference_equations() const override;
    std::unique_ptr<Environment> clone() const override { return std::make_unique<Pendulum>(*this); }

    // Rigid-rod mechanical energy per unit mass-length scale (theta = 0 up).
    double energy(const Vector& state) const;

private:
    // Semi-implicit Euler step with |theta_dot| clipped to speed_limit; a
    // limit of -inf returns the time derivative instead.
    Vector integrate(const Vector& state, const Vector& physical, double speed_limit) const;
};

double normalize_angle(double theta);

// "cartpole", "mountain_car", "pendulum", "inverted_pendulum". Unknown
// constant keys throw std::invalid_argument.
std::unique_ptr<Environment> make_environment(const std::string& name, const Constants& overrides = {});
std::vector<std::string> environment_names();

}  // namespace sindyrl
