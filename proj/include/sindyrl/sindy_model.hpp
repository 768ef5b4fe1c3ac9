#pragma once

#include "sindyrl/core.hpp"
#include "sindyrl/differentiation.hpp"
#include "sindyrl/environments.hpp"
#include "sindyrl/feature_library.hpp"
#include "sindyrl/sparse_regression.hpp"
#include "sindyrl/trajectory.hpp"

#include <functional>
#include <iosfwd>
#include <memory>
#include <random>
#include <string>
#include <vector>

namespace sindyrl {

// Time stepping for continuous models; actions are held over the step.
enum class Integrator { rk4, euler };

struct SindyFitConfig {
    ModelMode mode = ModelMode::continuous;
    StlsqConfig stlsq;
    DiffConfig diff;
    Integrator integrator = Integrator::rk4;

    bool operator==(const SindyFitConfig&) const = default;
};

// Fitted dynamics f(x; a) = Theta(x; a) * Xi. In continuous mode f is the
// time derivative; in discrete mode it is the next state.
class SindyModel {
public:
    SindyModel(FeatureLibrary library, CoefficientMatrix coefficients, ModelMode mode, double fit_dt,
               Integrator integrator = Integrator::rk4, std::vector<ColumnDiagnostics> diagnostics = {});

    const FeatureLibrary& library() const { return library_; }
    const CoefficientMatrix& coefficients() const { return coefficients_; }
    ModelMode mode() const { return mode_; }
    double fit_dt() const { return fit_dt_; }
    Integrator integrator() const { return integrator_; }
    std::size_t state_dim() const { return library_.state_dim(); }
    std::size_t action_dim() const { return library_.action_dim(); }
    const std::vector<ColumnDiagnostics>& diagnostics() const { return diagnostics_; }

    std::size_t parameter_count() const { return library_.size() * state_dim(); }
    std::size_t nonzero_count() const { return coefficients_.nonzero_count(); }

    // Theta(x; a) * Xi regardless of mode.
    Vector evaluate(const Vector& state, const Vector& action) const;

private:
    FeatureLibrary library_;
    CoefficientMatrix coefficients_;
    ModelMode mode_;
    double fit_dt_;
    Integrator integrator_;
    std::vector<ColumnDiagnostics> diagnostics_;
};

// Regression rows for one trajectory: derivative targets (continuous, rows
// outside the differentiator's valid range dropped when configured) or
// next-state targets (discrete).
RegressionProblem assemble_problem(const Trajectory& trajectory, const FeatureLibrary& library,
                                   const SindyFitConfig& config);

// Stacks per-trajectory rows; no differencing across trajectory boundaries.
RegressionProblem assemble_problem(const std::vector<Trajectory>& trajectories, const FeatureLibrary& library,
                                   const SindyFitConfig& config);

SindyModel fit(const std::vector<Trajectory>& trajectories, const FeatureLibrary& library, const SindyFitConfig& config);

Vector predict_derivative(const SindyModel& model, const Vector& state, const Vector& action);

// One step of the model's integrator with the action held constant
// (continuous) or the direct map (discrete).
// Throws DivergenceError on a non-finite state or any |x_i| > divergence_bound.
inline constexpr double kDivergenceBound = 1e6;
Vector simulate_step(const SindyModel& model, const Vector& state, const Vector& action, double dt,
                     std::size_t step_index = 0);

// Policy maps a model state to a policy-space action (index or env-space).
using StatePolicy = std::function<Vector(const Vector& state)>;

// Rolls the model forward under `policy`; rewards and dones come from the
// environment's reward function and termination predicate, states are
// projected onto the environment's declared bounds after each step.
Trajectory rollout_model(const SindyModel& model, const Environment& env, const StatePolicy& policy,
                         const Vector& initial_state, int horizon);

// The task structure of `task` (rewards, termination, initial states, action
// mapping) driven by a fitted model instead of the real dynamics.
class ModelEnvironment : public Environment {
public:
    ModelEnvironment(std::shared_ptr<const SindyModel> model, const Environment& task);
    ModelEnvironment(const ModelEnvironment& other);

    const SindyModel& model() const { return *model_; }

    Vector sample_initial_state(std::mt19937_64& rng) const override { return task_->sample_initial_state(rng); }
    Vector physical_action(const Vector& action) const override { return task_->physical_action(action); }
    std::size_t physical_action_dim() const override { return task_->physical_action_dim(); }
    Vector transition(const Vector& state, const Vector& physical) const override;
    double reward(const Vector& s, const Vector& p, const Vector& next) const override { return task_->reward(s, p, next); }
    bool is_terminal(const Vector& state) const override { return task_->is_terminal(state); }
    Vector observe(const Vector& state) const override { return task_->observe(state); }
    std::size_t observation_dim() const override { return task_->observation_dim(); }
    Vector project_state(const Vector& state) const override { return task_->project_state(state); }
    ModelMode native_mode() const override { return model_->mode(); }
    Vector true_dynamics(ModelMode mode, const Vector& state, const Vector& physical) const override;
    std::unique_ptr<Environment> clone() const override { return std::make_unique<ModelEnvironment>(*this); }

private:
    std::shared_ptr<const SindyModel> model_;
    std::unique_ptr<Environment> task_;
};

// One line per state dimension listing nonzero terms to 4 decimals.
std::string equations_to_string(const SindyModel& model);

// Flat text serialization; coefficients written with 17 significant digits.
void save_model(const SindyModel& model, std::ostream& out);
SindyModel load_model(std::istream& in);
void save_model(const SindyModel& model, const std::string& path);
SindyModel load_model(const std::string& path);

std::string to_string(ModelMode mode);
ModelMode parse_model_mode(const std::string& text);
std::string to_string(Integrator integrator);
Integrator parse_integrator(const std::string& text);

}  // namespace sindyrl
