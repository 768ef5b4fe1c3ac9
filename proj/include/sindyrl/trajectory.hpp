#pragma once

#include "sindyrl/core.hpp"

#include <vector>

namespace sindyrl {

enum class ModelMode { continuous, discrete };

// One rollout: T + 1 states, T actions (in the model's physical action
// units), T rewards and done flags, fixed timestep.
struct Trajectory {
    Matrix states;
    Matrix actions;
    Vector rewards;
    std::vector<bool> dones;
    double dt = 0.0;

    Eigen::Index transitions() const { return actions.rows(); }
    Eigen::Index state_dim() const { return states.cols(); }
    Eigen::Index action_dim() const { return actions.cols(); }

    // Throws std::invalid_argument describing the first broken invariant.
    void validate() const;
};

// Incremental builder used by rollouts.
class TrajectoryBuilder {
public:
    TrajectoryBuilder(const Vector& initial_state, Eigen::Index action_dim, double dt);

    void push(const Vector& action, double reward, bool done, const Vector& next_state);
    Eigen::Index size() const { return static_cast<Eigen::Index>(rewards_.size()); }
    const Vector& last_state() const { return states_.back(); }
    Trajectory build() const;

private:
    std::vector<Vector> states_;
    std::vector<Vector> actions_;
    std::vector<double> rewards_;
    std::vector<bool> dones_;
    Eigen::Index action_dim_;
    double dt_;
};

}  // namespace sindyrl
