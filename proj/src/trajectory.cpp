#include "sindyrl/trajectory.hpp"

#include <string>

namespace sindyrl {

void Trajectory::validate() const {
    if (states.rows() != actions.rows() + 1) {
        throw std::invalid_argument("trajectory has " + std::to_string(states.rows()) + " states for " +
                                    std::to_string(actions.rows()) + " actions");
    }
    if (rewards.size() != actions.rows() || static_cast<Eigen::Index>(dones.size()) != actions.rows()) {
        throw std::invalid_argument("trajectory reward/done length differs from action count");
    }
    if (!(dt > 0.0)) throw std::invalid_argument("trajectory dt must be > 0");
    if (!states.allFinite() || !actions.allFinite() || !rewards.allFinite()) {
        throw std::invalid_argument("trajectory contains non-finite entries");
    }
}

TrajectoryBuilder::TrajectoryBuilder(const Vector& initial_state, Eigen::Index action_dim, double dt)
    : states_{initial_state}, action_dim_(action_dim), dt_(dt) {}

void TrajectoryBuilder::push(const Vector& action, double reward, bool done, const Vector& next_state) {
    actions_.push_back(action);
    rewards_.push_back(reward);
    dones_.push_back(done);
    states_.push_back(next_state);
}

Trajectory TrajectoryBuilder::build() const {
    Trajectory t;
    const auto n = static_cast<Eigen::Index>(states_.front().size());
    t.states.resize(static_cast<Eigen::Index>(states_.size()), n);
    for (std::size_t i = 0; i < states_.size(); ++i) t.states.row(static_cast<Eigen::Index>(i)) = states_[i].transpose();
    t.actions.resize(static_cast<Eigen::Index>(actions_.size()), action_dim_);
    for (std::size_t i = 0; i < actions_.size(); ++i) t.actions.row(static_cast<Eigen::Index>(i)) = actions_[i].transpose();
    t.rewards = Eigen::Map<const Vector>(rewards_.data(), static_cast<Eigen::Index>(rewards_.size()));
    t.dones = dones_;
    t.dt = dt_;
    return t;
}

}  // namespace sindyrl
