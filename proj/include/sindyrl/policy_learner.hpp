#pragma once

#include "sindyrl/core.hpp"
#include "sindyrl/environments.hpp"

#include <cstdint>
#include <iosfwd>
#include <limits>
#include <random>
#include <string>
#include <vector>

namespace sindyrl {

// Fully connected network with ReLU hidden layers and a linear output.
// Parameters live in one flat vector laid out layer by layer as
// [W (out x in, column-major), b]. Inputs are column-major batches
// (features x samples).
class Mlp {
public:
    struct Cache {
        std::vector<Matrix> inputs;  // input to each layer
        std::vector<Matrix> pre;     // pre-activation of each layer
    };

    Mlp() = default;
    Mlp(std::vector<int> sizes, std::mt19937_64& rng);

    const std::vector<int>& sizes() const { return sizes_; }
    int input_dim() const { return sizes_.front(); }
    int output_dim() const { return sizes_.back(); }
    Vector& params() { return params_; }
    const Vector& params() const { return params_; }
    Eigen::Index param_count() const { return params_.size(); }

    // Zeroes the output layer; optionally fills its bias with `bias`.
    void zero_output_layer(const Vector& bias);

    Matrix forward(const Matrix& x, Cache* cache = nullptr) const;
    // Adds dL/dparams into `grad` (sized param_count()) given dL/doutput and
    // the cache of the matching forward pass; writes dL/dinput if requested.
    void backward(const Cache& cache, const Matrix& d_out, Vector& grad, Matrix* d_input = nullptr) const;

private:
    std::vector<int> sizes_;
    std::vector<Eigen::Index> offsets_;
    Vector params_;

    Eigen::Map<const Matrix> weight(std::size_t layer) const;
    Eigen::Map<const Vector> bias(std::size_t layer) const;
};

class Adam {
public:
    Adam() = default;
    Adam(Eigen::Index size, double lr, double beta1 = 0.9, double beta2 = 0.999, double eps = 1e-8);

    void step(Vector& params, const Vector& grad);
    long steps() const { return t_; }

private:
    double lr_ = 3e-4, beta1_ = 0.9, beta2_ = 0.999, eps_ = 1e-8;
    Vector m_, v_;
    long t_ = 0;
};

enum class Source : std::uint8_t { real, model };

struct Batch {
    Matrix obs;        // d x B
    Matrix actions;    // k x B (normalized) or 1 x B (index)
    Vector rewards;
    Matrix next_obs;
    Vector dones;      // 1 for terminal transitions, 0 otherwise

    Eigen::Index size() const { return rewards.size(); }
};

// FIFO ring buffer with per-transition source tags.
class ReplayBuffer {
public:
    ReplayBuffer(std::size_t capacity, Eigen::Index obs_dim, Eigen::Index action_dim);

    void add(const Vector& obs, const Vector& action, double reward, const Vector& next_obs, bool done, Source source);
    std::size_t size() const { return size_; }
    std::size_t capacity() const { return capacity_; }
    std::size_t count(Source source) const;
    void clear();

    // Uniform with replacement over all stored transitions.
    Batch sample(std::size_t batch_size, std::mt19937_64& rng) const;
    // Uniform over transitions carrying `source`; throws if there are none.
    Batch sample(std::size_t batch_size, std::mt19937_64& rng, Source source) const;
    Batch at(const std::vector<std::size_t>& indices) const;

private:
    std::size_t capacity_;
    std::size_t size_ = 0;
    std::size_t head_ = 0;
    Matrix obs_, actions_, next_obs_;
    Vector rewards_, dones_;
    std::vector<Source> sources_;
};

struct SacConfig {
    std::vector<int> hidden = {64, 64};
    double actor_lr = 3e-4;
    double critic_lr = 3e-4;
    double alpha_lr = 3e-4;
    double gamma = 0.99;
    double tau = 0.005;
    int batch_size = 128;
    double initial_alpha = 1.0;
    bool learn_alpha = true;
    // NaN selects -action_dim (continuous) or 0.6 * log(count) (discrete).
    double target_entropy = std::numeric_limits<double>::quiet_NaN();
    double log_std_min = -5.0;
    double log_std_max = 2.0;

    void validate() const;
    bool operator==(const SacConfig& other) const;
};

struct UpdateStats {
    double critic_loss = 0.0;
    double actor_loss = 0.0;
    double alpha_loss = 0.0;
    double alpha = 0.0;
    double entropy = 0.0;
};

// Soft actor-critic over a squashed Gaussian (continuous) or categorical
// (discrete) policy. Policy-space actions are env-space values for box
// spaces and a length-1 index vector for discrete spaces; the buffer stores
// box actions normalized to [-1, 1].
class SacAgent {
public:
    SacAgent(Eigen::Index obs_dim, ActionSpace space, SacConfig config, std::uint64_t seed);

    const SacConfig& config() const { return config_; }
    const ActionSpace& action_space() const { return space_; }
    Eigen::Index obs_dim() const { return obs_dim_; }
    bool discrete() const { return space_.discrete; }
    // Row count of stored actions.
    Eigen::Index stored_action_dim() const { return space_.discrete ? 1 : space_.dim(); }
    double target_entropy() const { return target_entropy_; }
    double alpha() const { return std::exp(log_alpha_); }
    double log_alpha() const { return log_alpha_; }

    Mlp& actor() { return actor_; }
    const Mlp& actor() const { return actor_; }
    Mlp& critic(int i) { return critics_[i]; }
    const Mlp& critic(int i) const { return critics_[i]; }
    const Mlp& target(int i) const { return targets_[i]; }
    void set_log_alpha(double v) { log_alpha_ = v; }

    // Policy-space action; stochastic mode draws from `rng`.
    Vector act(const Vector& obs, bool deterministic, std::mt19937_64& rng) const;
    // Buffer representation of a policy-space action and back.
    Vector to_stored(const Vector& action) const;
    Vector from_stored(const Vector& stored) const;
    // Action probabilities (discrete only).
    Vector probabilities(const Vector& obs) const;

    UpdateStats update(const Batch& batch, std::mt19937_64& rng);
    void soft_update_targets();

    // Loss values with gradients; `noise` holds standard normal draws
    // (action_dim x B) for the reparameterized samples and is ignored by the
    // discrete variant. Critic gradients are [critic0; critic1].
    double critic_loss(const Batch& batch, const Matrix& next_noise, Vector* grad) const;
    double actor_loss(const Batch& batch, const Matrix& noise, Vector* grad) const;
    double alpha_loss(const Batch& batch, const Matrix& noise, double* grad) const;

    void save(std::ostream& out) const;
    void load(std::istream& in);
    void save(const std::string& path) const;
    void load(const std::string& path);

private:
    struct PolicySample {
        Matrix actions;   // k x B in [-1, 1]
        Vector log_prob;  // B
        Matrix u, mean, log_std, raw_log_std;
        Mlp::Cache cache;
    };

    Eigen::Index obs_dim_;
    ActionSpace space_;
    SacConfig config_;
    double target_entropy_;
    Mlp actor_;
    Mlp critics_[2];
    Mlp targets_[2];
    double log_alpha_;
    Adam actor_opt_, critic_opt_[2], alpha_opt_;

    PolicySample sample_continuous(const Matrix& obs, const Matrix& noise) const;
    Matrix critic_input(const Matrix& obs, const Matrix& actions) const;
    Matrix noise(Eigen::Index batch, std::mt19937_64& rng) const;
};

struct EvaluationResult {
    double mean = 0.0;
    double stddev = 0.0;
    std::vector<double> returns;
    std::vector<int> lengths;
};

// Deterministic-mode episodes; episode i starts from env.reset(seed + i).
EvaluationResult evaluate_policy(const SacAgent& agent, Environment& env, int episodes, std::uint64_t seed);

}  // namespace sindyrl
