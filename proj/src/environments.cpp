#include "sindyrl/environments.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

namespace sindyrl {

namespace {

Constants merge_constants(Constants defaults, const Constants& overrides, const std::string& env) {
    for (const auto& [key, value] : overrides) {
        auto it = defaults.find(key);
        if (it == defaults.end()) throw std::invalid_argument("environment '" + env + "' has no constant '" + key + "'");
        if (!std::isfinite(value)) throw std::invalid_argument("constant '" + key + "' must be finite");
        it->second = value;
    }
    return defaults;
}

void require_positive(const Constants& c, std::initializer_list<const char*> keys) {
    for (const char* key : keys) {
        if (!(c.at(key) > 0.0)) throw std::invalid_argument(std::string("constant '") + key + "' must be > 0");
    }
}

void require_nonnegative(const Constants& c, std::initializer_list<const char*> keys) {
    for (const char* key : keys) {
        if (!(c.at(key) >= 0.0)) throw std::invalid_argument(std::string("constant '") + key + "' must be >= 0");
    }
}

Vector vec(std::initializer_list<double> values) {
    Vector v(static_cast<Eigen::Index>(values.size()));
    Eigen::Index i = 0;
    for (double x : values) v(i++) = x;
    return v;
}

int discrete_index(const Vector& action, int count) {
    if (action.size() != 1) throw std::invalid_argument("discrete action must be a single index");
    const double raw = action(0);
    const int index = static_cast<int>(std::lround(raw));
    if (index < 0 || index >= count || raw != static_cast<double>(index)) {
        throw std::invalid_argument("discrete action index out of range");
    }
    return index;
}

}  // namespace

// ---------------------------------------------------------------------------

ActionSpace ActionSpace::make_discrete(int count) {
    if (count < 1) throw std::invalid_argument("discrete action space needs >= 1 action");
    ActionSpace s;
    s.discrete = true;
    s.count = count;
    return s;
}

ActionSpace ActionSpace::make_box(const Vector& low, const Vector& high) {
    if (low.size() != high.size() || low.size() < 1) throw std::invalid_argument("box bounds have mismatched sizes");
    if (!(low.array() < high.array()).all()) throw std::invalid_argument("box requires low < high");
    ActionSpace s;
    s.low = low;
    s.high = high;
    return s;
}

Vector ActionSpace::from_normalized(const Vector& a) const {
    return low + (a.array() + 1.0).matrix().cwiseProduct(high - low) * 0.5;
}

Vector ActionSpace::to_normalized(const Vector& a) const {
    return (2.0 * (a - low).array() / (high - low).array() - 1.0).matrix();
}

Vector ActionSpace::clamp(const Vector& a) const {
    if (discrete) return a;
    return a.cwiseMax(low).cwiseMin(high);
}

// ---------------------------------------------------------------------------

Environment::Environment(EnvironmentSpec spec) : spec_(std::move(spec)) {
    if (!(spec_.dt > 0.0)) throw std::invalid_argument("environment dt must be > 0");
    if (spec_.max_episode_steps < 1) throw std::invalid_argument("max_episode_steps must be >= 1");
}

double Environment::constant(const std::string& key) const {
    auto it = spec_.constants.find(key);
    if (it == spec_.constants.end()) throw std::out_of_range("no constant '" + key + "'");
    return it->second;
}

Vector Environment::reset(std::uint64_t seed) {
    rng_.seed(seed);
    return reset();
}

Vector Environment::reset() {
    state_ = sample_initial_state(rng_);
    elapsed_ = 0;
    return state_;
}

void Environment::set_state(const Vector& state) {
    if (static_cast<std::size_t>(state.size()) != spec_.state_dim) throw std::invalid_argument("state has wrong size");
    state_ = state;
    elapsed_ = 0;
}

StepResult Environment::step(const Vector& action) {
    if (state_.size() == 0) throw std::logic_error("step() called before reset()");
    const Vector physical = physical_action(action);
    StepResult r;
    r.next_state = transition(state_, physical);
    r.reward = reward(state_, physical, r.next_state);
    ++elapsed_;
    if (is_terminal(r.next_state)) {
        r.done = true;
        r.done_reason = DoneReason::termination;
    } else if (elapsed_ >= spec_.max_episode_steps) {
        r.done = true;
        r.done_reason = DoneReason::truncation;
    }
    state_ = r.next_state;
    return r;
}

// ---------------------------------------------------------------------------
// Cart pole

namespace {

Constants cartpole_defaults() {
    return {{"gravity", 9.8},          {"mass_cart", 1.0},       {"mass_pole", 0.1},
            {"length", 0.5},           {"force_mag", 10.0},      {"theta_threshold", 12.0 * 2.0 * std::numbers::pi / 360.0},
            {"x_threshold", 2.4},      {"cart_damping", 0.0},    {"pole_damping", 0.0}};
}

EnvironmentSpec cartpole_spec(const Constants& overrides) {
    EnvironmentSpec s;
    s.name = "cartpole";
    s.state_dim = 4;
    s.action_space = ActionSpace::make_discrete(2);
    s.dt = 0.02;
    s.max_episode_steps = 500;
    s.constants = merge_constants(cartpole_defaults(), overrides, s.name);
    return s;
}

EnvironmentSpec inverted_pendulum_spec(const Constants& overrides) {
    Constants defaults = cartpole_defaults();
    defaults["cart_damping"] = 0.1;
    defaults["pole_damping"] = 0.05;
    defaults["theta_threshold"] = 0.2;
    EnvironmentSpec s;
    s.name = "inverted_pendulum";
    s.state_dim = 4;
    s.dt = 0.02;
    s.max_episode_steps = 1000;
    s.constants = merge_constants(defaults, overrides, s.name);
    const double f = s.constants.at("force_mag");
    s.action_space = ActionSpace::make_box(vec({-f}), vec({f}));
    return s;
}

}  // namespace

CartPole::CartPole(const Constants& overrides) : CartPole(cartpole_spec(overrides), overrides) {}

CartPole::CartPole(EnvironmentSpec spec, const Constants&) : Environment(std::move(spec)) {
    require_positive(spec_.constants, {"gravity", "mass_cart", "mass_pole", "length", "force_mag", "theta_threshold",
                                       "x_threshold"});
    require_nonnegative(spec_.constants, {"cart_damping", "pole_damping"});
}

CartPole::Accelerations CartPole::accelerations(const Vector& s, double force) const {
    const auto& c = spec_.constants;
    const double g = c.at("gravity"), mc = c.at("mass_cart"), mp = c.at("mass_pole"), l = c.at("length");
    const double total = mp + mc;
    const double x_dot = s(1), theta = s(2), theta_dot = s(3);
    const double sin_t = std::sin(theta), cos_t = std::cos(theta);
    const double common = (force - c.at("cart_damping") * x_dot + l * theta_dot * theta_dot * sin_t) / total;
    const double theta_acc = (g * sin_t - cos_t * common - c.at("pole_damping") * theta_dot / (mp * l)) /
                             (l * (4.0 / 3.0 - mp / total * cos_t * cos_t));
    const double x_acc = common - l / total * theta_acc * cos_t;
    return {x_acc, theta_acc};
}

CartPole::Accelerations CartPole::small_angle_accelerations(const Vector& s, double force) const {
    const auto& c = spec_.constants;
    const double g = c.at("gravity"), mc = c.at("mass_cart"), mp = c.at("mass_pole"), l = c.at("length");
    const double total = mp + mc;
    const double x_dot = s(1), theta = s(2), theta_dot = s(3);
    const double common = (force - c.at("cart_damping") * x_dot + l * theta_dot * theta_dot * theta) / total;
    const double theta_acc =
        (g * theta - common - c.at("pole_damping") * theta_dot / (mp * l)) / (l * (4.0 / 3.0 - mp / total));
    const double x_acc = common - l / total * theta_acc;
    return {x_acc, theta_acc};
}

Vector CartPole::derivative(const Vector& s, double force) const {
    const auto acc = accelerations(s, force);
    return vec({s(1), acc.x_acc, s(3), acc.theta_acc});
}

Vector CartPole::sample_initial_state(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> dist(-0.05, 0.05);
    Vector s(4);
    for (Eigen::Index i = 0; i < 4; ++i) s(i) = dist(rng);
    return s;
}

Vector CartPole::physical_action(const Vector& action) const {
    const int index = discrete_index(action, 2);
    const double f = constant("force_mag");
    return vec({index == 1 ? f : -f});
}

Vector CartPole::true_dynamics(ModelMode mode, const Vector& s, const Vector& physical) const {
    const Vector d = derivative(s, physical(0));
    if (mode == ModelMode::continuous) return d;
    // Semi-implicit Euler: velocities first, positions from the new velocities.
    const double dt = spec_.dt;
    Vector next(4);
    next(1) = s(1) + dt * d(1);
    next(3) = s(3) + dt * d(3);
    next(0) = s(0) + dt * next(1);
    next(2) = s(2) + dt * next(3);
    return next;
}

Vector CartPole::transition(const Vector& s, const Vector& physical) const {
    return true_dynamics(ModelMode::discrete, s, physical);
}

double CartPole::reward(const Vector&, const Vector&, const Vector&) const { return 1.0; }

bool CartPole::is_terminal(const Vector& s) const {
    return std::abs(s(0)) > constant("x_threshold") || std::abs(s(2)) > constant("theta_threshold");
}

InvertedPendulum::InvertedPendulum(const Constants& overrides) : CartPole(inverted_pendulum_spec(overrides), overrides) {}

Vector InvertedPendulum::sample_initial_state(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> dist(-0.01, 0.01);
    Vector s(4);
    for (Eigen::Index i = 0; i < 4; ++i) s(i) = dist(rng);
    return s;
}

Vector InvertedPendulum::physical_action(const Vector& action) const {
    if (action.size() != 1) throw std::invalid_argument("inverted_pendulum expects a 1-d force");
    return spec_.action_space.clamp(action);
}

bool InvertedPendulum::is_terminal(const Vector& s) const {
    return std::abs(s(0)) > constant("x_threshold") || std::abs(s(2)) > constant("theta_threshold");
}

// ---------------------------------------------------------------------------
// Mountain car

namespace {

EnvironmentSpec mountain_car_spec(const Constants& overrides) {
    EnvironmentSpec s;
    s.name = "mountain_car";
    s.state_dim = 2;
    s.action_space = ActionSpace::make_box(vec({-1.0}), vec({1.0}));
    s.dt = 1.0;
    s.max_episode_steps = 999;
    s.constants = merge_constants({{"power", 0.0015},
                                   {"gravity_term", 0.0025},
                                   {"max_speed", 0.07},
                                   {"min_position", -1.2},
                                   {"max_position", 0.6},
                                   {"goal_position", 0.45},
                                   {"goal_velocity", 0.0},
                                   {"action_cost", 0.1},
                                   {"goal_reward", 100.0}},
                                  overrides, s.name);
    return s;
}

}  // namespace

MountainCar::MountainCar(const Constants& overrides) : Environment(mountain_car_spec(overrides)) {
    require_positive(spec_.constants, {"power", "gravity_term", "max_speed"});
    require_nonnegative(spec_.constants, {"action_cost"});
    if (!(constant("min_position") < constant("goal_position") && constant("goal_position") < constant("max_position"))) {
        throw std::invalid_argument("mountain_car requires min_position < goal_position < max_position");
    }
}

Vector MountainCar::sample_initial_state(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> dist(-0.6, -0.4);
    return vec({dist(rng), 0.0});
}

Vector MountainCar::physical_action(const Vector& action) const {
    if (action.size() != 1) throw std::invalid_argument("mountain_car expects a 1-d force");
    return spec_.action_space.clamp(action);
}

Vector MountainCar::true_dynamics(ModelMode mode, const Vector& s, const Vector& physical) const {
    if (mode != ModelMode::discrete) throw std::logic_error("mountain_car dynamics are a difference equation");
    const double max_speed = constant("max_speed");
    const double force = std::clamp(physical(0), -1.0, 1.0);
    const double velocity = s(1) * max_speed + force * constant("power") - constant("gravity_term") * std::cos(3.0 * s(0));
    return vec({s(0) + velocity, velocity / max_speed});
}

Vector MountainCar::transition(const Vector& s, const Vector& physical) const {
    // The position update uses the clamped velocity.
    Vector next = true_dynamics(ModelMode::discrete, s, physical);
    next(1) = std::clamp(next(1), -1.0, 1.0);
    next(0) = s(0) + next(1) * constant("max_speed");
    return project_state(next);
}

Vector MountainCar::project_state(const Vector& s) const {
    const double min_pos = constant("min_position");
    Vector out = s;
    out(1) = std::clamp(out(1), -1.0, 1.0);
    out(0) = std::clamp(out(0), min_pos, constant("max_position"));
    // Inelastic wall at the left end.
    if (out(0) == min_pos && out(1) < 0.0) out(1) = 0.0;
    return out;
}

double MountainCar::reward(const Vector&, const Vector& physical, const Vector& next_state) const {
    const double force = std::clamp(physical(0), -1.0, 1.0);
    double r = -constant("action_cost") * force * force;
    if (is_terminal(next_state)) r += constant("goal_reward");
    return r;
}

bool MountainCar::is_terminal(const Vector& s) const {
    return s(0) >= constant("goal_position") && s(1) * constant("max_speed") >= constant("goal_velocity");
}

std::optional<ReferenceEquations> MountainCar::reference_equations() const {
    const double p = constant("power"), g = constant("gravity_term"), v = constant("max_speed");
    return ReferenceEquations{
        {{"x0", 1.0}, {"x1", v}, {"a0", p}, {"cos(3*x0)", -g}},
        {{"x1", 1.0}, {"a0", p / v}, {"cos(3*x0)", -g / v}},
    };
}

// ---------------------------------------------------------------------------
// Pendulum

namespace {

EnvironmentSpec pendulum_spec(const Constants& overrides) {
    EnvironmentSpec s;
    s.name = "pendulum";
    s.state_dim = 2;
    s.dt = 0.05;
    s.max_episode_steps = 200;
    s.constants = merge_constants({{"gravity", 10.0}, {"mass", 1.0}, {"length", 1.0}, {"max_speed", 8.0}, {"max_torque", 2.0}},
                                  overrides, s.name);
    const double t = s.constants.at("max_torque");
    s.action_space = ActionSpace::make_box(vec({-t}), vec({t}));
    return s;
}

}  // namespace

Pendulum::Pendulum(const Constants& overrides) : Environment(pendulum_spec(overrides)) {
    require_positive(spec_.constants, {"gravity", "mass", "length", "max_speed", "max_torque"});
}

double normalize_angle(double theta) {
    constexpr double pi = std::numbers::pi;
    return std::fmod(std::fmod(theta + pi, 2.0 * pi) + 2.0 * pi, 2.0 * pi) - pi;
}

Vector Pendulum::sample_initial_state(std::mt19937_64& rng) const {
    std::uniform_real_distribution<double> angle(-std::numbers::pi, std::numbers::pi);
    std::uniform_real_distribution<double> speed(-1.0, 1.0);
    const double theta = angle(rng);
    return vec({theta, speed(rng)});
}

Vector Pendulum::physical_action(const Vector& action) const {
    if (action.size() != 1) throw std::invalid_argument("pendulum expects a 1-d torque");
    return spec_.action_space.clamp(action);
}

Vector Pendulum::integrate(const Vector& s, const Vector& physical, double speed_limit) const {
    const double g = constant("gravity"), m = constant("mass"), l = constant("length");
    const double torque = std::clamp(physical(0), -constant("max_torque"), constant("max_torque"));
    const double acc = 3.0 * g / (2.0 * l) * std::sin(s(0)) + 3.0 / (m * l * l) * torque;
    if (!std::isfinite(speed_limit) && speed_limit < 0.0) return vec({s(1), acc});
    const double speed = std::clamp(s(1) + acc * spec_.dt, -speed_limit, speed_limit);
    return vec({s(0) + speed * spec_.dt, speed});
}

Vector Pendulum::true_dynamics(ModelMode mode, const Vector& s, const Vector& physical) const {
    constexpr double inf = std::numeric_limits<double>::infinity();
    return integrate(s, physical, mode == ModelMode::continuous ? -inf : inf);
}

Vector Pendulum::transition(const Vector& s, const Vector& physical) const {
    return integrate(s, physical, constant("max_speed"));
}

double Pendulum::reward(const Vector& s, const Vector& physical, const Vector&) const {
    const double torque = std::clamp(physical(0), -constant("max_torque"), constant("max_torque"));
    const double th = normalize_angle(s(0));
    return -(th * th + 0.1 * s(1) * s(1) + 0.001 * torque * torque);
}

Vector Pendulum::project_state(const Vector& s) const {
    const double limit = constant("max_speed");
    return vec({s(0), std::clamp(s(1), -limit, limit)});
}

Vector Pendulum::observe(const Vector& s) const { return vec({std::cos(s(0)), std::sin(s(0)), s(1)}); }

double Pendulum::energy(const Vector& s) const {
    const double k = 3.0 * constant("gravity") / (2.0 * constant("length"));
    return 0.5 * s(1) * s(1) + k * std::cos(s(0));
}

std::optional<ReferenceEquations> Pendulum::reference_equations() const {
    const double g = constant("gravity"), m = constant("mass"), l = constant("length");
    const double dt = spec_.dt;
    const double gain = 3.0 * g / (2.0 * l), drive = 3.0 / (m * l * l);
    return ReferenceEquations{
        {{"x0", 1.0}, {"x1", dt}, {"sin(x0)", gain * dt * dt}, {"a0", drive * dt * dt}},
        {{"x1", 1.0}, {"sin(x0)", gain * dt}, {"a0", drive * dt}},
    };
}

// ---------------------------------------------------------------------------

std::unique_ptr<Environment> make_environment(const std::string& name, const Constants& overrides) {
    if (name == "cartpole") return std::make_unique<CartPole>(overrides);
    if (name == "inverted_pendulum") return std::make_unique<InvertedPendulum>(overrides);
    if (name == "mountain_car") return std::make_unique<MountainCar>(overrides);
    if (name == "pendulum") return std::make_unique<Pendulum>(overrides);
    throw std::invalid_argument("unknown environment '" + name + "'");
}

std::vector<std::string> environment_names() { return {"cartpole", "mountain_car", "pendulum", "inverted_pendulum"}; }

}  // namespace sindyrl
