#include "sindyrl/sindy_model.hpp"

#include <cmath>
#include <cstdio>
#include <fstream>
#include <iomanip>
#include <istream>
#include <limits>
#include <ostream>
#include <sstream>

namespace sindyrl {

std::string to_string(ModelMode mode) { return mode == ModelMode::continuous ? "continuous" : "discrete"; }

ModelMode parse_model_mode(const std::string& text) {
    if (text == "continuous") return ModelMode::continuous;
    if (text == "discrete") return ModelMode::discrete;
    throw std::invalid_argument("unknown model mode '" + text + "'");
}

std::string to_string(Integrator integrator) { return integrator == Integrator::rk4 ? "rk4" : "euler"; }

Integrator parse_integrator(const std::string& text) {
    if (text == "rk4") return Integrator::rk4;
    if (text == "euler") return Integrator::euler;
    throw std::invalid_argument("unknown integrator '" + text + "'");
}

SindyModel::SindyModel(FeatureLibrary library, CoefficientMatrix coefficients, ModelMode mode, double fit_dt,
                       Integrator integrator, std::vector<ColumnDiagnostics> diagnostics)
    : library_(std::move(library)),
      coefficients_(std::move(coefficients)),
      mode_(mode),
      fit_dt_(fit_dt),
      integrator_(integrator),
      diagnostics_(std::move(diagnostics)) {
    if (static_cast<std::size_t>(coefficients_.features()) != library_.size() ||
        static_cast<std::size_t>(coefficients_.state_dims()) != library_.state_dim()) {
        throw std::invalid_argument("coefficient matrix must be F x n = " + std::to_string(library_.size()) + " x " +
                                    std::to_string(library_.state_dim()));
    }
    if (!(fit_dt_ > 0.0)) throw std::invalid_argument("model fit_dt must be > 0");
}

Vector SindyModel::evaluate(const Vector& state, const Vector& action) const {
    if (static_cast<std::size_t>(state.size()) != state_dim() || static_cast<std::size_t>(action.size()) != action_dim()) {
        throw std::invalid_argument("model expects state dim " + std::to_string(state_dim()) + " and action dim " +
                                    std::to_string(action_dim()));
    }
    double input[32];
    std::vector<double> heap;
    double* buf = input;
    const std::size_t dim = library_.input_dim();
    if (dim > 32) {
        heap.resize(dim);
        buf = heap.data();
    }
    for (Eigen::Index i = 0; i < state.size(); ++i) buf[i] = state(i);
    for (Eigen::Index i = 0; i < action.size(); ++i) buf[state.size() + i] = action(i);
    const RowVector row = library_.evaluate_row({buf, dim});
    return (row * coefficients_.values).transpose();
}

// ---------------------------------------------------------------------------

RegressionProblem assemble_problem(const Trajectory& trajectory, const FeatureLibrary& library,
                                   const SindyFitConfig& config) {
    trajectory.validate();
    const Eigen::Index t = trajectory.transitions();
    if (static_cast<std::size_t>(trajectory.state_dim()) != library.state_dim() ||
        static_cast<std::size_t>(trajectory.action_dim()) != library.action_dim()) {
        throw std::invalid_argument("trajectory dimensions do not match the feature library");
    }

    if (config.mode == ModelMode::discrete) {
        if (t < 1) throw std::length_error("discrete fit needs at least one transition");
        RegressionProblem p;
        p.theta = evaluate_library(library, trajectory.states.topRows(t), trajectory.actions);
        p.targets = trajectory.states.bottomRows(t);
        return p;
    }

    const DerivativeEstimate d = differentiate(trajectory.states, trajectory.dt, config.diff);
    // The last state has no action; it only contributes to differencing.
    Eigen::Index begin = 0;
    Eigen::Index end = t;
    if (config.diff.drop_boundary) {
        begin = d.valid_range.begin;
        end = std::min(end, d.valid_range.end);
    }
    if (end <= begin) throw std::length_error("trajectory too short for the differentiation window");
    const Eigen::Index rows = end - begin;
    RegressionProblem p;
    p.theta = evaluate_library(library, trajectory.states.middleRows(begin, rows), trajectory.actions.middleRows(begin, rows));
    p.targets = d.values.middleRows(begin, rows);
    return p;
}

RegressionProblem assemble_problem(const std::vector<Trajectory>& trajectories, const FeatureLibrary& library,
                                   const SindyFitConfig& config) {
    if (trajectories.empty()) throw std::invalid_argument("fit needs at least one trajectory");
    const double dt = trajectories.front().dt;
    std::vector<RegressionProblem> parts;
    Eigen::Index rows = 0;
    for (const auto& traj : trajectories) {
        if (traj.dt != dt) throw std::invalid_argument("trajectories have inconsistent dt");
        parts.push_back(assemble_problem(traj, library, config));
        rows += parts.back().theta.rows();
    }
    RegressionProblem out;
    out.theta.resize(rows, static_cast<Eigen::Index>(library.size()));
    out.targets.resize(rows, static_cast<Eigen::Index>(library.state_dim()));
    Eigen::Index offset = 0;
    for (const auto& part : parts) {
        out.theta.middleRows(offset, part.theta.rows()) = part.theta;
        out.targets.middleRows(offset, part.targets.rows()) = part.targets;
        offset += part.theta.rows();
    }
    return out;
}

SindyModel fit(const std::vector<Trajectory>& trajectories, const FeatureLibrary& library, const SindyFitConfig& config) {
    const RegressionProblem problem = assemble_problem(trajectories, library, config);
    StlsqResult result = stlsq(problem, config.stlsq);
    return SindyModel(library, std::move(result.coefficients), config.mode, trajectories.front().dt, config.integrator,
                      std::move(result.columns));
}

Vector predict_derivative(const SindyModel& model, const Vector& state, const Vector& action) {
    if (model.mode() != ModelMode::continuous) throw std::logic_error("predict_derivative needs a continuous model");
    return model.evaluate(state, action);
}

namespace {

void check_state(const Vector& x, std::size_t step) {
    if (!x.allFinite() || x.cwiseAbs().maxCoeff() > kDivergenceBound) {
        std::ostringstream msg;
        msg << "model diverged at step " << step << ": state [" << x.transpose() << "]";
        throw DivergenceError(msg.str(), step);
    }
}

}  // namespace

Vector simulate_step(const SindyModel& model, const Vector& state, const Vector& action, double dt,
                     std::size_t step_index) {
    if (model.mode() == ModelMode::discrete) {
        Vector next = model.evaluate(state, action);
        check_state(next, step_index);
        return next;
    }
    if (!(dt > 0.0)) throw std::invalid_argument("simulate_step: dt must be > 0");
    const Vector k1 = model.evaluate(state, action);
    if (model.integrator() == Integrator::euler) {
        Vector next = state + dt * k1;
        check_state(next, step_index);
        return next;
    }
    const Vector x2 = state + 0.5 * dt * k1;
    check_state(x2, step_index);
    const Vector k2 = model.evaluate(x2, action);
    const Vector x3 = state + 0.5 * dt * k2;
    check_state(x3, step_index);
    const Vector k3 = model.evaluate(x3, action);
    const Vector x4 = state + dt * k3;
    check_state(x4, step_index);
    const Vector k4 = model.evaluate(x4, action);
    Vector next = state + dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
    check_state(next, step_index);
    return next;
}

Trajectory rollout_model(const SindyModel& model, const Environment& env, const StatePolicy& policy,
                         const Vector& initial_state, int horizon) {
    if (horizon < 1) throw std::invalid_argument("rollout_model: horizon must be >= 1");
    TrajectoryBuilder builder(initial_state, static_cast<Eigen::Index>(model.action_dim()), env.dt());
    Vector state = initial_state;
    for (int t = 0; t < horizon; ++t) {
        const Vector physical = env.physical_action(policy(state));
        const Vector next =
            env.project_state(simulate_step(model, state, physical, env.dt(), static_cast<std::size_t>(t)));
        const double r = env.reward(state, physical, next);
        const bool done = env.is_terminal(next);
        builder.push(physical, r, done, next);
        state = next;
        if (done) break;
    }
    return builder.build();
}

// ---------------------------------------------------------------------------

ModelEnvironment::ModelEnvironment(std::shared_ptr<const SindyModel> model, const Environment& task)
    : Environment([&] {
          EnvironmentSpec s = task.spec();
          s.name = "model:" + s.name;
          return s;
      }()),
      model_(std::move(model)),
      task_(task.clone()) {
    if (!model_) throw std::invalid_argument("ModelEnvironment needs a model");
    if (model_->state_dim() != task.state_dim() || model_->action_dim() != task.physical_action_dim()) {
        throw std::invalid_argument("model dimensions do not match environment '" + task.name() + "'");
    }
}

ModelEnvironment::ModelEnvironment(const ModelEnvironment& other)
    : Environment(other), model_(other.model_), task_(other.task_->clone()) {}

Vector ModelEnvironment::transition(const Vector& state, const Vector& physical) const {
    return project_state(simulate_step(*model_, state, physical, spec_.dt, static_cast<std::size_t>(elapsed_steps())));
}

Vector ModelEnvironment::true_dynamics(ModelMode mode, const Vector& state, const Vector& physical) const {
    if (mode != model_->mode()) throw std::logic_error("model environment only exposes its own mode");
    return model_->evaluate(state, physical);
}

// ---------------------------------------------------------------------------

std::string equations_to_string(const SindyModel& model) {
    const auto& names = model.library().functions();
    const Matrix& xi = model.coefficients().values;
    std::ostringstream out;
    for (Eigen::Index j = 0; j < xi.cols(); ++j) {
        const std::string var = "x" + std::to_string(j);
        out << (model.mode() == ModelMode::continuous ? "d " + var + "/dt = " : var + "(t+1) = ");
        bool first = true;
        for (Eigen::Index i = 0; i < xi.rows(); ++i) {
            const double c = xi(i, j);
            if (c == 0.0) continue;
            char buf[64];
            std::snprintf(buf, sizeof(buf), "%.4f", std::abs(c));
            if (first) {
                out << (c < 0.0 ? "-" : "");
            } else {
                out << (c < 0.0 ? " - " : " + ");
            }
            out << buf;
            const std::string& name = names[static_cast<std::size_t>(i)].name;
            if (name != "1") out << "·" << name;
            first = false;
        }
        if (first) out << "0";
        out << "\n";
    }
    return out.str();
}

namespace {

constexpr const char* kMagic = "sindy-model";
constexpr int kFormatVersion = 1;

template <typename T>
T read_field(std::istream& in, const std::string& key) {
    std::string k;
    T value{};
    if (!(in >> k) || k != key || !(in >> value)) throw std::runtime_error("model file: expected '" + key + "'");
    return value;
}

}  // namespace

void save_model(const SindyModel& model, std::ostream& out) {
    out << kMagic << " " << kFormatVersion << "\n";
    out << std::setprecision(17);
    out << "mode " << to_string(model.mode()) << "\n";
    out << "dt " << model.fit_dt() << "\n";
    out << "integrator " << to_string(model.integrator()) << "\n";
    out << "state_dim " << model.state_dim() << "\n";
    out << "action_dim " << model.action_dim() << "\n";
    out << "features " << model.library().size() << "\n";
    for (const auto& f : model.library().functions()) out << f.name << "\n";
    out << "coefficients\n";
    const Matrix& xi = model.coefficients().values;
    for (Eigen::Index i = 0; i < xi.rows(); ++i) {
        for (Eigen::Index j = 0; j < xi.cols(); ++j) out << (j ? " " : "") << xi(i, j);
        out << "\n";
    }
}

SindyModel load_model(std::istream& in) {
    std::string magic;
    int version = 0;
    if (!(in >> magic >> version) || magic != kMagic) throw std::runtime_error("model file: bad header");
    if (version != kFormatVersion) throw std::runtime_error("model file: unsupported version " + std::to_string(version));
    const ModelMode mode = parse_model_mode(read_field<std::string>(in, "mode"));
    const double dt = read_field<double>(in, "dt");
    const Integrator integrator = parse_integrator(read_field<std::string>(in, "integrator"));
    const auto state_dim = read_field<std::size_t>(in, "state_dim");
    const auto action_dim = read_field<std::size_t>(in, "action_dim");
    const auto features = read_field<std::size_t>(in, "features");
    std::vector<std::string> names(features);
    for (auto& name : names) {
        if (!(in >> name)) throw std::runtime_error("model file: truncated feature list");
    }
    std::string tag;
    if (!(in >> tag) || tag != "coefficients") throw std::runtime_error("model file: expected 'coefficients'");
    Matrix xi(static_cast<Eigen::Index>(features), static_cast<Eigen::Index>(state_dim));
    for (Eigen::Index i = 0; i < xi.rows(); ++i) {
        for (Eigen::Index j = 0; j < xi.cols(); ++j) {
            std::string token;
            if (!(in >> token)) throw std::runtime_error("model file: truncated coefficient table");
            xi(i, j) = std::stod(token);
        }
    }
    return SindyModel(parse_custom_features(names, state_dim, action_dim), CoefficientMatrix::from_values(xi), mode, dt,
                      integrator);
}

void save_model(const SindyModel& model, const std::string& path) {
    std::ofstream out(path);
    if (!out) throw std::runtime_error("cannot write model file '" + path + "'");
    save_model(model, out);
}

SindyModel load_model(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot read model file '" + path + "'");
    return load_model(in);
}

}  // namespace sindyrl
