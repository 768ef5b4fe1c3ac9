#include "sindyrl/feature_library.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <string>

namespace sindyrl {

namespace {

std::string power_term(const std::string& var, int exponent) {
    return exponent == 1 ? var : var + "^" + std::to_string(exponent);
}

std::string scaled_arg(int k, const std::string& var) { return k == 1 ? var : std::to_string(k) + "*" + var; }

// Exponent vectors of total degree `degree`, first slot's exponent descending.
void enumerate_exponents(std::size_t slot, int remaining, std::vector<int>& current,
                         std::vector<std::vector<int>>& out) {
    if (slot + 1 == current.size()) {
        current[slot] = remaining;
        out.push_back(current);
        return;
    }
    for (int e = remaining; e >= 0; --e) {
        current[slot] = e;
        enumerate_exponents(slot + 1, remaining - e, current, out);
    }
}

}  // namespace

FeatureFunction make_feature(ExpressionPtr expr) {
    FeatureFunction f;
    f.name = expr->to_string();
    f.arity_indices = expr->slots();
    f.expr = std::move(expr);
    return f;
}

FeatureLibrary::FeatureLibrary(std::size_t state_dim, std::size_t action_dim, std::vector<FeatureFunction> functions)
    : state_dim_(state_dim), action_dim_(action_dim), functions_(std::move(functions)) {
    if (functions_.empty()) throw std::invalid_argument("feature library must contain at least one function");
    std::set<std::string> seen;
    for (const auto& f : functions_) {
        if (!seen.insert(f.name).second) throw std::invalid_argument("duplicate feature name '" + f.name + "'");
        for (auto slot : f.arity_indices) {
            if (slot >= input_dim()) {
                throw std::invalid_argument("feature '" + f.name + "' reads slot " + std::to_string(slot) +
                                            " beyond input dimension " + std::to_string(input_dim()));
            }
        }
    }
}

std::vector<std::string> FeatureLibrary::names() const {
    std::vector<std::string> out;
    out.reserve(functions_.size());
    for (const auto& f : functions_) out.push_back(f.name);
    return out;
}

long FeatureLibrary::index_of(const std::string& name) const {
    for (std::size_t i = 0; i < functions_.size(); ++i) {
        if (functions_[i].name == name) return static_cast<long>(i);
    }
    // Products match regardless of factor order.
    std::vector<std::string> factors;
    for (std::size_t start = 0;;) {
        const auto star = name.find('*', start);
        factors.push_back(name.substr(start, star - start));
        if (star == std::string::npos) break;
        start = star + 1;
    }
    if (factors.size() < 2 || factors.size() > 6) return -1;
    std::sort(factors.begin(), factors.end());
    do {
        std::string candidate = factors[0];
        for (std::size_t k = 1; k < factors.size(); ++k) candidate += "*" + factors[k];
        for (std::size_t i = 0; i < functions_.size(); ++i) {
            if (functions_[i].name == candidate) return static_cast<long>(i);
        }
    } while (std::next_permutation(factors.begin(), factors.end()));
    return -1;
}

RowVector FeatureLibrary::evaluate_row(std::span<const double> input) const {
    RowVector row(static_cast<Eigen::Index>(functions_.size()));
    evaluate_row(input, row);
    return row;
}

void FeatureLibrary::evaluate_row(std::span<const double> input, Eigen::Ref<RowVector> out) const {
    if (input.size() != input_dim()) {
        throw std::invalid_argument("feature input has " + std::to_string(input.size()) + " entries, library expects " +
                                    std::to_string(input_dim()));
    }
    for (std::size_t i = 0; i < functions_.size(); ++i) out(static_cast<Eigen::Index>(i)) = functions_[i].eval(input);
}

FeatureLibrary FeatureLibrary::operator+(const FeatureLibrary& other) const {
    if (other.state_dim_ != state_dim_ || other.action_dim_ != action_dim_) {
        throw std::invalid_argument("cannot concatenate libraries over different inputs");
    }
    std::vector<FeatureFunction> all = functions_;
    all.insert(all.end(), other.functions_.begin(), other.functions_.end());
    return FeatureLibrary(state_dim_, action_dim_, std::move(all));
}

FeatureLibrary polynomial_library(std::size_t state_dim, std::size_t action_dim, int degree, bool include_bias) {
    const std::size_t dim = state_dim + action_dim;
    if (dim < 1) throw std::invalid_argument("polynomial_library: input_dim must be >= 1");
    if (degree < 1) throw std::invalid_argument("polynomial_library: degree must be >= 1");

    std::vector<std::string> names;
    if (include_bias) names.emplace_back("1");
    for (int d = 1; d <= degree; ++d) {
        std::vector<std::vector<int>> exps;
        std::vector<int> current(dim, 0);
        enumerate_exponents(0, d, current, exps);
        for (const auto& e : exps) {
            std::string name;
            for (std::size_t s = 0; s < dim; ++s) {
                if (e[s] == 0) continue;
                if (!name.empty()) name += "*";
                name += power_term(variable_name(s, state_dim), e[s]);
            }
            names.push_back(std::move(name));
        }
    }
    return parse_custom_features(names, state_dim, action_dim);
}

FeatureLibrary fourier_library(std::size_t state_dim, std::size_t action_dim, const std::vector<std::size_t>& slots,
                               int k_max) {
    if (slots.empty()) throw std::domain_error("fourier_library: no target indices");
    if (k_max < 1) throw std::invalid_argument("fourier_library: k_max must be >= 1");
    std::vector<std::string> names;
    for (auto slot : slots) {
        if (slot >= state_dim + action_dim) throw std::out_of_range("fourier_library: index out of range");
        const std::string var = variable_name(slot, state_dim);
        for (int k = 1; k <= k_max; ++k) {
            names.push_back("sin(" + scaled_arg(k, var) + ")");
            names.push_back("cos(" + scaled_arg(k, var) + ")");
        }
    }
    return parse_custom_features(names, state_dim, action_dim);
}

FeatureLibrary per_variable_fourier_library(std::size_t state_dim, std::size_t action_dim, int k_max) {
    if (k_max < 1) throw std::invalid_argument("per_variable_fourier_library: k_max must be >= 1");
    std::vector<std::string> names{"1"};
    for (std::size_t slot = 0; slot < state_dim + action_dim; ++slot) {
        const std::string var = variable_name(slot, state_dim);
        names.push_back(var);
        names.push_back(var + "^2");
        for (int k = 1; k <= k_max; ++k) {
            names.push_back("sin(" + scaled_arg(k, var) + ")");
            names.push_back("cos(" + scaled_arg(k, var) + ")");
        }
    }
    return parse_custom_features(names, state_dim, action_dim);
}

FeatureLibrary cartpole_library(std::size_t action_dim) {
    constexpr std::size_t state_dim = 4;
    const std::size_t dim = state_dim + action_dim;
    std::vector<std::string> vars;
    for (std::size_t s = 0; s < dim; ++s) vars.push_back(variable_name(s, state_dim));

    std::vector<std::string> names{"1"};
    for (const auto& v : vars) names.push_back(v);
    for (const auto& v : vars) names.push_back(v + "^2");
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = i + 1; j < dim; ++j) names.push_back(vars[i] + "*" + vars[j]);
    }
    for (std::size_t i = 0; i < dim; ++i) {
        for (std::size_t j = 0; j < dim; ++j) {
            if (i != j) names.push_back(vars[i] + "^2*" + vars[j]);
        }
    }
    return parse_custom_features(names, state_dim, action_dim);
}

FeatureLibrary parse_custom_features(const std::vector<std::string>& specs, std::size_t state_dim,
                                     std::size_t action_dim) {
    std::vector<FeatureFunction> functions;
    functions.reserve(specs.size());
    for (const auto& spec : specs) functions.push_back(make_feature(parse_expression(spec, state_dim, action_dim)));
    return FeatureLibrary(state_dim, action_dim, std::move(functions));
}

Matrix evaluate_library(const FeatureLibrary& library, const Matrix& states, const Matrix& actions) {
    const Eigen::Index n = states.rows();
    if (actions.rows() != n && actions.cols() > 0) {
        throw std::invalid_argument("evaluate_library: states have " + std::to_string(n) + " rows, actions " +
                                    std::to_string(actions.rows()));
    }
    if (static_cast<std::size_t>(states.cols()) != library.state_dim() ||
        static_cast<std::size_t>(actions.cols()) != library.action_dim()) {
        throw std::invalid_argument("evaluate_library: input columns (" + std::to_string(states.cols()) + " + " +
                                    std::to_string(actions.cols()) + ") do not match library input_dim " +
                                    std::to_string(library.input_dim()));
    }

    const auto f = static_cast<Eigen::Index>(library.size());
    Matrix theta(n, f);
    std::vector<double> input(library.input_dim());
    for (Eigen::Index t = 0; t < n; ++t) {
        for (Eigen::Index j = 0; j < states.cols(); ++j) input[static_cast<std::size_t>(j)] = states(t, j);
        for (Eigen::Index j = 0; j < actions.cols(); ++j) {
            input[static_cast<std::size_t>(states.cols() + j)] = actions(t, j);
        }
        for (Eigen::Index i = 0; i < f; ++i) {
            const auto& fn = library.functions()[static_cast<std::size_t>(i)];
            double v = 0.0;
            try {
                v = fn.eval(input);
            } catch (const std::domain_error& e) {
                throw std::domain_error("feature '" + fn.name + "' failed at row " + std::to_string(t) + ": " + e.what());
            }
            if (!std::isfinite(v)) {
                throw std::domain_error("feature '" + fn.name + "' is non-finite at row " + std::to_string(t));
            }
            theta(t, i) = v;
        }
    }
    return theta;
}

}  // namespace sindyrl
