#pragma once

#include "sindyrl/core.hpp"
#include "sindyrl/expression.hpp"

#include <span>
#include <string>
#include <vector>

namespace sindyrl {

// One candidate term Theta_i of the library: a scalar function of the
// concatenated (state; action) vector.
struct FeatureFunction {
    std::string name;
    std::vector<std::size_t> arity_indices;
    ExpressionPtr expr;

    double eval(std::span<const double> input) const { return expr->eval(input); }
};

class FeatureLibrary {
public:
    FeatureLibrary() = default;
    // Throws std::invalid_argument on an empty list or duplicate names.
    FeatureLibrary(std::size_t state_dim, std::size_t action_dim, std::vector<FeatureFunction> functions);

    std::size_t size() const { return functions_.size(); }
    std::size_t state_dim() const { return state_dim_; }
    std::size_t action_dim() const { return action_dim_; }
    std::size_t input_dim() const { return state_dim_ + action_dim_; }
    const std::vector<FeatureFunction>& functions() const { return functions_; }
    std::vector<std::string> names() const;
    // Index of the feature with this (normalized) name, or -1.
    long index_of(const std::string& name) const;

    // Theta(x; a) as a row of length F.
    RowVector evaluate_row(std::span<const double> input) const;
    void evaluate_row(std::span<const double> input, Eigen::Ref<RowVector> out) const;

    // Concatenation with distinct names.
    FeatureLibrary operator+(const FeatureLibrary& other) const;

private:
    std::size_t state_dim_ = 0;
    std::size_t action_dim_ = 0;
    std::vector<FeatureFunction> functions_;
};

FeatureFunction make_feature(ExpressionPtr expr);

// All monomials of total degree <= degree over the n + k inputs, graded
// lexicographic order (degree, then exponent vectors in lex order with the
// lowest slot varying slowest).
FeatureLibrary polynomial_library(std::size_t state_dim, std::size_t action_dim, int degree, bool include_bias);

// sin(k*v) and cos(k*v) for every targeted slot v and k = 1..k_max.
FeatureLibrary fourier_library(std::size_t state_dim, std::size_t action_dim, const std::vector<std::size_t>& slots,
                               int k_max);

// Per-slot family [v, v^2, sin(k v), cos(k v) for k = 1..k_max] over every
// input slot, preceded by the constant 1.
FeatureLibrary per_variable_fourier_library(std::size_t state_dim, std::size_t action_dim, int k_max);

// [1, v, v^2, v*w, v^2*w] over the four cart-pole states and the force input
// (v != w, products unordered); 41 features for one force slot.
FeatureLibrary cartpole_library(std::size_t action_dim = 1);

// Parses each expression; names are the normalized expression text.
FeatureLibrary parse_custom_features(const std::vector<std::string>& specs, std::size_t state_dim,
                                     std::size_t action_dim);

// N x F design matrix; `actions` may have zero columns. Throws
// std::domain_error naming the feature and row on a non-finite value.
Matrix evaluate_library(const FeatureLibrary& library, const Matrix& states, const Matrix& actions);

}  // namespace sindyrl
