#pragma once

#include "sindyrl/core.hpp"

#include <vector>

namespace sindyrl {

// Design matrix (N samples x F features) and targets (N x n state dims).
struct RegressionProblem {
    Matrix theta;
    Matrix targets;

    void validate() const;
};

struct StlsqConfig {
    double threshold = 0.0009;
    double ridge_alpha = 1e-6;
    int max_iterations = 20;
    // Solve on unit-norm feature columns and map the weights back.
    bool normalize_columns = false;

    void validate() const;
    bool operator==(const StlsqConfig&) const = default;
};

// Coefficients stored features x state dims (F x n); values are exactly zero
// wherever `active` is false.
struct CoefficientMatrix {
    Matrix values;
    BoolMatrix active;

    Eigen::Index features() const { return values.rows(); }
    Eigen::Index state_dims() const { return values.cols(); }
    std::size_t nonzero_count() const;

    static CoefficientMatrix zeros(Eigen::Index features, Eigen::Index state_dims);
    static CoefficientMatrix from_values(const Matrix& values);
};

struct ColumnDiagnostics {
    int iterations = 0;
    bool support_stable = false;   // active set reached a fixed point
    bool hit_iteration_cap = false;
    bool empty_support = false;    // every coefficient was thresholded away
    double residual = 0.0;         // ||theta w - y||^2 on the returned weights
    std::vector<std::size_t> support_sizes;  // active-set size before each solve
};

struct StlsqResult {
    CoefficientMatrix coefficients;
    std::vector<ColumnDiagnostics> columns;
};

// Minimizes ||theta_m w_m - target||^2 + alpha ||w_m||^2 over the columns
// selected by `mask`; entries outside the mask are returned as exact zeros.
// Throws std::domain_error for an all-false mask and RankDeficientError when
// alpha == 0 and the masked columns are linearly dependent.
Vector ridge_solve(const Matrix& theta, const Vector& target, double alpha, const BoolVector& mask);

// Sequentially thresholded least squares, each target column solved
// independently.
StlsqResult stlsq(const RegressionProblem& problem, const StlsqConfig& config);

}  // namespace sindyrl
