#include "sindyrl/sparse_regression.hpp"

#include <cmath>
#include <string>

namespace sindyrl {

void RegressionProblem::validate() const {
    if (theta.rows() < 1) throw std::length_error("regression problem has no samples");
    if (theta.cols() < 1) throw std::length_error("regression problem has no features");
    if (theta.rows() != targets.rows()) {
        throw std::invalid_argument("theta has " + std::to_string(theta.rows()) + " rows but targets has " +
                                    std::to_string(targets.rows()));
    }
    if (targets.cols() < 1) throw std::length_error("regression problem has no target columns");
    if (!theta.allFinite()) throw std::domain_error("theta contains non-finite entries");
    if (!targets.allFinite()) throw std::domain_error("targets contain non-finite entries");
}

void StlsqConfig::validate() const {
    if (!(threshold >= 0.0)) throw std::invalid_argument("stlsq threshold must be >= 0");
    if (!(ridge_alpha >= 0.0)) throw std::invalid_argument("stlsq ridge_alpha must be >= 0");
    if (max_iterations < 1) throw std::invalid_argument("stlsq max_iterations must be >= 1");
}

std::size_t CoefficientMatrix::nonzero_count() const {
    return static_cast<std::size_t>((values.array() != 0.0).count());
}

CoefficientMatrix CoefficientMatrix::zeros(Eigen::Index features, Eigen::Index state_dims) {
    return {Matrix::Zero(features, state_dims), BoolMatrix::Constant(features, state_dims, false)};
}

CoefficientMatrix CoefficientMatrix::from_values(const Matrix& values) {
    return {values, values.array() != 0.0};
}

Vector ridge_solve(const Matrix& theta, const Vector& target, double alpha, const BoolVector& mask) {
    if (theta.rows() < 1) throw std::length_error("ridge_solve: no samples");
    if (theta.rows() != target.size()) throw std::invalid_argument("ridge_solve: row count mismatch");
    if (mask.size() != theta.cols()) throw std::invalid_argument("ridge_solve: mask length != feature count");
    if (alpha < 0.0) throw std::invalid_argument("ridge_solve: alpha must be >= 0");

    std::vector<Eigen::Index> cols;
    for (Eigen::Index i = 0; i < mask.size(); ++i) {
        if (mask(i)) cols.push_back(i);
    }
    if (cols.empty()) throw std::domain_error("ridge_solve: mask selects no features");

    const Eigen::Index n = theta.rows();
    const auto m = static_cast<Eigen::Index>(cols.size());
    Vector w_active;
    if (alpha == 0.0) {
        Matrix a(n, m);
        for (Eigen::Index j = 0; j < m; ++j) a.col(j) = theta.col(cols[j]);
        Eigen::ColPivHouseholderQR<Matrix> qr(a);
        if (qr.rank() < m) {
            throw RankDeficientError("ridge_solve: masked system has rank " + std::to_string(qr.rank()) + " < " +
                                     std::to_string(m) + " with alpha = 0");
        }
        w_active = qr.solve(target);
    } else {
        // Augmented least squares [A; sqrt(alpha) I] w = [y; 0] keeps the
        // conditioning of A instead of squaring it through the normal equations.
        Matrix a = Matrix::Zero(n + m, m);
        for (Eigen::Index j = 0; j < m; ++j) a.col(j).head(n) = theta.col(cols[j]);
        a.bottomRows(m).diagonal().setConstant(std::sqrt(alpha));
        Vector y = Vector::Zero(n + m);
        y.head(n) = target;
        w_active = a.colPivHouseholderQr().solve(y);
    }

    Vector w = Vector::Zero(theta.cols());
    for (Eigen::Index j = 0; j < m; ++j) w(cols[j]) = w_active(j);
    return w;
}

namespace {

// `theta` may be column-scaled; `scale` maps its weights back (w = w_s / s) and
// thresholding happens in the original coefficient scale.
ColumnDiagnostics solve_column(const Matrix& theta, const Vector& scale, const Matrix& original_theta,
                               const Vector& y, const StlsqConfig& config, Vector& w_out, BoolVector& active_out) {
    ColumnDiagnostics diag;
    const Eigen::Index f = theta.cols();
    BoolVector mask = BoolVector::Constant(f, true);
    Vector ws = Vector::Zero(f);

    for (int it = 0; it < config.max_iterations; ++it) {
        diag.support_sizes.push_back(static_cast<std::size_t>(mask.count()));
        ws = ridge_solve(theta, y, config.ridge_alpha, mask);
        diag.iterations = it + 1;
        const Vector w = ws.cwiseQuotient(scale);
        BoolVector next = mask && (w.array().abs() >= config.threshold);
        if ((next == mask).all()) {
            diag.support_stable = true;
            break;
        }
        mask = next;
        if (!mask.any()) {
            ws.setZero();
            diag.empty_support = true;
            diag.support_stable = true;
            break;
        }
    }
    diag.hit_iteration_cap = !diag.support_stable;

    for (Eigen::Index i = 0; i < f; ++i) {
        if (!mask(i)) ws(i) = 0.0;
    }
    w_out = ws.cwiseQuotient(scale);
    diag.residual = (original_theta * w_out - y).squaredNorm();
    active_out = mask && (w_out.array() != 0.0);
    return diag;
}

}  // namespace

StlsqResult stlsq(const RegressionProblem& problem, const StlsqConfig& config) {
    problem.validate();
    config.validate();

    const Eigen::Index f = problem.theta.cols();
    const Eigen::Index n = problem.targets.cols();

    Vector scale = Vector::Ones(f);
    Matrix scaled;
    if (config.normalize_columns) {
        for (Eigen::Index i = 0; i < f; ++i) {
            const double norm = problem.theta.col(i).norm();
            if (norm > 0.0) scale(i) = norm;
        }
        scaled = problem.theta * scale.cwiseInverse().asDiagonal();
    }
    const Matrix& theta = config.normalize_columns ? scaled : problem.theta;

    StlsqResult result;
    result.coefficients = CoefficientMatrix::zeros(f, n);
    result.columns.reserve(static_cast<std::size_t>(n));
    for (Eigen::Index j = 0; j < n; ++j) {
        Vector w;
        BoolVector active;
        result.columns.push_back(solve_column(theta, scale, problem.theta, problem.targets.col(j), config, w, active));
        result.coefficients.values.col(j) = w;
        result.coefficients.active.col(j) = active;
    }
    return result;
}

}  // namespace sindyrl
