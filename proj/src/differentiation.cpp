#include "sindyrl/differentiation.hpp"

#include <algorithm>
#include <string>

namespace sindyrl {

void DiffConfig::validate() const {
    if (method == DiffMethod::savitzky_golay) {
        if (window < 3 || window % 2 == 0) throw std::invalid_argument("diff window must be odd and >= 3");
        if (poly_order < 1) throw std::invalid_argument("diff poly_order must be >= 1");
        if (poly_order >= window) throw std::invalid_argument("diff poly_order must be < window");
    }
}

Vector polynomial_derivative_weights(const Vector& offsets, int order) {
    const Eigen::Index m = offsets.size();
    Matrix vander(m, order + 1);
    for (Eigen::Index i = 0; i < m; ++i) {
        double p = 1.0;
        for (int k = 0; k <= order; ++k) {
            vander(i, k) = p;
            p *= offsets(i);
        }
    }
    // Row 1 of the pseudo-inverse maps samples to the linear coefficient,
    // which is the derivative at offset 0.
    const Matrix pinv = vander.colPivHouseholderQr().solve(Matrix::Identity(m, m));
    return pinv.row(1).transpose();
}

DerivativeEstimate smoothed_finite_difference(const Matrix& states, double dt, int window, int poly_order) {
    if (!(dt > 0.0)) throw std::domain_error("smoothed_finite_difference: dt must be > 0");
    if (window < 3 || window % 2 == 0) throw std::invalid_argument("smoothed_finite_difference: window must be odd >= 3");
    if (poly_order < 1 || poly_order >= window) {
        throw std::invalid_argument("smoothed_finite_difference: need 1 <= poly_order < window");
    }
    const Eigen::Index n = states.rows();
    if (n < window) {
        throw std::length_error("smoothed_finite_difference: " + std::to_string(n) + " samples < window " +
                                std::to_string(window));
    }

    const Eigen::Index half = window / 2;
    DerivativeEstimate out{Matrix::Zero(n, states.cols()), {half, n - half}};

    Vector centered(window);
    for (Eigen::Index j = 0; j < window; ++j) centered(j) = static_cast<double>(j - half);
    const Vector interior = polynomial_derivative_weights(centered, poly_order) / dt;

    for (Eigen::Index row = 0; row < n; ++row) {
        const Eigen::Index lo = std::max<Eigen::Index>(0, row - half);
        const Eigen::Index hi = std::min<Eigen::Index>(n - 1, row + half);
        if (row >= half && row < n - half) {
            out.values.row(row) = interior.transpose() * states.middleRows(lo, window);
            continue;
        }
        const Eigen::Index len = hi - lo + 1;
        Vector offsets(len);
        for (Eigen::Index j = 0; j < len; ++j) offsets(j) = static_cast<double>(lo + j - row);
        const int order = static_cast<int>(std::min<Eigen::Index>(poly_order, len - 1));
        const Vector w = polynomial_derivative_weights(offsets, order) / dt;
        out.values.row(row) = w.transpose() * states.middleRows(lo, len);
    }
    return out;
}

DerivativeEstimate central_difference(const Matrix& states, double dt) {
    if (!(dt > 0.0)) throw std::domain_error("central_difference: dt must be > 0");
    const Eigen::Index n = states.rows();
    if (n < 3) throw std::length_error("central_difference: need at least 3 samples");

    DerivativeEstimate out{Matrix::Zero(n, states.cols()), {1, n - 1}};
    out.values.row(0) = (states.row(1) - states.row(0)) / dt;
    out.values.row(n - 1) = (states.row(n - 1) - states.row(n - 2)) / dt;
    out.values.middleRows(1, n - 2) = (states.bottomRows(n - 2) - states.topRows(n - 2)) / (2.0 * dt);
    return out;
}

DerivativeEstimate forward_difference(const Matrix& states, double dt) {
    if (!(dt > 0.0)) throw std::domain_error("forward_difference: dt must be > 0");
    const Eigen::Index n = states.rows();
    if (n < 2) throw std::length_error("forward_difference: need at least 2 samples");

    DerivativeEstimate out{Matrix::Zero(n, states.cols()), {0, n - 1}};
    out.values.topRows(n - 1) = (states.bottomRows(n - 1) - states.topRows(n - 1)) / dt;
    out.values.row(n - 1) = out.values.row(n - 2);
    return out;
}

DerivativeEstimate differentiate(const Matrix& states, double dt, const DiffConfig& config) {
    config.validate();
    switch (config.method) {
        case DiffMethod::savitzky_golay:
            return smoothed_finite_difference(states, dt, config.window, config.poly_order);
        case DiffMethod::central:
            return central_difference(states, dt);
        case DiffMethod::forward:
            return forward_difference(states, dt);
    }
    throw std::logic_error("unknown differentiation method");
}

}  // namespace sindyrl
