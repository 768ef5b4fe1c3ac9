#pragma once

#include "sindyrl/core.hpp"

namespace sindyrl {

// Half-open row interval [begin, end).
struct RowRange {
    Eigen::Index begin = 0;
    Eigen::Index end = 0;

    Eigen::Index size() const { return end - begin; }
    bool contains(Eigen::Index row) const { return row >= begin && row < end; }
    bool operator==(const RowRange&) const = default;
};

struct DerivativeEstimate {
    Matrix values;           // same shape as the input states
    RowRange valid_range;    // rows computed from a full centered stencil
};

enum class DiffMethod { savitzky_golay, central, forward };

struct DiffConfig {
    DiffMethod method = DiffMethod::savitzky_golay;
    int window = 7;
    int poly_order = 3;
    // Exclude rows outside valid_range when assembling regression targets.
    bool drop_boundary = true;

    void validate() const;
    bool operator==(const DiffConfig&) const = default;
};

// Local least-squares polynomial derivative over a sliding window. Boundary
// rows use the truncated window that fits inside the data (degree reduced if
// the truncated window is too short) and are excluded from valid_range.
DerivativeEstimate smoothed_finite_difference(const Matrix& states, double dt, int window, int poly_order);

// Second-order central differences inside, first-order one-sided at the ends.
DerivativeEstimate central_difference(const Matrix& states, double dt);

// (x[t+1] - x[t]) / dt; the last row repeats the backward difference and is
// outside valid_range. Paired with explicit Euler it reproduces a one-step map.
DerivativeEstimate forward_difference(const Matrix& states, double dt);

DerivativeEstimate differentiate(const Matrix& states, double dt, const DiffConfig& config);

// Weights w such that sum_j w_j * y(offsets_j) is the derivative at 0 of the
// degree-`order` least-squares polynomial through the samples (unit spacing).
Vector polynomial_derivative_weights(const Vector& offsets, int order);

}  // namespace sindyrl
