#include "doctest.h"

#include "sindyrl/differentiation.hpp"

#include <cmath>
#include <functional>

using namespace sindyrl;

namespace {

Matrix sample(const std::function<double(double)>& f, int n, double dt, double t0 = 0.0) {
    Matrix m(n, 1);
    for (int i = 0; i < n; ++i) m(i, 0) = f(t0 + i * dt);
    return m;
}

double max_error(const DerivativeEstimate& est, const std::function<double(double)>& df, double dt, double t0 = 0.0) {
    double worst = 0.0;
    for (Eigen::Index i = est.valid_range.begin; i < est.valid_range.end; ++i) {
        worst = std::max(worst, std::abs(est.values(i, 0) - df(t0 + i * dt)));
    }
    return worst;
}

}  // namespace

TEST_SUITE("differentiation") {

TEST_CASE("valid ranges") {
    const Matrix x = Matrix::Random(20, 2);
    CHECK(forward_difference(x, 0.1).valid_range == RowRange{0, 19});
    CHECK(central_difference(x, 0.1).valid_range == RowRange{1, 19});
    CHECK(smoothed_finite_difference(x, 0.1, 7, 3).valid_range == RowRange{3, 17});
    CHECK(smoothed_finite_difference(x, 0.1, 7, 3).values.rows() == 20);
}

TEST_CASE("input errors") {
    const Matrix x = Matrix::Random(5, 1);
    CHECK_THROWS_AS(forward_difference(x, 0.0), std::domain_error);
    CHECK_THROWS_AS(central_difference(Matrix::Random(2, 1), 0.1), std::length_error);
    CHECK_THROWS_AS(smoothed_finite_difference(x, 0.1, 7, 3), std::length_error);
    CHECK_THROWS_AS(smoothed_finite_difference(x, 0.1, 4, 2), std::invalid_argument);
    DiffConfig cfg;
    cfg.poly_order = 7;
    CHECK_THROWS(cfg.validate());
}

TEST_CASE("forward difference on a hand-computed sequence") {
    Matrix x(4, 1);
    x << 0.0, 1.0, 4.0, 9.0;
    const auto est = forward_difference(x, 0.5);
    CHECK(est.values(0, 0) == 2.0);
    CHECK(est.values(1, 0) == 6.0);
    CHECK(est.values(2, 0) == 10.0);
    CHECK(est.values(3, 0) == 10.0);
}

}  // TEST_SUITE

TEST_SUITE("properties") {

TEST_CASE("local polynomial weights differentiate monomials up to their order exactly") {
    for (int order = 1; order <= 4; ++order) {
        const Vector offsets = (Vector(7) << -3, -2, -1, 0, 1, 2, 3).finished();
        const Vector w = polynomial_derivative_weights(offsets, order);
        for (int k = 0; k <= order; ++k) {
            double sum = 0.0;
            for (Eigen::Index j = 0; j < offsets.size(); ++j) sum += w(j) * std::pow(offsets(j), k);
            CHECK(sum == doctest::Approx(k == 1 ? 1.0 : 0.0).epsilon(1e-12));
        }
    }
    // One-sided stencil as used at the boundaries.
    const Vector offsets = (Vector(4) << 0, 1, 2, 3).finished();
    const Vector w = polynomial_derivative_weights(offsets, 3);
    CHECK((w - (Vector(4) << -11.0 / 6, 3.0, -1.5, 1.0 / 3).finished()).norm() <= 1e-12);
}

TEST_CASE("smoothed difference is exact on polynomials of degree <= poly_order") {
    auto cubic = [](double t) { return 0.5 - 2.0 * t + 0.7 * t * t - 0.3 * t * t * t; };
    auto dcubic = [](double t) { return -2.0 + 1.4 * t - 0.9 * t * t; };
    for (int window : {5, 7, 9}) {
        const auto est = smoothed_finite_difference(sample(cubic, 30, 0.1, -1.0), 0.1, window, 3);
        CHECK(max_error(est, dcubic, 0.1, -1.0) <= 1e-10);
        // The truncated boundary window keeps the full order once it has poly_order + 1 points.
        if (window / 2 + 1 > 3) CHECK(est.values(0, 0) == doctest::Approx(dcubic(-1.0)).epsilon(1e-9));
    }
}

TEST_CASE("central difference is exact on quadratics and second-order accurate") {
    auto quad = [](double t) { return 1.0 + 3.0 * t - 2.0 * t * t; };
    auto dquad = [](double t) { return 3.0 - 4.0 * t; };
    CHECK(max_error(central_difference(sample(quad, 25, 0.05), 0.05), dquad, 0.05) <= 1e-11);

    auto f = [](double t) { return std::sin(2.0 * t); };
    auto df = [](double t) { return 2.0 * std::cos(2.0 * t); };
    const double e1 = max_error(central_difference(sample(f, 41, 0.05), 0.05), df, 0.05);
    const double e2 = max_error(central_difference(sample(f, 81, 0.025), 0.025), df, 0.025);
    CHECK(std::log2(e1 / e2) == doctest::Approx(2.0).epsilon(0.05));
}

TEST_CASE("forward difference is exact on lines and first-order accurate") {
    auto line = [](double t) { return -0.4 + 2.5 * t; };
    CHECK(max_error(forward_difference(sample(line, 10, 0.1), 0.1), [](double) { return 2.5; }, 0.1) <= 1e-12);

    auto f = [](double t) { return std::exp(0.8 * t); };
    auto df = [](double t) { return 0.8 * std::exp(0.8 * t); };
    const double e1 = max_error(forward_difference(sample(f, 41, 0.05), 0.05), df, 0.05);
    const double e2 = max_error(forward_difference(sample(f, 81, 0.025), 0.025), df, 0.025);
    CHECK(std::log2(e1 / e2) == doctest::Approx(1.0).epsilon(0.05));
}

TEST_CASE("smoothed difference with poly_order 3 is fourth-order accurate on smooth data") {
    auto f = [](double t) { return std::sin(1.3 * t); };
    auto df = [](double t) { return 1.3 * std::cos(1.3 * t); };
    const double e1 = max_error(smoothed_finite_difference(sample(f, 41, 0.1), 0.1, 5, 3), df, 0.1);
    const double e2 = max_error(smoothed_finite_difference(sample(f, 81, 0.05), 0.05, 5, 3), df, 0.05);
    CHECK(std::log2(e1 / e2) == doctest::Approx(4.0).epsilon(0.1));
}

}  // TEST_SUITE
