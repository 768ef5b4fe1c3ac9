#include "doctest.h"
#include "test_util.hpp"

#include "sindyrl/feature_library.hpp"

#include <cmath>
#include <random>

using namespace sindyrl;

namespace {

long binomial(int n, int k) {
    long r = 1;
    for (int i = 1; i <= k; ++i) r = r * (n - k + i) / i;
    return r;
}

}  // namespace

TEST_SUITE("feature_library") {

TEST_CASE("polynomial library order and names") {
    const auto lib = polynomial_library(1, 1, 2, true);
    CHECK(lib.names() == std::vector<std::string>{"1", "x0", "a0", "x0^2", "x0*a0", "a0^2"});
    const auto no_bias = polynomial_library(1, 1, 2, false);
    CHECK(no_bias.size() == 5);
    CHECK(no_bias.index_of("1") == -1);
}

TEST_CASE("polynomial library sizes follow the monomial count") {
    for (int dim = 1; dim <= 5; ++dim) {
        for (int degree = 1; degree <= 3; ++degree) {
            const auto lib = polynomial_library(static_cast<std::size_t>(dim), 0, degree, true);
            CHECK(static_cast<long>(lib.size()) == binomial(dim + degree, degree));
        }
    }
}

TEST_CASE("fourier library") {
    const auto one = fourier_library(1, 0, {0}, 3);
    CHECK(one.size() == 6);
    CHECK(fourier_library(1, 0, {0}, 1).names() == std::vector<std::string>{"sin(x0)", "cos(x0)"});
    const std::vector<double> zero{0.0};
    const RowVector at_zero = one.evaluate_row(zero);
    for (Eigen::Index i = 0; i < at_zero.size(); ++i) CHECK(at_zero(i) == (i % 2 == 0 ? 0.0 : 1.0));
    CHECK_THROWS_AS(fourier_library(1, 0, {}, 1), std::domain_error);
    CHECK_THROWS_AS(fourier_library(1, 0, {3}, 1), std::out_of_range);
}

TEST_CASE("per-variable library size and values") {
    // Two states and one force input, k = 1..3: 1 + 3 * (2 + 6).
    const auto lib = per_variable_fourier_library(2, 1, 3);
    CHECK(lib.size() == 25);
    const std::vector<double> in{0.3, -0.2, 0.7};
    const RowVector row = lib.evaluate_row(in);
    CHECK(row(lib.index_of("1")) == 1.0);
    CHECK(row(lib.index_of("x1^2")) == doctest::Approx(0.04));
    CHECK(row(lib.index_of("cos(3*x0)")) == doctest::Approx(std::cos(0.9)));
    CHECK(row(lib.index_of("sin(2*a0)")) == doctest::Approx(std::sin(1.4)));
}

TEST_CASE("cart-pole library has 41 features for a single force") {
    const auto lib = cartpole_library(1);
    CHECK(lib.size() == 41);
    CHECK(lib.input_dim() == 5);
    CHECK(lib.index_of("x3^2*x2") >= 0);
    CHECK(lib.index_of("x2*a0") >= 0);
    CHECK(lib.index_of("a0*x2") == lib.index_of("x2*a0"));
}

TEST_CASE("custom features parse and evaluate") {
    const auto lib = parse_custom_features({"1", "x0*x1", "sin(2*x0)", "a0^2", "cos(x1)"}, 2, 1);
    const std::vector<double> in{0.5, -1.5, 2.0};
    const RowVector row = lib.evaluate_row(in);
    CHECK(row(0) == 1.0);
    CHECK(row(1) == doctest::Approx(-0.75));
    CHECK(row(2) == doctest::Approx(std::sin(1.0)));
    CHECK(row(3) == doctest::Approx(4.0));
    CHECK(row(4) == doctest::Approx(std::cos(-1.5)));
}

TEST_CASE("library construction errors") {
    CHECK_THROWS_AS(parse_custom_features({"x0", "x0"}, 1, 0), std::invalid_argument);
    CHECK_THROWS(parse_custom_features({"x3"}, 1, 0));
    CHECK_THROWS(parse_custom_features({"sin(x0"}, 1, 0));
    CHECK_THROWS_AS(polynomial_library(0, 0, 2, true), std::invalid_argument);
    CHECK_THROWS_AS(polynomial_library(2, 0, 0, true), std::invalid_argument);
    CHECK_THROWS(polynomial_library(1, 0, 1, true) + polynomial_library(1, 0, 1, false));
}

TEST_CASE("evaluate_library shape and non-finite detection") {
    const auto lib = parse_custom_features({"1", "x0", "a0", "x0^2"}, 1, 1);
    Matrix states(3, 1), actions(3, 1);
    states << 1.0, 2.0, 3.0;
    actions << 0.0, 1.0, 2.0;
    const Matrix theta = evaluate_library(lib, states, actions);
    CHECK(theta.rows() == 3);
    CHECK(theta.cols() == 4);
    CHECK(theta(2, 3) == 9.0);
    states(1, 0) = 1e200;
    CHECK_THROWS_AS(evaluate_library(lib, states, actions), std::domain_error);
}

}  // TEST_SUITE

TEST_SUITE("properties") {

TEST_CASE("library rows match direct evaluation of each feature") {
    const auto lib = polynomial_library(3, 1, 3, true) + fourier_library(3, 1, {0, 3}, 2);
    std::mt19937_64 rng(11);
    const Matrix states = testutil::random_matrix(20, 3, rng);
    const Matrix actions = testutil::random_matrix(20, 1, rng);
    const Matrix theta = evaluate_library(lib, states, actions);
    for (Eigen::Index t = 0; t < 20; ++t) {
        const std::vector<double> in{states(t, 0), states(t, 1), states(t, 2), actions(t, 0)};
        for (std::size_t i = 0; i < lib.size(); ++i) CHECK(theta(t, i) == lib.functions()[i].eval(in));
    }
}

}  // TEST_SUITE
