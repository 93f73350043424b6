#include "doctest.h"

#include <cmath>
#include <stdexcept>
#include <vector>

#include "aacp/lasso.hpp"
#include "aacp/rng.hpp"

using namespace aacp;

namespace {

struct Data {
    Matrix X;
    std::vector<int> y;
};

Data synthetic(int n, int p, std::uint64_t seed, double signal = 1.0) {
    Rng rng(seed);
    Data d{Matrix(n, p), std::vector<int>(n)};
    for (int i = 0; i < n; ++i) {
        double eta = 0.2;
        for (int j = 0; j < p; ++j) {
            d.X(i, j) = rng.normal();
            eta += signal * (j % 2 ? -1.0 : 1.0) * std::pow(0.7, j) * d.X(i, j);
        }
        d.y[i] = rng.uniform() < 1.0 / (1.0 + std::exp(-eta)) ? 1 : 0;
    }
    return d;
}

// Plain gradient descent on the unpenalized loss.
std::vector<double> gradient_descent_oracle(const Matrix& X, const std::vector<int>& y) {
    std::vector<double> theta(X.cols() + 1, 0.0);
    for (int it = 0; it < 200000; ++it) {
        std::span<const double> coef(theta.data() + 1, X.cols());
        auto g = logistic_loss_gradient(X, y, theta[0], coef);
        double norm = 0.0;
        for (std::size_t k = 0; k < g.size(); ++k) {
            theta[k] -= 1.0 * g[k];
            norm = std::max(norm, std::abs(g[k]));
        }
        if (norm < 1e-12) break;
    }
    return theta;
}

} // namespace

TEST_CASE("objective never increases across outer iterations") {
    for (std::uint64_t seed : {1, 2, 3, 4}) {
        auto d = synthetic(80, 12, seed);
        for (double frac : {0.5, 0.1, 0.01}) {
            double lam = frac * lambda_max(d.X, d.y);
            auto fit = train_lasso_logistic(d.X, d.y, lam);
            CHECK(fit.converged);
            REQUIRE(fit.objective_history.size() >= 2);
            for (std::size_t i = 1; i < fit.objective_history.size(); ++i) {
                CHECK(fit.objective_history[i] <= fit.objective_history[i - 1]);
            }
            CHECK(fit.objective == doctest::Approx(lasso_objective(d.X, d.y, fit.intercept, fit.coef, lam)));
        }
    }
}

TEST_CASE("loss gradient matches central finite differences") {
    auto d = synthetic(50, 6, 11);
    Rng rng(5);
    for (int rep = 0; rep < 10; ++rep) {
        double b0 = rng.normal();
        std::vector<double> coef(6);
        for (auto& c : coef) c = rng.normal();
        auto g = logistic_loss_gradient(d.X, d.y, b0, coef);
        for (std::size_t k = 0; k <= coef.size(); ++k) {
            const double h = 1e-5;
            double plus, minus;
            if (k == 0) {
                plus = logistic_loss(d.X, d.y, b0 + h, coef);
                minus = logistic_loss(d.X, d.y, b0 - h, coef);
            } else {
                auto cp = coef, cm = coef;
                cp[k - 1] += h;
                cm[k - 1] -= h;
                plus = logistic_loss(d.X, d.y, b0, cp);
                minus = logistic_loss(d.X, d.y, b0, cm);
            }
            double fd = (plus - minus) / (2 * h);
            CHECK(std::abs(fd - g[k]) <= 1e-6 * std::max(1.0, std::abs(g[k])));
        }
    }
}

TEST_CASE("penalty at or above lambda_max zeroes every slope") {
    auto d = synthetic(60, 10, 7);
    double top = lambda_max(d.X, d.y);
    for (double lam : {top, 2 * top, 1e6}) {
        auto fit = train_lasso_logistic(d.X, d.y, lam);
        for (double c : fit.coef) CHECK(c == 0.0);
        double ybar = 0.0;
        for (int v : d.y) ybar += v;
        ybar /= d.y.size();
        CHECK(fit.intercept == doctest::Approx(std::log(ybar / (1 - ybar))).epsilon(1e-6));
    }
    auto below = train_lasso_logistic(d.X, d.y, 0.9 * top);
    int nonzero = 0;
    for (double c : below.coef) nonzero += c != 0.0;
    CHECK(nonzero >= 1);
}

TEST_CASE("unpenalized fit matches a gradient-descent oracle") {
    Matrix X(8, 2);
    double xs[8][2] = {{0.5, -1.0}, {1.2, 0.3}, {-0.7, 0.8}, {0.1, 0.1}, {-1.5, -0.4}, {2.0, 1.1}, {-0.3, -1.2}, {0.9, -0.2}};
    std::vector<int> y = {1, 0, 0, 1, 0, 1, 1, 0};
    for (int i = 0; i < 8; ++i) {
        X(i, 0) = xs[i][0];
        X(i, 1) = xs[i][1];
    }
    auto oracle = gradient_descent_oracle(X, y);
    auto fit = train_lasso_logistic(X, y, 0.0, LassoOptions{1e-14, 500, 2000});
    CHECK(std::abs(fit.intercept - oracle[0]) < 1e-4);
    CHECK(std::abs(fit.coef[0] - oracle[1]) < 1e-4);
    CHECK(std::abs(fit.coef[1] - oracle[2]) < 1e-4);
}

TEST_CASE("warm start reaches the same optimum") {
    auto d = synthetic(100, 8, 21);
    double lam = 0.05 * lambda_max(d.X, d.y);
    auto cold = train_lasso_logistic(d.X, d.y, lam);
    auto warm0 = train_lasso_logistic(d.X, d.y, 0.3 * lambda_max(d.X, d.y));
    auto warm = train_lasso_logistic(d.X, d.y, lam, {}, &warm0);
    CHECK(std::abs(cold.objective - warm.objective) < 1e-6);
}

TEST_CASE("lambda grid and cross-validation") {
    auto d = synthetic(100, 10, 3, 2.0);
    auto grid = lambda_grid(d.X, d.y, 15, 0.05);
    REQUIRE(grid.size() == 15);
    CHECK(grid.front() == doctest::Approx(lambda_max(d.X, d.y)));
    CHECK(grid.back() == doctest::Approx(0.05 * grid.front()));
    for (std::size_t i = 1; i < grid.size(); ++i) CHECK(grid[i] < grid[i - 1]);

    Rng r1(9), r2(9);
    double a = cv_select_lambda(d.X, d.y, grid, 5, r1);
    double b = cv_select_lambda(d.X, d.y, grid, 5, r2);
    CHECK(a == b);
    // a strong signal should not pick the intercept-only end
    CHECK(a < grid.front());

    // pure noise labels: nothing to learn, the larger penalties win
    Data noise = synthetic(100, 10, 4, 0.0);
    Rng r3(1);
    double c = cv_select_lambda(noise.X, noise.y, lambda_grid(noise.X, noise.y, 15, 0.05), 5, r3);
    CHECK(c >= grid.back());

    // single-class labels: every fold is degenerate
    std::vector<int> ones(100, 1);
    Rng r4(1);
    std::vector<double> g2 = {0.1, 0.5, 0.01};
    CHECK(cv_select_lambda(d.X, ones, g2, 5, r4) == 0.5);

    Rng r5(1);
    CHECK_THROWS_AS(cv_select_lambda(d.X, d.y, std::vector<double>{}, 5, r5), std::invalid_argument);
    Matrix tiny(3, 2);
    std::vector<int> ty = {0, 1, 0};
    CHECK_THROWS_AS(cv_select_lambda(tiny, ty, g2, 5, r5), std::invalid_argument);
}
