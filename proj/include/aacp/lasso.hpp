// lasso.hpp: L1-penalized logistic regression and cross-validated penalty choice.
#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "aacp/rng.hpp"

namespace aacp {

/// Dense column-major design matrix.
class Matrix {
public:
    Matrix() = default;
    Matrix(std::size_t rows, std::size_t cols) : rows_(rows), cols_(cols), data_(rows * cols, 0.0) {}

    std::size_t rows() const { return rows_; }
    std::size_t cols() const { return cols_; }
    double& operator()(std::size_t i, std::size_t j) { return data_[j * rows_ + i]; }
    double operator()(std::size_t i, std::size_t j) const { return data_[j * rows_ + i]; }
    std::span<const double> col(std::size_t j) const { return {data_.data() + j * rows_, rows_}; }

    /// Rows selected by index, in order.
    Matrix select_rows(std::span<const std::size_t> idx) const;

private:
    std::size_t rows_ = 0;
    std::size_t cols_ = 0;
    std::vector<double> data_;
};

struct LassoFit {
    double intercept = 0.0;
    std::vector<double> coef;
    double lambda = 0.0;
    bool converged = false;
    double objective = 0.0;
    int iterations = 0;
    /// Objective after each outer iteration (first entry: starting point).
    std::vector<double> objective_history;

    double linear_predictor(std::span<const double> x) const;
};

struct LassoOptions {
    double tolerance = 1e-7; // absolute change in objective
    int max_iterations = 200;
    int max_inner_sweeps = 500;
};

/// Mean negative log-likelihood of the logistic model.
double logistic_loss(const Matrix& X, std::span<const int> y, double intercept, std::span<const double> coef);

/// Gradient of logistic_loss; entry 0 is the intercept.
std::vector<double> logistic_loss_gradient(const Matrix& X, std::span<const int> y, double intercept,
                                           std::span<const double> coef);

/// logistic_loss + lambda * ||coef||_1 (intercept unpenalized).
double lasso_objective(const Matrix& X, std::span<const int> y, double intercept, std::span<const double> coef,
                       double lambda);

/// Smallest penalty at which every slope is zero.
double lambda_max(const Matrix& X, std::span<const int> y);

/// Log-spaced descending grid from lambda_max down to min_ratio * lambda_max.
std::vector<double> lambda_grid(const Matrix& X, std::span<const int> y, int count, double min_ratio);

/// Proximal Newton with an inner coordinate-descent solve and a backtracking
/// line search on the full objective, so the objective never increases.
LassoFit train_lasso_logistic(const Matrix& X, std::span<const int> y, double lambda, const LassoOptions& opts = {},
                              const LassoFit* warm_start = nullptr);

/// Mean binomial deviance of a fit on held-out data.
double mean_deviance(const LassoFit& fit, const Matrix& X, std::span<const int> y);

/// Picks the grid value with the smallest mean validation deviance over
/// `folds` folds; ties go to the larger penalty. Folds whose training part holds
/// a single class are skipped; if all are, returns the largest grid value.
double cv_select_lambda(const Matrix& X, std::span<const int> y, std::span<const double> grid, int folds, Rng& rng,
                        const LassoOptions& opts = {});

} // namespace aacp
