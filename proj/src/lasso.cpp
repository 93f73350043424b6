#include "aacp/lasso.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

namespace aacp {

namespace {

double softplus(double x) { return std::max(x, 0.0) + std::log1p(std::exp(-std::abs(x))); }

double sigmoid(double x) {
    if (x >= 0) return 1.0 / (1.0 + std::exp(-x));
    double e = std::exp(x);
    return e / (1.0 + e);
}

double soft_threshold(double x, double t) {
    if (x > t) return x - t;
    if (x < -t) return x + t;
    return 0.0;
}

void check_shapes(const Matrix& X, std::span<const int> y) {
    if (X.rows() != y.size()) throw std::invalid_argument("design matrix and labels disagree in length");
    if (X.rows() == 0) throw std::invalid_argument("empty training data");
}

std::vector<double> linear_predictors(const Matrix& X, double intercept, std::span<const double> coef) {
    std::vector<double> eta(X.rows(), intercept);
    for (std::size_t j = 0; j < X.cols(); ++j) {
        if (coef[j] == 0.0) continue;
        auto c = X.col(j);
        for (std::size_t i = 0; i < eta.size(); ++i) eta[i] += c[i] * coef[j];
    }
    return eta;
}

double loss_from_eta(std::span<const double> eta, std::span<const int> y) {
    double s = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) s += softplus(eta[i]) - y[i] * eta[i];
    return s / static_cast<double>(eta.size());
}

double l1(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += std::abs(x);
    return s;
}

} // namespace

Matrix Matrix::select_rows(std::span<const std::size_t> idx) const {
    Matrix out(idx.size(), cols_);
    for (std::size_t j = 0; j < cols_; ++j) {
        for (std::size_t i = 0; i < idx.size(); ++i) out(i, j) = (*this)(idx[i], j);
    }
    return out;
}

double LassoFit::linear_predictor(std::span<const double> x) const {
    double eta = intercept;
    for (std::size_t j = 0; j < coef.size(); ++j) eta += coef[j] * x[j];
    return eta;
}

double logistic_loss(const Matrix& X, std::span<const int> y, double intercept, std::span<const double> coef) {
    check_shapes(X, y);
    return loss_from_eta(linear_predictors(X, intercept, coef), y);
}

std::vector<double> logistic_loss_gradient(const Matrix& X, std::span<const int> y, double intercept,
                                           std::span<const double> coef) {
    check_shapes(X, y);
    auto eta = linear_predictors(X, intercept, coef);
    const double n = static_cast<double>(X.rows());
    std::vector<double> resid(eta.size());
    for (std::size_t i = 0; i < eta.size(); ++i) resid[i] = sigmoid(eta[i]) - y[i];
    std::vector<double> g(X.cols() + 1, 0.0);
    g[0] = std::accumulate(resid.begin(), resid.end(), 0.0) / n;
    for (std::size_t j = 0; j < X.cols(); ++j) {
        auto c = X.col(j);
        double s = 0.0;
        for (std::size_t i = 0; i < resid.size(); ++i) s += c[i] * resid[i];
        g[j + 1] = s / n;
    }
    return g;
}

double lasso_objective(const Matrix& X, std::span<const int> y, double intercept, std::span<const double> coef,
                       double lambda) {
    return logistic_loss(X, y, intercept, coef) + lambda * l1(coef);
}

double lambda_max(const Matrix& X, std::span<const int> y) {
    check_shapes(X, y);
    const double n = static_cast<double>(X.rows());
    double ybar = std::accumulate(y.begin(), y.end(), 0.0) / n;
    double best = 0.0;
    for (std::size_t j = 0; j < X.cols(); ++j) {
        auto c = X.col(j);
        double s = 0.0;
        for (std::size_t i = 0; i < c.size(); ++i) s += c[i] * (y[i] - ybar);
        best = std::max(best, std::abs(s) / n);
    }
    return best;
}

std::vector<double> lambda_grid(const Matrix& X, std::span<const int> y, int count, double min_ratio) {
    if (count < 1) throw std::invalid_argument("lambda grid needs at least one value");
    if (!(min_ratio > 0.0 && min_ratio <= 1.0)) throw std::invalid_argument("min_ratio must lie in (0,1]");
    double top = std::max(lambda_max(X, y), 1e-8);
    std::vector<double> grid;
    for (int i = 0; i < count; ++i) {
        double frac = count == 1 ? 0.0 : static_cast<double>(i) / (count - 1);
        grid.push_back(top * std::pow(min_ratio, frac));
    }
    return grid;
}

LassoFit train_lasso_logistic(const Matrix& X, std::span<const int> y, double lambda, const LassoOptions& opts,
                              const LassoFit* warm_start) {
    check_shapes(X, y);
    if (!(lambda >= 0.0)) throw std::invalid_argument("lambda must be nonnegative");
    const std::size_t n = X.rows(), p = X.cols();
    const double nn = static_cast<double>(n);

    LassoFit fit;
    fit.lambda = lambda;
    if (warm_start && warm_start->coef.size() == p) {
        fit.intercept = warm_start->intercept;
        fit.coef = warm_start->coef;
    } else {
        double ybar = std::accumulate(y.begin(), y.end(), 0.0) / nn;
        ybar = std::clamp(ybar, 1e-4, 1.0 - 1e-4);
        fit.intercept = std::log(ybar / (1.0 - ybar));
        fit.coef.assign(p, 0.0);
    }

    auto eta = linear_predictors(X, fit.intercept, fit.coef);
    double obj = loss_from_eta(eta, y) + lambda * l1(fit.coef);
    fit.objective_history.push_back(obj);

    // at or above lambda_max the intercept-only model satisfies the optimality conditions
    if (lambda >= lambda_max(X, y)) {
        double ybar = std::accumulate(y.begin(), y.end(), 0.0) / nn;
        ybar = std::clamp(ybar, 1e-4, 1.0 - 1e-4);
        double b0 = std::log(ybar / (1.0 - ybar));
        std::vector<double> zero(p, 0.0);
        double target = loss_from_eta(std::vector<double>(n, b0), y);
        if (target <= obj) {
            fit.intercept = b0;
            fit.coef = std::move(zero);
            obj = target;
            fit.objective_history.push_back(obj);
        }
        fit.converged = true;
        fit.iterations = 1;
        fit.objective = obj;
        return fit;
    }

    std::vector<double> w(n), resid(n), new_coef(p), cand_coef(p);
    for (int it = 1; it <= opts.max_iterations; ++it) {
        fit.iterations = it;
        // quadratic model of the loss at the current point
        for (std::size_t i = 0; i < n; ++i) {
            double pr = sigmoid(eta[i]);
            w[i] = std::max(pr * (1.0 - pr), 1e-5);
            resid[i] = (y[i] - pr) / w[i];
        }
        double wsum = std::accumulate(w.begin(), w.end(), 0.0);
        double new_b0 = fit.intercept;
        new_coef = fit.coef;
        for (int sweep = 0; sweep < opts.max_inner_sweeps; ++sweep) {
            double max_step = 0.0;
            double d0 = 0.0;
            for (std::size_t i = 0; i < n; ++i) d0 += w[i] * resid[i];
            d0 /= wsum;
            new_b0 += d0;
            for (std::size_t i = 0; i < n; ++i) resid[i] -= d0;
            max_step = std::max(max_step, wsum / nn * d0 * d0);
            for (std::size_t j = 0; j < p; ++j) {
                auto c = X.col(j);
                double xw2 = 0.0, xwr = 0.0;
                for (std::size_t i = 0; i < n; ++i) {
                    xw2 += w[i] * c[i] * c[i];
                    xwr += w[i] * c[i] * resid[i];
                }
                xw2 /= nn;
                xwr /= nn;
                if (xw2 <= 0.0) continue;
                double updated = soft_threshold(xwr + xw2 * new_coef[j], lambda) / xw2;
                double delta = updated - new_coef[j];
                if (delta == 0.0) continue;
                for (std::size_t i = 0; i < n; ++i) resid[i] -= delta * c[i];
                new_coef[j] = updated;
                max_step = std::max(max_step, xw2 * delta * delta);
            }
            if (max_step < opts.tolerance * 1e-3) break;
        }

        // backtracking along the proximal Newton direction
        double step = 1.0;
        double cand_b0 = fit.intercept;
        double cand_obj = obj;
        std::vector<double> cand_eta;
        bool accepted = false;
        for (int ls = 0; ls < 50; ++ls) {
            cand_b0 = fit.intercept + step * (new_b0 - fit.intercept);
            for (std::size_t j = 0; j < p; ++j) cand_coef[j] = fit.coef[j] + step * (new_coef[j] - fit.coef[j]);
            cand_eta = linear_predictors(X, cand_b0, cand_coef);
            cand_obj = loss_from_eta(cand_eta, y) + lambda * l1(cand_coef);
            if (cand_obj <= obj) {
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if (!accepted) {
            fit.converged = true; // no descent left at working precision
            fit.objective_history.push_back(obj);
            break;
        }
        double decrease = obj - cand_obj;
        fit.intercept = cand_b0;
        fit.coef = cand_coef;
        eta = std::move(cand_eta);
        obj = cand_obj;
        fit.objective_history.push_back(obj);
        if (decrease < opts.tolerance) {
            fit.converged = true;
            break;
        }
    }
    fit.objective = obj;
    return fit;
}

double mean_deviance(const LassoFit& fit, const Matrix& X, std::span<const int> y) {
    check_shapes(X, y);
    auto eta = linear_predictors(X, fit.intercept, fit.coef);
    double s = 0.0;
    for (std::size_t i = 0; i < eta.size(); ++i) s += 2.0 * (softplus(eta[i]) - y[i] * eta[i]);
    return s / static_cast<double>(eta.size());
}

double cv_select_lambda(const Matrix& X, std::span<const int> y, std::span<const double> grid, int folds, Rng& rng,
                        const LassoOptions& opts) {
    check_shapes(X, y);
    if (grid.empty()) throw std::invalid_argument("lambda grid is empty");
    if (folds < 2 || static_cast<std::size_t>(folds) > X.rows()) {
        throw std::invalid_argument("need 2 <= folds <= number of observations");
    }
    std::vector<double> sorted(grid.begin(), grid.end());
    std::sort(sorted.begin(), sorted.end(), std::greater<>());

    std::vector<std::size_t> order(X.rows());
    std::iota(order.begin(), order.end(), 0);
    for (std::size_t i = order.size(); i > 1; --i) std::swap(order[i - 1], order[rng.below(i)]);

    std::vector<double> dev_sum(sorted.size(), 0.0);
    int used = 0;
    for (int f = 0; f < folds; ++f) {
        std::vector<std::size_t> train, valid;
        for (std::size_t pos = 0; pos < order.size(); ++pos) {
            (static_cast<int>(pos % folds) == f ? valid : train).push_back(order[pos]);
        }
        std::vector<int> ytr, yva;
        for (auto i : train) ytr.push_back(y[i]);
        for (auto i : valid) yva.push_back(y[i]);
        int pos_count = std::accumulate(ytr.begin(), ytr.end(), 0);
        if (pos_count == 0 || pos_count == static_cast<int>(ytr.size())) continue;
        Matrix Xtr = X.select_rows(train), Xva = X.select_rows(valid);
        LassoFit prev;
        bool have_prev = false;
        for (std::size_t g = 0; g < sorted.size(); ++g) {
            LassoFit fit = train_lasso_logistic(Xtr, ytr, sorted[g], opts, have_prev ? &prev : nullptr);
            dev_sum[g] += mean_deviance(fit, Xva, yva);
            prev = std::move(fit);
            have_prev = true;
        }
        ++used;
    }
    if (used == 0) return sorted.front();
    std::size_t best = 0;
    for (std::size_t g = 1; g < sorted.size(); ++g) {
        if (dev_sum[g] < dev_sum[best]) best = g;
    }
    return sorted[best];
}

} // namespace aacp
