#include "aacp/ledger.hpp"

#include <algorithm>
#include <limits>
#include <stdexcept>
#include <string>

namespace aacp {

namespace {

void check_params(double budget, int window, double greediness) {
    if (!(budget > 0.0 && budget < 1.0)) throw std::invalid_argument("alpha budget must lie in (0,1)");
    if (window < 1) throw std::invalid_argument("window W must be >= 1");
    if (!(greediness > 0.0 && greediness <= 1.0)) throw std::invalid_argument("greediness must lie in (0,1]");
}

} // namespace

double windowed_spend(const std::vector<LaunchRecord>& records, TimeIndex lo, TimeIndex hi) {
    double s = 0.0;
    for (const auto& r : records) {
        if (r.resolution >= lo && r.resolution <= hi) s += r.level;
    }
    return s;
}

BacLedger::BacLedger(double budget, int window, double greediness)
    : budget_(budget), window_(window), greediness_(greediness) {
    check_params(budget, window, greediness);
}

double BacLedger::available(TimeIndex t, int wait) const {
    if (wait < 1) throw std::invalid_argument("wait must be positive");
    const TimeIndex r = t + wait;
    // every window [s - W, s] that can contain r has s in [r, r + W]
    double worst = 0.0;
    for (TimeIndex s = r; s <= r + window_; ++s) worst = std::max(worst, windowed_spend(records_, s - window_, s));
    return std::max(0.0, budget_ - worst);
}

double BacLedger::select_alpha(TimeIndex t, int wait) {
    double level = std::clamp(greediness_ * available(t, wait), 0.0, budget_);
    records_.push_back({t, level, t + wait});
    return level;
}

double BacLedger::estimate(TimeIndex t, int window) const { return windowed_spend(records_, t - window, t); }

BabrLedger::BabrLedger(double alpha, double alpha_prime, int window, double greediness)
    : alpha_(alpha), alpha_prime_(alpha_prime), window_(window), greediness_(greediness) {
    check_params(alpha, window, greediness);
    check_params(alpha_prime, window, greediness);
}

void BabrLedger::record_benchmark(TimeIndex t) {
    if (!benchmarks_.empty() && t <= benchmarks_.back()) {
        throw std::logic_error("benchmark times must strictly increase (got " + std::to_string(t) + ")");
    }
    benchmarks_.push_back(t);
}

int BabrLedger::denominator(TimeIndex t, int j) const {
    TimeIndex lo = std::max(1, t - j);
    auto n = std::count_if(benchmarks_.begin(), benchmarks_.end(), [&](TimeIndex b) { return b >= lo && b <= t; });
    return 1 + static_cast<int>(n);
}

double BabrLedger::estimate_bar(TimeIndex t, int j) const {
    return windowed_spend(approval_, t - j, t) / denominator(t, j);
}

double BabrLedger::estimate_bsr(TimeIndex t, int j) const {
    return windowed_spend(superiority_, t - j, t) / denominator(t, j);
}

double BabrLedger::headroom(const std::vector<LaunchRecord>& records, double budget, TimeIndex r) const {
    // Only windows containing r change; benchmarks known now can only grow the
    // denominators later, so checking today's counts covers every future time.
    std::vector<LaunchRecord> near;
    for (const auto& rec : records) {
        if (rec.resolution >= r - window_) near.push_back(rec);
    }
    double best = std::numeric_limits<double>::infinity();
    for (TimeIndex s = r; s <= r + window_; ++s) {
        for (int j = std::max(1, s - r); j <= window_; ++j) {
            double slack = budget * denominator(s, j) - windowed_spend(near, s - j, s);
            best = std::min(best, slack);
        }
    }
    return std::max(0.0, best);
}

std::pair<double, double> BabrLedger::available(TimeIndex t, int wait, int superiority_wait) const {
    if (wait < 1 || superiority_wait < 1) throw std::invalid_argument("wait must be positive");
    return {headroom(approval_, alpha_, t + wait), headroom(superiority_, alpha_prime_, t + superiority_wait)};
}

std::pair<double, double> BabrLedger::select_alphas(TimeIndex t, int wait, int superiority_wait) {
    auto [a, ap] = available(t, wait, superiority_wait);
    double level = std::clamp(greediness_ * a, 0.0, alpha_);
    double level_sup = std::clamp(greediness_ * ap, 0.0, alpha_prime_);
    approval_.push_back({t, level, t + wait});
    superiority_.push_back({t, level_sup, t + superiority_wait});
    return {level, level_sup};
}

} // namespace aacp
