// ledger.hpp: windowed alpha-investing for the BAC and BABR budgets.
//
// A family launched at t with wait Δ resolves at t + Δ. Its level counts against
// every evaluation window [s - j, s] that contains the resolution time. Wealth is
// returned once the resolution time leaves the window, and (BABR only) each
// benchmark discovered inside a window raises that window's budget by one unit.
#pragma once

#include <utility>
#include <vector>

#include "aacp/core.hpp"

namespace aacp {

struct LaunchRecord {
    TimeIndex launch = 0;
    double level = 0.0;
    TimeIndex resolution = 0;
};

class BacLedger {
public:
    BacLedger(double budget, int window, double greediness);

    /// Chooses and records the level for a family launched at t with wait Δ.
    double select_alpha(TimeIndex t, int wait);
    /// Headroom a launch at t with wait Δ could use without breaking any future window.
    double available(TimeIndex t, int wait) const;

    /// Over-estimate of BAC_W(t): sum of levels with t - window <= resolution <= t.
    double estimate(TimeIndex t, int window) const;
    double estimate(TimeIndex t) const { return estimate(t, window_); }

    double budget() const { return budget_; }
    int window() const { return window_; }
    double greediness() const { return greediness_; }
    const std::vector<LaunchRecord>& records() const { return records_; }

private:
    double budget_;
    int window_;
    double greediness_;
    std::vector<LaunchRecord> records_;
};

class BabrLedger {
public:
    BabrLedger(double alpha, double alpha_prime, int window, double greediness);

    /// Levels (approval, superiority) for families launched at t.
    std::pair<double, double> select_alphas(TimeIndex t, int wait, int superiority_wait);
    std::pair<double, double> available(TimeIndex t, int wait, int superiority_wait) const;

    /// Registers a benchmark change at time t. Times must strictly increase.
    void record_benchmark(TimeIndex t);

    /// 1 + number of recorded benchmark changes in [max(1, t - j), t].
    int denominator(TimeIndex t, int j) const;
    double estimate_bar(TimeIndex t, int j) const;
    double estimate_bsr(TimeIndex t, int j) const;

    double alpha() const { return alpha_; }
    double alpha_prime() const { return alpha_prime_; }
    int window() const { return window_; }
    const std::vector<LaunchRecord>& approval_records() const { return approval_; }
    const std::vector<LaunchRecord>& superiority_records() const { return superiority_; }
    const std::vector<TimeIndex>& benchmark_times() const { return benchmarks_; }

private:
    double headroom(const std::vector<LaunchRecord>& records, double budget, TimeIndex resolution) const;

    double alpha_;
    double alpha_prime_;
    int window_;
    double greediness_;
    std::vector<LaunchRecord> approval_;
    std::vector<LaunchRecord> superiority_;
    std::vector<TimeIndex> benchmarks_;
};

/// Sum of levels whose resolution time lies in [lo, hi].
double windowed_spend(const std::vector<LaunchRecord>& records, TimeIndex lo, TimeIndex hi);

} // namespace aacp
