// metrics.hpp: realized error rates and utilities from run traces, and
// aggregation over replicates.
#pragma once

#include <cstddef>
#include <iosfwd>
#include <span>
#include <string>
#include <vector>

#include "aacp/core.hpp"
#include "aacp/trace.hpp"

namespace aacp {

/// Per-step indicators, indexed like trace.steps.
struct StepIndicators {
    std::vector<int> bad_approval;     // Â changed and the new model is unacceptable to an earlier approval
    std::vector<int> benchmark_change; // B̂ changed
    std::vector<int> bad_benchmark;    // B̂ changed and the new benchmark is not superior to the previous one
};

StepIndicators step_indicators(const RunTrace& trace);

/// Bad approvals at times max(1, T - W) .. T.
int realized_bac_w(const RunTrace& trace, int window, TimeIndex T);

struct RatioCounts {
    int bad_approvals = 0;
    int bad_benchmarks = 0;
    int denominator = 1; // 1 + benchmark changes in the window

    double bar() const { return static_cast<double>(bad_approvals) / denominator; }
    double bsr() const { return static_cast<double>(bad_benchmarks) / denominator; }
};

RatioCounts realized_bar_bsr(const RunTrace& trace, int window, TimeIndex T);

/// (1/T) * sum over t = 1..T of endpoint k of the approved model at t.
double cumulative_utility(const RunTrace& trace, std::size_t endpoint, TimeIndex T);

struct CurvePoint {
    TimeIndex T = 0;
    double value = 0.0;
    double se = 0.0; // Monte Carlo standard error
};

/// Replicate-mean BAC_W(T) for T = 1..n.
std::vector<CurvePoint> bac_curve(std::span<const RunTrace> traces, int window);
/// Ratio-of-means meBAR(T) and meBSR(T), delta-method standard errors.
std::vector<CurvePoint> mebar_curve(std::span<const RunTrace> traces, int window);
std::vector<CurvePoint> mebsr_curve(std::span<const RunTrace> traces, int window);

struct ErrorSummary {
    std::string scenario;
    std::string policy;
    int replicates = 0;
    bool graph_changing = false;
    double bac_w = 0.0;  // max over T of the replicate mean
    double mebar = 0.0;
    double mebsr = 0.0;
    double num_approved = 0.0;
    double bad_approvals = 0.0; // over the whole run
    std::vector<double> final_values; // approved model at the last step
    std::vector<double> cumutil;
};

/// Throws std::invalid_argument on an empty set or traces of different runs' shapes.
ErrorSummary aggregate(std::span<const RunTrace> traces);

/// Header: scenario,policy,BAC_W,num_approved,final_specificity,final_sensitivity,
/// cumutil_specificity,cumutil_sensitivity,meBAR,meBSR
void write_summary_csv(std::ostream& out, std::span<const ErrorSummary> rows);

/// Per-time mean and sd of the approved model's endpoints.
struct FigureSeries {
    std::string policy;
    std::vector<TimeIndex> t;
    std::vector<std::vector<double>> mean; // [time][endpoint]
    std::vector<std::vector<double>> sd;
};

FigureSeries figure_series(std::span<const RunTrace> traces);
/// Columns: policy,t,sensitivity_mean,sensitivity_sd,specificity_mean,specificity_sd
void write_figure_csv(std::ostream& out, std::span<const FigureSeries> series);

/// RFC 4180 quoting when needed.
std::string csv_field(const std::string& s);

} // namespace aacp
