#include "aacp/metrics.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <ostream>
#include <stdexcept>

namespace aacp {

namespace {

std::size_t steps_through(const RunTrace& trace, TimeIndex T) {
    if (T < 1 || static_cast<std::size_t>(T) > trace.steps.size()) {
        throw std::out_of_range("T=" + std::to_string(T) + " outside the recorded steps");
    }
    return static_cast<std::size_t>(T);
}

std::size_t window_start(int window, TimeIndex T) { return static_cast<std::size_t>(std::max(1, T - window)); }

double mean_of(std::span<const double> v) {
    double s = 0.0;
    for (double x : v) s += x;
    return s / static_cast<double>(v.size());
}

double sd_of(std::span<const double> v, double mean) {
    if (v.size() < 2) return 0.0;
    double s = 0.0;
    for (double x : v) s += (x - mean) * (x - mean);
    return std::sqrt(s / static_cast<double>(v.size() - 1));
}

std::size_t common_length(std::span<const RunTrace> traces) {
    if (traces.empty()) throw std::invalid_argument("no traces to aggregate");
    std::size_t n = traces.front().steps.size();
    for (const auto& tr : traces) {
        if (tr.steps.size() != n) throw std::invalid_argument("traces differ in length");
    }
    if (n == 0) throw std::invalid_argument("traces have no steps");
    return n;
}

std::vector<CurvePoint> ratio_curve(std::span<const RunTrace> traces, int window, bool benchmarks) {
    const std::size_t n = common_length(traces);
    const double r = static_cast<double>(traces.size());
    std::vector<StepIndicators> ind;
    for (const auto& tr : traces) ind.push_back(step_indicators(tr));
    std::vector<CurvePoint> out;
    for (std::size_t T = 1; T <= n; ++T) {
        std::vector<double> num, den;
        for (const auto& d : ind) {
            const auto& bad = benchmarks ? d.bad_benchmark : d.bad_approval;
            double a = 0.0, b = 1.0;
            for (std::size_t t = window_start(window, static_cast<TimeIndex>(T)); t <= T; ++t) {
                a += bad[t - 1];
                b += d.benchmark_change[t - 1];
            }
            num.push_back(a);
            den.push_back(b);
        }
        double mn = mean_of(num), md = mean_of(den);
        double ratio = mn / md;
        double v = 0.0;
        for (std::size_t i = 0; i < num.size(); ++i) {
            double z = num[i] - ratio * den[i];
            v += z * z;
        }
        double se = traces.size() > 1 ? std::sqrt(v / (r - 1.0) / r) / md : 0.0;
        out.push_back({static_cast<TimeIndex>(T), ratio, se});
    }
    return out;
}

double curve_max(const std::vector<CurvePoint>& c) {
    double m = 0.0;
    for (const auto& p : c) m = std::max(m, p.value);
    return m;
}

std::string fixed(double x) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%.6f", x);
    return buf;
}

} // namespace

StepIndicators step_indicators(const RunTrace& trace) {
    StepIndicators ind;
    std::vector<ModelId> approved{0};
    ModelId bench = 0;
    for (const auto& s : trace.steps) {
        int bad = 0;
        if (s.approved != approved.back()) {
            const auto& cand = s.truth_of(s.approved);
            for (ModelId ref : approved) {
                if (!acceptability_edge(s.truth_of(ref), cand, trace.eps)) {
                    bad = 1;
                    break;
                }
            }
            approved.push_back(s.approved);
        }
        ind.bad_approval.push_back(bad);
        int change = s.benchmark != bench ? 1 : 0;
        int bad_bench = change && !superiority_edge(s.truth_of(bench), s.truth_of(s.benchmark)) ? 1 : 0;
        ind.benchmark_change.push_back(change);
        ind.bad_benchmark.push_back(bad_bench);
        bench = s.benchmark;
    }
    return ind;
}

int realized_bac_w(const RunTrace& trace, int window, TimeIndex T) {
    std::size_t last = steps_through(trace, T);
    auto ind = step_indicators(trace);
    int count = 0;
    for (std::size_t t = window_start(window, T); t <= last; ++t) count += ind.bad_approval[t - 1];
    return count;
}

RatioCounts realized_bar_bsr(const RunTrace& trace, int window, TimeIndex T) {
    std::size_t last = steps_through(trace, T);
    auto ind = step_indicators(trace);
    RatioCounts c;
    for (std::size_t t = window_start(window, T); t <= last; ++t) {
        c.bad_approvals += ind.bad_approval[t - 1];
        c.bad_benchmarks += ind.bad_benchmark[t - 1];
        c.denominator += ind.benchmark_change[t - 1];
    }
    return c;
}

double cumulative_utility(const RunTrace& trace, std::size_t endpoint, TimeIndex T) {
    std::size_t last = steps_through(trace, T);
    double s = 0.0;
    for (std::size_t t = 1; t <= last; ++t) {
        const auto& step = trace.steps[t - 1];
        s += step.truth_of(step.approved)[endpoint];
    }
    return s / static_cast<double>(last);
}

std::vector<CurvePoint> bac_curve(std::span<const RunTrace> traces, int window) {
    const std::size_t n = common_length(traces);
    const double r = static_cast<double>(traces.size());
    std::vector<std::vector<int>> bad;
    for (const auto& tr : traces) bad.push_back(step_indicators(tr).bad_approval);
    std::vector<CurvePoint> out;
    for (std::size_t T = 1; T <= n; ++T) {
        std::vector<double> v;
        for (const auto& b : bad) {
            int c = 0;
            for (std::size_t t = window_start(window, static_cast<TimeIndex>(T)); t <= T; ++t) c += b[t - 1];
            v.push_back(c);
        }
        double m = mean_of(v);
        out.push_back({static_cast<TimeIndex>(T), m, sd_of(v, m) / std::sqrt(r)});
    }
    return out;
}

std::vector<CurvePoint> mebar_curve(std::span<const RunTrace> traces, int window) {
    return ratio_curve(traces, window, false);
}

std::vector<CurvePoint> mebsr_curve(std::span<const RunTrace> traces, int window) {
    return ratio_curve(traces, window, true);
}

ErrorSummary aggregate(std::span<const RunTrace> traces) {
    const std::size_t n = common_length(traces);
    const auto& first = traces.front();
    ErrorSummary s;
    s.scenario = first.scenario;
    s.policy = first.policy;
    s.replicates = static_cast<int>(traces.size());
    s.graph_changing = first.graph_changing;
    const int W = first.window;
    for (const auto& tr : traces) {
        if (tr.scenario != first.scenario || tr.policy != first.policy || tr.window != W) {
            throw std::invalid_argument("aggregate needs traces of one scenario and policy");
        }
    }
    s.bac_w = curve_max(bac_curve(traces, W));
    s.mebar = curve_max(mebar_curve(traces, W));
    s.mebsr = curve_max(mebsr_curve(traces, W));

    const std::size_t k = first.eps.size();
    s.final_values.assign(k, 0.0);
    s.cumutil.assign(k, 0.0);
    const double r = static_cast<double>(traces.size());
    for (const auto& tr : traces) {
        s.num_approved += static_cast<double>(tr.approved_ids().size()) / r;
        auto ind = step_indicators(tr);
        for (int b : ind.bad_approval) s.bad_approvals += b / r;
        const auto& last = tr.steps.back();
        for (std::size_t e = 0; e < k; ++e) {
            s.final_values[e] += last.truth_of(last.approved)[e] / r;
            s.cumutil[e] += cumulative_utility(tr, e, static_cast<TimeIndex>(n)) / r;
        }
    }
    return s;
}

std::string csv_field(const std::string& s) {
    if (s.find_first_of(",\"\r\n") == std::string::npos) return s;
    std::string out = "\"";
    for (char c : s) {
        if (c == '"') out += '"';
        out += c;
    }
    return out + "\"";
}

void write_summary_csv(std::ostream& out, std::span<const ErrorSummary> rows) {
    out << "scenario,policy,BAC_W,num_approved,final_specificity,final_sensitivity,cumutil_specificity,"
           "cumutil_sensitivity,meBAR,meBSR\r\n";
    for (const auto& r : rows) {
        auto err = [&](double x) { return r.graph_changing ? std::string("---") : fixed(x); };
        out << csv_field(r.scenario) << ',' << csv_field(r.policy) << ',' << err(r.bac_w) << ','
            << fixed(r.num_approved) << ',' << fixed(r.final_values.at(kSpecificity)) << ','
            << fixed(r.final_values.at(kSensitivity)) << ',' << fixed(r.cumutil.at(kSpecificity)) << ','
            << fixed(r.cumutil.at(kSensitivity)) << ',' << err(r.mebar) << ',' << err(r.mebsr) << "\r\n";
    }
}

FigureSeries figure_series(std::span<const RunTrace> traces) {
    const std::size_t n = common_length(traces);
    const std::size_t k = traces.front().eps.size();
    FigureSeries fs;
    fs.policy = traces.front().policy;
    for (std::size_t t = 1; t <= n; ++t) {
        fs.t.push_back(static_cast<TimeIndex>(t));
        std::vector<double> m(k), sd(k);
        for (std::size_t e = 0; e < k; ++e) {
            std::vector<double> v;
            for (const auto& tr : traces) {
                const auto& step = tr.steps[t - 1];
                v.push_back(step.truth_of(step.approved)[e]);
            }
            m[e] = mean_of(v);
            sd[e] = sd_of(v, m[e]);
        }
        fs.mean.push_back(std::move(m));
        fs.sd.push_back(std::move(sd));
    }
    return fs;
}

void write_figure_csv(std::ostream& out, std::span<const FigureSeries> series) {
    out << "policy,t,sensitivity_mean,sensitivity_sd,specificity_mean,specificity_sd\r\n";
    for (const auto& s : series) {
        for (std::size_t i = 0; i < s.t.size(); ++i) {
            out << csv_field(s.policy) << ',' << s.t[i] << ',' << fixed(s.mean[i].at(kSensitivity)) << ','
                << fixed(s.sd[i].at(kSensitivity)) << ',' << fixed(s.mean[i].at(kSpecificity)) << ','
                << fixed(s.sd[i].at(kSpecificity)) << "\r\n";
        }
    }
}

} // namespace aacp
