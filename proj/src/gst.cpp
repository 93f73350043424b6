#include "aacp/gst.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>
#include <stdexcept>
#include <string>

#include <boost/math/distributions/chi_squared.hpp>
#include <boost/math/distributions/normal.hpp>

namespace aacp {

namespace {

const boost::math::normal_distribution<double> kStdNormal{};

double normal_pdf(double x) { return std::exp(-0.5 * x * x) / std::sqrt(2.0 * std::numbers::pi); }

// Largest finite boundary; used when an alpha increment is too small to resolve.
constexpr double kMaxZ = 38.0;

// Step of the integration grid on the partial-sum scale.
constexpr double kGridStep = 0.05;
// The continuation density is truncated below -kLowerSd * sqrt(k).
constexpr double kLowerSd = 8.5;
// Gaussian kernel support in partial-sum units.
constexpr double kKernelWidth = 8.5;

struct Density {
    double top = 0.0;       // boundary on the partial-sum scale; grid[i] = top - i * h
    std::vector<double> f;  // sub-density values on the grid
};

double upper_tail(double x) { return 0.5 * std::erfc(x / std::numbers::sqrt2); }

double trapezoid_cross(const Density& d, double b, double* slope = nullptr) {
    // P(no earlier crossing, next increment pushes the sum above b)
    double acc = 0.0, dacc = 0.0;
    for (std::size_t i = 0; i < d.f.size(); ++i) {
        double s = d.top - static_cast<double>(i) * kGridStep;
        double w = (i == 0 || i + 1 == d.f.size()) ? 0.5 : 1.0;
        acc += w * d.f[i] * upper_tail(b - s);
        if (slope) dacc += w * d.f[i] * normal_pdf(b - s);
    }
    if (slope) *slope = -dacc * kGridStep;
    return acc * kGridStep;
}

Density propagate(const Density& prev, double b, int k) {
    Density next;
    next.top = b;
    double lower = -kLowerSd * std::sqrt(static_cast<double>(k));
    auto n = static_cast<std::size_t>(std::max(2.0, std::floor((b - lower) / kGridStep) + 1.0));
    next.f.assign(n, 0.0);
    const std::size_t m = prev.f.size();
    // s_i - s'_j = delta + (j - i) * h, so the kernel depends only on j - i
    const double delta = b - prev.top;
    const auto reach = static_cast<long>(std::ceil((kKernelWidth + std::abs(delta)) / kGridStep)) + 1;
    std::vector<double> kernel(static_cast<std::size_t>(2 * reach + 1), 0.0);
    for (long q = -reach; q <= reach; ++q) {
        double x = delta + static_cast<double>(q) * kGridStep;
        if (std::abs(x) <= kKernelWidth) kernel[static_cast<std::size_t>(q + reach)] = normal_pdf(x);
    }
    std::vector<double> weighted(prev.f);
    weighted.front() *= 0.5;
    weighted.back() *= 0.5;
    for (std::size_t i = 0; i < n; ++i) {
        long jlo = std::max(0L, static_cast<long>(i) - reach);
        long jhi = std::min(static_cast<long>(m) - 1, static_cast<long>(i) + reach);
        double acc = 0.0;
        for (long j = jlo; j <= jhi; ++j) {
            acc += weighted[static_cast<std::size_t>(j)] * kernel[static_cast<std::size_t>(j - static_cast<long>(i) + reach)];
        }
        next.f[i] = acc * kGridStep;
    }
    return next;
}

Density initial_density(double b) {
    Density d;
    d.top = b;
    double lower = -kLowerSd;
    auto n = static_cast<std::size_t>(std::max(2.0, std::floor((b - lower) / kGridStep) + 1.0));
    d.f.resize(n);
    for (std::size_t i = 0; i < n; ++i) d.f[i] = normal_pdf(b - static_cast<double>(i) * kGridStep);
    return d;
}

double solve_boundary(const Density& prev, double target, int k) {
    // crossing probability is decreasing in b: safeguarded Newton inside a bracket
    double sk = std::sqrt(static_cast<double>(k));
    double lo = -kLowerSd * sk;
    double hi = kMaxZ * sk;
    if (trapezoid_cross(prev, hi) >= target) return hi;
    double b = std::clamp(normal_upper_quantile(std::min(target, 0.5)) * sk, lo, hi);
    for (int it = 0; it < 200 && hi - lo > 1e-10; ++it) {
        double slope = 0.0;
        double g = trapezoid_cross(prev, b, &slope) - target;
        if (g > 0) lo = b; else hi = b;
        if (std::abs(g) < 1e-15) return b;
        double nb = slope < 0 ? b - g / slope : 0.5 * (lo + hi);
        if (!(nb > lo && nb < hi)) nb = 0.5 * (lo + hi);
        if (std::abs(nb - b) < 1e-11) return nb;
        b = nb;
    }
    return hi;
}

} // namespace

double normal_upper_quantile(double p) {
    if (!(p > 0.0 && p < 1.0)) {
        if (p <= 0.0) return kMaxZ;
        return -kMaxZ;
    }
    double z = boost::math::quantile(boost::math::complement(kStdNormal, p));
    return std::min(z, kMaxZ);
}

double normal_upper_tail(double z) { return boost::math::cdf(boost::math::complement(kStdNormal, z)); }

double pocock_cumulative_alpha(double total_alpha, double tau) {
    if (!(tau >= 0.0 && tau <= 1.0)) throw std::invalid_argument("information fraction must lie in [0,1]");
    if (!(total_alpha > 0.0 && total_alpha < 1.0)) throw std::invalid_argument("total alpha must lie in (0,1)");
    return total_alpha * std::log(1.0 + (std::numbers::e - 1.0) * tau);
}

SpendingSchedule SpendingSchedule::pocock(double total_alpha, int num_interims) {
    if (num_interims < 1) throw std::invalid_argument("need at least one interim");
    SpendingSchedule s;
    s.total_alpha = total_alpha;
    s.cumulative_alpha.reserve(static_cast<std::size_t>(num_interims));
    for (int k = 1; k <= num_interims; ++k) {
        s.cumulative_alpha.push_back(pocock_cumulative_alpha(total_alpha, static_cast<double>(k) / num_interims));
    }
    s.cumulative_alpha.back() = total_alpha;
    return s;
}

void SpendingSchedule::validate() const {
    if (!(total_alpha > 0.0 && total_alpha < 1.0)) throw std::invalid_argument("total alpha must lie in (0,1)");
    if (cumulative_alpha.empty()) throw std::invalid_argument("schedule has no interims");
    double prev = 0.0;
    for (double a : cumulative_alpha) {
        if (a < prev) throw std::invalid_argument("cumulative alpha must be nondecreasing");
        prev = a;
    }
    if (std::abs(cumulative_alpha.back() - total_alpha) > 1e-12) {
        throw std::invalid_argument("cumulative alpha must end at total alpha");
    }
}

BoundaryMode parse_boundary_mode(std::string_view name) {
    if (name == "bonferroni") return BoundaryMode::Bonferroni;
    if (name == "gaussian" || name == "gaussian-recursion") return BoundaryMode::GaussianRecursion;
    throw std::invalid_argument("unknown boundary mode '" + std::string(name) + "'");
}

std::string_view to_string(BoundaryMode mode) {
    return mode == BoundaryMode::Bonferroni ? "bonferroni" : "gaussian-recursion";
}

std::vector<double> boundaries_from_schedule(const SpendingSchedule& schedule, BoundaryMode mode) {
    schedule.validate();
    const auto& cum = schedule.cumulative_alpha;
    std::vector<double> z;
    z.reserve(cum.size());
    if (mode == BoundaryMode::Bonferroni) {
        double prev = 0.0;
        for (double a : cum) {
            z.push_back(normal_upper_quantile(a - prev));
            prev = a;
        }
        return z;
    }
    double b = normal_upper_quantile(cum[0]);
    z.push_back(b);
    Density d = initial_density(b);
    for (std::size_t k = 1; k < cum.size(); ++k) {
        int look = static_cast<int>(k) + 1;
        double target = cum[k] - cum[k - 1];
        double bk = target > 0.0 ? solve_boundary(d, target, look) : kMaxZ * std::sqrt(double(look));
        z.push_back(bk / std::sqrt(static_cast<double>(look)));
        if (k + 1 < cum.size()) d = propagate(d, bk, look);
    }
    return z;
}

double crossing_probability(std::span<const double> z) {
    if (z.empty()) return 0.0;
    double total = normal_upper_tail(z[0]);
    Density d = initial_density(z[0]);
    for (std::size_t k = 1; k < z.size(); ++k) {
        int look = static_cast<int>(k) + 1;
        double bk = z[k] * std::sqrt(static_cast<double>(look));
        total += trapezoid_cross(d, bk);
        if (k + 1 < z.size()) d = propagate(d, bk, look);
    }
    return total;
}

double EndpointDiffStats::se() const {
    if (n < 2) return 0.0;
    double nn = static_cast<double>(n);
    double var = (sum_sq - sum * sum / nn) / (nn - 1.0);
    if (var <= 0.0) return 0.0;
    return std::sqrt(var / nn);
}

bool PairedSampleStats::sufficient() const {
    return !endpoints.empty() &&
           std::all_of(endpoints.begin(), endpoints.end(), [](const EndpointDiffStats& e) { return e.n > 0; });
}

PairedSampleStats paired_endpoint_stats(std::span<const PairedOutcome> outcomes, std::size_t num_endpoints) {
    PairedSampleStats stats(num_endpoints);
    for (const auto& o : outcomes) {
        if (o.endpoint >= num_endpoints) throw std::invalid_argument("outcome endpoint out of range");
        stats.endpoints[o.endpoint].add(static_cast<double>(o.cand_correct) - static_cast<double>(o.ref_correct));
    }
    return stats;
}

namespace {

void add_batch(PairedSampleStats& stats, const MonitoringBatch& batch, const PopulationTimeline& timeline, ModelId ref,
               ModelId cand) {
    const auto r = timeline.truth(ref, batch.time);
    const auto c = timeline.truth(cand, batch.time);
    for (std::size_t k = 0; k < 2; ++k) {
        auto d = batch.discordant(k, ref, r[k], cand, c[k]);
        auto& e = stats.endpoints[k];
        e.n += d.n;
        e.sum += static_cast<double>(d.plus - d.minus);
        e.sum_sq += static_cast<double>(d.plus + d.minus);
    }
}

} // namespace

PairedSampleStats paired_endpoint_stats(const MonitoringArchive& archive, const PopulationTimeline& timeline,
                                        ModelId ref, ModelId cand, TimeIndex last_time) {
    PairedSampleStats stats(2);
    for (TimeIndex t = std::max(ref, cand); t <= last_time; ++t) add_batch(stats, archive.at(t), timeline, ref, cand);
    return stats;
}

PairedSampleStats PairedStatsCache::get(const MonitoringArchive& archive, const PopulationTimeline& timeline,
                                        ModelId ref, ModelId cand, TimeIndex last_time) {
    auto& e = entries_[{ref, cand}];
    if (e.through > last_time) e = Entry{};
    if (e.through < 0) e.through = std::max(ref, cand) - 1;
    for (TimeIndex t = e.through + 1; t <= last_time; ++t) add_batch(e.stats, archive.at(t), timeline, ref, cand);
    e.through = std::max(e.through, last_time);
    return e.stats;
}

std::string_view to_string(GstStatus s) {
    switch (s) {
    case GstStatus::Active: return "active";
    case GstStatus::Rejected: return "rejected";
    case GstStatus::Expired: return "expired";
    }
    return "?";
}

bool rejects_null(const PairedSampleStats& stats, const NIMargin& eps, double z_all, double z_split) {
    if (stats.size() != eps.size()) throw std::invalid_argument("rejects_null: endpoint dimension mismatch");
    if (!stats.sufficient()) return false;
    const bool superiority = eps.is_zero();
    bool some_superior = false;
    for (std::size_t k = 0; k < stats.size(); ++k) {
        const auto& e = stats.endpoints[k];
        double lower = e.mean() - z_all * e.se();
        bool ni = superiority ? lower >= 0.0 : lower > -eps[k];
        if (!ni) return false;
        if (e.mean() - z_split * e.se() > 0.0) some_superior = true;
    }
    return some_superior;
}

InterimOutcome gst_interim(GstState& state, const PairedSampleStats& stats, const NIMargin& eps, double z_all,
                           double z_split) {
    if (state.terminal()) throw std::logic_error("gst_interim called on a finished test");
    if (state.interims_done >= state.num_interims) throw std::logic_error("no interims left");
    ++state.interims_done;
    if (stats.sufficient() && rejects_null(stats, eps, z_all, z_split)) {
        state.status = GstStatus::Rejected;
        return InterimOutcome::Rejected;
    }
    if (state.interims_done == state.num_interims) {
        state.status = GstStatus::Expired;
        return InterimOutcome::Expired;
    }
    return InterimOutcome::Continue;
}

FamilyBoundaries FamilyBoundaries::make(double level, int num_interims, std::size_t num_endpoints,
                                        BoundaryMode mode) {
    FamilyBoundaries b;
    if (!(level > 0.0)) {
        b.never_rejects = true;
        b.z_all.assign(static_cast<std::size_t>(num_interims), std::numeric_limits<double>::infinity());
        b.z_split = b.z_all;
        return b;
    }
    b.z_all = boundaries_from_schedule(SpendingSchedule::pocock(level, num_interims), mode);
    b.z_split = num_endpoints > 1 ? boundaries_from_schedule(
                                        SpendingSchedule::pocock(level / static_cast<double>(num_endpoints),
                                                                 num_interims),
                                        mode)
                                  : b.z_all;
    return b;
}

std::string_view to_string(FamilyStatus s) {
    switch (s) {
    case FamilyStatus::Active: return "active";
    case FamilyStatus::Passed: return "passed";
    case FamilyStatus::Failed: return "failed";
    }
    return "?";
}

GateFamily::GateFamily(TimeIndex launch, ModelId cand, double level, int num_interims, NIMargin eps,
                       FamilyBoundaries boundaries, std::vector<ModelId> refs)
    : launch_(launch), cand_(cand), level_(level), num_interims_(num_interims), eps_(std::move(eps)),
      bounds_(std::move(boundaries)) {
    if (num_interims < 1) throw std::invalid_argument("family needs at least one interim");
    if (bounds_.z_all.size() != static_cast<std::size_t>(num_interims) ||
        bounds_.z_split.size() != static_cast<std::size_t>(num_interims)) {
        throw std::invalid_argument("boundary vectors must match the number of interims");
    }
    for (ModelId r : refs) append_gate(r);
}

std::vector<ModelId> GateFamily::references() const {
    std::vector<ModelId> out;
    out.reserve(gates_.size());
    for (const auto& g : gates_) out.push_back(g.ref);
    return out;
}

void GateFamily::append_gate(ModelId ref) {
    if (!gates_.empty() && ref <= gates_.back().ref) {
        throw std::invalid_argument("gate references must be strictly increasing, got " + std::to_string(ref) +
                                    " after " + std::to_string(gates_.back().ref));
    }
    GstState g;
    g.ref = ref;
    g.cand = cand_;
    g.num_interims = num_interims_;
    gates_.push_back(g);
}

void GateFamily::reopen(ModelId ref) {
    append_gate(ref);
    if (status_ == FamilyStatus::Passed) status_ = FamilyStatus::Active;
}

void GateFamily::retire() {
    if (status_ == FamilyStatus::Active) status_ = FamilyStatus::Failed;
}

GateFamily::StepResult GateFamily::step(TimeIndex t, const StatsProvider& stats) {
    StepResult result{status_, {}};
    if (status_ != FamilyStatus::Active) return result;
    int k = t - launch_;
    if (k < 1 || k > num_interims_) throw std::logic_error("family interim outside its wait window");
    double z_all = bounds_.z_all[static_cast<std::size_t>(k - 1)];
    double z_split = bounds_.z_split[static_cast<std::size_t>(k - 1)];
    while (next_ < gates_.size()) {
        auto& g = gates_[next_];
        g.interims_done = k - 1; // gates reached late pick up the current look
        auto outcome = gst_interim(g, stats(g.ref, cand_), eps_, z_all, z_split);
        if (outcome == InterimOutcome::Rejected) {
            result.newly_rejected.push_back(g.ref);
            ++next_;
            continue;
        }
        if (outcome == InterimOutcome::Expired) status_ = FamilyStatus::Failed;
        break;
    }
    if (status_ == FamilyStatus::Active && next_ == gates_.size()) status_ = FamilyStatus::Passed;
    if (status_ == FamilyStatus::Active && k == num_interims_) status_ = FamilyStatus::Failed;
    result.status = status_;
    return result;
}

double combine_pvalues(std::span<const double> p, CombinationMethod method) {
    if (p.empty()) throw std::invalid_argument("combine_pvalues needs at least one p-value");
    for (double x : p) {
        if (!(x > 0.0 && x <= 1.0)) throw std::invalid_argument("p-values must lie in (0,1]");
    }
    const double n = static_cast<double>(p.size());
    if (method == CombinationMethod::Fisher) {
        double stat = 0.0;
        for (double x : p) stat += -2.0 * std::log(x);
        if (stat <= 0.0) return 1.0;
        boost::math::chi_squared_distribution<double> chi(2.0 * n);
        return boost::math::cdf(boost::math::complement(chi, stat));
    }
    double zsum = 0.0;
    for (double x : p) zsum += x >= 1.0 ? -kMaxZ : normal_upper_quantile(x);
    return normal_upper_tail(zsum / std::sqrt(n));
}

double noninferiority_pvalue(const EndpointDiffStats& s, double eps) {
    if (s.n == 0) return 1.0;
    double se = s.se();
    double shift = s.mean() + eps;
    if (se == 0.0) return shift > 0.0 ? std::numeric_limits<double>::min() : 1.0;
    return std::max(normal_upper_tail(shift / se), std::numeric_limits<double>::min());
}

} // namespace aacp
