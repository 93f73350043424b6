// gst.hpp: group-sequential acceptability/superiority tests, gate-keeping
// families and p-value combination.
#pragma once

#include <cstddef>
#include <functional>
#include <map>
#include <utility>
#include <span>
#include <string_view>
#include <vector>

#include "aacp/core.hpp"
#include "aacp/monitoring.hpp"

namespace aacp {

// ---------------------------------------------------------------------------
// Alpha spending and boundaries
// ---------------------------------------------------------------------------

/// Lan-DeMets Pocock-type spending: total_alpha * ln(1 + (e - 1) * tau).
double pocock_cumulative_alpha(double total_alpha, double tau);

struct SpendingSchedule {
    double total_alpha = 0.05;
    std::vector<double> cumulative_alpha; // one entry per interim, information k/K

    static SpendingSchedule pocock(double total_alpha, int num_interims);
    int num_interims() const { return static_cast<int>(cumulative_alpha.size()); }
    /// Throws std::invalid_argument unless nondecreasing and ending at total_alpha.
    void validate() const;
};

enum class BoundaryMode { Bonferroni, GaussianRecursion };

BoundaryMode parse_boundary_mode(std::string_view name);
std::string_view to_string(BoundaryMode mode);

/// One-sided critical z values, one per interim.
///
/// Bonferroni: z_k is the upper normal quantile of the k-th alpha increment.
/// GaussianRecursion: z_k solves the exact first-crossing equations for a
/// standardized partial-sum process with equal information increments,
/// computed by numerical integration of the continuation density.
std::vector<double> boundaries_from_schedule(const SpendingSchedule& schedule, BoundaryMode mode);

/// Probability that a standardized equal-increment partial-sum process first
/// exceeds `z` at some interim (used to audit boundaries).
double crossing_probability(std::span<const double> z);

double normal_upper_quantile(double p);
double normal_upper_tail(double z);

// ---------------------------------------------------------------------------
// Paired statistics
// ---------------------------------------------------------------------------

/// Running sums of paired differences d_i in {-1, 0, +1} (or any reals).
struct EndpointDiffStats {
    long n = 0;
    double sum = 0.0;
    double sum_sq = 0.0;

    void add(double d) {
        ++n;
        sum += d;
        sum_sq += d * d;
    }
    void merge(const EndpointDiffStats& o) {
        n += o.n;
        sum += o.sum;
        sum_sq += o.sum_sq;
    }
    double mean() const { return n > 0 ? sum / static_cast<double>(n) : 0.0; }
    /// Sample standard deviation over sqrt(n); zero when n < 2 or all differences equal.
    double se() const;
};

struct PairedSampleStats {
    std::vector<EndpointDiffStats> endpoints;

    explicit PairedSampleStats(std::size_t k = 2) : endpoints(k) {}
    std::size_t size() const { return endpoints.size(); }
    /// False when some endpoint has no observations (the interim is skipped).
    bool sufficient() const;
};

/// One patient's outcome under a (reference, candidate) pair.
struct PairedOutcome {
    std::size_t endpoint; // stratum: kSensitivity for diseased, kSpecificity for healthy
    bool ref_correct;
    bool cand_correct;
};

PairedSampleStats paired_endpoint_stats(std::span<const PairedOutcome> outcomes, std::size_t num_endpoints = 2);

/// Pools monitoring batches from max(ref, cand) through `last_time` using the
/// models' true endpoints at each batch time.
PairedSampleStats paired_endpoint_stats(const MonitoringArchive& archive, const PopulationTimeline& timeline,
                                        ModelId ref, ModelId cand, TimeIndex last_time);

/// Same pooled statistics, extended batch by batch as last_time grows.
class PairedStatsCache {
public:
    PairedSampleStats get(const MonitoringArchive& archive, const PopulationTimeline& timeline, ModelId ref,
                          ModelId cand, TimeIndex last_time);

private:
    struct Entry {
        TimeIndex through = -1;
        PairedSampleStats stats{2};
    };
    std::map<std::pair<ModelId, ModelId>, Entry> entries_;
};

// ---------------------------------------------------------------------------
// Single tests
// ---------------------------------------------------------------------------

enum class GstStatus { Active, Rejected, Expired };
enum class InterimOutcome { Continue, Rejected, Expired };

std::string_view to_string(GstStatus s);

/// Decision rule at one interim. Rejects the null "cand is not acceptable to
/// ref" iff every endpoint's lower bound mean - z * se clears -eps, and at least
/// one endpoint's lower bound at the split boundary is strictly positive.
/// With a zero margin the non-inferiority part uses >= 0.
bool rejects_null(const PairedSampleStats& stats, const NIMargin& eps, double z_all, double z_split);

struct GstState {
    ModelId ref = 0;
    ModelId cand = 0;
    int num_interims = 1;
    int interims_done = 0;
    GstStatus status = GstStatus::Active;

    bool terminal() const { return status != GstStatus::Active; }
};

/// Runs the next interim. Insufficient data skips the look (it still counts
/// toward the schedule). Throws std::logic_error on a terminal state.
InterimOutcome gst_interim(GstState& state, const PairedSampleStats& stats, const NIMargin& eps, double z_all,
                           double z_split);

// ---------------------------------------------------------------------------
// Gate-keeping families
// ---------------------------------------------------------------------------

/// Boundaries shared by every test in a family: the full-level boundary for
/// the all-endpoint part and the level/K boundary for the superiority union.
struct FamilyBoundaries {
    std::vector<double> z_all;
    std::vector<double> z_split;
    bool never_rejects = false; // level zero

    static FamilyBoundaries make(double level, int num_interims, std::size_t num_endpoints, BoundaryMode mode);
};

enum class FamilyStatus { Active, Passed, Failed };

std::string_view to_string(FamilyStatus s);

class GateFamily {
public:
    GateFamily(TimeIndex launch, ModelId cand, double level, int num_interims, NIMargin eps,
               FamilyBoundaries boundaries, std::vector<ModelId> refs);

    TimeIndex launch_time() const { return launch_; }
    ModelId candidate() const { return cand_; }
    double level() const { return level_; }
    int num_interims() const { return num_interims_; }
    const NIMargin& margin() const { return eps_; }
    FamilyStatus status() const { return status_; }
    const std::vector<GstState>& gates() const { return gates_; }
    std::size_t next_gate() const { return next_; }
    std::vector<ModelId> references() const;
    /// Last interim time: launch + num_interims.
    TimeIndex resolution_time() const { return launch_ + num_interims_; }

    /// Appends a test against a newer reference. Reference ids must increase.
    void append_gate(ModelId ref);
    /// Appends a gate and returns a passed family to Active so the new gate is tested.
    void reopen(ModelId ref);

    /// Marks the family failed without running a look (candidate dropped).
    void retire();

    using StatsProvider = std::function<PairedSampleStats(ModelId ref, ModelId cand)>;

    struct StepResult {
        FamilyStatus status;
        std::vector<ModelId> newly_rejected;
    };

    /// Interim at time t (interim index t - launch). Tests gates in order from the
    /// first unrejected one; several gates may clear in one look.
    StepResult step(TimeIndex t, const StatsProvider& stats);

private:
    TimeIndex launch_;
    ModelId cand_;
    double level_;
    int num_interims_;
    NIMargin eps_;
    FamilyBoundaries bounds_;
    std::vector<GstState> gates_;
    std::size_t next_ = 0;
    FamilyStatus status_ = FamilyStatus::Active;
};

// ---------------------------------------------------------------------------
// Combination tests
// ---------------------------------------------------------------------------

enum class CombinationMethod { Fisher, InverseNormal };

double combine_pvalues(std::span<const double> p, CombinationMethod method);

/// One-sided p-value of a paired non-inferiority comparison for one endpoint
/// (null: true difference <= -eps), normal approximation.
double noninferiority_pvalue(const EndpointDiffStats& s, double eps);

} // namespace aacp
