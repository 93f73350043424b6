// policies.hpp: the six approval policies as step-wise state machines.
//
// Step t runs interims on monitoring data through t-1, updates the approved
// model Â_t and (BABR) the benchmark B̂_t, then launches families for the model
// proposed at t.
#pragma once

#include <map>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

#include "aacp/core.hpp"
#include "aacp/gst.hpp"
#include "aacp/ledger.hpp"
#include "aacp/monitoring.hpp"
#include "aacp/trace.hpp"

namespace aacp {

enum class PolicyKind { Blind, Fixed, Baseline, Reset, Bac, Babr };

PolicyKind parse_policy_kind(std::string_view name);
std::string_view to_string(PolicyKind kind);
/// Summary label: "Blind", "Fixed", "Baseline", "Reset", "BAC", "BABR".
std::string default_label(PolicyKind kind);

struct PolicyConfig {
    PolicyKind kind = PolicyKind::Bac;
    std::string label;         // defaults to default_label(kind)
    double test_level = 0.05;  // Baseline and Reset
    double alpha = 0.2;
    double alpha_prime = 0.2;
    int window = 15;
    double greediness = 0.5;
    BoundaryMode boundary_mode = BoundaryMode::GaussianRecursion;
    NIMargin eps{0.05, 0.05};

    std::string display_label() const { return label.empty() ? default_label(kind) : label; }
    /// Throws std::invalid_argument on out-of-range settings.
    void validate() const;
};

/// Latest passing candidate, or nothing.
std::optional<ModelId> tie_break_approval(std::span<const ModelId> passing);
/// Oldest qualifying candidate, or nothing.
std::optional<ModelId> tie_break_benchmark(std::span<const ModelId> qualifying);

class ApprovalPolicy {
public:
    explicit ApprovalPolicy(PolicyConfig config);

    const PolicyConfig& config() const { return config_; }
    ModelId approved() const { return approved_ids_.back(); }
    ModelId benchmark() const { return benchmark_; }
    const std::vector<ModelId>& approved_ids() const { return approved_ids_; }
    const std::vector<ModelId>& benchmark_ids() const { return benchmark_ids_; }
    std::size_t families_launched() const { return launched_; }
    std::size_t active_families() const;

    const BacLedger* bac_ledger() const { return bac_.get(); }
    const BabrLedger* babr_ledger() const { return babr_.get(); }

    /// Interims and decisions at step t. Needs every batch in [1, t-1].
    void begin_step(TimeIndex t, const MonitoringArchive& archive, const PopulationTimeline& timeline,
                    std::vector<TraceEvent>& events);

    /// Launches the families for a model proposed at t (id == t).
    void on_proposal(TimeIndex t, const SyntheticModel& model, std::vector<TraceEvent>& events);

private:
    struct Family {
        GateFamily gates;
        FamilyKind kind;
    };

    const FamilyBoundaries& boundaries(double level, int num_interims);
    void approve(TimeIndex t, ModelId id, std::vector<TraceEvent>& events);
    void run_approval_interims(TimeIndex t, const GateFamily::StatsProvider& stats, std::vector<TraceEvent>& events);
    void run_superiority_interims(TimeIndex t, const GateFamily::StatsProvider& stats,
                                  std::vector<TraceEvent>& events);
    bool is_approved(ModelId id) const;

    PolicyConfig config_;
    std::vector<ModelId> approved_ids_{0};
    std::vector<ModelId> benchmark_ids_{0};
    ModelId benchmark_ = 0;
    std::vector<Family> approval_;
    std::vector<Family> superiority_;
    std::size_t launched_ = 0;
    std::unique_ptr<BacLedger> bac_;
    std::unique_ptr<BabrLedger> babr_;
    std::map<std::pair<double, int>, FamilyBoundaries> boundary_cache_;
    PairedStatsCache stats_cache_;
    TimeIndex newest_proposal_ = 0;
};

} // namespace aacp
