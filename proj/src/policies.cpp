#include "aacp/policies.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace aacp {

namespace {

constexpr std::string_view kPolicyNames[] = {"blind", "fixed", "baseline", "reset", "bac", "babr"};

TraceEvent event(TimeIndex t, EventType type, FamilyKind family, ModelId model, ModelId ref = -1,
                 double level = 0.0) {
    TraceEvent e;
    e.t = t;
    e.type = type;
    e.family = family;
    e.model = model;
    e.ref = ref;
    e.level = level;
    return e;
}

} // namespace

PolicyKind parse_policy_kind(std::string_view name) {
    std::string lower(name);
    std::transform(lower.begin(), lower.end(), lower.begin(), [](unsigned char c) { return std::tolower(c); });
    for (std::size_t i = 0; i < std::size(kPolicyNames); ++i) {
        if (kPolicyNames[i] == lower) return static_cast<PolicyKind>(i);
    }
    throw std::invalid_argument("unknown policy '" + std::string(name) + "'");
}

std::string_view to_string(PolicyKind kind) { return kPolicyNames[static_cast<int>(kind)]; }

std::string default_label(PolicyKind kind) {
    switch (kind) {
    case PolicyKind::Blind: return "Blind";
    case PolicyKind::Fixed: return "Fixed";
    case PolicyKind::Baseline: return "Baseline";
    case PolicyKind::Reset: return "Reset";
    case PolicyKind::Bac: return "BAC";
    case PolicyKind::Babr: return "BABR";
    }
    return "?";
}

void PolicyConfig::validate() const {
    auto in_unit = [](double x) { return x > 0.0 && x < 1.0; };
    if (!in_unit(test_level)) throw std::invalid_argument("test level must lie in (0,1)");
    if (!in_unit(alpha) || !in_unit(alpha_prime)) throw std::invalid_argument("alpha budgets must lie in (0,1)");
    if (window < 1) throw std::invalid_argument("window must be at least 1");
    if (!(greediness > 0.0 && greediness <= 1.0)) throw std::invalid_argument("greediness must lie in (0,1]");
    if (eps.size() == 0) throw std::invalid_argument("margin needs at least one endpoint");
    for (double e : eps.values()) {
        if (!(e >= 0.0)) throw std::invalid_argument("margins must be nonnegative");
    }
}

std::optional<ModelId> tie_break_approval(std::span<const ModelId> passing) {
    if (passing.empty()) return std::nullopt;
    return *std::max_element(passing.begin(), passing.end());
}

std::optional<ModelId> tie_break_benchmark(std::span<const ModelId> qualifying) {
    if (qualifying.empty()) return std::nullopt;
    return *std::min_element(qualifying.begin(), qualifying.end());
}

ApprovalPolicy::ApprovalPolicy(PolicyConfig config) : config_(std::move(config)) {
    config_.validate();
    if (config_.kind == PolicyKind::Bac) {
        bac_ = std::make_unique<BacLedger>(config_.alpha, config_.window, config_.greediness);
    } else if (config_.kind == PolicyKind::Babr) {
        babr_ = std::make_unique<BabrLedger>(config_.alpha, config_.alpha_prime, config_.window, config_.greediness);
    }
}

std::size_t ApprovalPolicy::active_families() const {
    auto active = [](const Family& f) { return f.gates.status() == FamilyStatus::Active; };
    return static_cast<std::size_t>(std::count_if(approval_.begin(), approval_.end(), active) +
                                    std::count_if(superiority_.begin(), superiority_.end(), active));
}

bool ApprovalPolicy::is_approved(ModelId id) const {
    return std::binary_search(approved_ids_.begin(), approved_ids_.end(), id);
}

const FamilyBoundaries& ApprovalPolicy::boundaries(double level, int num_interims) {
    auto key = std::make_pair(level, num_interims);
    auto it = boundary_cache_.find(key);
    if (it == boundary_cache_.end()) {
        auto fb = FamilyBoundaries::make(level, num_interims, config_.eps.size(), config_.boundary_mode);
        it = boundary_cache_.emplace(key, std::move(fb)).first;
    }
    return it->second;
}

void ApprovalPolicy::begin_step(TimeIndex t, const MonitoringArchive& archive, const PopulationTimeline& timeline,
                                std::vector<TraceEvent>& events) {
    if (t < 1) throw std::invalid_argument("policy steps start at t = 1");
    for (TimeIndex s = 1; s < t; ++s) {
        if (!archive.has(s)) throw std::logic_error("monitoring batch for t=" + std::to_string(s) + " is missing");
    }
    switch (config_.kind) {
    case PolicyKind::Fixed: return;
    case PolicyKind::Blind:
        if (newest_proposal_ > approved()) approve(t, newest_proposal_, events);
        return;
    default: break;
    }
    GateFamily::StatsProvider stats = [&](ModelId ref, ModelId cand) {
        return stats_cache_.get(archive, timeline, ref, cand, t - 1);
    };
    run_approval_interims(t, stats, events);
    if (config_.kind == PolicyKind::Babr) run_superiority_interims(t, stats, events);
}

void ApprovalPolicy::run_approval_interims(TimeIndex t, const GateFamily::StatsProvider& stats,
                                           std::vector<TraceEvent>& events) {
    std::vector<ModelId> passing;
    for (auto& f : approval_) {
        auto& g = f.gates;
        if (g.status() != FamilyStatus::Active || t <= g.launch_time()) continue;
        auto r = g.step(t, stats);
        for (ModelId ref : r.newly_rejected) {
            events.push_back(event(t, EventType::Reject, FamilyKind::Approval, g.candidate(), ref));
        }
        if (r.status == FamilyStatus::Passed) {
            passing.push_back(g.candidate());
        } else if (r.status == FamilyStatus::Failed) {
            events.push_back(event(t, EventType::Expire, FamilyKind::Approval, g.candidate()));
        }
    }
    if (auto pick = tie_break_approval(passing)) approve(t, *pick, events);
    std::erase_if(approval_, [](const Family& f) { return f.gates.status() != FamilyStatus::Active; });
}

void ApprovalPolicy::approve(TimeIndex t, ModelId id, std::vector<TraceEvent>& events) {
    if (id <= approved()) throw std::logic_error("approvals must move forward");
    approved_ids_.push_back(id);
    events.push_back(event(t, EventType::Approve, FamilyKind::Approval, id));
    const bool retarget = config_.kind == PolicyKind::Bac || config_.kind == PolicyKind::Babr;
    for (auto& f : approval_) {
        auto& g = f.gates;
        if (g.status() != FamilyStatus::Active) continue;
        if (g.candidate() <= id) {
            g.retire();
            events.push_back(event(t, EventType::Retire, FamilyKind::Approval, g.candidate()));
        } else if (retarget) {
            g.append_gate(id);
        }
    }
}

void ApprovalPolicy::run_superiority_interims(TimeIndex t, const GateFamily::StatsProvider& stats,
                                              std::vector<TraceEvent>& events) {
    std::vector<ModelId> qualifying;
    for (auto& f : superiority_) {
        auto& g = f.gates;
        if (g.status() != FamilyStatus::Active || t <= g.launch_time()) continue;
        const ModelId cand = g.candidate();
        if (t > g.resolution_time()) {
            // reopened after its last look
            g.retire();
            events.push_back(event(t, EventType::Expire, FamilyKind::Superiority, cand));
            continue;
        }
        if (is_approved(cand)) {
            auto r = g.step(t, stats);
            for (ModelId ref : r.newly_rejected) {
                events.push_back(event(t, EventType::Reject, FamilyKind::Superiority, cand, ref));
            }
            if (r.status == FamilyStatus::Passed) {
                qualifying.push_back(cand);
            } else if (r.status == FamilyStatus::Failed) {
                events.push_back(event(t, EventType::Expire, FamilyKind::Superiority, cand));
            }
        } else if (cand < approved() || t == g.resolution_time()) {
            // can no longer be approved in time to become a benchmark
            g.retire();
            events.push_back(event(t, EventType::Retire, FamilyKind::Superiority, cand));
        }
    }
    if (auto pick = tie_break_benchmark(qualifying)) {
        benchmark_ = *pick;
        benchmark_ids_.push_back(*pick);
        babr_->record_benchmark(t);
        events.push_back(event(t, EventType::Benchmark, FamilyKind::Superiority, *pick));
        for (auto& f : superiority_) {
            auto& g = f.gates;
            if (g.status() == FamilyStatus::Failed) continue;
            if (g.candidate() <= *pick) {
                if (g.status() == FamilyStatus::Active) {
                    g.retire();
                    events.push_back(event(t, EventType::Retire, FamilyKind::Superiority, g.candidate()));
                }
            } else {
                g.reopen(*pick);
            }
        }
    }
    std::erase_if(superiority_, [](const Family& f) { return f.gates.status() != FamilyStatus::Active; });
}

void ApprovalPolicy::on_proposal(TimeIndex t, const SyntheticModel& model, std::vector<TraceEvent>& events) {
    if (model.id != t) throw std::invalid_argument("proposal id must equal its time");
    if (t <= newest_proposal_) throw std::invalid_argument("proposals must arrive in time order");
    newest_proposal_ = t;

    double level = config_.test_level;
    double sup_level = 0.0;
    std::vector<ModelId> refs;
    switch (config_.kind) {
    case PolicyKind::Blind:
    case PolicyKind::Fixed: return;
    case PolicyKind::Baseline: refs = {0}; break;
    case PolicyKind::Reset: refs = {approved()}; break;
    case PolicyKind::Bac:
        level = bac_->select_alpha(t, model.wait);
        refs = approved_ids_;
        break;
    case PolicyKind::Babr: {
        auto [a, ap] = babr_->select_alphas(t, model.wait, model.superiority_wait);
        level = a;
        sup_level = ap;
        refs = approved_ids_;
        break;
    }
    }
    approval_.push_back({GateFamily(t, t, level, model.wait, config_.eps, boundaries(level, model.wait), refs),
                         FamilyKind::Approval});
    events.push_back(event(t, EventType::Launch, FamilyKind::Approval, t, -1, level));
    ++launched_;
    if (config_.kind == PolicyKind::Babr) {
        const int k = model.superiority_wait;
        superiority_.push_back({GateFamily(t, t, sup_level, k, NIMargin::zero(config_.eps.size()),
                                           boundaries(sup_level, k), {benchmark_}),
                                FamilyKind::Superiority});
        events.push_back(event(t, EventType::Launch, FamilyKind::Superiority, t, -1, sup_level));
        ++launched_;
    }
}

} // namespace aacp
