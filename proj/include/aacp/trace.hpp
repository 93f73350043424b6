// trace.hpp: per-run record of approvals, benchmarks, test launches and
// ground truth, serialized as JSON lines.
#pragma once

#include <cstdint>
#include <iosfwd>
#include <string>
#include <string_view>
#include <vector>

#include "aacp/core.hpp"

namespace aacp {

inline constexpr int kTraceSchemaVersion = 1;

enum class EventType { Launch, Reject, Expire, Retire, Approve, Benchmark };
enum class FamilyKind { None, Approval, Superiority };

std::string_view to_string(EventType e);
std::string_view to_string(FamilyKind f);
EventType parse_event_type(std::string_view s);
FamilyKind parse_family_kind(std::string_view s);

struct TraceEvent {
    TimeIndex t = 0;
    EventType type = EventType::Launch;
    FamilyKind family = FamilyKind::None;
    ModelId model = -1;
    ModelId ref = -1;     // reject events: the reference whose null was rejected
    double level = 0.0;   // launch events: family level

    friend bool operator==(const TraceEvent&, const TraceEvent&) = default;
};

struct ModelTruth {
    ModelId id = 0;
    EndpointVector value;

    friend bool operator==(const ModelTruth&, const ModelTruth&) = default;
};

struct TraceStep {
    TimeIndex t = 0;
    ModelId approved = 0;   // Â_t
    ModelId benchmark = 0;  // B̂_t
    /// Truth at time t of every model approved up to t (ascending ids),
    /// followed by the proposal made at t, if any.
    std::vector<ModelTruth> truths;

    const EndpointVector& truth_of(ModelId id) const;
    friend bool operator==(const TraceStep&, const TraceStep&) = default;
};

struct RunTrace {
    std::string scenario;
    std::string policy;
    int replicate = 0;
    std::uint64_t seed = 0;
    int horizon = 0;
    int window = 15;
    NIMargin eps{0.05, 0.05};
    bool graph_changing = false;
    std::vector<TraceStep> steps; // t = 1, 2, ...
    std::vector<TraceEvent> events;

    /// Distinct approved ids (including the initial model).
    std::vector<ModelId> approved_ids() const;

    friend bool operator==(const RunTrace&, const RunTrace&) = default;
};

/// Header line, then for each step its events followed by the step line.
void write_trace(std::ostream& out, const RunTrace& trace);
/// Throws std::runtime_error on malformed input or an unknown schema version.
RunTrace read_trace(std::istream& in);

} // namespace aacp
