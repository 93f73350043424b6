#include "aacp/trace.hpp"

#include <algorithm>
#include <istream>
#include <limits>
#include <ostream>
#include <set>
#include <stdexcept>
#include <string>

#include "json.hpp"

namespace aacp {

using nlohmann::json;

namespace {

constexpr const char* kSchema = "aacp-trace";

template <typename E, std::size_t N>
E parse_named(std::string_view s, const std::string_view (&names)[N], const char* what) {
    for (std::size_t i = 0; i < N; ++i) {
        if (names[i] == s) return static_cast<E>(i);
    }
    throw std::invalid_argument(std::string("unknown ") + what + ": " + std::string(s));
}

constexpr std::string_view kEventNames[] = {"launch", "reject", "expire", "retire", "approve", "benchmark"};
constexpr std::string_view kFamilyNames[] = {"none", "approval", "superiority"};

json endpoint_json(const EndpointVector& v) { return json(std::vector<double>(v.values().begin(), v.values().end())); }

EndpointVector endpoint_from(const json& j) { return EndpointVector(j.get<std::vector<double>>()); }

const json& field(const json& j, const char* key, int line) {
    auto it = j.find(key);
    if (it == j.end()) throw std::runtime_error("trace line " + std::to_string(line) + ": missing field '" + key + "'");
    return *it;
}

} // namespace

std::string_view to_string(EventType e) { return kEventNames[static_cast<int>(e)]; }
std::string_view to_string(FamilyKind f) { return kFamilyNames[static_cast<int>(f)]; }
EventType parse_event_type(std::string_view s) { return parse_named<EventType>(s, kEventNames, "event type"); }
FamilyKind parse_family_kind(std::string_view s) { return parse_named<FamilyKind>(s, kFamilyNames, "family kind"); }

const EndpointVector& TraceStep::truth_of(ModelId id) const {
    for (const auto& m : truths) {
        if (m.id == id) return m.value;
    }
    throw std::out_of_range("no truth recorded for model " + std::to_string(id) + " at t=" + std::to_string(t));
}

std::vector<ModelId> RunTrace::approved_ids() const {
    std::set<ModelId> ids{0};
    for (const auto& s : steps) ids.insert(s.approved);
    return {ids.begin(), ids.end()};
}

void write_trace(std::ostream& out, const RunTrace& trace) {
    json header = {
        {"schema", kSchema},
        {"version", kTraceSchemaVersion},
        {"scenario", trace.scenario},
        {"policy", trace.policy},
        {"replicate", trace.replicate},
        {"seed", trace.seed},
        {"horizon", trace.horizon},
        {"window", trace.window},
        {"eps", std::vector<double>(trace.eps.values().begin(), trace.eps.values().end())},
        {"graph_changing", trace.graph_changing},
    };
    out << header.dump() << '\n';

    std::size_t ev = 0;
    auto flush_events = [&](TimeIndex upto) {
        while (ev < trace.events.size() && trace.events[ev].t <= upto) {
            const auto& e = trace.events[ev++];
            json j = {{"kind", "event"},     {"t", e.t},         {"type", to_string(e.type)},
                      {"family", to_string(e.family)}, {"model", e.model}, {"ref", e.ref},
                      {"level", e.level}};
            out << j.dump() << '\n';
        }
    };
    for (const auto& s : trace.steps) {
        flush_events(s.t);
        json truths = json::array();
        for (const auto& m : s.truths) truths.push_back({m.id, endpoint_json(m.value)});
        json j = {{"kind", "step"}, {"t", s.t}, {"approved", s.approved}, {"benchmark", s.benchmark},
                  {"truth", std::move(truths)}};
        out << j.dump() << '\n';
    }
    flush_events(std::numeric_limits<TimeIndex>::max());
}

RunTrace read_trace(std::istream& in) {
    RunTrace trace;
    std::string line;
    int lineno = 0;
    bool have_header = false;
    while (std::getline(in, line)) {
        ++lineno;
        if (line.empty()) continue;
        json j;
        try {
            j = json::parse(line);
        } catch (const json::parse_error& e) {
            throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + e.what());
        }
        try {
            if (!have_header) {
                if (field(j, "schema", lineno).get<std::string>() != kSchema) {
                    throw std::runtime_error("trace line 1: not an aacp trace");
                }
                int version = field(j, "version", lineno).get<int>();
                if (version != kTraceSchemaVersion) {
                    throw std::runtime_error("unsupported trace schema version " + std::to_string(version));
                }
                trace.scenario = field(j, "scenario", lineno).get<std::string>();
                trace.policy = field(j, "policy", lineno).get<std::string>();
                trace.replicate = field(j, "replicate", lineno).get<int>();
                trace.seed = field(j, "seed", lineno).get<std::uint64_t>();
                trace.horizon = field(j, "horizon", lineno).get<int>();
                trace.window = field(j, "window", lineno).get<int>();
                trace.eps = NIMargin(field(j, "eps", lineno).get<std::vector<double>>());
                trace.graph_changing = field(j, "graph_changing", lineno).get<bool>();
                have_header = true;
                continue;
            }
            auto kind = field(j, "kind", lineno).get<std::string>();
            if (kind == "event") {
                TraceEvent e;
                e.t = field(j, "t", lineno).get<TimeIndex>();
                e.type = parse_event_type(field(j, "type", lineno).get<std::string>());
                e.family = parse_family_kind(field(j, "family", lineno).get<std::string>());
                e.model = field(j, "model", lineno).get<ModelId>();
                e.ref = field(j, "ref", lineno).get<ModelId>();
                e.level = field(j, "level", lineno).get<double>();
                trace.events.push_back(e);
            } else if (kind == "step") {
                TraceStep s;
                s.t = field(j, "t", lineno).get<TimeIndex>();
                s.approved = field(j, "approved", lineno).get<ModelId>();
                s.benchmark = field(j, "benchmark", lineno).get<ModelId>();
                for (const auto& m : field(j, "truth", lineno)) {
                    s.truths.push_back({m.at(0).get<ModelId>(), endpoint_from(m.at(1))});
                }
                trace.steps.push_back(std::move(s));
            } else {
                throw std::runtime_error("trace line " + std::to_string(lineno) + ": unknown record kind '" + kind +
                                         "'");
            }
        } catch (const json::exception& e) {
            throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + e.what());
        } catch (const std::invalid_argument& e) {
            throw std::runtime_error("trace line " + std::to_string(lineno) + ": " + e.what());
        }
    }
    if (!have_header) throw std::runtime_error("empty trace");
    return trace;
}

} // namespace aacp
