// core.hpp: endpoint vectors, NI margins, model trajectories and the acceptability relation.
#pragma once

#include <cstddef>
#include <functional>
#include <initializer_list>
#include <span>
#include <string>
#include <vector>

namespace aacp {

/// Performance profile of one model on one population. Endpoint order is
/// fixed per experiment: index 0 = sensitivity, index 1 = specificity.
class EndpointVector {
public:
    EndpointVector() = default;
    EndpointVector(std::initializer_list<double> v);
    explicit EndpointVector(std::vector<double> v);

    std::size_t size() const { return values_.size(); }
    double operator[](std::size_t k) const { return values_[k]; }
    std::span<const double> values() const { return values_; }

    EndpointVector shifted(std::span<const double> delta) const;
    /// Each component clamped to [lo, hi].
    EndpointVector clamped(double lo = 0.0, double hi = 1.0) const;

    friend bool operator==(const EndpointVector&, const EndpointVector&) = default;

private:
    std::vector<double> values_;
};

inline constexpr std::size_t kSensitivity = 0;
inline constexpr std::size_t kSpecificity = 1;

/// Non-inferiority margin, one nonnegative entry per endpoint. All zeros
/// turns an acceptability test into a superiority test.
class NIMargin {
public:
    NIMargin() = default;
    NIMargin(std::initializer_list<double> v);
    explicit NIMargin(std::vector<double> v);
    static NIMargin zero(std::size_t k) { return NIMargin(std::vector<double>(k, 0.0)); }

    std::size_t size() const { return eps_.size(); }
    double operator[](std::size_t k) const { return eps_[k]; }
    std::span<const double> values() const { return eps_; }
    bool is_zero() const;

    friend bool operator==(const NIMargin&, const NIMargin&) = default;

private:
    std::vector<double> eps_;
};

/// True iff `cand` is non-inferior to `ref` within `eps` on every endpoint and
/// strictly better on at least one.
bool acceptability_edge(const EndpointVector& ref, const EndpointVector& cand, const NIMargin& eps);

bool superiority_edge(const EndpointVector& ref, const EndpointVector& cand);

using ModelId = int;
using TimeIndex = int;

/// True endpoint values of one model over the horizon. Constant trajectories
/// store a single vector.
class Trajectory {
public:
    Trajectory() = default;
    static Trajectory constant(EndpointVector v);
    static Trajectory tabulated(std::vector<EndpointVector> by_time);

    /// m(f, P_t); the tabulated form clamps t to its last entry.
    const EndpointVector& at(TimeIndex t) const;
    bool is_constant() const { return by_time_.size() == 1; }

private:
    std::vector<EndpointVector> by_time_;
};

struct SyntheticModel {
    ModelId id = 0;
    Trajectory trajectory;
    int wait = 1;             // Δ
    int superiority_wait = 2; // Δ′
};

/// Truth for every proposed model, indexed by id (= proposal time).
class PopulationTimeline {
public:
    PopulationTimeline(int horizon, int smoothing_window = 1, double prevalence = 0.5);

    int horizon() const { return horizon_; }
    int smoothing_window() const { return smoothing_; }
    double prevalence() const { return prevalence_; }

    void add_model(SyntheticModel model);
    bool has_model(ModelId id) const;
    const SyntheticModel& model(ModelId id) const;
    std::size_t num_models() const { return models_.size(); }

    /// m(f_id, P_{t:t+D-1}): average of the per-time truth over the smoothing window.
    EndpointVector truth(ModelId id, TimeIndex t) const;

private:
    int horizon_;
    int smoothing_;
    double prevalence_;
    std::vector<SyntheticModel> models_;
};

} // namespace aacp
