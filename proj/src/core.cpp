#include "aacp/core.hpp"

#include <algorithm>
#include <stdexcept>

namespace aacp {

EndpointVector::EndpointVector(std::initializer_list<double> v) : values_(v) {}

EndpointVector::EndpointVector(std::vector<double> v) : values_(std::move(v)) {}

EndpointVector EndpointVector::shifted(std::span<const double> delta) const {
    if (delta.size() != values_.size()) {
        throw std::invalid_argument("endpoint shift has wrong dimension");
    }
    std::vector<double> out(values_);
    for (std::size_t k = 0; k < out.size(); ++k) out[k] += delta[k];
    return EndpointVector(std::move(out));
}

EndpointVector EndpointVector::clamped(double lo, double hi) const {
    std::vector<double> out(values_);
    for (double& x : out) x = std::clamp(x, lo, hi);
    return EndpointVector(std::move(out));
}

NIMargin::NIMargin(std::initializer_list<double> v) : NIMargin(std::vector<double>(v)) {}

NIMargin::NIMargin(std::vector<double> v) : eps_(std::move(v)) {
    for (double e : eps_) {
        if (!(e >= 0.0)) throw std::invalid_argument("NI margin must be nonnegative");
    }
}

bool NIMargin::is_zero() const {
    return std::all_of(eps_.begin(), eps_.end(), [](double e) { return e == 0.0; });
}

bool acceptability_edge(const EndpointVector& ref, const EndpointVector& cand, const NIMargin& eps) {
    if (ref.size() != cand.size() || ref.size() != eps.size()) {
        throw std::invalid_argument("acceptability_edge: endpoint dimension mismatch");
    }
    bool superior_somewhere = false;
    for (std::size_t k = 0; k < ref.size(); ++k) {
        if (ref[k] - eps[k] > cand[k]) return false;
        if (cand[k] > ref[k]) superior_somewhere = true;
    }
    return superior_somewhere;
}

bool superiority_edge(const EndpointVector& ref, const EndpointVector& cand) {
    return acceptability_edge(ref, cand, NIMargin::zero(ref.size()));
}

Trajectory Trajectory::constant(EndpointVector v) {
    Trajectory t;
    t.by_time_.push_back(std::move(v));
    return t;
}

Trajectory Trajectory::tabulated(std::vector<EndpointVector> by_time) {
    if (by_time.empty()) throw std::invalid_argument("empty trajectory");
    Trajectory t;
    t.by_time_ = std::move(by_time);
    return t;
}

const EndpointVector& Trajectory::at(TimeIndex t) const {
    if (by_time_.empty()) throw std::logic_error("trajectory is empty");
    if (t < 0) throw std::invalid_argument("negative time index");
    auto idx = std::min<std::size_t>(static_cast<std::size_t>(t), by_time_.size() - 1);
    return by_time_[idx];
}

PopulationTimeline::PopulationTimeline(int horizon, int smoothing_window, double prevalence)
    : horizon_(horizon), smoothing_(smoothing_window), prevalence_(prevalence) {
    if (horizon < 1) throw std::invalid_argument("horizon must be positive");
    if (smoothing_window < 1) throw std::invalid_argument("smoothing window D must be >= 1");
    if (!(prevalence > 0.0 && prevalence < 1.0)) throw std::invalid_argument("prevalence must be in (0,1)");
}

void PopulationTimeline::add_model(SyntheticModel model) {
    if (model.id != static_cast<ModelId>(models_.size())) {
        throw std::invalid_argument("model ids must be added in proposal order");
    }
    if (model.wait < 1 || model.superiority_wait < 1) throw std::invalid_argument("wait times must be positive");
    models_.push_back(std::move(model));
}

bool PopulationTimeline::has_model(ModelId id) const {
    return id >= 0 && static_cast<std::size_t>(id) < models_.size();
}

const SyntheticModel& PopulationTimeline::model(ModelId id) const {
    if (!has_model(id)) throw std::out_of_range("unknown model id " + std::to_string(id));
    return models_[static_cast<std::size_t>(id)];
}

EndpointVector PopulationTimeline::truth(ModelId id, TimeIndex t) const {
    const auto& traj = model(id).trajectory;
    if (smoothing_ == 1 || traj.is_constant()) return traj.at(t);
    const auto& first = traj.at(t);
    std::vector<double> acc(first.size(), 0.0);
    for (int d = 0; d < smoothing_; ++d) {
        const auto& v = traj.at(t + d);
        for (std::size_t k = 0; k < acc.size(); ++k) acc[k] += v[k];
    }
    for (double& x : acc) x /= smoothing_;
    return EndpointVector(std::move(acc));
}

} // namespace aacp
