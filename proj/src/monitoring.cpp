#include "aacp/monitoring.hpp"

#include <algorithm>
#include <stdexcept>
#include <string>

namespace aacp {

std::span<const double> MonitoringBatch::stratum(std::size_t endpoint) const {
    switch (endpoint) {
    case kSensitivity: return diseased_u;
    case kSpecificity: return healthy_u;
    default: throw std::invalid_argument("monitoring batches carry two endpoints");
    }
}

std::size_t MonitoringBatch::count_correct(std::size_t endpoint, double threshold) const {
    auto s = stratum(endpoint);
    return static_cast<std::size_t>(std::upper_bound(s.begin(), s.end(), threshold) - s.begin());
}

double MonitoringBatch::latent(std::size_t endpoint, std::size_t i, ModelId model) const {
    double u = stratum(endpoint)[i];
    if (coupling >= 1.0) return u;
    std::uint64_t h = derive_seed(seed, {endpoint, i, static_cast<std::uint64_t>(model)});
    double pick = static_cast<double>(h >> 11) * 0x1.0p-53;
    if (pick < coupling) return u;
    return static_cast<double>(splitmix64(h) >> 11) * 0x1.0p-53;
}

MonitoringBatch::Discordant MonitoringBatch::discordant(std::size_t endpoint, ModelId ref, double ref_value,
                                                        ModelId cand, double cand_value) const {
    Discordant d;
    auto s = stratum(endpoint);
    d.n = static_cast<long>(s.size());
    if (coupling >= 1.0 || ref == cand) {
        long nr = static_cast<long>(count_correct(endpoint, ref_value));
        long nc = static_cast<long>(count_correct(endpoint, cand_value));
        if (ref == cand) nc = nr;
        (nc >= nr ? d.plus : d.minus) = std::abs(nc - nr);
        return d;
    }
    for (std::size_t i = 0; i < s.size(); ++i) {
        bool r = correct_prediction(latent(endpoint, i, ref), ref_value);
        bool c = correct_prediction(latent(endpoint, i, cand), cand_value);
        d.plus += c && !r;
        d.minus += r && !c;
    }
    return d;
}

MonitoringBatch sample_monitoring_batch(TimeIndex t, int size, double prevalence, Rng& rng, double coupling) {
    if (size < 0) throw std::invalid_argument("batch size must be nonnegative");
    if (!(coupling >= 0.0 && coupling <= 1.0)) throw std::invalid_argument("coupling must lie in [0,1]");
    MonitoringBatch batch;
    batch.time = t;
    batch.coupling = coupling;
    if (coupling < 1.0) batch.seed = rng.next_u64();
    for (int i = 0; i < size; ++i) {
        bool diseased = rng.bernoulli(prevalence);
        double u = rng.uniform();
        (diseased ? batch.diseased_u : batch.healthy_u).push_back(u);
    }
    std::sort(batch.diseased_u.begin(), batch.diseased_u.end());
    std::sort(batch.healthy_u.begin(), batch.healthy_u.end());
    return batch;
}

void MonitoringArchive::add(MonitoringBatch batch) {
    if (batch.time != static_cast<TimeIndex>(batches_.size())) {
        throw std::invalid_argument("monitoring batches must arrive in time order, expected t=" +
                                    std::to_string(batches_.size()));
    }
    batches_.push_back(std::move(batch));
}

bool MonitoringArchive::has(TimeIndex t) const {
    return t >= 0 && static_cast<std::size_t>(t) < batches_.size();
}

const MonitoringBatch& MonitoringArchive::at(TimeIndex t) const {
    if (!has(t)) throw std::out_of_range("missing monitoring batch for t=" + std::to_string(t));
    return batches_[static_cast<std::size_t>(t)];
}

} // namespace aacp
